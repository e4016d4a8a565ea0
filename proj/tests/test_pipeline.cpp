/*
 * Copyright (c) 2026, The tfcw Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tfcw/descriptors.hpp"
#include "tfcw/error.hpp"
#include "tfcw/pipeline.hpp"
#include "tfcw/synthetic.hpp"

using namespace tfcw;

namespace {

PointCloud cloud_of(std::vector<Vec3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

double row_norm(std::span<const double> r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("config validation") {
  PipelineConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.stages = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.k_per_stage = {16, 16};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.k_per_stage = {16, 1, 16, 16};
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.interp_k = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("stage cardinalities halve with ceiling") {
  std::mt19937_64 rng(31);
  PipelineConfig cfg;
  const auto enc = encode_segmentation(cloud_of(oracle::random_points(1024, rng)), cfg);
  REQUIRE(enc.stages.size() == 4);
  const std::size_t want[] = {512, 256, 128, 64};
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(enc.stages[s].sampled_points.size() == want[s]);
    CHECK(enc.stages[s].features.rows() == want[s]);
    CHECK(enc.stages[s].features.cols() == 6 + 36);
  }
  for (std::size_t n : {16u, 17u, 999u, 1000u, 1001u}) {
    const auto e = encode_segmentation(cloud_of(oracle::random_points(n, rng)), cfg);
    std::size_t expected = n;
    for (const auto& st : e.stages) {
      expected = (expected + 1) / 2;
      CHECK(st.sampled_points.size() == expected);
    }
  }
  CHECK(halved(7) == 4);
  CHECK(halved(8) == 4);
}

TEST_CASE("classification feature shape and norm") {
  std::mt19937_64 rng(32);
  for (DescriptorKind kind : {DescriptorKind::XyzNeighbor, DescriptorKind::GeoPCSD, DescriptorKind::RISP}) {
    PipelineConfig cfg;
    cfg.descriptor = kind;
    const std::size_t c = descriptor_width(kind);
    const auto enc = encode_classification(synthetic::capped_cylinder(512, rng()), cfg);
    CHECK(enc.feature.size() == 4 * 3 * c * c);
    CHECK(std::abs(row_norm(enc.feature) - 1.0) < 1e-9);
    CHECK(oracle::all_finite(enc.feature));
  }
  PipelineConfig cfg;
  CHECK_THROWS_AS(encode_classification(cloud_of(oracle::random_points(15, rng)), cfg), InvalidArgument);
  CHECK_NOTHROW(encode_classification(cloud_of(oracle::random_points(16, rng)), cfg));
}

TEST_CASE("classification features ignore row order") {
  std::mt19937_64 rng(33);
  for (DescriptorKind kind : {DescriptorKind::XyzNeighbor, DescriptorKind::GeoPCSD, DescriptorKind::RISP}) {
    for (int trial = 0; trial < 4; ++trial) {
      PipelineConfig cfg;
      cfg.descriptor = kind;
      const PointCloud c = synthetic::capped_cylinder(300 + 50 * trial, rng());
      const auto perm = oracle::random_permutation(c.size(), rng);
      const PointCloud p = subset(c, perm);
      const auto a = encode_classification(c, cfg).feature;
      const auto b = encode_classification(p, cfg).feature;
      CHECK(oracle::max_abs_diff(a, b) < 1e-6);
    }
  }
}

TEST_CASE("segmentation stage features are local") {
  std::mt19937_64 rng(34);
  const auto pts = oracle::random_points(200, rng);
  PipelineConfig cfg;
  cfg.stages = 1;
  cfg.k_per_stage = {8};
  cfg.start = StartRule::fixed(0);
  const auto full = encode_segmentation(cloud_of(pts), cfg);
  const auto picks = farthest_point_sample(pts, 100, StartRule::fixed(0));
  std::vector<bool> picked(pts.size(), false);
  for (auto i : picks) picked[i] = true;

  std::size_t victim = pts.size();
  for (std::size_t i = pts.size(); i-- > 1;) {
    if (!picked[i]) {
      victim = i;
      break;
    }
  }
  REQUIRE(victim < pts.size());
  std::vector<Vec3> fewer;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (i != victim) fewer.push_back(pts[i]);
  const auto reduced = encode_segmentation(cloud_of(fewer), cfg);
  REQUIRE(reduced.stages[0].sampled_points == full.stages[0].sampled_points);

  const auto nbrs = knn(full.stages[0].sampled_points, pts, 8);
  std::size_t unchanged = 0, changed = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const auto row = nbrs.row(i);
    const bool touched = std::find(row.begin(), row.end(), victim) != row.end();
    const bool same = std::equal(full.stages[0].features.row(i).begin(), full.stages[0].features.row(i).end(),
                                 reduced.stages[0].features.row(i).begin());
    if (!touched) {
      CHECK(same);
      ++unchanged;
    } else {
      changed += same ? 0 : 1;
    }
  }
  CHECK(unchanged > 80);
}

TEST_CASE("propagation examples") {
  std::mt19937_64 rng(35);
  const auto src = oracle::random_points(40, rng);
  const auto dst = oracle::random_points(60, rng);
  Matrix constant(40, 3, 0.0);
  for (std::size_t i = 0; i < 40; ++i) {
    constant(i, 0) = 2.5;
    constant(i, 1) = -1.0;
    constant(i, 2) = 7.0;
  }
  const Matrix out = propagate_features(src, constant, dst, 3);
  for (std::size_t t = 0; t < 60; ++t) {
    CHECK(std::abs(out(t, 0) - 2.5) < 1e-9);
    CHECK(std::abs(out(t, 1) + 1.0) < 1e-9);
    CHECK(std::abs(out(t, 2) - 7.0) < 1e-9);
  }

  Matrix feats = oracle::random_matrix(40, 5, rng);
  const std::vector<Vec3> on_source{src[17]};
  const Matrix hit = propagate_features(src, feats, on_source, 3);
  CHECK(oracle::max_abs_diff(hit.row(0), feats.row(17)) < 1e-6);

  const std::vector<Vec3> pair{{-1, 0, 0}, {1, 0, 0}};
  Matrix pf(2, 2);
  pf(0, 0) = 1.0;
  pf(0, 1) = 4.0;
  pf(1, 0) = 3.0;
  pf(1, 1) = -2.0;
  const std::vector<Vec3> mid{{0, 0.5, 0}};
  const Matrix avg = propagate_features(pair, pf, mid, 2);
  CHECK(std::abs(avg(0, 0) - 2.0) < 1e-9);
  CHECK(std::abs(avg(0, 1) - 1.0) < 1e-9);

  CHECK_THROWS_AS(propagate_features(pair, pf, mid, 3), InvalidArgument);
  CHECK_THROWS_AS(propagate_features(src, pf, mid, 2), InvalidArgument);
}

TEST_CASE("interpolation weights are a partition of unity") {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 50; ++trial) {
    auto src = trial % 2 ? oracle::lattice_points(30, rng) : oracle::random_points(30, rng);
    auto dst = oracle::random_points(40, rng);
    dst[0] = src[3];
    const std::size_t k = 1 + rng() % 5;
    const auto w = interpolation_weights(src, dst, k);
    for (const auto& row : w) {
      double s = 0.0;
      for (const auto& [idx, wt] : row) {
        CHECK(wt >= 0.0);
        s += wt;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("decoder output") {
  std::mt19937_64 rng(37);
  PipelineConfig cfg;
  const PointCloud c = cloud_of(oracle::random_points(700, rng));
  const auto enc = encode_segmentation(c, cfg);
  const Matrix d = decode_segmentation(enc, cfg);
  CHECK(d.rows() == 700);
  CHECK(d.cols() == 4 * 42);
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(std::abs(row_norm(d.row(i)) - 1.0) < 1e-9);

  // One stage: the stage features interpolated onto the input, normalised.
  PipelineConfig one;
  one.stages = 1;
  one.k_per_stage = {8};
  const auto e1 = encode_segmentation(c, one);
  Matrix want = propagate_features(e1.stages[0].sampled_points, e1.stages[0].features, c.points, 3);
  normalize_rows(want);
  CHECK(oracle::max_abs_diff(decode_segmentation(e1, one).data(), want.data()) < 1e-12);

  auto broken = enc;
  broken.stages[2].sampled_points.pop_back();
  CHECK_THROWS_AS(decode_segmentation(broken, cfg), InvalidArgument);
}

TEST_CASE("normalisation helpers") {
  std::vector<double> v{3.0, 4.0};
  normalize_vector(v);
  CHECK(v[0] == 0.6);
  CHECK(v[1] == 0.8);
  std::vector<double> z{0.0, 0.0};
  normalize_vector(z);
  CHECK(z[0] == 0.0);
  std::vector<double> unit{0.6, 0.8};
  const auto before = unit;
  normalize_vector(unit);
  CHECK(unit == before);
}

TEST_CASE("degenerate clouds stay finite") {
  PipelineConfig cfg;
  for (DescriptorKind kind : {DescriptorKind::XyzNeighbor, DescriptorKind::GeoPCSD, DescriptorKind::RISP}) {
    cfg.descriptor = kind;
    // Exactly 2^stages points: the last stage holds a single point.
    std::mt19937_64 rng(38);
    const PointCloud tiny = cloud_of(oracle::random_points(16, rng));
    const auto a = encode_classification(tiny, cfg);
    CHECK(oracle::all_finite(a.feature));
    const auto s = encode_segmentation(tiny, cfg);
    CHECK(s.stages.back().sampled_points.size() == 1);
    CHECK(oracle::all_finite(decode_segmentation(s, cfg).data()));

    // All points identical.
    const PointCloud same = cloud_of(std::vector<Vec3>(64, Vec3{0.5, 0.5, 0.5}));
    CHECK(oracle::all_finite(encode_classification(same, cfg).feature));
    CHECK(oracle::all_finite(decode_segmentation(encode_segmentation(same, cfg), cfg).data()));

    // Collinear points.
    std::vector<Vec3> line;
    for (int i = 0; i < 64; ++i) line.push_back({0.1 * i, 0.0, 0.0});
    const auto l = encode_classification(cloud_of(line), cfg);
    CHECK(oracle::all_finite(l.feature));
    if (kind == DescriptorKind::GeoPCSD) CHECK(l.report.collinear_triangles > 0);
  }
}
