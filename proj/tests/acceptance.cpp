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


// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tfcw/descriptors.hpp"
#include "tfcw/experiment.hpp"
#include "tfcw/geometry.hpp"
#include "tfcw/io.hpp"
#include "tfcw/pipeline.hpp"
#include "tfcw/robustness.hpp"
#include "tfcw/synthetic.hpp"
#include "tfcw/translate.hpp"

using namespace tfcw;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << what << " | " << detail << std::endl;
}

template <class F>
void run(int id, const std::string& what, F&& body) {
  try {
    std::ostringstream detail;
    const bool ok = body(detail);
    report(id, ok, what, detail.str());
  } catch (const std::exception& e) {
    report(id, false, what, std::string("exception: ") + e.what());
  }
}

Matrix coords(const PointCloud& c) {
  Matrix m(3, c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    m(0, i) = c.points[i].x;
    m(1, i) = c.points[i].y;
    m(2, i) = c.points[i].z;
  }
  return m;
}

PointCloud permuted(const PointCloud& c, const std::vector<std::size_t>& perm) {
  return subset(c, perm);
}

Dataset make(std::string name, std::vector<PointCloud> clouds) {
  Dataset ds;
  ds.name = std::move(name);
  ds.clouds = std::move(clouds);
  ds.update_label_counts();
  return ds;
}

bool finite_all(std::span<const double> v) { return oracle::all_finite(v); }

}  // namespace

int main() {
  std::cout.precision(3);

  run(1, "pairwise_dim_distance vs gram_form", [](std::ostream& out) {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::size_t> dd(1, 16), nn(1, 256);
    double worst = 0.0;
    const auto t0 = Clock::now();
    for (int t = 0; t < 1000; ++t) {
      const Matrix x = oracle::random_matrix(dd(rng), nn(rng), rng);
      const Matrix a = pairwise_dim_distance(x);
      const Matrix b = gram_form(x);
      double scale = 0.0;
      for (double v : a.data()) scale = std::max(scale, std::abs(v));
      const double diff = oracle::max_abs_diff(a.data(), b.data());
      worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    }
    const double secs = seconds_since(t0);
    out << "max relative deviation " << worst << " (limit 1e-6), " << secs << " s (limit 5)";
    return worst < 1e-6 && secs < 5.0;
  });

  run(2, "permutation invariance", [](std::ostream& out) {
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::size_t> nn(32, 512);
    double global_dev = 0.0, pipe_dev = 0.0;
    PipelineConfig cfg;
    for (int t = 0; t < 200; ++t) {
      const PointCloud c = synthetic::random_cloud(nn(rng), 1000 + t);
      const auto perm = oracle::random_permutation(c.size(), rng);
      const PointCloud p = permuted(c, perm);
      const std::size_t k = 16;
      const Matrix ga = tfcw_global(pcsd_xyz(c, knn(c.points, c.points, k)), cfg.translate_options());
      const Matrix gb = tfcw_global(pcsd_xyz(p, knn(p.points, p.points, k)), cfg.translate_options());
      global_dev = std::max(global_dev, oracle::max_abs_diff(ga.data(), gb.data()));
      const auto fa = encode_classification(c, cfg).feature;
      const auto fb = encode_classification(p, cfg).feature;
      pipe_dev = std::max(pipe_dev, oracle::max_abs_diff(fa, fb));
    }
    out << "tfcw_global " << global_dev << " (limit 1e-9), pipeline " << pipe_dev << " (limit 1e-6)";
    return global_dev <= 1e-9 && pipe_dev < 1e-6;
  });

  run(3, "gram_form changes under rotation", [](std::ostream& out) {
    std::mt19937_64 rng(3);
    int changed = 0;
    double smallest = 1e300;
    for (int t = 0; t < 100; ++t) {
      PointCloud c;
      c.points = oracle::random_points(256, rng);
      RotationMatrix r = random_rotation(500 + t, RotationMode::SO3);
      const Matrix a = gram_form(coords(c));
      const Matrix b = gram_form(coords(apply_rotation(c, r)));
      const double d = oracle::max_abs_diff(a.data(), b.data());
      smallest = std::min(smallest, d);
      if (d > 1e-3) ++changed;
    }
    out << changed << "/100 changed by > 1e-3 (need >= 99), smallest change " << smallest;
    return changed >= 99;
  });

  run(4, "RISP features under SO(3) rotation", [](std::ostream& out) {
    PipelineConfig cfg;
    cfg.descriptor = DescriptorKind::RISP;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const PointCloud c = t % 2 == 0 ? synthetic::ellipsoid(512, 40 + t) : synthetic::box(512, 40 + t);
      const PointCloud r = apply_rotation(c, random_rotation(900 + t, RotationMode::SO3));
      const auto fa = encode_classification(c, cfg).feature;
      const auto fb = encode_classification(r, cfg).feature;
      worst = std::max(worst, oracle::max_abs_diff(fa, fb));
    }
    out << "max deviation " << worst << " over 50 clouds (limit 1e-5)";
    return worst < 1e-5;
  });

  run(5, "propagate_features soundness", [](std::ostream& out) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> ns(1, 64), nt(1, 128), kk(1, 5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double sum_dev = 0.0, const_dev = 0.0, dom_dev = 0.0;
    for (int t = 0; t < 500; ++t) {
      const auto src = t % 3 == 0 ? oracle::lattice_points(ns(rng), rng) : oracle::random_points(ns(rng), rng);
      auto tgt = oracle::random_points(nt(rng), rng);
      // Some targets sit exactly on a source.
      for (std::size_t i = 0; i < tgt.size(); i += 3) tgt[i] = src[i % src.size()];
      const std::size_t k = std::min(kk(rng), src.size());

      for (const auto& row : interpolation_weights(src, tgt, k)) {
        double s = 0.0;
        for (const auto& [idx, w] : row) s += w;
        sum_dev = std::max(sum_dev, std::abs(s - 1.0));
      }

      const std::size_t f = 4;
      Matrix constant(src.size(), f);
      for (std::size_t c = 0; c < f; ++c) {
        const double v = u(rng);
        for (std::size_t i = 0; i < src.size(); ++i) constant(i, c) = v;
      }
      const Matrix pc = propagate_features(src, constant, tgt, k);
      for (std::size_t i = 0; i < tgt.size(); ++i)
        for (std::size_t c = 0; c < f; ++c) const_dev = std::max(const_dev, std::abs(pc(i, c) - constant(0, c)));

      Matrix feats(src.size(), f);
      for (double& v : feats.data()) v = u(rng);
      const Matrix pf = propagate_features(src, feats, tgt, k);
      for (std::size_t i = 0; i < tgt.size(); i += 3) {
        // Mean over every source sharing the target position.
        std::vector<double> expect(f, 0.0);
        std::size_t hits = 0;
        for (std::size_t s = 0; s < src.size(); ++s) {
          if (!(src[s] == tgt[i])) continue;
          ++hits;
          for (std::size_t c = 0; c < f; ++c) expect[c] += feats(s, c);
        }
        // Only defined when every coincident source is among the k nearest.
        if (hits == 0 || hits > k) continue;
        for (std::size_t c = 0; c < f; ++c) dom_dev = std::max(dom_dev, std::abs(pf(i, c) - expect[c] / hits));
      }
    }
    out << "weight sum " << sum_dev << ", constant " << const_dev << " (limits 1e-9), coincident " << dom_dev
        << " (limit 1e-6)";
    return sum_dev <= 1e-9 && const_dev <= 1e-9 && dom_dev <= 1e-6;
  });

  run(6, "FPS and knn against brute force", [](std::ostream& out) {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> nn(1, 128);
    std::size_t fps_bad = 0, knn_bad = 0;
    for (int t = 0; t < 500; ++t) {
      const std::size_t n = nn(rng);
      const auto pts = oracle::random_points(n, rng);
      const std::size_t count = std::uniform_int_distribution<std::size_t>(1, n)(rng);
      if (farthest_point_sample(pts, count) != oracle::fps(pts, count, true)) ++fps_bad;
      const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      if (farthest_point_sample(pts, count, StartRule::fixed(start)) != oracle::fps(pts, count, false, start))
        ++fps_bad;

      const std::size_t k = std::uniform_int_distribution<std::size_t>(1, n)(rng);
      const auto queries = oracle::random_points(std::uniform_int_distribution<std::size_t>(1, 64)(rng), rng);
      for (KnnStrategy s : {KnnStrategy::BruteForce, KnnStrategy::Grid, KnnStrategy::Auto}) {
        const NeighborIndex got = knn(queries, pts, k, s);
        for (std::size_t q = 0; q < queries.size(); ++q) {
          const auto want = oracle::knn(queries[q], pts, k);
          if (!std::equal(want.idx.begin(), want.idx.end(), got.indices.begin() + q * k)) {
            ++knn_bad;
            break;
          }
        }
      }
    }
    out << fps_bad << " FPS mismatches, " << knn_bad << " knn mismatches over 500 instances";
    return fps_bad == 0 && knn_bad == 0;
  });

  run(7, "shuffle and batch stability", [](std::ostream& out) {
    const auto train = synthetic::spheres_and_cubes(64, 256, 71);
    const auto test = synthetic::spheres_and_cubes(64, 256, 72);
    PipelineConfig cfg;
    const bool modes[] = {false, true};
    const std::span<const std::size_t> sizes(kStabilityBatchSizes);
    const auto feat = shuffle_stability_check(train, sizes, modes, cfg, 7);
    const auto acc = stability_accuracy_check(train, test, 2, sizes, modes, cfg, kDefaultGamma, 7);
    bool same = acc.rows.size() == 12;
    for (const auto& row : acc.rows) same = same && row.accuracy && *row.accuracy == *acc.rows[0].accuracy;
    out << feat.rows.size() << " configurations, max feature deviation " << feat.max_deviation()
        << ", accuracy " << (acc.rows.empty() || !acc.rows[0].accuracy ? -1.0 : *acc.rows[0].accuracy)
        << (same ? " in all" : " NOT identical across") << " configurations";
    return feat.rows.size() == 12 && feat.max_deviation() == 0.0 && same;
  });

  run(8, "synthetic end to end", [](std::ostream& out) {
    const auto t0 = Clock::now();
    ExperimentConfig cfg;
    const RunResult cls = run_classify(make("shapes", synthetic::spheres_and_cubes(100, 1024, 801)),
                                       make("shapes_test", synthetic::spheres_and_cubes(100, 1024, 802)), cfg);
    ExperimentConfig seg_cfg;
    seg_cfg.gamma_grid = {1.0, 10.0, 100.0, 1000.0};
    const Dataset val = make("parts_val", synthetic::capped_cylinders(6, 512, 3));
    const RunResult seg = run_segment(make("parts", synthetic::capped_cylinders(6, 512, 1)),
                                      make("parts_test", synthetic::capped_cylinders(6, 512, 2)), seg_cfg, &val);
    const double secs = seconds_since(t0);
    const double acc = cls.metrics.overall_accuracy;
    out << "accuracy " << acc << " (need 0.90), mIoU " << seg.metrics.miou << " at gamma " << seg.gamma
        << " (need 0.75), " << secs << " s (limit 60)";
    bool ok = acc >= 0.90 && seg.metrics.miou >= 0.75 && secs < 60.0;

    const char* mn = std::getenv("TFCW_MODELNET40");
    if (mn == nullptr || *mn == '\0') {
      out << "; ModelNet40 sub-clause skipped (set TFCW_MODELNET40 to a directory with train.bin and test.bin)";
      return ok;
    }
    const std::filesystem::path dir(mn);
    const Dataset train = load_dataset(dir / "train.bin", Split::Train, true);
    const Dataset test = load_dataset(dir / "test.bin", Split::Test, true);
    ExperimentConfig mcfg;
    mcfg.gamma_grid = {1.0, 10.0, 100.0, 1000.0};
    const RunResult m = run_classify(train, test, mcfg);
    const AblationReport diag = run_ablation(train, test, mcfg, AblationKind::DiagonalVariants);
    auto acc_of = [&](GramVariant v) {
      for (const auto& row : diag.rows)
        if (row.setting == to_string(v)) return row.accuracy;
      return 0.0;
    };
    const double full = acc_of(GramVariant::TfcwFull), one = acc_of(GramVariant::OneG);
    const bool order = full > one && one > acc_of(GramVariant::NoG) && one > acc_of(GramVariant::GramMinusDiag);
    out << "; ModelNet40 accuracy " << m.metrics.overall_accuracy << " (target 0.848 +- 0.015), variant ordering "
        << (order ? "holds" : "violated");
    return ok && std::abs(m.metrics.overall_accuracy - 0.848) <= 0.015 && order;
  });

  run(9, "volume scaling", [](std::ostream& out) {
    PipelineConfig cfg;
    const ScalingReport r = volume_scaling_run(1024, 1024, 65536, cfg, 9, 1);
    std::vector<double> x(r.point_counts.begin(), r.point_counts.end());
    const double slope = loglog_slope(x, r.wall_times);
    std::size_t peak = 0;
    for (auto p : r.peak_memory) peak = std::max(peak, p);
    out << r.point_counts.size() << " sizes up to " << (r.point_counts.empty() ? 0 : r.point_counts.back())
        << ", log-log slope " << slope << " (need [0.8, 1.3]), peak " << peak / (1024.0 * 1024.0) << " MiB"
        << (r.failed_at ? ", allocation failure" : "");
    return !r.failed_at && r.point_counts.size() == 64 && slope >= 0.8 && slope <= 1.3;
  });

  run(10, "degeneracy suite", [](std::ostream& out) {
    bool finite = true;
    DegeneracyReport seen;

    // Constant descriptor blocks.
    const Tensor3 flat(8, 4, 6, 0.5);
    for (bool norm : {true, false}) {
      TranslateOptions o;
      o.local_normalization = norm;
      finite = finite && finite_all(united_block(flat, o)) && finite_all(empowered_block(flat, o).data());
    }

    // Collinear neighbourhoods.
    PointCloud line;
    for (int i = 0; i < 64; ++i) line.points.push_back({0.1 * i, 0.2 * i, -0.05 * i});
    finite = finite && finite_all(pcsd_geo_lenient(line.points, &seen).data());

    // Zero-distance interpolation targets, duplicated sources included.
    std::vector<Vec3> src{{0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    Matrix sf(4, 2);
    for (std::size_t i = 0; i < sf.data().size(); ++i) sf.data()[i] = double(i);
    finite = finite && finite_all(propagate_features(src, sf, src, 3).data());

    // Whole pipeline with N = 2^stages, so the last stage holds one point.
    std::vector<PointCloud> clouds;
    for (std::size_t n : {2, 4, 8, 16}) clouds.push_back(synthetic::random_cloud(n, n));
    PointCloud dup;
    dup.points.assign(16, Vec3{0.3, -0.2, 0.1});
    clouds.push_back(dup);
    clouds.push_back(line);
    std::size_t single = 0;
    for (DescriptorKind kind : {DescriptorKind::XyzNeighbor, DescriptorKind::GeoPCSD, DescriptorKind::RISP}) {
      for (const auto& c : clouds) {
        PipelineConfig cfg;
        cfg.descriptor = kind;
        cfg.stages = static_cast<std::size_t>(std::bit_width(c.size()) - 1);
        cfg.k_per_stage.assign(cfg.stages, 16);
        const auto enc = encode_classification(c, cfg);
        seen += enc.report;
        finite = finite && finite_all(enc.feature);
        const auto seg = encode_segmentation(c, cfg);
        if (seg.stages.back().features.rows() == 1) ++single;
        for (const auto& s : seg.stages) finite = finite && finite_all(s.features.data());
        finite = finite && finite_all(decode_segmentation(seg, cfg).data());
      }
    }
    out << (finite ? "all outputs finite" : "non-finite output found") << ", " << single
        << "/18 runs ended in a single-point stage, fallbacks: " << seen.collinear_triangles << " collinear, "
        << seen.missing_neighbors << " missing neighbours, " << seen.zero_length_angles << " zero-length angles, "
        << seen.flat_normals << " flat normals";
    return finite && single == 18 && seen.collinear_triangles > 0 && seen.zero_length_angles > 0;
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
