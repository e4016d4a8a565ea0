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

#include "tfcw/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tfcw/error.hpp"

namespace tfcw {

namespace {

struct StageGroups {
  PointCloud sampled;
  Tensor3 grouped;
};

PointCloud prepare_input(const PointCloud& cloud, const PipelineConfig& cfg, DegeneracyReport& report) {
  cfg.validate();
  cloud.validate();
  const std::size_t minimum = std::size_t{1} << cfg.stages;
  if (cloud.size() < minimum) {
    throw InvalidArgument("encoder needs at least " + std::to_string(minimum) + " points for " +
                          std::to_string(cfg.stages) + " stages, got " + std::to_string(cloud.size()));
  }
  PointCloud prepared;
  prepared.points = cloud.points;
  if (cfg.descriptor == DescriptorKind::RISP) {
    if (cloud.normals) {
      prepared.normals = cloud.normals;
    } else if (cloud.size() < 3) {
      prepared.normals = std::vector<Vec3>(cloud.size(), Vec3{0.0, 0.0, 1.0});
      report.flat_normals += cloud.size();
    } else {
      NormalEstimate est = estimate_normals(prepared, std::min(cfg.k_normal, cloud.size()));
      report.flat_normals += est.flagged.size();
      prepared.normals = std::move(est.normals);
    }
  }
  return prepared;
}

StageGroups group_stage(const PointCloud& current, std::size_t k, const PipelineConfig& cfg,
                        DegeneracyReport& report) {
  const std::size_t n = current.size();
  const auto picked = farthest_point_sample(current.points, halved(n), cfg.start);
  StageGroups out;
  out.sampled = subset(current, picked);
  // Late stages can hold fewer points than K; the group then spans the stage.
  const NeighborIndex nbrs = knn(out.sampled.points, current.points, std::min(k, n));
  switch (cfg.descriptor) {
    case DescriptorKind::XyzNeighbor:
      out.grouped = pcsd_xyz(current.points, out.sampled.points, nbrs);
      break;
    case DescriptorKind::GeoPCSD:
      out.grouped = group_rows(pcsd_geo_lenient(current.points, &report), nbrs);
      break;
    case DescriptorKind::RISP:
      out.grouped = pcsd_risp(current.points, *current.normals, out.sampled.points, *out.sampled.normals, nbrs,
                              &report);
      break;
  }
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  if (stages < 1) throw InvalidArgument("stages must be at least 1");
  if (k_per_stage.size() != stages) {
    throw InvalidArgument("k_per_stage has " + std::to_string(k_per_stage.size()) + " entries for " +
                          std::to_string(stages) + " stages");
  }
  for (std::size_t k : k_per_stage) {
    if (k < 2) throw InvalidArgument("every per-stage k must be at least 2");
  }
  if (interp_k < 1) throw InvalidArgument("interp_k must be at least 1");
  if (k_normal < 3) throw InvalidArgument("k_normal must be at least 3");
  if (!std::isfinite(alpha)) throw InvalidArgument("alpha must be finite");
}

void normalize_vector(std::span<double> v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  const double n = std::sqrt(ss);
  if (n == 0.0 || std::abs(n - 1.0) <= 1e-12) return;
  for (double& x : v) x /= n;
}

void normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) normalize_vector(m.row(r));
}

ClassificationEncoding encode_classification(const PointCloud& cloud, const PipelineConfig& cfg) {
  ClassificationEncoding out;
  PointCloud current = prepare_input(cloud, cfg, out.report);
  const TranslateOptions opts = cfg.translate_options();
  for (std::size_t s = 0; s < cfg.stages; ++s) {
    StageGroups g = group_stage(current, cfg.k_per_stage[s], cfg, out.report);
    const auto block = united_block(g.grouped, opts);
    out.feature.insert(out.feature.end(), block.begin(), block.end());
    current = std::move(g.sampled);
  }
  normalize_vector(out.feature);
  return out;
}

SegmentationEncoding encode_segmentation(const PointCloud& cloud, const PipelineConfig& cfg) {
  SegmentationEncoding out;
  PointCloud current = prepare_input(cloud, cfg, out.report);
  out.input_points = current.points;
  const TranslateOptions opts = cfg.translate_options();
  for (std::size_t s = 0; s < cfg.stages; ++s) {
    StageGroups g = group_stage(current, cfg.k_per_stage[s], cfg, out.report);
    StageOutput stage;
    stage.sampled_points = g.sampled.points;
    stage.features = empowered_block(g.grouped, opts);
    out.stages.push_back(std::move(stage));
    current = std::move(g.sampled);
  }
  return out;
}

std::vector<std::vector<std::pair<std::size_t, double>>> interpolation_weights(
    std::span<const Vec3> source_points, std::span<const Vec3> target_points, std::size_t interp_k) {
  if (interp_k < 1 || source_points.size() < interp_k) {
    throw InvalidArgument("propagate_features: need at least interp_k = " + std::to_string(interp_k) +
                          " source points, got " + std::to_string(source_points.size()));
  }
  constexpr double kDistanceEps = 1e-8;
  const NeighborIndex nbrs = knn(target_points, source_points, interp_k);
  std::vector<std::vector<std::pair<std::size_t, double>>> weights(target_points.size());
  for (std::size_t t = 0; t < target_points.size(); ++t) {
    const auto idx = nbrs.row(t);
    const auto dist = nbrs.row_distances(t);
    auto& w = weights[t];
    w.reserve(interp_k);
    const auto coincident = static_cast<std::size_t>(std::count(dist.begin(), dist.end(), 0.0));
    if (coincident > 0) {
      for (std::size_t j = 0; j < interp_k; ++j) {
        w.emplace_back(idx[j], dist[j] == 0.0 ? 1.0 / static_cast<double>(coincident) : 0.0);
      }
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < interp_k; ++j) {
      const double inv = 1.0 / (dist[j] + kDistanceEps);
      w.emplace_back(idx[j], inv);
      total += inv;
    }
    for (auto& [_, v] : w) v /= total;
  }
  return weights;
}

Matrix propagate_features(std::span<const Vec3> source_points, const Matrix& source_features,
                          std::span<const Vec3> target_points, std::size_t interp_k) {
  if (source_features.rows() != source_points.size()) {
    throw InvalidArgument("propagate_features: feature rows do not match source points");
  }
  const auto weights = interpolation_weights(source_points, target_points, interp_k);
  Matrix out(target_points.size(), source_features.cols());
  for (std::size_t t = 0; t < target_points.size(); ++t) {
    auto dst = out.row(t);
    for (const auto& [src, w] : weights[t]) {
      if (w == 0.0) continue;
      const auto f = source_features.row(src);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += w * f[c];
    }
  }
  return out;
}

Matrix decode_segmentation(const SegmentationEncoding& encoding, const PipelineConfig& cfg) {
  const auto& stages = encoding.stages;
  if (stages.empty()) throw InvalidArgument("decode_segmentation: no stages");
  std::size_t expected = encoding.input_points.size();
  for (std::size_t s = 0; s < stages.size(); ++s) {
    expected = halved(expected);
    if (stages[s].sampled_points.size() != expected || stages[s].features.rows() != expected) {
      throw InvalidArgument("decode_segmentation: stage " + std::to_string(s) + " does not halve its parent");
    }
  }
  auto interp = [&](std::span<const Vec3> src, const Matrix& feats, std::span<const Vec3> dst) {
    return propagate_features(src, feats, dst, std::min(cfg.interp_k, src.size()));
  };
  Matrix dense = stages.back().features;
  for (std::size_t s = stages.size() - 1; s-- > 0;) {
    const Matrix up = interp(stages[s + 1].sampled_points, dense, stages[s].sampled_points);
    dense = hconcat(up, stages[s].features);
  }
  Matrix out = interp(stages.front().sampled_points, dense, encoding.input_points);
  normalize_rows(out);
  return out;
}

}  // namespace tfcw
