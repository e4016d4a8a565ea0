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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tfcw/descriptors.hpp"
#include "tfcw/geometry.hpp"
#include "tfcw/matrix.hpp"
#include "tfcw/translate.hpp"

namespace tfcw {

/// Every tunable of the hierarchical encoders.
struct PipelineConfig {
  std::size_t stages = 4;
  std::vector<std::size_t> k_per_stage{16, 16, 16, 16};
  double alpha = 1.0;
  Pooling pooling = Pooling::Max;
  DescriptorKind descriptor = DescriptorKind::XyzNeighbor;
  std::size_t interp_k = 3;
  std::uint64_t seed = 0;
  GramVariant variant = GramVariant::TfcwFull;
  bool local_normalization = true;
  std::size_t k_normal = 16;  ///< neighbourhood for normal estimation when RISP needs normals
  StartRule start = StartRule::canonical();

  /// Throws InvalidArgument on stages < 1, k list of the wrong length,
  /// any k < 2, interp_k < 1 or k_normal < 3.
  void validate() const;

  TranslateOptions translate_options() const noexcept {
    TranslateOptions o;
    o.alpha = alpha;
    o.pooling = pooling;
    o.variant = variant;
    o.local_normalization = local_normalization;
    return o;
  }
};

/// Point count after one halving step.
constexpr std::size_t halved(std::size_t n) noexcept { return (n + 1) / 2; }

struct ClassificationEncoding {
  std::vector<double> feature;  ///< stage vectors concatenated, unit length
  DegeneracyReport report;
};

/// Classification encoder. Per stage: FPS to half the points, group each
/// sampled point's K nearest points of the current stage, describe the
/// groups and run the united block. Requires N >= 2^stages.
ClassificationEncoding encode_classification(const PointCloud& cloud, const PipelineConfig& cfg);

struct StageOutput {
  std::vector<Vec3> sampled_points;  ///< N_s x 3
  Matrix features;                   ///< N_s x (C + C^2)
};

struct SegmentationEncoding {
  std::vector<Vec3> input_points;  ///< the N points the decoder recovers
  std::vector<StageOutput> stages;
  DegeneracyReport report;
};

/// Segmentation encoder: same sampling cascade, per-point empowered blocks.
SegmentationEncoding encode_segmentation(const PointCloud& cloud, const PipelineConfig& cfg);

/// Inverse-distance weighted interpolation of source features onto targets
/// from their interp_k nearest sources: w_j = 1/(d_j + 1e-8), normalised.
/// A target that coincides with one or more sources takes their mean
/// feature exactly.
Matrix propagate_features(std::span<const Vec3> source_points, const Matrix& source_features,
                          std::span<const Vec3> target_points, std::size_t interp_k);

/// Interpolation weights used by propagate_features, exposed for checking.
/// Row t holds (source index, weight) for target t.
std::vector<std::vector<std::pair<std::size_t, double>>> interpolation_weights(
    std::span<const Vec3> source_points, std::span<const Vec3> target_points, std::size_t interp_k);

/// Decoder: from the coarsest stage down, interpolate onto the next finer
/// stage and append that stage's own features; the finest result is
/// interpolated onto the input points. Rows are L2-normalised.
Matrix decode_segmentation(const SegmentationEncoding& encoding, const PipelineConfig& cfg);

/// In-place L2 normalisation; rows already within 1e-12 of unit length and
/// zero rows are left untouched.
void normalize_rows(Matrix& m);
void normalize_vector(std::span<double> v);

}  // namespace tfcw
