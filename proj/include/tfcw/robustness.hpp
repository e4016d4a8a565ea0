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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tfcw/geometry.hpp"
#include "tfcw/matrix.hpp"
#include "tfcw/pipeline.hpp"

namespace tfcw {

enum class CorruptionKind { Jitter, GlobalNoise };

/// Severity-to-magnitude schedule. Jitter sigma and the outlier count grow
/// linearly with the severity level.
struct CorruptionSchedule {
  double jitter_sigma_per_level = 0.01;
  std::size_t outliers_per_level = 10;
  double cube_scale = 1.5;
};

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::Jitter;
  int severity = 1;  ///< 1..5
  std::uint64_t seed = 0;
  CorruptionSchedule schedule{};
};

/// Point label given to appended outliers.
inline constexpr int kOutlierLabel = -1;

/// Adds N(0, sigma^2) to every coordinate, sigma = jitter_sigma_per_level *
/// severity. Point count, normals and labels unchanged.
PointCloud apply_jitter(const PointCloud& cloud, const CorruptionSpec& spec);

/// Appends outliers_per_level * severity points drawn uniformly from the
/// bounding cube (centred on the bounding box, side = largest extent)
/// scaled by cube_scale. Existing rows are untouched; outliers get
/// kOutlierLabel when point labels exist and random unit normals when
/// normals exist.
PointCloud apply_global_noise(const PointCloud& cloud, const CorruptionSpec& spec);

PointCloud apply_corruption(const PointCloud& cloud, const CorruptionSpec& spec);

enum class RotationScenario { ZZ, ZSO3, SO3SO3 };

std::string_view to_string(RotationScenario s) noexcept;

struct RotatedSets {
  std::vector<PointCloud> train;
  std::vector<PointCloud> test;
};

/// Rotates every cloud with its own seeded rotation: z/z, z/SO(3) or
/// SO(3)/SO(3) for (train, test).
RotatedSets rotation_scenario(std::span<const PointCloud> train, std::span<const PointCloud> test,
                              RotationScenario scenario, std::uint64_t seed);

/// Classification features of `clouds`, processed in consecutive batches of
/// `batch_size` after an optional seeded shuffle. Rows come back in the
/// original order.
Matrix encode_in_batches(std::span<const PointCloud> clouds, std::size_t batch_size, bool shuffle,
                         std::uint64_t shuffle_seed, const PipelineConfig& cfg);

inline constexpr std::size_t kStabilityBatchSizes[] = {1, 2, 4, 8, 16, 32};

struct StabilityRow {
  std::size_t batch_size = 1;
  bool shuffled = false;
  double max_deviation = 0.0;           ///< vs. the batch-size-1 unshuffled features
  std::optional<double> accuracy;       ///< filled by stability_accuracy_check
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  double max_deviation() const noexcept;
};

/// Feature deviation for every (batch size, shuffle) pair.
StabilityReport shuffle_stability_check(std::span<const PointCloud> clouds, std::span<const std::size_t> batch_sizes,
                                        std::span<const bool> shuffle_modes, const PipelineConfig& cfg,
                                        std::uint64_t shuffle_seed = 0);

/// As shuffle_stability_check, additionally classifying `test` against a
/// bank of `train` encoded under the same batching.
StabilityReport stability_accuracy_check(std::span<const PointCloud> train, std::span<const PointCloud> test,
                                         std::size_t num_classes, std::span<const std::size_t> batch_sizes,
                                         std::span<const bool> shuffle_modes, const PipelineConfig& cfg,
                                         double gamma, std::uint64_t shuffle_seed = 0);

struct ScalingReport {
  std::vector<std::size_t> point_counts;
  std::vector<double> wall_times;         ///< seconds
  std::vector<std::size_t> peak_memory;   ///< bytes above the pre-call baseline
  std::optional<std::size_t> failed_at;   ///< point count whose encode ran out of memory
};

/// Encodes uniform random clouds of start, start + step, ... <= limit points
/// and records wall time (minimum over `repeats`) and peak heap usage of the
/// encode call. Allocation failure ends the run and is recorded, not thrown.
ScalingReport volume_scaling_run(std::size_t start, std::size_t step, std::size_t limit, const PipelineConfig& cfg,
                                 std::uint64_t seed = 0, std::size_t repeats = 1);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace tfcw
