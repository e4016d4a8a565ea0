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

#include "tfcw/robustness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <new>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "tfcw/error.hpp"
#include "tfcw/memory_bank.hpp"
#include "tfcw/memtrack.hpp"
#include "tfcw/parallel.hpp"
#include "tfcw/synthetic.hpp"

namespace tfcw {

namespace {

void check_severity(const CorruptionSpec& spec) {
  if (spec.severity < 1 || spec.severity > 5) {
    throw InvalidArgument("corruption severity must be in 1..5, got " + std::to_string(spec.severity));
  }
}

std::vector<int> class_labels(std::span<const PointCloud> clouds) {
  std::vector<int> out;
  out.reserve(clouds.size());
  for (const auto& c : clouds) {
    if (!c.class_label) throw InvalidInput("cloud without a class label");
    out.push_back(*c.class_label);
  }
  return out;
}

}  // namespace

PointCloud apply_jitter(const PointCloud& cloud, const CorruptionSpec& spec) {
  if (spec.kind != CorruptionKind::Jitter) throw InvalidArgument("apply_jitter: spec is not a jitter corruption");
  check_severity(spec);
  const double sigma = spec.schedule.jitter_sigma_per_level * spec.severity;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, sigma);
  PointCloud out = cloud;
  for (Vec3& p : out.points) {
    p.x += noise(rng);
    p.y += noise(rng);
    p.z += noise(rng);
  }
  return out;
}

PointCloud apply_global_noise(const PointCloud& cloud, const CorruptionSpec& spec) {
  if (spec.kind != CorruptionKind::GlobalNoise) {
    throw InvalidArgument("apply_global_noise: spec is not a global-noise corruption");
  }
  check_severity(spec);
  if (cloud.points.empty()) throw InvalidInput("apply_global_noise: empty cloud");
  Vec3 lo = cloud.points[0], hi = cloud.points[0];
  for (const Vec3& p : cloud.points) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Vec3 center = 0.5 * (lo + hi);
  const Vec3 ext = hi - lo;
  const double half = 0.5 * spec.schedule.cube_scale * std::max({ext.x, ext.y, ext.z});

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(-half, half);
  std::normal_distribution<double> g(0.0, 1.0);
  PointCloud out = cloud;
  const std::size_t count = spec.schedule.outliers_per_level * static_cast<std::size_t>(spec.severity);
  for (std::size_t i = 0; i < count; ++i) {
    out.points.push_back({center.x + u(rng), center.y + u(rng), center.z + u(rng)});
    if (out.normals) {
      Vec3 d{g(rng), g(rng), g(rng)};
      const double n = norm(d);
      out.normals->push_back(n > 0.0 ? (1.0 / n) * d : Vec3{0.0, 0.0, 1.0});
    }
    if (out.point_labels) out.point_labels->push_back(kOutlierLabel);
  }
  return out;
}

PointCloud apply_corruption(const PointCloud& cloud, const CorruptionSpec& spec) {
  return spec.kind == CorruptionKind::Jitter ? apply_jitter(cloud, spec) : apply_global_noise(cloud, spec);
}

std::string_view to_string(RotationScenario s) noexcept {
  switch (s) {
    case RotationScenario::ZZ: return "z/z";
    case RotationScenario::ZSO3: return "z/SO3";
    case RotationScenario::SO3SO3: return "SO3/SO3";
  }
  return "z/z";
}

RotatedSets rotation_scenario(std::span<const PointCloud> train, std::span<const PointCloud> test,
                              RotationScenario scenario, std::uint64_t seed) {
  const RotationMode train_mode = scenario == RotationScenario::SO3SO3 ? RotationMode::SO3 : RotationMode::ZAxis;
  const RotationMode test_mode = scenario == RotationScenario::ZZ ? RotationMode::ZAxis : RotationMode::SO3;
  RotatedSets out;
  out.train.reserve(train.size());
  out.test.reserve(test.size());
  const std::uint64_t train_stream = mix_seed(seed, 0);
  const std::uint64_t test_stream = mix_seed(seed, 1);
  for (std::size_t i = 0; i < train.size(); ++i) {
    out.train.push_back(apply_rotation(train[i], random_rotation(mix_seed(train_stream, i), train_mode)));
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    out.test.push_back(apply_rotation(test[i], random_rotation(mix_seed(test_stream, i), test_mode)));
  }
  return out;
}

Matrix encode_in_batches(std::span<const PointCloud> clouds, std::size_t batch_size, bool shuffle,
                         std::uint64_t shuffle_seed, const PipelineConfig& cfg) {
  if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
  std::vector<std::size_t> order(clouds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<std::vector<double>> rows(clouds.size());
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    parallel_for(end - begin, [&](std::size_t i) {
      const std::size_t idx = order[begin + i];
      rows[idx] = encode_classification(clouds[idx], cfg).feature;
    });
  }
  Matrix out(clouds.size(), clouds.empty() ? 0 : rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  return out;
}

double StabilityReport::max_deviation() const noexcept {
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.max_deviation);
  return worst;
}

StabilityReport shuffle_stability_check(std::span<const PointCloud> clouds, std::span<const std::size_t> batch_sizes,
                                        std::span<const bool> shuffle_modes, const PipelineConfig& cfg,
                                        std::uint64_t shuffle_seed) {
  const Matrix reference = encode_in_batches(clouds, 1, false, shuffle_seed, cfg);
  StabilityReport report;
  for (std::size_t bs : batch_sizes) {
    for (bool shuffled : shuffle_modes) {
      const Matrix feats = encode_in_batches(clouds, bs, shuffled, shuffle_seed, cfg);
      StabilityRow row;
      row.batch_size = bs;
      row.shuffled = shuffled;
      for (std::size_t i = 0; i < feats.data().size(); ++i) {
        row.max_deviation = std::max(row.max_deviation, std::abs(feats.data()[i] - reference.data()[i]));
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

StabilityReport stability_accuracy_check(std::span<const PointCloud> train, std::span<const PointCloud> test,
                                         std::size_t num_classes, std::span<const std::size_t> batch_sizes,
                                         std::span<const bool> shuffle_modes, const PipelineConfig& cfg,
                                         double gamma, std::uint64_t shuffle_seed) {
  const auto train_labels = class_labels(train);
  const auto test_labels = class_labels(test);
  const Matrix ref_train = encode_in_batches(train, 1, false, shuffle_seed, cfg);
  const Matrix ref_test = encode_in_batches(test, 1, false, shuffle_seed, cfg);
  StabilityReport report;
  for (std::size_t bs : batch_sizes) {
    for (bool shuffled : shuffle_modes) {
      const Matrix tr = encode_in_batches(train, bs, shuffled, shuffle_seed, cfg);
      const Matrix te = encode_in_batches(test, bs, shuffled, mix_seed(shuffle_seed, 1), cfg);
      StabilityRow row;
      row.batch_size = bs;
      row.shuffled = shuffled;
      for (std::size_t i = 0; i < tr.data().size(); ++i) {
        row.max_deviation = std::max(row.max_deviation, std::abs(tr.data()[i] - ref_train.data()[i]));
      }
      for (std::size_t i = 0; i < te.data().size(); ++i) {
        row.max_deviation = std::max(row.max_deviation, std::abs(te.data()[i] - ref_test.data()[i]));
      }
      const MemoryBank bank(tr, train_labels, num_classes, gamma);
      const auto pred = predict(bank, te).labels;
      row.accuracy = compute_metrics(pred, test_labels, Task::Classification, num_classes).overall_accuracy;
      report.rows.push_back(row);
    }
  }
  return report;
}

ScalingReport volume_scaling_run(std::size_t start, std::size_t step, std::size_t limit, const PipelineConfig& cfg,
                                 std::uint64_t seed, std::size_t repeats) {
  if (start < 1 || step < 1) throw InvalidArgument("volume_scaling_run: start and step must be positive");
  if (limit < start) throw InvalidArgument("volume_scaling_run: limit must be at least start");
  repeats = std::max<std::size_t>(1, repeats);
  ScalingReport report;
  for (std::size_t n = start; n <= limit; n += step) {
    try {
      const PointCloud cloud = synthetic::uniform_cube(n, mix_seed(seed, n));
      double best = std::numeric_limits<double>::infinity();
      std::size_t peak = 0;
      for (std::size_t r = 0; r < repeats; ++r) {
        memtrack::reset_peak();
        const std::size_t baseline = memtrack::current_bytes();
        const auto t0 = std::chrono::steady_clock::now();
        const auto enc = encode_classification(cloud, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        peak = std::max(peak, memtrack::peak_bytes() - baseline);
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        if (enc.feature.empty()) throw Error("volume_scaling_run: empty feature");
      }
      report.point_counts.push_back(n);
      report.wall_times.push_back(best);
      report.peak_memory.push_back(peak);
    } catch (const std::bad_alloc&) {
      report.failed_at = n;
      break;
    }
  }
  return report;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("loglog_slope: need two or more paired samples");
  double mx = 0.0, my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("loglog_slope: samples must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InvalidArgument("loglog_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace tfcw
