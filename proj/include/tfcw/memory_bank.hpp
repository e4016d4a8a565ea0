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
#include <span>
#include <vector>

#include "tfcw/matrix.hpp"

namespace tfcw {

/// Unit-norm training features with one-hot labels and the similarity
/// sharpness gamma. Immutable once built; safe to query concurrently.
class MemoryBank {
 public:
  /// Rows are L2-normalised, labels one-hot encoded. Throws InvalidInput on
  /// zero-norm or non-finite rows, InvalidArgument on an empty set, labels
  /// outside [0, num_classes) or a negative/non-finite gamma.
  MemoryBank(Matrix features, std::span<const int> labels, std::size_t num_classes, double gamma);

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  Matrix labels_onehot() const;
  std::size_t size() const noexcept { return features_.rows(); }
  std::size_t width() const noexcept { return features_.cols(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  double gamma() const noexcept { return gamma_; }

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::size_t num_classes_;
  double gamma_;
};

MemoryBank build_bank(Matrix features, std::span<const int> labels, std::size_t num_classes, double gamma);

struct Prediction {
  Matrix logits;            ///< T x L
  std::vector<int> labels;  ///< argmax, lowest class index on ties
};

/// logits = exp(-gamma (1 - S)) * onehot with S = test * bank^T (cosine).
/// Test rows are normalised like bank rows. Throws InvalidArgument on a
/// width mismatch.
Prediction predict(const MemoryBank& bank, const Matrix& test_features);

/// Row-wise prediction for per-point features.
std::vector<int> predict_pointwise(const MemoryBank& bank, const Matrix& per_point_features);

/// argmax with lowest-index tie-break.
int argmax(std::span<const double> values) noexcept;

enum class Task { Classification, PartSegmentation };

struct Metrics {
  double overall_accuracy = 0.0;
  std::vector<double> per_class_accuracy;  ///< 0 for classes absent from the truth
  std::vector<std::size_t> class_support;  ///< truth count per class
  double miou = 0.0;                       ///< mean per-shape IoU (segmentation only)
};

/// Metrics over flat label vectors. For PartSegmentation, `shape_sizes`
/// splits the vectors into consecutive shapes (empty: one shape). A shape's
/// IoU is the mean over parts present in its prediction or truth.
/// Throws InvalidArgument on length mismatch or labels outside
/// [0, num_classes).
Metrics compute_metrics(std::span<const int> pred, std::span<const int> truth, Task task, std::size_t num_classes,
                        std::span<const std::size_t> shape_sizes = {});

/// Mean IoU of one shape over the parts present in prediction or truth.
double shape_iou(std::span<const int> pred, std::span<const int> truth, std::size_t num_parts);

/// Grid value with the best validation accuracy, smallest gamma on ties.
/// Throws InvalidArgument on an empty grid or a non-positive entry.
double sweep_gamma(const Matrix& bank_features, std::span<const int> bank_labels, const Matrix& val_features,
                   std::span<const int> val_labels, std::size_t num_classes, std::span<const double> grid);

inline constexpr double kDefaultGamma = 100.0;
inline constexpr double kDefaultGammaGrid[] = {1.0, 10.0, 100.0, 1000.0};

}  // namespace tfcw
