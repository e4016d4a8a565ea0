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

#include "tfcw/memory_bank.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tfcw/error.hpp"
#include "tfcw/parallel.hpp"
#include "tfcw/pipeline.hpp"

namespace tfcw {

namespace {

void check_labels(std::span<const int> labels, std::size_t num_classes, const char* what) {
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw InvalidArgument(std::string(what) + ": label " + std::to_string(l) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
  }
}

void normalize_checked(Matrix& m, const char* what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double ss = 0.0;
    for (double v : m.row(r)) {
      if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite feature in row " + std::to_string(r));
      ss += v * v;
    }
    if (ss == 0.0) throw InvalidInput(std::string(what) + ": zero-norm feature row " + std::to_string(r));
  }
  normalize_rows(m);
}

}  // namespace

MemoryBank::MemoryBank(Matrix features, std::span<const int> labels, std::size_t num_classes, double gamma)
    : features_(std::move(features)), labels_(labels.begin(), labels.end()), num_classes_(num_classes),
      gamma_(gamma) {
  if (features_.rows() == 0) throw InvalidArgument("memory bank needs at least one sample");
  if (labels_.size() != features_.rows()) throw InvalidArgument("memory bank: one label per feature row required");
  if (num_classes_ == 0) throw InvalidArgument("memory bank: num_classes must be positive");
  if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) throw InvalidArgument("memory bank: gamma must be finite and >= 0");
  check_labels(labels_, num_classes_, "memory bank");
  normalize_checked(features_, "memory bank");
}

Matrix MemoryBank::labels_onehot() const {
  Matrix out(labels_.size(), num_classes_);
  for (std::size_t i = 0; i < labels_.size(); ++i) out(i, static_cast<std::size_t>(labels_[i])) = 1.0;
  return out;
}

MemoryBank build_bank(Matrix features, std::span<const int> labels, std::size_t num_classes, double gamma) {
  return MemoryBank(std::move(features), labels, num_classes, gamma);
}

int argmax(std::span<const double> values) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

Prediction predict(const MemoryBank& bank, const Matrix& test_features) {
  if (test_features.cols() != bank.width()) {
    throw InvalidArgument("predict: feature width " + std::to_string(test_features.cols()) +
                          " does not match bank width " + std::to_string(bank.width()));
  }
  Matrix test = test_features;
  normalize_checked(test, "predict");

  const Matrix& bankf = bank.features();
  const auto& labels = bank.labels();
  const std::size_t f = bank.width();
  Prediction out;
  out.logits = Matrix(test.rows(), bank.num_classes());
  out.labels.resize(test.rows());
  // Each test row is scored on its own; no quantity is shared across rows.
  parallel_for(test.rows(), [&](std::size_t t) {
    const auto q = test.row(t);
    auto logits = out.logits.row(t);
    for (std::size_t m = 0; m < bankf.rows(); ++m) {
      const auto b = bankf.row(m);
      double s = 0.0;
      for (std::size_t c = 0; c < f; ++c) s += q[c] * b[c];
      logits[static_cast<std::size_t>(labels[m])] += std::exp(-bank.gamma() * (1.0 - s));
    }
    out.labels[t] = argmax(logits);
  });
  return out;
}

std::vector<int> predict_pointwise(const MemoryBank& bank, const Matrix& per_point_features) {
  return predict(bank, per_point_features).labels;
}

double shape_iou(std::span<const int> pred, std::span<const int> truth, std::size_t num_parts) {
  std::vector<std::size_t> inter(num_parts, 0), uni(num_parts, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = static_cast<std::size_t>(pred[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p == t) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[t];
    }
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < num_parts; ++c) {
    if (uni[c] == 0) continue;
    sum += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    ++present;
  }
  return present == 0 ? 1.0 : sum / static_cast<double>(present);
}

Metrics compute_metrics(std::span<const int> pred, std::span<const int> truth, Task task, std::size_t num_classes,
                        std::span<const std::size_t> shape_sizes) {
  if (pred.size() != truth.size()) throw InvalidArgument("compute_metrics: prediction and truth lengths differ");
  check_labels(pred, num_classes, "compute_metrics prediction");
  check_labels(truth, num_classes, "compute_metrics truth");

  Metrics m;
  m.per_class_accuracy.assign(num_classes, 0.0);
  m.class_support.assign(num_classes, 0);
  std::vector<std::size_t> hits(num_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    ++m.class_support[t];
    if (pred[i] == truth[i]) {
      ++correct;
      ++hits[t];
    }
  }
  m.overall_accuracy = pred.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pred.size());
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (m.class_support[c] > 0) {
      m.per_class_accuracy[c] = static_cast<double>(hits[c]) / static_cast<double>(m.class_support[c]);
    }
  }

  if (task == Task::PartSegmentation) {
    std::vector<std::size_t> sizes(shape_sizes.begin(), shape_sizes.end());
    if (sizes.empty()) sizes.push_back(pred.size());
    std::size_t total = 0;
    for (std::size_t s : sizes) total += s;
    if (total != pred.size()) throw InvalidArgument("compute_metrics: shape sizes do not cover the labels");
    double sum = 0.0;
    std::size_t offset = 0;
    for (std::size_t s : sizes) {
      sum += shape_iou(pred.subspan(offset, s), truth.subspan(offset, s), num_classes);
      offset += s;
    }
    m.miou = sizes.empty() ? 0.0 : sum / static_cast<double>(sizes.size());
  }
  return m;
}

double sweep_gamma(const Matrix& bank_features, std::span<const int> bank_labels, const Matrix& val_features,
                   std::span<const int> val_labels, std::size_t num_classes, std::span<const double> grid) {
  if (grid.empty()) throw InvalidArgument("sweep_gamma: empty grid");
  for (double g : grid) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgument("sweep_gamma: grid values must be positive");
  }
  if (val_labels.size() != val_features.rows()) throw InvalidArgument("sweep_gamma: one label per validation row");
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  double best_gamma = sorted.front();
  double best_acc = -1.0;
  for (double g : sorted) {
    const MemoryBank bank(bank_features, bank_labels, num_classes, g);
    const auto pred = predict(bank, val_features).labels;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val_labels[i] ? 1 : 0;
    const double acc = static_cast<double>(correct) / static_cast<double>(std::max<std::size_t>(1, pred.size()));
    if (acc > best_acc) {
      best_acc = acc;
      best_gamma = g;
    }
  }
  return best_gamma;
}

}  // namespace tfcw
