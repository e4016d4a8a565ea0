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

#include "tfcw/translate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tfcw/error.hpp"

namespace tfcw {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

// Column order that only depends on the multiset of columns. Accumulating in
// this order makes the kernels exactly invariant to column permutation.
std::vector<std::size_t> canonical_columns(std::span<const double> x, std::size_t rows, std::size_t cols) {
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double va = x[r * cols + a];
      const double vb = x[r * cols + b];
      if (va != vb) return va < vb;
    }
    return false;
  });
  return order;
}

// Row distances of a rows x cols block, written to a rows x rows square.
void row_distances(std::span<const double> x, std::size_t rows, std::size_t cols, std::span<double> out) {
  const auto order = canonical_columns(x, rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    out[i * rows + i] = 0.0;
    for (std::size_t j = i + 1; j < rows; ++j) {
      double acc = 0.0;
      for (std::size_t c : order) {
        const double d = x[i * cols + c] - x[j * cols + c];
        acc += d * d;
      }
      const double dist = std::sqrt(acc);
      out[i * rows + j] = dist;
      out[j * rows + i] = dist;
    }
  }
}

void gram(std::span<const double> x, std::size_t rows, std::size_t cols, std::vector<double>& g) {
  const auto order = canonical_columns(x, rows, cols);
  g.assign(rows * rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = i; j < rows; ++j) {
      double acc = 0.0;
      for (std::size_t c : order) acc += x[i * cols + c] * x[j * cols + c];
      g[i * rows + j] = acc;
      g[j * rows + i] = acc;
    }
  }
}

void variant_from_gram(const std::vector<double>& g, std::size_t d, GramVariant variant, std::span<double> out) {
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double gij = g[i * d + j];
      const double sum_diag = g[i * d + i] + g[j * d + j];
      double v = 0.0;
      switch (variant) {
        case GramVariant::TfcwFull: v = std::sqrt(std::max(0.0, sum_diag - 2.0 * gij)); break;
        case GramVariant::OneG: v = std::sqrt(std::max(0.0, sum_diag - gij)); break;
        case GramVariant::NoG: v = std::sqrt(std::max(0.0, sum_diag)); break;
        case GramVariant::GramOnly: v = gij; break;
        case GramVariant::GramMinusDiag: v = i == j ? 0.0 : gij; break;
      }
      out[i * d + j] = v;
    }
  }
}

// Dimension-pair matrix of a rows x cols block under the chosen formulation.
// TfcwFull goes through the direct difference form.
void dimension_matrix(std::span<const double> x, std::size_t rows, std::size_t cols, GramVariant variant,
                      std::vector<double>& scratch, std::span<double> out) {
  if (variant == GramVariant::TfcwFull) {
    row_distances(x, rows, cols, out);
    return;
  }
  gram(x, rows, cols, scratch);
  variant_from_gram(scratch, rows, variant, out);
}

}  // namespace

std::string_view to_string(GramVariant v) noexcept {
  switch (v) {
    case GramVariant::TfcwFull: return "tfcw_full";
    case GramVariant::OneG: return "one_g";
    case GramVariant::NoG: return "no_g";
    case GramVariant::GramOnly: return "gram_only";
    case GramVariant::GramMinusDiag: return "gram_minus_diag";
  }
  return "tfcw_full";
}

GramVariant gram_variant_from_string(std::string_view name) {
  for (GramVariant v : kAllGramVariants) {
    if (to_string(v) == name) return v;
  }
  throw InvalidArgument("unknown gram variant '" + std::string(name) + "'");
}

std::string_view to_string(Pooling p) noexcept { return p == Pooling::Max ? "max" : "avg"; }

Pooling pooling_from_string(std::string_view name) {
  if (name == "max") return Pooling::Max;
  if (name == "avg") return Pooling::Avg;
  throw InvalidArgument("unknown pooling '" + std::string(name) + "' (expected max or avg)");
}

Matrix pairwise_dim_distance(const Matrix& features) {
  if (features.rows() < 1 || features.cols() < 1) throw InvalidArgument("pairwise_dim_distance: empty input");
  require_finite(features.data(), "pairwise_dim_distance");
  Matrix out(features.rows(), features.rows());
  row_distances(features.data(), features.rows(), features.cols(), out.data());
  return out;
}

Matrix gram_form(const Matrix& features) { return gram_variant(features, GramVariant::TfcwFull); }

Matrix gram_variant(const Matrix& features, GramVariant variant) {
  if (features.rows() < 1 || features.cols() < 1) throw InvalidArgument("gram_variant: empty input");
  require_finite(features.data(), "gram_variant");
  const std::size_t d = features.rows();
  Matrix out(d, d);
  std::vector<double> g;
  gram(features.data(), d, features.cols(), g);
  variant_from_gram(g, d, variant, out.data());
  return out;
}

void scale_upper_block(std::span<double> square, std::size_t c, double alpha) noexcept {
  if (alpha == 1.0) return;
  for (std::size_t i = 0; i + 1 < c; ++i) {
    for (std::size_t j = 1; j < c; ++j) square[i * c + j] *= alpha;
  }
}

Matrix tfcw_global(const Tensor3& grouped, const TranslateOptions& opts) {
  const std::size_t n = grouped.dim0();
  const std::size_t k = grouped.dim1();
  const std::size_t c = grouped.dim2();
  if (n == 0 || k == 0 || c == 0) throw InvalidArgument("tfcw_global: empty descriptor tensor");

  // Pool over the neighbour axis, laid out C x N.
  Matrix pooled(c, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double acc = opts.pooling == Pooling::Max ? -std::numeric_limits<double>::infinity() : 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double v = grouped(i, j, ch);
        acc = opts.pooling == Pooling::Max ? std::max(acc, v) : acc + v;
      }
      pooled(ch, i) = opts.pooling == Pooling::Max ? acc : acc / static_cast<double>(k);
    }
  }
  require_finite(pooled.data(), "tfcw_global");

  Matrix out(c, c);
  std::vector<double> scratch;
  dimension_matrix(pooled.data(), c, n, opts.variant, scratch, out.data());
  scale_upper_block(out.data(), c, opts.alpha);
  return out;
}

Tensor3 tfcw_empowered(const Tensor3& grouped, const TranslateOptions& opts) {
  const std::size_t n = grouped.dim0();
  const std::size_t k = grouped.dim1();
  const std::size_t c = grouped.dim2();
  if (k == 0 || c == 0) throw InvalidArgument("tfcw_empowered: empty neighbour block");
  if (opts.local_normalization && c < 2) {
    throw InvalidArgument("tfcw_empowered: channel std needs at least 2 channels");
  }
  require_finite(grouped.data(), "tfcw_empowered");

  Tensor3 out(n, c, c);
  std::vector<double> block(c * k);
  std::vector<double> scratch;
  for (std::size_t i = 0; i < n; ++i) {
    // K x C slab -> C x K block.
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t ch = 0; ch < c; ++ch) block[ch * k + j] = grouped(i, j, ch);

    if (opts.local_normalization) {
      // Unbiased std across the channel axis, one value per neighbour column.
      for (std::size_t j = 0; j < k; ++j) {
        double mean = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) mean += block[ch * k + j];
        mean /= static_cast<double>(c);
        double ss = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) {
          const double d = block[ch * k + j] - mean;
          ss += d * d;
        }
        const double denom = std::sqrt(ss / static_cast<double>(c - 1)) + opts.eps;
        for (std::size_t ch = 0; ch < c; ++ch) block[ch * k + j] /= denom;
      }
    }
    const std::span<double> dst = out.slab(i);
    dimension_matrix(block, c, k, opts.variant, scratch, dst);
    scale_upper_block(dst, c, opts.alpha);
  }
  return out;
}

std::vector<double> hybrid_pool(const Matrix& rows) {
  if (rows.rows() == 0) throw InvalidArgument("hybrid_pool: no rows");
  const std::size_t f = rows.cols();
  std::vector<double> out(2 * f);
  for (std::size_t c = 0; c < f; ++c) {
    double mx = rows(0, c);
    double sum = 0.0;
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      mx = std::max(mx, rows(r, c));
      sum += rows(r, c);
    }
    out[c] = mx;
    out[f + c] = sum / static_cast<double>(rows.rows());
  }
  return out;
}

std::vector<double> united_block(const Tensor3& grouped, const TranslateOptions& opts) {
  const Matrix global = tfcw_global(grouped, opts);
  const Tensor3 local = tfcw_empowered(grouped, opts);
  const std::size_t c2 = grouped.dim2() * grouped.dim2();
  Matrix flat(local.dim0(), c2);
  std::copy(local.data().begin(), local.data().end(), flat.data().begin());

  std::vector<double> out(global.data().begin(), global.data().end());
  const auto pooled = hybrid_pool(flat);
  out.insert(out.end(), pooled.begin(), pooled.end());
  return out;
}

Matrix empowered_block(const Tensor3& grouped, const TranslateOptions& opts) {
  const std::size_t n = grouped.dim0();
  const std::size_t k = grouped.dim1();
  const std::size_t c = grouped.dim2();
  const Tensor3 local = tfcw_empowered(grouped, opts);
  Matrix out(n, c + c * c);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    for (std::size_t ch = 0; ch < c; ++ch) {
      double sum = 0.0;
      for (std::size_t j = 0; j < k; ++j) sum += grouped(i, j, ch);
      row[ch] = sum / static_cast<double>(k);
    }
    const auto slab = local.slab(i);
    std::copy(slab.begin(), slab.end(), row.begin() + static_cast<std::ptrdiff_t>(c));
  }
  return out;
}

}  // namespace tfcw
