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
#include <string_view>
#include <vector>

#include "tfcw/matrix.hpp"

namespace tfcw {

/// Formulations of the dimension-pair matrix, built from the Gram matrix
/// G = X X^T of a D x N feature matrix X.
enum class GramVariant {
  TfcwFull,       ///< sqrt(diag(G) 1^T + 1 diag(G)^T - 2G)
  OneG,           ///< sqrt(diag(G) 1^T + 1 diag(G)^T - G)
  NoG,            ///< sqrt(diag(G) 1^T + 1 diag(G)^T)
  GramOnly,       ///< G
  GramMinusDiag,  ///< G with its diagonal zeroed
};

inline constexpr GramVariant kAllGramVariants[] = {GramVariant::TfcwFull, GramVariant::OneG, GramVariant::NoG,
                                                   GramVariant::GramOnly, GramVariant::GramMinusDiag};

std::string_view to_string(GramVariant v) noexcept;
GramVariant gram_variant_from_string(std::string_view name);

enum class Pooling { Max, Avg };

std::string_view to_string(Pooling p) noexcept;
Pooling pooling_from_string(std::string_view name);

/// Knobs shared by the translation kernels.
struct TranslateOptions {
  double alpha = 1.0;
  Pooling pooling = Pooling::Max;        ///< pooling over neighbours in the global kernel
  GramVariant variant = GramVariant::TfcwFull;
  bool local_normalization = true;       ///< divide each neighbour column by its channel std
  double eps = 1e-5;                     ///< added to the std before dividing
};

/// Euclidean distance between every pair of rows of a D x N matrix.
/// Columns are accumulated in lexicographic order, so any column permutation
/// of the input yields a bit-identical result. Throws InvalidInput on
/// non-finite entries.
Matrix pairwise_dim_distance(const Matrix& features);

/// The same distances through the Gram matrix:
/// sqrt(max(0, diag(G) 1^T + 1 diag(G)^T - 2G)).
Matrix gram_form(const Matrix& features);

/// Diagonal-ablation formulations. TfcwFull is exactly gram_form.
Matrix gram_variant(const Matrix& features, GramVariant variant);

/// Multiplies the block rows [0, C-2] x cols [1, C-1] by alpha in place.
void scale_upper_block(std::span<double> square, std::size_t c, double alpha) noexcept;

/// Global t-FCW of a grouped N x K x C descriptor: pool over K to C x N, take
/// dimension-pair distances, scale the upper block by alpha. Returns C x C.
Matrix tfcw_global(const Tensor3& grouped, const TranslateOptions& opts = {});

/// Per-point t-FCW: each K x C neighbour block is read as C rows of length K,
/// each column divided by (std over the C channels + eps), then turned into a
/// C x C distance matrix and scaled by alpha. Returns N x C x C.
/// Requires C >= 2 when local normalisation is on.
Tensor3 tfcw_empowered(const Tensor3& grouped, const TranslateOptions& opts = {});

/// Column-wise max followed by column-wise mean: N x F -> 2F.
std::vector<double> hybrid_pool(const Matrix& rows);

/// Classification block: flatten(global C x C) ++ hybrid_pool(N x C^2 local).
/// Length 3 C^2.
std::vector<double> united_block(const Tensor3& grouped, const TranslateOptions& opts = {});

/// Segmentation block, N x (C + C^2): per point, the neighbour-mean of its C
/// descriptor channels followed by its flattened local C x C matrix.
Matrix empowered_block(const Tensor3& grouped, const TranslateOptions& opts = {});

}  // namespace tfcw
