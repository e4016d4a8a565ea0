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
#include <string_view>
#include <vector>

#include "tfcw/geometry.hpp"
#include "tfcw/matrix.hpp"

namespace tfcw {

enum class DescriptorKind { XyzNeighbor, GeoPCSD, RISP };

std::string_view to_string(DescriptorKind kind) noexcept;
DescriptorKind descriptor_kind_from_string(std::string_view name);

/// Channel count per descriptor family: 6 for xyz, 14 for GeoPCSD and RISP.
constexpr std::size_t descriptor_width(DescriptorKind kind) noexcept {
  return kind == DescriptorKind::XyzNeighbor ? 6 : 14;
}

/// Counters for numerically degenerate geometry met while computing
/// descriptors. Degenerate quantities fall back to 0 instead of NaN.
struct DegeneracyReport {
  std::size_t zero_length_angles = 0;  ///< RISP angles with a zero-length operand
  std::size_t collinear_triangles = 0; ///< GeoPCSD rows whose cross product vanished
  std::size_t missing_neighbors = 0;   ///< GeoPCSD rows built from fewer than 2 other points
  std::size_t flat_normals = 0;        ///< normals that fell back to (0, 0, 1)

  DegeneracyReport& operator+=(const DegeneracyReport& o) noexcept {
    zero_length_angles += o.zero_length_angles;
    collinear_triangles += o.collinear_triangles;
    missing_neighbors += o.missing_neighbors;
    flat_normals += o.flat_normals;
    return *this;
  }
  std::size_t total() const noexcept {
    return zero_length_angles + collinear_triangles + missing_neighbors + flat_normals;
  }
};

struct NormalEstimate {
  std::vector<Vec3> normals;
  std::vector<std::size_t> flagged;  ///< rows with a rank-deficient neighbourhood
};

/// PCA normals over k_normal nearest neighbours (the point included).
/// Oriented away from the cloud centroid; when that is ambiguous, towards +z,
/// then +y, then +x.
NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k_normal);

/// xyz descriptor, Q x K x 6: (neighbour position, neighbour - query).
/// `neighbors` indexes `reference` with one row per query point.
Tensor3 pcsd_xyz(std::span<const Vec3> reference, std::span<const Vec3> queries, const NeighborIndex& neighbors);
Tensor3 pcsd_xyz(const PointCloud& cloud, const NeighborIndex& neighbors);

/// Geometric point descriptor, N x 14. For each point p with its two nearest
/// other points x1, x2 (v1 = x1 - p, v2 = x2 - p):
///   [p, v1 x v2, v1, v2, |v1|, |v2|]
/// Throws InvalidInput when N < 3.
Matrix pcsd_geo(const PointCloud& cloud, DegeneracyReport* report = nullptr);

/// Same as pcsd_geo but accepts N < 3: missing neighbours are taken as the
/// point itself (zero edge) and counted in the report.
Matrix pcsd_geo_lenient(std::span<const Vec3> points, DegeneracyReport* report = nullptr);

/// The geometry needed for one RISP row: reference p with normal, the current
/// neighbour x_i and its two list-adjacent neighbours, each with a normal.
struct RispFrame {
  Vec3 p, n_p;
  Vec3 prev, n_prev;
  Vec3 cur, n_cur;
  Vec3 next, n_next;
};

inline constexpr std::size_t kRispWidth = 14;

/// [L, phi1..phi5, alpha1, alpha2, beta1, beta2, theta1, theta2, gamma1, gamma2].
/// Angles in [0, pi] from clamped arccos; zero-length operands give 0.
std::array<double, kRispWidth> risp_row(const RispFrame& frame, DegeneracyReport* report = nullptr);

/// Rotation-invariant surface descriptor, Q x K x 14. Neighbour adjacency is
/// taken in the distance-sorted list, wrapping cyclically at both ends.
Tensor3 pcsd_risp(std::span<const Vec3> reference, std::span<const Vec3> reference_normals,
                  std::span<const Vec3> queries, std::span<const Vec3> query_normals,
                  const NeighborIndex& neighbors, DegeneracyReport* report = nullptr);
/// Cloud form; normals are estimated (k = 16, capped at N) when absent.
Tensor3 pcsd_risp(const PointCloud& cloud, const NeighborIndex& neighbors, DegeneracyReport* report = nullptr);

/// Gathers per-point descriptor rows into a grouped Q x K x C tensor.
Tensor3 group_rows(const Matrix& per_point, const NeighborIndex& neighbors);

}  // namespace tfcw
