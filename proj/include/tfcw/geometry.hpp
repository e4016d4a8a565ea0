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

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tfcw/matrix.hpp"

namespace tfcw {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) noexcept { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double operator[](std::size_t i) const noexcept { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(Vec3 a, Vec3 b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) noexcept { return std::sqrt(dot(a, a)); }

/// Squared Euclidean distance, summed x then y then z. Every distance
/// comparison in the toolkit goes through this so orderings are reproducible.
inline double squared_distance(Vec3 a, Vec3 b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

/// Strict lexicographic (x, y, z) order.
inline bool lex_less(Vec3 a, Vec3 b) noexcept {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

/// Raw point cloud: coordinates plus optional normals and labels.
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<Vec3>> normals;
  std::optional<std::vector<int>> point_labels;
  std::optional<int> class_label;

  std::size_t size() const noexcept { return points.size(); }

  /// Throws InvalidInput if any invariant is violated: N >= 1, finite
  /// coordinates, unit normals (1e-6), label count matching N.
  void validate() const;
};

/// k nearest neighbours for each of Q queries, row-major Q x k.
struct NeighborIndex {
  std::size_t queries = 0;
  std::size_t k = 0;
  std::vector<std::size_t> indices;
  std::vector<double> distances;

  std::span<const std::size_t> row(std::size_t q) const noexcept { return {indices.data() + q * k, k}; }
  std::span<const double> row_distances(std::size_t q) const noexcept {
    return {distances.data() + q * k, k};
  }
};

struct RotationMatrix {
  std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  static RotationMatrix identity() noexcept { return {}; }
  Vec3 apply(Vec3 v) const noexcept {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  RotationMatrix transposed() const noexcept;
  double determinant() const noexcept;
  /// Largest |(m^T m - I)_ij|.
  double orthogonality_error() const noexcept;
};

enum class StartKind { FixedIndex, CanonicalFarthestFromCentroid };

struct StartRule {
  StartKind kind = StartKind::CanonicalFarthestFromCentroid;
  std::size_t index = 0;

  static StartRule fixed(std::size_t i) noexcept { return {StartKind::FixedIndex, i}; }
  static StartRule canonical() noexcept { return {}; }
};

/// Farthest point sampling. Each pick maximises the minimum distance to the
/// already-picked set. Ties go to the lowest index (FixedIndex) or to the
/// lexicographically smallest coordinates (canonical; index as last resort).
/// Exact: identical output to the exhaustive O(N * count) procedure, but
/// uses a bounding-box tree to skip subtrees a new pick cannot improve.
std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t count,
                                               StartRule start = StartRule::canonical());
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t count,
                                               StartRule start = StartRule::canonical());

enum class KnnStrategy { Auto, BruteForce, Grid };

/// k nearest reference points per query, ascending by distance, distance
/// ties resolved to the lower reference index. Both strategies return
/// identical results; Auto picks the uniform grid for large references.
NeighborIndex knn(std::span<const Vec3> query, std::span<const Vec3> reference, std::size_t k,
                  KnnStrategy strategy = KnnStrategy::Auto);

enum class RotationMode { ZAxis, SO3 };

/// Deterministic rotation for (seed, mode). SO3 is Haar-uniform via a unit
/// quaternion; ZAxis leaves e_z fixed exactly.
RotationMatrix random_rotation(std::uint64_t seed, RotationMode mode);

/// points' = points * r^T; normals rotated the same way; labels untouched.
PointCloud apply_rotation(const PointCloud& cloud, const RotationMatrix& r);

/// Gathers rows of a point list.
std::vector<Vec3> gather(std::span<const Vec3> points, std::span<const std::size_t> indices);

/// Subset of a cloud (points, normals and point labels) in index order.
PointCloud subset(const PointCloud& cloud, std::span<const std::size_t> indices);

/// Centroid to origin, max radius to 1. Normals and labels untouched.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

/// SplitMix64 step, used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace tfcw
