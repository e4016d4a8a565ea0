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

#include "tfcw/descriptors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "tfcw/error.hpp"

namespace tfcw {

namespace {

constexpr double kZeroLength = 1e-12;

Vec3 ordered_centroid(std::span<const Vec3> points) {
  std::vector<Vec3> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), lex_less);
  Vec3 sum;
  for (const Vec3& p : sorted) sum = sum + p;
  return (1.0 / static_cast<double>(points.size())) * sum;
}

double angle(Vec3 a, Vec3 b, DegeneracyReport* report) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na < kZeroLength || nb < kZeroLength) {
    if (report) ++report->zero_length_angles;
    return 0.0;
  }
  return std::acos(std::clamp(dot(a, b) / (na * nb), -1.0, 1.0));
}

}  // namespace

std::string_view to_string(DescriptorKind kind) noexcept {
  switch (kind) {
    case DescriptorKind::XyzNeighbor: return "xyz";
    case DescriptorKind::GeoPCSD: return "geo";
    case DescriptorKind::RISP: return "risp";
  }
  return "xyz";
}

DescriptorKind descriptor_kind_from_string(std::string_view name) {
  if (name == "xyz") return DescriptorKind::XyzNeighbor;
  if (name == "geo") return DescriptorKind::GeoPCSD;
  if (name == "risp") return DescriptorKind::RISP;
  throw InvalidArgument("unknown descriptor '" + std::string(name) + "' (expected xyz, geo or risp)");
}

NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k_normal) {
  if (k_normal < 3) throw InvalidArgument("estimate_normals: k_normal must be at least 3");
  cloud.validate();
  const std::span<const Vec3> pts(cloud.points);
  const std::size_t k = std::min(k_normal, pts.size());
  const NeighborIndex nbrs = knn(pts, pts, k);
  const Vec3 centroid = ordered_centroid(pts);

  NormalEstimate out;
  out.normals.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto row = nbrs.row(i);
    Vec3 mean;
    for (std::size_t j : row) mean = mean + pts[j];
    mean = (1.0 / static_cast<double>(row.size())) * mean;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t j : row) {
      const Vec3 d = pts[j] - mean;
      const Eigen::Vector3d v(d.x, d.y, d.z);
      cov += v * v.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
    const Eigen::Vector3d ev = solver.eigenvalues();  // ascending
    if (row.size() < 3 || ev(2) <= 0.0 || ev(1) <= 1e-12 * ev(2)) {
      out.normals[i] = {0.0, 0.0, 1.0};
      out.flagged.push_back(i);
      continue;
    }
    const Eigen::Vector3d e = solver.eigenvectors().col(0).normalized();
    Vec3 n{e(0), e(1), e(2)};
    const Vec3 outward = pts[i] - centroid;
    const double s = dot(n, outward);
    bool flip = false;
    if (std::abs(s) > 1e-9 * norm(outward)) {
      flip = s < 0.0;
    } else if (std::abs(n.z) > 1e-12) {
      flip = n.z < 0.0;
    } else if (std::abs(n.y) > 1e-12) {
      flip = n.y < 0.0;
    } else {
      flip = n.x < 0.0;
    }
    out.normals[i] = flip ? (-1.0) * n : n;
  }
  return out;
}

Tensor3 pcsd_xyz(std::span<const Vec3> reference, std::span<const Vec3> queries, const NeighborIndex& neighbors) {
  if (neighbors.queries != queries.size()) throw InvalidArgument("pcsd_xyz: neighbour rows do not match queries");
  Tensor3 out(queries.size(), neighbors.k, 6);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto row = neighbors.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] >= reference.size()) throw InvalidArgument("pcsd_xyz: neighbour index out of range");
      const Vec3 x = reference[row[j]];
      const Vec3 d = x - queries[i];
      out(i, j, 0) = x.x;
      out(i, j, 1) = x.y;
      out(i, j, 2) = x.z;
      out(i, j, 3) = d.x;
      out(i, j, 4) = d.y;
      out(i, j, 5) = d.z;
    }
  }
  return out;
}

Tensor3 pcsd_xyz(const PointCloud& cloud, const NeighborIndex& neighbors) {
  return pcsd_xyz(cloud.points, cloud.points, neighbors);
}

Matrix pcsd_geo_lenient(std::span<const Vec3> points, DegeneracyReport* report) {
  const std::size_t n = points.size();
  Matrix out(n, 14);
  if (n == 0) return out;
  const NeighborIndex nbrs = knn(points, points, std::min<std::size_t>(3, n));
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p = points[i];
    Vec3 x[2] = {p, p};
    std::size_t found = 0;
    for (std::size_t j : nbrs.row(i)) {
      if (j == i || found == 2) continue;
      x[found++] = points[j];
    }
    if (found < 2 && report) ++report->missing_neighbors;
    const Vec3 v1 = x[0] - p;
    const Vec3 v2 = x[1] - p;
    const Vec3 c = cross(v1, v2);
    const double l1 = norm(v1);
    const double l2 = norm(v2);
    if (found == 2 && norm(c) <= kZeroLength * std::max(1.0, l1 * l2) && report) ++report->collinear_triangles;
    const double row[14] = {p.x, p.y, p.z, c.x, c.y, c.z, v1.x, v1.y, v1.z, v2.x, v2.y, v2.z, l1, l2};
    std::copy(std::begin(row), std::end(row), out.row(i).begin());
  }
  return out;
}

Matrix pcsd_geo(const PointCloud& cloud, DegeneracyReport* report) {
  if (cloud.points.size() < 3) throw InvalidInput("pcsd_geo: needs at least 3 points");
  cloud.validate();
  return pcsd_geo_lenient(cloud.points, report);
}

std::array<double, kRispWidth> risp_row(const RispFrame& f, DegeneracyReport* report) {
  // v_ab denotes the vector from a to b.
  const Vec3 v_prev_p = f.p - f.prev;
  const Vec3 v_cur_p = f.p - f.cur;
  const Vec3 v_next_p = f.p - f.next;
  const Vec3 v_prev_cur = f.cur - f.prev;
  const Vec3 v_next_cur = f.cur - f.next;

  return {
      norm(f.cur - f.p),
      angle(v_prev_p, v_cur_p, report),
      angle(v_next_p, v_cur_p, report),
      angle(v_prev_cur, v_prev_p, report),
      angle(v_next_p, v_next_cur, report),
      angle(cross(v_next_p, v_cur_p), cross(v_prev_p, v_cur_p), report),
      angle(f.n_p, v_cur_p, report),
      angle(f.n_p, v_prev_p, report),
      angle(f.n_cur, v_cur_p, report),
      angle(f.n_cur, v_prev_cur, report),
      angle(f.n_prev, v_prev_p, report),
      angle(f.n_prev, v_prev_cur, report),
      angle(f.n_next, v_next_cur, report),
      angle(f.n_next, v_next_p, report),
  };
}

Tensor3 pcsd_risp(std::span<const Vec3> reference, std::span<const Vec3> reference_normals,
                  std::span<const Vec3> queries, std::span<const Vec3> query_normals,
                  const NeighborIndex& neighbors, DegeneracyReport* report) {
  if (reference_normals.size() != reference.size() || query_normals.size() != queries.size()) {
    throw InvalidArgument("pcsd_risp: every point needs a normal");
  }
  if (neighbors.queries != queries.size()) throw InvalidArgument("pcsd_risp: neighbour rows do not match queries");
  const std::size_t k = neighbors.k;
  Tensor3 out(queries.size(), k, kRispWidth);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto row = neighbors.row(i);
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t prev = row[(j + k - 1) % k];
      const std::size_t cur = row[j];
      const std::size_t next = row[(j + 1) % k];
      if (std::max({prev, cur, next}) >= reference.size()) {
        throw InvalidArgument("pcsd_risp: neighbour index out of range");
      }
      const RispFrame frame{queries[i],   query_normals[i],       reference[prev], reference_normals[prev],
                            reference[cur], reference_normals[cur], reference[next], reference_normals[next]};
      const auto values = risp_row(frame, report);
      std::copy(values.begin(), values.end(), out.slab(i).begin() + static_cast<std::ptrdiff_t>(j * kRispWidth));
    }
  }
  return out;
}

Tensor3 pcsd_risp(const PointCloud& cloud, const NeighborIndex& neighbors, DegeneracyReport* report) {
  if (cloud.normals) {
    return pcsd_risp(cloud.points, *cloud.normals, cloud.points, *cloud.normals, neighbors, report);
  }
  const std::size_t k = std::max<std::size_t>(3, std::min<std::size_t>(16, cloud.points.size()));
  NormalEstimate est = estimate_normals(cloud, k);
  if (report) report->flat_normals += est.flagged.size();
  return pcsd_risp(cloud.points, est.normals, cloud.points, est.normals, neighbors, report);
}

Tensor3 group_rows(const Matrix& per_point, const NeighborIndex& neighbors) {
  const std::size_t c = per_point.cols();
  Tensor3 out(neighbors.queries, neighbors.k, c);
  for (std::size_t i = 0; i < neighbors.queries; ++i) {
    const auto row = neighbors.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] >= per_point.rows()) throw InvalidArgument("group_rows: neighbour index out of range");
      const auto src = per_point.row(row[j]);
      std::copy(src.begin(), src.end(), out.slab(i).begin() + static_cast<std::ptrdiff_t>(j * c));
    }
  }
  return out;
}

}  // namespace tfcw
