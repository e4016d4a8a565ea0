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

#include "tfcw/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

#include "tfcw/error.hpp"

namespace tfcw {

namespace {

bool finite(Vec3 v) noexcept { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

void require_finite(std::span<const Vec3> points, const char* what) {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!finite(points[i])) {
      throw InvalidInput(std::string(what) + ": non-finite coordinate at row " + std::to_string(i));
    }
  }
}

// Sum taken in lexicographic point order so the result does not depend on
// the row order of the input.
Vec3 canonical_centroid(std::span<const Vec3> points) {
  std::vector<Vec3> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), lex_less);
  Vec3 sum;
  for (const Vec3& p : sorted) sum = sum + p;
  return (1.0 / static_cast<double>(points.size())) * sum;
}

// ---------------------------------------------------------------------------
// Farthest point sampling

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kSelected = -1.0;
constexpr std::size_t kFpsLeafSize = 16;

class FpsTree {
 public:
  FpsTree(std::span<const Vec3> points, bool canonical)
      : points_(points), canonical_(canonical), order_(points.size()), leaf_of_(points.size()),
        min_d2_(points.size(), std::numeric_limits<double>::infinity()) {
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.reserve(2 * (points.size() / kFpsLeafSize + 1));
    build(0, points.size(), kNone);
  }

  bool better(double da, std::size_t ia, double db, std::size_t ib) const noexcept {
    if (ib == kNone) return ia != kNone;
    if (ia == kNone) return false;
    if (da != db) return da > db;
    if (canonical_ && !(points_[ia] == points_[ib])) return lex_less(points_[ia], points_[ib]);
    return ia < ib;
  }

  void select(std::size_t s) {
    min_d2_[s] = kSelected;
    for (std::size_t n = leaf_of_[s]; n != kNone; n = nodes_[n].parent) refresh(n);
    update(0, points_[s]);
  }

  std::size_t best() const noexcept { return nodes_[0].best_idx; }

 private:
  struct Node {
    Vec3 lo, hi;
    std::size_t begin = 0, end = 0;
    std::size_t left = kNone, right = kNone, parent = kNone;
    double best_d2 = std::numeric_limits<double>::infinity();
    std::size_t best_idx = kNone;
  };

  std::size_t build(std::size_t begin, std::size_t end, std::size_t parent) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    Node node;
    node.begin = begin;
    node.end = end;
    node.parent = parent;
    node.lo = node.hi = points_[order_[begin]];
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3 p = points_[order_[i]];
      node.lo = {std::min(node.lo.x, p.x), std::min(node.lo.y, p.y), std::min(node.lo.z, p.z)};
      node.hi = {std::max(node.hi.x, p.x), std::max(node.hi.y, p.y), std::max(node.hi.z, p.z)};
    }
    if (end - begin > kFpsLeafSize) {
      const Vec3 ext = node.hi - node.lo;
      const std::size_t axis = (ext.x >= ext.y && ext.x >= ext.z) ? 0 : (ext.y >= ext.z ? 1 : 2);
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::size_t a, std::size_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca != cb ? ca < cb : a < b;
                       });
      nodes_[id] = node;
      const std::size_t l = build(begin, mid, id);
      const std::size_t r = build(mid, end, id);
      nodes_[id].left = l;
      nodes_[id].right = r;
    } else {
      nodes_[id] = node;
      for (std::size_t i = begin; i < end; ++i) leaf_of_[order_[i]] = id;
    }
    refresh(id);
    return id;
  }

  void refresh(std::size_t id) {
    Node& n = nodes_[id];
    double bd = kSelected;
    std::size_t bi = kNone;
    if (n.left == kNone) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t p = order_[i];
        if (min_d2_[p] == kSelected) continue;
        if (better(min_d2_[p], p, bd, bi)) {
          bd = min_d2_[p];
          bi = p;
        }
      }
    } else {
      const Node& l = nodes_[n.left];
      const Node& r = nodes_[n.right];
      if (better(r.best_d2, r.best_idx, l.best_d2, l.best_idx)) {
        bd = r.best_d2;
        bi = r.best_idx;
      } else {
        bd = l.best_d2;
        bi = l.best_idx;
      }
    }
    n.best_d2 = bd;
    n.best_idx = bi;
  }

  // Rounding is monotone, so the box bound computed here never exceeds the
  // squared distance computed for any point inside the box; skipping is exact.
  static double box_lower_bound(const Node& n, Vec3 s) noexcept {
    auto gap = [](double v, double lo, double hi) {
      if (v < lo) return lo - v;
      if (v > hi) return v - hi;
      return 0.0;
    };
    const double gx = gap(s.x, n.lo.x, n.hi.x);
    const double gy = gap(s.y, n.lo.y, n.hi.y);
    const double gz = gap(s.z, n.lo.z, n.hi.z);
    return gx * gx + gy * gy + gz * gz;
  }

  void update(std::size_t id, Vec3 s) {
    Node& n = nodes_[id];
    if (n.best_idx == kNone) return;
    if (box_lower_bound(n, s) >= n.best_d2) return;
    if (n.left == kNone) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t p = order_[i];
        if (min_d2_[p] == kSelected) continue;
        const double d = squared_distance(points_[p], s);
        if (d < min_d2_[p]) min_d2_[p] = d;
      }
    } else {
      update(n.left, s);
      update(n.right, s);
    }
    refresh(id);
  }

  std::span<const Vec3> points_;
  bool canonical_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> leaf_of_;
  std::vector<double> min_d2_;
  std::vector<Node> nodes_;
};

std::size_t canonical_start(std::span<const Vec3> points) {
  const Vec3 c = canonical_centroid(points);
  std::size_t best = 0;
  double best_d2 = squared_distance(points[0], c);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = squared_distance(points[i], c);
    if (d > best_d2 || (d == best_d2 && lex_less(points[i], points[best]))) {
      best = i;
      best_d2 = d;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// k nearest neighbours

using Candidate = std::pair<double, std::size_t>;  // (squared distance, index)

void finish_row(std::vector<Candidate>& best, std::size_t q, std::size_t k, NeighborIndex& out) {
  std::sort(best.begin(), best.end());
  for (std::size_t j = 0; j < k; ++j) {
    out.indices[q * k + j] = best[j].second;
    out.distances[q * k + j] = std::sqrt(best[j].first);
  }
}

void knn_brute(std::span<const Vec3> query, std::span<const Vec3> reference, std::size_t k,
               NeighborIndex& out) {
  std::vector<Candidate> all(reference.size());
  for (std::size_t q = 0; q < query.size(); ++q) {
    for (std::size_t r = 0; r < reference.size(); ++r) {
      all[r] = {squared_distance(reference[r], query[q]), r};
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    std::vector<Candidate> best(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    finish_row(best, q, k, out);
  }
}

class UniformGrid {
 public:
  explicit UniformGrid(std::span<const Vec3> reference) : reference_(reference) {
    lo_ = hi_ = reference[0];
    for (const Vec3& p : reference) {
      lo_ = {std::min(lo_.x, p.x), std::min(lo_.y, p.y), std::min(lo_.z, p.z)};
      hi_ = {std::max(hi_.x, p.x), std::max(hi_.y, p.y), std::max(hi_.z, p.z)};
    }
    const Vec3 ext = hi_ - lo_;
    const double max_ext = std::max({ext.x, ext.y, ext.z});
    double scale = max_ext;
    for (const Vec3& p : {lo_, hi_}) scale = std::max({scale, std::abs(p.x), std::abs(p.y), std::abs(p.z)});
    tol_ = 1e-9 * (scale > 0.0 ? scale : 1.0);

    const auto n = static_cast<double>(reference.size());
    if (max_ext <= 0.0) {
      h_ = 1.0;
    } else {
      const double floor_ext = 1e-3 * max_ext;
      const double vol = std::max(ext.x, floor_ext) * std::max(ext.y, floor_ext) * std::max(ext.z, floor_ext);
      h_ = std::cbrt(2.0 * vol / n);
      while (cell_count(ext) > 2.0 * n + 8.0) h_ *= 1.25;
    }
    for (std::size_t a = 0; a < 3; ++a) {
      dims_[a] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ext[a] / h_)));
    }
    const std::size_t cells = dims_[0] * dims_[1] * dims_[2];
    start_.assign(cells + 1, 0);
    std::vector<std::size_t> cell_of(reference.size());
    for (std::size_t i = 0; i < reference.size(); ++i) {
      cell_of[i] = flat(cell_coords(reference[i]));
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
    items_.resize(reference.size());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < reference.size(); ++i) items_[fill[cell_of[i]]++] = i;
  }

  void query(Vec3 q, std::size_t k, std::vector<Candidate>& best) const {
    std::priority_queue<Candidate> heap;
    const auto c = cell_coords(q);
    std::ptrdiff_t max_ring = 0;
    for (std::size_t a = 0; a < 3; ++a) {
      max_ring = std::max({max_ring, c[a], static_cast<std::ptrdiff_t>(dims_[a]) - 1 - c[a]});
    }
    for (std::ptrdiff_t r = 0; r <= max_ring; ++r) {
      for (std::ptrdiff_t dx = -r; dx <= r; ++dx) {
        for (std::ptrdiff_t dy = -r; dy <= r; ++dy) {
          const bool shell = (dx == -r || dx == r || dy == -r || dy == r);
          for (std::ptrdiff_t dz = -r; dz <= r; dz += (shell || r == 0) ? 1 : 2 * r) {
            visit({c[0] + dx, c[1] + dy, c[2] + dz}, q, k, heap);
          }
        }
      }
      if (heap.size() == k) {
        const double reach = static_cast<double>(r) * h_ - tol_;
        if (reach > 0.0 && heap.top().first < reach * reach) break;
      }
    }
    best.clear();
    while (!heap.empty()) {
      best.push_back(heap.top());
      heap.pop();
    }
  }

 private:
  using Coords = std::array<std::ptrdiff_t, 3>;

  double cell_count(Vec3 ext) const {
    double total = 1.0;
    for (std::size_t a = 0; a < 3; ++a) total *= std::max(1.0, std::ceil(ext[a] / h_));
    return total;
  }

  Coords cell_coords(Vec3 p) const {
    Coords c{};
    for (std::size_t a = 0; a < 3; ++a) {
      const double f = std::floor((p[a] - lo_[a]) / h_);
      const auto hi = static_cast<double>(dims_[a] - 1);
      c[a] = static_cast<std::ptrdiff_t>(std::clamp(f, 0.0, hi));
    }
    return c;
  }

  std::size_t flat(const Coords& c) const {
    return (static_cast<std::size_t>(c[0]) * dims_[1] + static_cast<std::size_t>(c[1])) * dims_[2] +
           static_cast<std::size_t>(c[2]);
  }

  void visit(const Coords& c, Vec3 q, std::size_t k, std::priority_queue<Candidate>& heap) const {
    for (std::size_t a = 0; a < 3; ++a) {
      if (c[a] < 0 || c[a] >= static_cast<std::ptrdiff_t>(dims_[a])) return;
    }
    const std::size_t cell = flat(c);
    for (std::size_t s = start_[cell]; s < start_[cell + 1]; ++s) {
      const std::size_t i = items_[s];
      const Candidate cand{squared_distance(reference_[i], q), i};
      if (heap.size() < k) {
        heap.push(cand);
      } else if (cand < heap.top()) {
        heap.pop();
        heap.push(cand);
      }
    }
  }

  std::span<const Vec3> reference_;
  Vec3 lo_, hi_;
  double h_ = 1.0;
  double tol_ = 0.0;
  std::array<std::size_t, 3> dims_{1, 1, 1};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> items_;
};

}  // namespace

void PointCloud::validate() const {
  if (points.empty()) throw InvalidInput("point cloud is empty");
  require_finite(points, "point cloud");
  if (normals) {
    if (normals->size() != points.size()) throw InvalidInput("normal count does not match point count");
    for (std::size_t i = 0; i < normals->size(); ++i) {
      const double n = norm((*normals)[i]);
      if (!(std::abs(n - 1.0) <= 1e-6)) {
        throw InvalidInput("normal at row " + std::to_string(i) + " is not unit length");
      }
    }
  }
  if (point_labels && point_labels->size() != points.size()) {
    throw InvalidInput("point label count does not match point count");
  }
}

std::vector<std::size_t> farthest_point_sample(std::span<const Vec3> points, std::size_t count,
                                               StartRule start) {
  if (count < 1 || count > points.size()) {
    throw InvalidArgument("farthest_point_sample: count " + std::to_string(count) + " outside [1, " +
                          std::to_string(points.size()) + "]");
  }
  require_finite(points, "farthest_point_sample");
  const bool canonical = start.kind == StartKind::CanonicalFarthestFromCentroid;
  std::size_t first = 0;
  if (canonical) {
    first = canonical_start(points);
  } else {
    if (start.index >= points.size()) throw InvalidArgument("farthest_point_sample: start index out of range");
    first = start.index;
  }

  std::vector<std::size_t> picked;
  picked.reserve(count);
  picked.push_back(first);
  if (count == 1) return picked;

  FpsTree tree(points, canonical);
  tree.select(first);
  while (picked.size() < count) {
    const std::size_t next = tree.best();
    picked.push_back(next);
    tree.select(next);
  }
  return picked;
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, std::size_t count, StartRule start) {
  return farthest_point_sample(std::span<const Vec3>(cloud.points), count, start);
}

NeighborIndex knn(std::span<const Vec3> query, std::span<const Vec3> reference, std::size_t k,
                  KnnStrategy strategy) {
  if (k < 1 || k > reference.size()) {
    throw InvalidArgument("knn: k = " + std::to_string(k) + " outside [1, " + std::to_string(reference.size()) +
                          "]");
  }
  require_finite(query, "knn query");
  require_finite(reference, "knn reference");

  NeighborIndex out;
  out.queries = query.size();
  out.k = k;
  out.indices.resize(query.size() * k);
  out.distances.resize(query.size() * k);

  if (strategy == KnnStrategy::Auto) {
    strategy = reference.size() > 256 ? KnnStrategy::Grid : KnnStrategy::BruteForce;
  }
  if (strategy == KnnStrategy::BruteForce) {
    knn_brute(query, reference, k, out);
    return out;
  }
  const UniformGrid grid(reference);
  std::vector<Candidate> best;
  for (std::size_t q = 0; q < query.size(); ++q) {
    grid.query(query[q], k, best);
    finish_row(best, q, k, out);
  }
  return out;
}

RotationMatrix RotationMatrix::transposed() const noexcept {
  RotationMatrix t;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) t.m[i][j] = m[j][i];
  return t;
}

double RotationMatrix::determinant() const noexcept {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double RotationMatrix::orthogonality_error() const noexcept {
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < 3; ++r) s += m[r][i] * m[r][j];
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

RotationMatrix random_rotation(std::uint64_t seed, RotationMode mode) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  RotationMatrix r;
  if (mode == RotationMode::ZAxis) {
    const double t = two_pi * uniform(rng);
    const double c = std::cos(t);
    const double s = std::sin(t);
    r.m = {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
    return r;
  }
  // Shoemake's uniform unit quaternion.
  const double u1 = uniform(rng);
  const double u2 = uniform(rng);
  const double u3 = uniform(rng);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double x = a * std::sin(two_pi * u2);
  const double y = a * std::cos(two_pi * u2);
  const double z = b * std::sin(two_pi * u3);
  const double w = b * std::cos(two_pi * u3);
  r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
          {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
          {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
  return r;
}

PointCloud apply_rotation(const PointCloud& cloud, const RotationMatrix& r) {
  PointCloud out = cloud;
  for (Vec3& p : out.points) p = r.apply(p);
  if (out.normals) {
    for (Vec3& n : *out.normals) n = r.apply(n);
  }
  return out;
}

std::vector<Vec3> gather(std::span<const Vec3> points, std::span<const std::size_t> indices) {
  std::vector<Vec3> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(points[i]);
  return out;
}

PointCloud subset(const PointCloud& cloud, std::span<const std::size_t> indices) {
  PointCloud out;
  out.points = gather(cloud.points, indices);
  if (cloud.normals) out.normals = gather(*cloud.normals, indices);
  if (cloud.point_labels) {
    std::vector<int> labels;
    labels.reserve(indices.size());
    for (std::size_t i : indices) labels.push_back((*cloud.point_labels)[i]);
    out.point_labels = std::move(labels);
  }
  out.class_label = cloud.class_label;
  return out;
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  if (cloud.points.empty()) return cloud;
  PointCloud out = cloud;
  const Vec3 c = canonical_centroid(cloud.points);
  double radius = 0.0;
  for (Vec3& p : out.points) {
    p = p - c;
    radius = std::max(radius, norm(p));
  }
  if (radius > 0.0) {
    for (Vec3& p : out.points) p = (1.0 / radius) * p;
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace tfcw
