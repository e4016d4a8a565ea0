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

#include "tfcw/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace tfcw::synthetic {

namespace {

Vec3 unit(Vec3 v) { return (1.0 / norm(v)) * v; }

Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const Vec3 v{g(rng), g(rng), g(rng)};
    if (norm(v) > 1e-9) return unit(v);
  }
}

}  // namespace

PointCloud ellipsoid(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.8, 1.2);
  const Vec3 s{scale(rng), scale(rng), scale(rng)};
  PointCloud c;
  c.points.reserve(n);
  c.normals.emplace();
  c.normals->reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = random_direction(rng);
    c.points.push_back({s.x * d.x, s.y * d.y, s.z * d.z});
    c.normals->push_back(unit({d.x / s.x, d.y / s.y, d.z / s.z}));
  }
  c.class_label = 0;
  return c;
}

PointCloud box(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(0.8, 1.2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double s[3] = {scale(rng), scale(rng), scale(rng)};
  // Face areas for area-proportional face choice.
  const double area[3] = {s[1] * s[2], s[0] * s[2], s[0] * s[1]};
  std::discrete_distribution<int> face({area[0], area[0], area[1], area[1], area[2], area[2]});
  PointCloud c;
  c.normals.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    const int f = face(rng);
    const int axis = f / 2;
    const double sign = (f % 2 == 0) ? 1.0 : -1.0;
    double p[3] = {u(rng) * s[0], u(rng) * s[1], u(rng) * s[2]};
    p[axis] = sign * s[axis];
    double nrm[3] = {0.0, 0.0, 0.0};
    nrm[axis] = sign;
    c.points.push_back({p[0], p[1], p[2]});
    c.normals->push_back({nrm[0], nrm[1], nrm[2]});
  }
  c.class_label = 1;
  return c;
}

std::vector<PointCloud> spheres_and_cubes(std::size_t count, std::size_t n, std::uint64_t seed) {
  std::vector<PointCloud> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = mix_seed(seed, i);
    out.push_back(normalize_unit_sphere(i % 2 == 0 ? ellipsoid(n, s) : box(n, s)));
  }
  return out;
}

PointCloud capped_cylinder(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius_dist(0.3, 0.5);
  std::uniform_real_distribution<double> height_dist(1.0, 1.6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius_dist(rng);
  const double h = height_dist(rng);
  const double body_area = 2.0 * std::numbers::pi * r * h;
  const double cap_area = 2.0 * std::numbers::pi * r * r;
  const double p_body = body_area / (body_area + cap_area);

  PointCloud c;
  c.normals.emplace();
  c.point_labels.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    if (u(rng) < p_body) {
      const double t = 2.0 * std::numbers::pi * u(rng);
      const double z = h * u(rng);
      c.points.push_back({r * std::cos(t), r * std::sin(t), z});
      c.normals->push_back({std::cos(t), std::sin(t), 0.0});
      c.point_labels->push_back(0);
    } else {
      Vec3 d = random_direction(rng);
      d.z = std::abs(d.z);
      c.points.push_back({r * d.x, r * d.y, h + r * d.z});
      c.normals->push_back(d);
      c.point_labels->push_back(1);
    }
  }
  return c;
}

std::vector<PointCloud> capped_cylinders(std::size_t count, std::size_t n, std::uint64_t seed) {
  std::vector<PointCloud> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(normalize_unit_sphere(capped_cylinder(n, mix_seed(seed, i))));
  return out;
}

PointCloud uniform_cube(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({u(rng), u(rng), u(rng)});
  return c;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud c;
  c.normals.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    c.points.push_back({u(rng), u(rng), u(rng)});
    c.normals->push_back(random_direction(rng));
  }
  return c;
}

}  // namespace tfcw::synthetic
