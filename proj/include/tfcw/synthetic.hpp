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
#include <cstdint>
#include <vector>

#include "tfcw/geometry.hpp"

namespace tfcw::synthetic {

/// Points on an axis-scaled sphere surface (scales in [0.8, 1.2]) with
/// analytic unit normals. Class label 0.
PointCloud ellipsoid(std::size_t n, std::uint64_t seed);

/// Points on an axis-scaled cube surface with face normals. Class label 1.
PointCloud box(std::size_t n, std::uint64_t seed);

/// Alternating ellipsoids (label 0) and boxes (label 1), unit-sphere normalised.
std::vector<PointCloud> spheres_and_cubes(std::size_t count, std::size_t n, std::uint64_t seed);

/// Cylinder body (part 0) capped by a hemisphere (part 1) along +z, with
/// random radius and height. Point labels and normals set.
PointCloud capped_cylinder(std::size_t n, std::uint64_t seed);

std::vector<PointCloud> capped_cylinders(std::size_t count, std::size_t n, std::uint64_t seed);

/// Uniform points in the unit cube.
PointCloud uniform_cube(std::size_t n, std::uint64_t seed);

/// Generic random cloud in [-1, 1]^3 with random unit normals.
PointCloud random_cloud(std::size_t n, std::uint64_t seed);

}  // namespace tfcw::synthetic
