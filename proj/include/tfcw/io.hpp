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
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfcw/geometry.hpp"
#include "tfcw/memory_bank.hpp"

namespace tfcw {

// --- OFF meshes -------------------------------------------------------------

struct OffMesh {
  std::vector<Vec3> vertices;
  std::vector<std::vector<std::size_t>> faces;
};

/// Parses ASCII OFF. Blank lines and '#' comments are skipped after the
/// header line. A header glued to the counts ("OFF8 6 0", as found in some
/// ModelNet files) is accepted. Errors carry the 1-based line number.
OffMesh parse_off(std::istream& in, const std::string& source = "<off>");
OffMesh read_off(const std::filesystem::path& path);

struct SurfaceSampling {
  std::size_t count = 1024;
  std::uint64_t seed = 0;
};

/// Area-weighted uniform samples over the mesh faces (polygons fan-
/// triangulated), with the face normal of each sample. Throws InvalidInput
/// if the mesh has no face of positive area.
PointCloud sample_surface(const OffMesh& mesh, const SurfaceSampling& sampling);

/// The mesh vertices as a cloud, or surface samples when `sampling` is set.
PointCloud load_off(const std::filesystem::path& path, const std::optional<SurfaceSampling>& sampling = std::nullopt);

// --- TFCWPTS point containers ------------------------------------------------

enum class Split { Train, Test, Val };

std::string_view to_string(Split s) noexcept;

struct Dataset {
  std::string name;
  std::vector<PointCloud> clouds;
  Split split = Split::Train;
  std::size_t num_classes = 0;  ///< 1 + largest class label (0 when unlabeled)
  std::size_t num_parts = 0;    ///< 1 + largest point label (0 when unlabeled)

  /// Recomputes num_classes / num_parts from the clouds.
  void update_label_counts();
};

inline constexpr char kPointsMagic[] = "TFCWPTS";  // 7 bytes on disk
inline constexpr std::uint32_t kPointsVersion = 1;

/// Little-endian layout: magic, version u32, cloud count u32; per cloud:
/// N u32, class label i32 (-1 = absent), per-point label flag u8, N x 3 f32
/// coordinates, then N x u16 labels when the flag is 1. Normals are not stored.
std::vector<std::uint8_t> encode_points(const Dataset& dataset);
Dataset decode_points(std::span<const std::uint8_t> bytes, const std::string& source = "<tfcwpts>");

void write_points_bin(const Dataset& dataset, const std::filesystem::path& path);
/// Throws ParseError (byte offset) on bad magic, version or truncation.
Dataset load_points_bin(const std::filesystem::path& path);

/// load_points_bin plus optional unit-sphere normalisation of every cloud.
Dataset load_dataset(const std::filesystem::path& path, Split split, bool normalize);

// --- TFCWBANK memory banks ---------------------------------------------------

inline constexpr char kBankMagic[] = "TFCWBANK";  // 8 bytes on disk
inline constexpr std::uint32_t kBankVersion = 1;

/// Little-endian layout: magic, version u32, M u32, F u32, L u32, gamma f64,
/// then M x F row-major f32 features and M u16 labels.
std::vector<std::uint8_t> encode_bank(const MemoryBank& bank);
MemoryBank decode_bank(std::span<const std::uint8_t> bytes, const std::string& source = "<tfcwbank>");

void write_bank(const MemoryBank& bank, const std::filesystem::path& path);
MemoryBank read_bank(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace tfcw
