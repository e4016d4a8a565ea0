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

#include "tfcw/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>

#include "tfcw/error.hpp"

namespace tfcw {

namespace {

// ---------------------------------------------------------------------------
// Little-endian byte streams

class ByteWriter {
 public:
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  void expect_magic(std::string_view magic) {
    need(magic.size(), "magic");
    if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0) {
      throw ParseError(source_, pos_, "bad magic, expected '" + std::string(magic) + "'");
    }
    pos_ += magic.size();
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1, "u8")); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2, "u16")); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4, "u32")); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4, "i32"))); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4, "f32"))); }
  double f64() { return std::bit_cast<double>(get(8, "f64")); }

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  /// Fails early when a declared element count cannot fit in what is left.
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw ParseError(source_, pos_, std::string("truncated while reading ") + what);
    }
  }
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, pos_, what); }

 private:
  std::uint64_t get(std::size_t n, const char* what) {
    need(n, what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument(std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

std::uint16_t checked_u16(int v, const char* what) {
  if (v < 0 || v > std::numeric_limits<std::uint16_t>::max()) {
    throw InvalidArgument(std::string(what) + " " + std::to_string(v) + " does not fit in u16");
  }
  return static_cast<std::uint16_t>(v);
}

// ---------------------------------------------------------------------------
// OFF text

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size() || line[i] == '#') break;
    const std::size_t b = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    out.push_back(line.substr(b, i - b));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view tok, const std::string& source, std::size_t line) {
  T v{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(source, line, "non-numeric token '" + std::string(tok) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) throw ParseError(source, line, "non-finite value '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

OffMesh parse_off(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto next_content = [&](std::vector<std::string_view>& toks) {
    while (std::getline(in, line)) {
      ++line_no;
      toks = tokens(line);
      if (!toks.empty()) return true;
    }
    return false;
  };

  if (!std::getline(in, line)) throw ParseError(source, 1, "empty file, expected OFF header");
  line_no = 1;
  std::vector<std::string_view> toks = tokens(line);
  if (toks.empty() || toks[0].substr(0, 3) != "OFF") {
    throw ParseError(source, 1, "missing OFF header");
  }
  std::vector<std::string_view> counts;
  if (toks[0].size() > 3) counts.push_back(toks[0].substr(3));
  counts.insert(counts.end(), toks.begin() + 1, toks.end());
  std::size_t counts_line = 1;
  if (counts.empty()) {
    if (!next_content(counts)) throw ParseError(source, line_no, "missing vertex/face/edge counts");
    counts_line = line_no;
  }
  if (counts.size() < 2) throw ParseError(source, counts_line, "expected vertex, face and edge counts");
  const auto nv = parse_number<std::size_t>(counts[0], source, counts_line);
  const auto nf = parse_number<std::size_t>(counts[1], source, counts_line);

  OffMesh mesh;
  mesh.vertices.reserve(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!next_content(toks)) {
      throw ParseError(source, line_no, "expected " + std::to_string(nv) + " vertices, found " + std::to_string(v));
    }
    if (toks.size() < 3) throw ParseError(source, line_no, "vertex needs 3 coordinates");
    mesh.vertices.push_back({parse_number<double>(toks[0], source, line_no),
                             parse_number<double>(toks[1], source, line_no),
                             parse_number<double>(toks[2], source, line_no)});
  }
  mesh.faces.reserve(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    if (!next_content(toks)) {
      throw ParseError(source, line_no, "expected " + std::to_string(nf) + " faces, found " + std::to_string(f));
    }
    const auto n = parse_number<std::size_t>(toks[0], source, line_no);
    if (n < 3 || toks.size() < n + 1) throw ParseError(source, line_no, "face vertex count mismatch");
    std::vector<std::size_t> face;
    face.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = parse_number<std::size_t>(toks[1 + i], source, line_no);
      if (idx >= nv) throw ParseError(source, line_no, "face index " + std::to_string(idx) + " out of range");
      face.push_back(idx);
    }
    mesh.faces.push_back(std::move(face));
  }
  return mesh;
}

OffMesh read_off(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_off(in, path.string());
}

PointCloud sample_surface(const OffMesh& mesh, const SurfaceSampling& sampling) {
  struct Tri {
    Vec3 a, b, c, n;
  };
  std::vector<Tri> tris;
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      const Vec3 a = mesh.vertices[f[0]], b = mesh.vertices[f[i]], c = mesh.vertices[f[i + 1]];
      const Vec3 cr = cross(b - a, c - a);
      const double twice_area = norm(cr);
      if (!(twice_area > 0.0)) continue;
      tris.push_back({a, b, c, (1.0 / twice_area) * cr});
      total += 0.5 * twice_area;
      cumulative.push_back(total);
    }
  }
  if (tris.empty()) throw InvalidInput("sample_surface: mesh has no face with positive area");

  std::mt19937_64 rng(sampling.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud out;
  out.points.reserve(sampling.count);
  out.normals.emplace();
  out.normals->reserve(sampling.count);
  for (std::size_t s = 0; s < sampling.count; ++s) {
    const double pick = u(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const Tri& t = tris[static_cast<std::size_t>(it - cumulative.begin())];
    const double r1 = std::sqrt(u(rng));
    const double r2 = u(rng);
    out.points.push_back((1.0 - r1) * t.a + (r1 * (1.0 - r2)) * t.b + (r1 * r2) * t.c);
    out.normals->push_back(t.n);
  }
  return out;
}

PointCloud load_off(const std::filesystem::path& path, const std::optional<SurfaceSampling>& sampling) {
  const OffMesh mesh = read_off(path);
  if (sampling) return sample_surface(mesh, *sampling);
  PointCloud cloud;
  cloud.points = mesh.vertices;
  if (cloud.points.empty()) throw ParseError(path.string(), 1, "mesh has no vertices");
  cloud.validate();
  return cloud;
}

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Val: return "val";
  }
  return "train";
}

void Dataset::update_label_counts() {
  num_classes = 0;
  num_parts = 0;
  for (const auto& c : clouds) {
    if (c.class_label && *c.class_label >= 0) {
      num_classes = std::max(num_classes, static_cast<std::size_t>(*c.class_label) + 1);
    }
    if (c.point_labels) {
      for (int l : *c.point_labels) {
        if (l >= 0) num_parts = std::max(num_parts, static_cast<std::size_t>(l) + 1);
      }
    }
  }
}

std::vector<std::uint8_t> encode_points(const Dataset& dataset) {
  ByteWriter w;
  w.raw(std::string_view(kPointsMagic, 7));
  w.u32(kPointsVersion);
  w.u32(checked_u32(dataset.clouds.size(), "cloud count"));
  for (const auto& c : dataset.clouds) {
    w.u32(checked_u32(c.points.size(), "point count"));
    w.i32(c.class_label.value_or(-1));
    w.u8(c.point_labels ? 1 : 0);
    for (const Vec3& p : c.points) {
      w.f32(static_cast<float>(p.x));
      w.f32(static_cast<float>(p.y));
      w.f32(static_cast<float>(p.z));
    }
    if (c.point_labels) {
      for (int l : *c.point_labels) w.u16(checked_u16(l, "point label"));
    }
  }
  return w.take();
}

Dataset decode_points(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(std::string_view(kPointsMagic, 7));
  const std::uint32_t version = r.u32();
  if (version != kPointsVersion) r.fail("unsupported TFCWPTS version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  Dataset ds;
  ds.name = source;
  ds.clouds.reserve(std::min<std::size_t>(count, r.remaining() / 9 + 1));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t n = r.u32();
    const std::int32_t label = r.i32();
    const std::uint8_t flag = r.u8();
    if (flag > 1) r.fail("invalid label flag " + std::to_string(flag));
    r.need(std::size_t{n} * 12 + (flag ? std::size_t{n} * 2 : 0), "cloud payload");
    PointCloud c;
    c.points.resize(n);
    for (auto& p : c.points) {
      p.x = r.f32();
      p.y = r.f32();
      p.z = r.f32();
    }
    if (flag) {
      std::vector<int> labels(n);
      for (auto& l : labels) l = r.u16();
      c.point_labels = std::move(labels);
    }
    if (label >= 0) c.class_label = label;
    try {
      c.validate();
    } catch (const InvalidInput& e) {
      r.fail(std::string("cloud ") + std::to_string(i) + ": " + e.what());
    }
    ds.clouds.push_back(std::move(c));
  }
  if (r.remaining() != 0) r.fail("trailing bytes after last cloud");
  ds.update_label_counts();
  return ds;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_points_bin(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, encode_points(dataset));
}

Dataset load_points_bin(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  Dataset ds = decode_points(bytes, path.string());
  ds.name = path.stem().string();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, Split split, bool normalize) {
  Dataset ds = load_points_bin(path);
  ds.split = split;
  if (normalize) {
    for (auto& c : ds.clouds) c = normalize_unit_sphere(c);
  }
  return ds;
}

std::vector<std::uint8_t> encode_bank(const MemoryBank& bank) {
  ByteWriter w;
  w.raw(std::string_view(kBankMagic, 8));
  w.u32(kBankVersion);
  w.u32(checked_u32(bank.size(), "bank size"));
  w.u32(checked_u32(bank.width(), "bank width"));
  w.u32(checked_u32(bank.num_classes(), "class count"));
  w.f64(bank.gamma());
  for (double v : bank.features().data()) w.f32(static_cast<float>(v));
  for (int l : bank.labels()) w.u16(checked_u16(l, "bank label"));
  return w.take();
}

MemoryBank decode_bank(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(std::string_view(kBankMagic, 8));
  const std::uint32_t version = r.u32();
  if (version != kBankVersion) r.fail("unsupported TFCWBANK version " + std::to_string(version));
  const std::uint32_t m = r.u32();
  const std::uint32_t f = r.u32();
  const std::uint32_t l = r.u32();
  const double gamma = r.f64();
  r.need(std::size_t{m} * f * 4 + std::size_t{m} * 2, "bank payload");
  Matrix features(m, f);
  for (double& v : features.data()) v = r.f32();
  std::vector<int> labels(m);
  for (int& lab : labels) lab = r.u16();
  if (r.remaining() != 0) r.fail("trailing bytes after bank payload");
  try {
    return MemoryBank(std::move(features), labels, l, gamma);
  } catch (const Error& e) {
    r.fail(e.what());
  }
}

void write_bank(const MemoryBank& bank, const std::filesystem::path& path) { write_file(path, encode_bank(bank)); }

MemoryBank read_bank(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_bank(bytes, path.string());
}

}  // namespace tfcw
