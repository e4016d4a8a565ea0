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

#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tfcw/error.hpp"
#include "tfcw/io.hpp"
#include "tfcw/synthetic.hpp"

using namespace tfcw;
namespace fs = std::filesystem;

namespace {

OffMesh parse(const std::string& text) {
  std::istringstream in(text);
  return parse_off(in, "mem.off");
}

std::size_t parse_error_location(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.location();
  }
  return 0;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tfcw_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

// Dyadic coordinates are exact in f32, so the container round trip is
// bit-exact.
Dataset sample_dataset() {
  std::mt19937_64 rng(3);
  Dataset ds;
  ds.name = "sample";
  for (int i = 0; i < 5; ++i) {
    PointCloud c;
    std::uniform_int_distribution<int> u(-1024, 1024);
    for (int k = 0; k < 10 + i; ++k) c.points.push_back({u(rng) / 1024.0, u(rng) / 1024.0, u(rng) / 1024.0});
    if (i % 2 == 0) c.class_label = i;
    if (i != 3) {
      std::vector<int> labels;
      for (std::size_t k = 0; k < c.size(); ++k) labels.push_back(int(k % 3));
      c.point_labels = labels;
    }
    ds.clouds.push_back(std::move(c));
  }
  ds.update_label_counts();
  return ds;
}

}  // namespace

TEST_CASE("minimal OFF file") {
  const OffMesh m = parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  REQUIRE(m.vertices.size() == 3);
  CHECK(m.vertices[1] == Vec3{1, 0, 0});
  REQUIRE(m.faces.size() == 1);
  CHECK(m.faces[0] == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("OFF variants") {
  const OffMesh glued = parse("OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK(glued.vertices.size() == 3);
  const OffMesh commented = parse("OFF\n# a comment\n\n2 0 0\n1.5e0 -2 +3 # trailing\n0 0 0\n");
  CHECK(commented.vertices[0] == Vec3{1.5, -2, 3});
  const OffMesh quad = parse("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  CHECK(quad.faces[0].size() == 4);
}

TEST_CASE("OFF errors carry line numbers") {
  CHECK(parse_error_location("OFX\n3 1 0\n") == 1);
  CHECK(parse_error_location("") == 1);
  CHECK(parse_error_location("OFF\n3 1 0\n0 0 0\n1 0 0\n") == 4);
  CHECK(parse_error_location("OFF\n2 0 0\n0 0 0\n1 x 0\n") == 4);
  CHECK(parse_error_location("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n") == 6);
  CHECK(parse_error_location("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1\n") == 6);
  CHECK(parse_error_location("OFF\nthree 1 0\n") == 2);
  CHECK(parse_error_location("OFF\n1 0 0\nnan 0 0\n") == 3);
}

TEST_CASE("area-weighted surface sampling") {
  const OffMesh tri = parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  const PointCloud c = sample_surface(tri, {10000, 7});
  REQUIRE(c.size() == 10000);
  Vec3 mean;
  for (const auto& p : c.points) {
    mean = mean + p;
    CHECK(p.x >= -1e-12);
    CHECK(p.y >= -1e-12);
    CHECK(p.x + p.y <= 1.0 + 1e-12);
  }
  mean = (1.0 / 10000.0) * mean;
  CHECK(std::abs(mean.x - 1.0 / 3.0) < 0.02);
  CHECK(std::abs(mean.y - 1.0 / 3.0) < 0.02);
  CHECK(mean.z == 0.0);
  for (const auto& n : *c.normals) CHECK(n == Vec3{0, 0, 1});
  CHECK(sample_surface(tri, {100, 7}).points == sample_surface(tri, {100, 7}).points);

  // Two triangles, one with four times the area, get samples in that ratio.
  const OffMesh two = parse("OFF\n6 2 0\n0 0 0\n1 0 0\n0 1 0\n5 0 0\n7 0 0\n5 2 0\n3 0 1 2\n3 3 4 5\n");
  const PointCloud s = sample_surface(two, {20000, 1});
  std::size_t big = 0;
  for (const auto& p : s.points) big += p.x >= 5.0 ? 1 : 0;
  CHECK(double(big) / 20000.0 == doctest::Approx(0.8).epsilon(0.03));

  CHECK_THROWS_AS(sample_surface(parse("OFF\n3 1 0\n0 0 0\n1 0 0\n2 0 0\n3 0 1 2\n"), {10, 0}), InvalidInput);
}

TEST_CASE("load_off from disk") {
  const fs::path p = scratch("tri.off");
  write_text(p, "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  CHECK(load_off(p).size() == 3);
  CHECK(load_off(p, SurfaceSampling{64, 1}).size() == 64);
  CHECK_THROWS_AS(load_off(scratch("missing.off")), IoError);
}

TEST_CASE("points container round trip") {
  const Dataset ds = sample_dataset();
  const auto bytes = encode_points(ds);
  CHECK(std::string(bytes.begin(), bytes.begin() + 7) == "TFCWPTS");
  const Dataset back = decode_points(bytes);
  REQUIRE(back.clouds.size() == ds.clouds.size());
  for (std::size_t i = 0; i < ds.clouds.size(); ++i) {
    CHECK(back.clouds[i].points == ds.clouds[i].points);
    CHECK(back.clouds[i].class_label == ds.clouds[i].class_label);
    CHECK(back.clouds[i].point_labels == ds.clouds[i].point_labels);
  }
  CHECK(encode_points(back) == bytes);
  CHECK(back.num_classes == 5);
  CHECK(back.num_parts == 3);

  const fs::path p = scratch("sample.bin");
  write_points_bin(ds, p);
  const Dataset loaded = load_points_bin(p);
  CHECK(loaded.name == "sample");
  CHECK(encode_points(loaded) == bytes);
}

TEST_CASE("points container errors") {
  const auto bytes = encode_points(sample_dataset());
  for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
    const std::span<const std::uint8_t> part(bytes.data(), cut);
    CHECK_THROWS_AS(decode_points(part), ParseError);
  }
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_points(bad), ParseError);
  auto version = bytes;
  version[7] = 2;
  CHECK_THROWS_AS(decode_points(version), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_points(trailing), ParseError);

  Dataset empty;
  const Dataset e = decode_points(encode_points(empty));
  CHECK(e.clouds.empty());
  CHECK(e.num_classes == 0);

  Dataset wide = sample_dataset();
  (*wide.clouds[0].point_labels)[0] = 70000;
  CHECK_THROWS_AS(encode_points(wide), InvalidArgument);

  Dataset nan = sample_dataset();
  nan.clouds[1].points[0].x = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(decode_points(encode_points(nan)), ParseError);
}

TEST_CASE("load_dataset normalises on request") {
  Dataset ds = sample_dataset();
  for (auto& c : ds.clouds)
    for (auto& p : c.points) p = 4.0 * p;
  const fs::path p = scratch("big.bin");
  write_points_bin(ds, p);
  const Dataset n = load_dataset(p, Split::Test, true);
  CHECK(n.split == Split::Test);
  for (const auto& c : n.clouds) {
    double r = 0.0;
    for (const auto& q : c.points) r = std::max(r, norm(q));
    CHECK(r == doctest::Approx(1.0));
  }
  const Dataset raw = load_dataset(p, Split::Train, false);
  CHECK(raw.clouds[0].points == load_points_bin(p).clouds[0].points);
  CHECK(to_string(Split::Val) == "val");
}

TEST_CASE("bank container round trip") {
  std::mt19937_64 rng(8);
  const Matrix f = oracle::random_matrix(12, 5, rng);
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(i % 4);
  const MemoryBank bank(f, labels, 4, 37.5);
  const auto bytes = encode_bank(bank);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "TFCWBANK");
  CHECK(bytes.size() == 8 + 4 * 4 + 8 + 12 * 5 * 4 + 12 * 2);
  const MemoryBank back = decode_bank(bytes);
  CHECK(back.labels() == bank.labels());
  CHECK(back.num_classes() == 4);
  CHECK(back.gamma() == 37.5);
  CHECK(oracle::max_abs_diff(back.features().data(), bank.features().data()) < 1e-6);

  const fs::path p = scratch("bank.bin");
  write_bank(bank, p);
  CHECK(read_bank(p).labels() == bank.labels());

  for (std::size_t cut = 0; cut < bytes.size(); cut += 3) {
    CHECK_THROWS_AS(decode_bank(std::span<const std::uint8_t>(bytes.data(), cut)), ParseError);
  }
  auto bad = bytes;
  bad[3] = 'Q';
  CHECK_THROWS_AS(decode_bank(bad), ParseError);
}
