/*
 * Copyright 2026 The autots Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Option embedding table and the binary checkpoint container.
//
// Container layout, all integers u32 little-endian, reals IEEE-754 float64
// little-endian:
//
//   bytes 0..3    magic "ATSE"
//   u32           version (1)
//   u32           N (embedding width)
//   u32           row_count
//   row_count*N   float64, row-major                      (embedding file)
//
// A surrogate checkpoint uses the same header with row_count = 0, followed by
//   u32           section_count
//   per section:  char[4] tag, u32 rows, u32 cols, rows*cols float64 row-major

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "autots/errors.hpp"
#include "autots/rng.hpp"
#include "autots/search_space.hpp"

namespace autots {

/// Emb_theta: one N-wide row per global option id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t width, std::size_t rows) : width_(width), data_(width * rows, 0.0) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t rows() const noexcept { return width_ == 0 ? 0 : data_.size() / width_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * width_, width_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * width_, width_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t width_ = 0;
  std::vector<double> data_;
};

inline void project_to_unit_ball(std::span<double> v) {
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 > 1.0) {
    const double inv = 1.0 / std::sqrt(n2);
    for (double& x : v) x *= inv;
  }
}

/// Seeded table: each component uniform in [-6/sqrt(N), 6/sqrt(N)], each row
/// then projected into the unit ball (the same recipe as the graph-embedding
/// initialization, so KG-initialized and random tables share a scale).
inline EmbeddingTable random_embedding_table(std::size_t width, std::size_t rows,
                                             std::uint64_t seed) {
  EmbeddingTable t(width, rows);
  Rng rng(seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(width));
  for (std::size_t r = 0; r < rows; ++r) {
    auto v = t.row(r);
    for (double& x : v) x = rng.uniform(-bound, bound);
    project_to_unit_ball(v);
  }
  return t;
}

namespace binio {

inline constexpr std::array<char, 4> kMagic = {'A', 'T', 'S', 'E'};
inline constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("checkpoint truncated");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

inline double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return std::bit_cast<double>(v);
}

struct Header {
  std::uint32_t width = 0;
  std::uint32_t rows = 0;
};

inline void put_header(std::ostream& out, Header h) {
  out.write(kMagic.data(), 4);
  put_u32(out, kVersion);
  put_u32(out, h.width);
  put_u32(out, h.rows);
}

inline Header get_header(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kMagic) throw FormatError("bad checkpoint magic");
  const auto version = get_u32(in);
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Header h;
  h.width = get_u32(in);
  h.rows = get_u32(in);
  return h;
}

}  // namespace binio

inline void write_embedding_checkpoint(std::ostream& out, const EmbeddingTable& table) {
  binio::put_header(out, {static_cast<std::uint32_t>(table.width()),
                          static_cast<std::uint32_t>(table.rows())});
  for (double v : table.data()) binio::put_f64(out, v);
}

/// Reads an embedding checkpoint. `expected_width` / `expected_rows` of zero
/// skip the corresponding shape check.
inline EmbeddingTable read_embedding_checkpoint(std::istream& in, std::size_t expected_width = 0,
                                                std::size_t expected_rows = 0) {
  const auto h = binio::get_header(in);
  if (h.width == 0) throw FormatError("checkpoint has zero embedding width");
  if (expected_width && h.width != expected_width)
    throw FormatError("checkpoint width " + std::to_string(h.width) + ", expected " +
                      std::to_string(expected_width));
  if (expected_rows && h.rows != expected_rows)
    throw FormatError("checkpoint rows " + std::to_string(h.rows) + ", expected " +
                      std::to_string(expected_rows));
  EmbeddingTable t(h.width, h.rows);
  for (double& v : t.data()) v = binio::get_f64(in);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  return t;
}

inline void save_embeddings(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  write_embedding_checkpoint(out, table);
}

inline EmbeddingTable load_embeddings(const std::string& path, std::size_t expected_width = 0,
                                      std::size_t expected_rows = 0) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  return read_embedding_checkpoint(in, expected_width, expected_rows);
}

}  // namespace autots
