/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BLINDSPOT_IO_CLOUD_IO_HPP
#define BLINDSPOT_IO_CLOUD_IO_HPP

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blindspot/core.hpp"
#include "blindspot/errors.hpp"

namespace blindspot::io {

// Binary layout: "BSPC", u32 point count, then count * 3 float64 (x, y, z).
// All little-endian.
inline constexpr std::array<char, 4> kBinaryMagic = {'B', 'S', 'P', 'C'};
inline constexpr std::size_t kBinaryHeaderSize = 8;

namespace detail {

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof v);
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof v);
  }
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  char b[sizeof v];
  std::memcpy(b, &v, sizeof v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof v);
  out.append(b, sizeof v);
}

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open point cloud " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_all(const std::filesystem::path& path, const std::string& data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

/// Parses the binary format. Offsets in ParseError are byte offsets.
inline std::vector<Vec3> parse_binary_cloud(std::string_view data) {
  if (data.size() < kBinaryHeaderSize) {
    throw ParseError("truncated header", data.size());
  }
  if (std::memcmp(data.data(), kBinaryMagic.data(), kBinaryMagic.size()) != 0) {
    throw ParseError("bad magic, expected \"BSPC\"", 0);
  }
  const auto count = detail::load_le<std::uint32_t>(data.data() + 4);
  const std::size_t expected = kBinaryHeaderSize + std::size_t{count} * 3 * sizeof(double);
  if (data.size() < expected) {
    const std::size_t whole = (data.size() - kBinaryHeaderSize) / (3 * sizeof(double));
    throw ParseError("truncated after point " + std::to_string(whole) + " of " +
                         std::to_string(count),
                     data.size());
  }
  if (data.size() > expected) throw ParseError("trailing bytes after last point", expected);
  std::vector<Vec3> pts(count);
  const char* p = data.data() + kBinaryHeaderSize;
  for (std::uint32_t i = 0; i < count; ++i) {
    for (int k = 0; k < 3; ++k, p += sizeof(double)) {
      const double v = detail::load_le<double>(p);
      if (!std::isfinite(v)) {
        throw ParseError("non-finite coordinate", static_cast<std::size_t>(p - data.data()));
      }
      pts[i][k] = v;
    }
  }
  return pts;
}

/// Parses whitespace-separated "x y z" lines. Blank lines and lines starting
/// with '#' are skipped. Offsets in ParseError are 1-based line numbers.
inline std::vector<Vec3> parse_text_cloud(std::string_view data) {
  std::vector<Vec3> pts;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const char* c = line.data();
    const char* last = c + line.size();
    auto skip_ws = [&] {
      while (c < last && (*c == ' ' || *c == '\t' || *c == ',')) ++c;
    };
    skip_ws();
    if (c == last || *c == '#') continue;
    Vec3 v;
    for (int k = 0; k < 3; ++k) {
      skip_ws();
      double d = 0.0;
      const auto [ptr, ec] = std::from_chars(c, last, d);
      if (ec != std::errc() || !std::isfinite(d)) {
        throw ParseError("expected three finite numbers", line_no);
      }
      v[k] = d;
      c = ptr;
    }
    skip_ws();
    if (c != last) throw ParseError("unexpected trailing text", line_no);
    pts.push_back(v);
  }
  return pts;
}

/// Reads a cloud file in either format. `frame` tags the result; world-frame
/// clouds must be brought into the vehicle frame by the caller.
inline PointCloud ingest_cloud(const std::filesystem::path& path, Frame frame,
                               std::int64_t timestep = 0) {
  const std::string data = detail::read_all(path);
  PointCloud cloud;
  cloud.frame = frame;
  cloud.timestep = timestep;
  try {
    const bool binary = data.size() >= 4 &&
                        std::memcmp(data.data(), kBinaryMagic.data(), kBinaryMagic.size()) == 0;
    cloud.points = binary ? parse_binary_cloud(data) : parse_text_cloud(data);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
  return cloud;
}

inline void write_binary_cloud(const std::filesystem::path& path, std::span<const Vec3> points) {
  if (points.size() > UINT32_MAX) throw ContractError("write_binary_cloud: too many points");
  std::string data(kBinaryMagic.begin(), kBinaryMagic.end());
  data.reserve(kBinaryHeaderSize + points.size() * 3 * sizeof(double));
  detail::store_le(data, static_cast<std::uint32_t>(points.size()));
  for (const Vec3& p : points) {
    for (int k = 0; k < 3; ++k) detail::store_le(data, p[k]);
  }
  detail::write_all(path, data);
}

/// Text output uses shortest round-trip formatting, so re-reading is exact.
inline void write_text_cloud(const std::filesystem::path& path, std::span<const Vec3> points) {
  std::string data;
  char buf[32];
  for (const Vec3& p : points) {
    for (int k = 0; k < 3; ++k) {
      const auto r = std::to_chars(buf, buf + sizeof buf, p[k]);
      data.append(buf, r.ptr);
      data += k < 2 ? ' ' : '\n';
    }
  }
  detail::write_all(path, data);
}

}  // namespace blindspot::io

#endif  // BLINDSPOT_IO_CLOUD_IO_HPP
