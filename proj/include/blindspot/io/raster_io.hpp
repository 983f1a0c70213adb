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

#ifndef BLINDSPOT_IO_RASTER_IO_HPP
#define BLINDSPOT_IO_RASTER_IO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "blindspot/coverage.hpp"
#include "blindspot/errors.hpp"
#include "blindspot/io/cloud_io.hpp"
#include "blindspot/version.hpp"

namespace blindspot::io {

/// Free-form provenance written on the first CSV line.
struct RasterMetadata {
  std::string scenario;
  std::string rig;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::int64_t timesteps = 0;
};

struct RasterFile {
  Raster raster;
  std::string comment;  // first line without the leading "# "
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline ValueKind parse_value_kind(std::string_view s) {
  if (s == "mean_r") return ValueKind::MeanRadius;
  if (s == "max_r") return ValueKind::MaxRadius;
  if (s == "probability") return ValueKind::DetectionProbability;
  throw ParseError("unknown value_kind '" + std::string(s) + "'", 3);
}

/// CSV layout:
///   # <comment>
///   x_min,y_min,cell_size,slab,value_kind
///   <values of that header>
///   one row per x cell (increasing x), one column per y cell (increasing y)
/// Cells without data are written as "nan".
inline std::string raster_to_csv(const Raster& r, const RasterMetadata& meta) {
  std::ostringstream out;
  out << "# blindspot " << kVersion << " scenario=" << meta.scenario
      << " rig=" << meta.rig << " config_hash=" << meta.config_hash << " seed=" << meta.seed
      << " timesteps=" << meta.timesteps << '\n';
  out << "x_min,y_min,cell_size,slab,value_kind\n";
  out << format_double(r.spec.x_min) << ',' << format_double(r.spec.y_min) << ','
      << format_double(r.spec.cell_size) << ',' << r.slab << ',' << to_string(r.kind) << '\n';
  const std::size_t nx = r.spec.nx(), ny = r.spec.ny();
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      if (iy) out << ',';
      out << format_double(r.at(ix, iy));
    }
    out << '\n';
  }
  return out.str();
}

inline void write_raster_csv(const std::filesystem::path& path, const Raster& r,
                             const RasterMetadata& meta) {
  detail::write_all(path, raster_to_csv(r, meta));
}

/// Inverse of raster_to_csv. ParseError offsets are 1-based line numbers.
/// x_max and y_max are reconstructed from the cell counts.
inline RasterFile parse_raster_csv(std::string_view data) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  auto split = [](std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t p = 0;
    while (true) {
      const std::size_t c = line.find(',', p);
      out.push_back(line.substr(p, c == std::string_view::npos ? c : c - p));
      if (c == std::string_view::npos) break;
      p = c + 1;
    }
    return out;
  };
  auto number = [](std::string_view s, std::size_t line_no) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ParseError("bad number '" + std::string(s) + "'", line_no);
    }
    return v;
  };

  RasterFile file;
  std::size_t i = 0;
  if (i < lines.size() && !lines[i].empty() && lines[i][0] == '#') {
    std::string_view c = lines[i].substr(1);
    if (!c.empty() && c[0] == ' ') c.remove_prefix(1);
    file.comment = std::string(c);
    ++i;
  }
  if (i >= lines.size() || lines[i] != "x_min,y_min,cell_size,slab,value_kind") {
    throw ParseError("missing header row", i + 1);
  }
  ++i;
  if (i >= lines.size()) throw ParseError("missing header values", i + 1);
  const auto head = split(lines[i]);
  if (head.size() != 5) throw ParseError("expected 5 header values", i + 1);
  Raster& r = file.raster;
  r.spec.x_min = number(head[0], i + 1);
  r.spec.y_min = number(head[1], i + 1);
  r.spec.cell_size = number(head[2], i + 1);
  if (!(r.spec.cell_size > 0.0)) throw ParseError("cell_size must be > 0", i + 1);
  r.slab = std::string(head[3]);
  r.kind = parse_value_kind(head[4]);
  ++i;

  std::size_t ny = 0;
  const std::size_t first_row = i;
  for (; i < lines.size(); ++i) {
    const auto cols = split(lines[i]);
    if (i == first_row) ny = cols.size();
    if (cols.size() != ny) throw ParseError("ragged row", i + 1);
    for (auto c : cols) r.values.push_back(number(c, i + 1));
  }
  const std::size_t nx = i - first_row;
  if (nx == 0) throw ParseError("raster has no rows", i + 1);
  r.spec.x_max = r.spec.x_min + static_cast<double>(nx) * r.spec.cell_size;
  r.spec.y_max = r.spec.y_min + static_cast<double>(ny) * r.spec.cell_size;
  if (r.spec.nx() != nx || r.spec.ny() != ny) {
    throw ParseError("grid extent does not reproduce the cell counts", first_row + 1);
  }
  return file;
}

inline RasterFile read_raster_csv(const std::filesystem::path& path) {
  const std::string data = detail::read_all(path);
  try {
    return parse_raster_csv(data);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  }
}

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kNoDataColor{255, 0, 255};

/// Grayscale image. Row 0 is the far +x edge and column 0 the +y edge, so the
/// picture reads like a top view with the vehicle facing up.
struct RasterImage {
  std::size_t width = 0, height = 0;
  double range_min = 0.0, range_max = 1.0;
  std::vector<Rgb> pixels;

  const Rgb& at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

/// Default value range: [0, 1] for probabilities, [0, radius_max] for radii.
inline RasterImage render_raster(const Raster& r, double radius_max = 5.0) {
  RasterImage img;
  img.width = r.spec.ny();
  img.height = r.spec.nx();
  img.range_max = r.kind == ValueKind::DetectionProbability ? 1.0 : radius_max;
  if (!(img.range_max > img.range_min)) throw ContractError("render_raster: empty value range");
  img.pixels.resize(img.width * img.height);
  for (std::size_t row = 0; row < img.height; ++row) {
    for (std::size_t col = 0; col < img.width; ++col) {
      const double v = r.at(img.height - 1 - row, img.width - 1 - col);
      Rgb& px = img.pixels[row * img.width + col];
      if (std::isnan(v)) {
        px = kNoDataColor;
        continue;
      }
      const double f = std::clamp((v - img.range_min) / (img.range_max - img.range_min), 0.0, 1.0);
      const auto g = static_cast<std::uint8_t>(std::lround(f * 255.0));
      px = {g, g, g};
    }
  }
  return img;
}

inline std::string image_to_ppm(const RasterImage& img, const std::string& label) {
  std::ostringstream head;
  head << "P6\n# " << label << " range=[" << format_double(img.range_min) << ','
       << format_double(img.range_max) << "] nodata=#ff00ff\n"
       << img.width << ' ' << img.height << "\n255\n";
  std::string out = head.str();
  out.reserve(out.size() + img.pixels.size() * 3);
  for (const Rgb& p : img.pixels) {
    out += static_cast<char>(p.r);
    out += static_cast<char>(p.g);
    out += static_cast<char>(p.b);
  }
  return out;
}

inline void write_raster_ppm(const std::filesystem::path& path, const Raster& r,
                             double radius_max = 5.0) {
  detail::write_all(path, image_to_ppm(render_raster(r, radius_max), r.slab + " " + to_string(r.kind)));
}

/// Reads back a P6 file written by image_to_ppm.
inline RasterImage read_ppm(const std::filesystem::path& path) {
  const std::string data = detail::read_all(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return data.substr(start, pos - start);
  };
  if (token() != "P6") throw ParseError("not a P6 image", 0);
  RasterImage img;
  try {
    img.width = std::stoul(token());
    img.height = std::stoul(token());
    if (token() != "255") throw ParseError("unsupported max value", pos);
  } catch (const std::logic_error&) {
    throw ParseError("bad image header", pos);
  }
  ++pos;
  if (data.size() - pos != img.width * img.height * 3) throw ParseError("truncated pixel data", data.size());
  img.pixels.resize(img.width * img.height);
  for (auto& p : img.pixels) {
    p = {static_cast<std::uint8_t>(data[pos]), static_cast<std::uint8_t>(data[pos + 1]),
         static_cast<std::uint8_t>(data[pos + 2])};
    pos += 3;
  }
  return img;
}

}  // namespace blindspot::io

#endif  // BLINDSPOT_IO_RASTER_IO_HPP
