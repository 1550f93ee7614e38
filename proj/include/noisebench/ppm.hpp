#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisebench/image.hpp"

namespace noisebench {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline bool is_pnm_space(std::uint8_t c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_pnm_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* field) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size())
      throw FormatError(std::string("PPM: truncated header reading ") + field);
    if (bytes_[pos_] == '-') throw FormatError(std::string("PPM: negative ") + field);
    if (bytes_[pos_] < '0' || bytes_[pos_] > '9')
      throw FormatError(std::string("PPM: expected digits for ") + field);
    long v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > std::numeric_limits<int>::max())
        throw FormatError(std::string("PPM: ") + field + " out of range");
      ++pos_;
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a binary PPM (P6, maxval 255). Header fields may be separated by any
/// ASCII whitespace and interleaved with '#' comments; a single whitespace byte
/// separates maxval from the raster. Trailing bytes after the raster are ignored.
inline Image load_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw FormatError("PPM: missing P6 magic");
  detail::PnmHeaderReader rd(bytes);
  rd.advance(2);
  if (rd.pos() >= bytes.size() || !(detail::is_pnm_space(bytes[rd.pos()]) || bytes[rd.pos()] == '#'))
    throw FormatError("PPM: malformed header after magic");
  const long width = rd.read_uint("width");
  const long height = rd.read_uint("height");
  const long maxval = rd.read_uint("maxval");
  if (width <= 0 || height <= 0) throw FormatError("PPM: dimensions must be positive");
  if (maxval != 255) throw FormatError("PPM: maxval must be 255, got " + std::to_string(maxval));
  if (rd.pos() >= bytes.size() || !detail::is_pnm_space(bytes[rd.pos()]))
    throw FormatError("PPM: expected whitespace before raster");
  rd.advance(1);

  const auto need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
  if (bytes.size() - rd.pos() < need)
    throw FormatError("PPM: truncated raster (" + std::to_string(bytes.size() - rd.pos()) +
                      " of " + std::to_string(need) + " bytes)");
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos());
  return Image(static_cast<int>(width), static_cast<int>(height),
               std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(need)));
}

/// Canonical form: "P6\n<w> <h>\n255\n" + raster.
inline Bytes save_ppm(const Image& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  Bytes out;
  out.reserve(header.size() + img.sample_count());
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), img.samples().begin(), img.samples().end());
  return out;
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline Image read_ppm_file(const std::filesystem::path& path) {
  const Bytes data = read_file(path);
  try {
    return load_ppm(data);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_ppm_file(const std::filesystem::path& path, const Image& img) {
  write_file(path, save_ppm(img));
}

}  // namespace noisebench
