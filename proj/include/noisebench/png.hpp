#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "noisebench/image.hpp"

namespace noisebench {

namespace detail {

inline const std::array<std::uint32_t, 256>& crc32_table() {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t n = 0; n < 256; ++n) {
      std::uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1U) ? 0xEDB88320U ^ (c >> 1) : c >> 1;
      t[n] = c;
    }
    return t;
  }();
  return table;
}

/// Running CRC-32 (ISO 3309 / PNG). Pass the previous result to continue.
inline std::uint32_t crc32(std::span<const std::uint8_t> data, std::uint32_t crc = 0) {
  const auto& t = crc32_table();
  crc ^= 0xFFFFFFFFU;
  for (auto b : data) crc = t[(crc ^ b) & 0xFFU] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFU;
}

inline std::uint32_t adler32(std::span<const std::uint8_t> data, std::uint32_t adler = 1) {
  constexpr std::uint32_t kMod = 65521;
  std::uint32_t a = adler & 0xFFFFU;
  std::uint32_t b = adler >> 16;
  // 5552 is the largest run that cannot overflow 32-bit b before reduction.
  std::size_t i = 0;
  while (i < data.size()) {
    const std::size_t end = std::min(data.size(), i + 5552);
    for (; i < end; ++i) {
      a += data[i];
      b += a;
    }
    a %= kMod;
    b %= kMod;
  }
  return (b << 16) | a;
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, std::string_view type,
                      std::span<const std::uint8_t> payload) {
  put_be32(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type.begin(), type.end());
  out.insert(out.end(), payload.begin(), payload.end());
  const std::span<const std::uint8_t> crc_span(out.data() + type_at, 4 + payload.size());
  put_be32(out, crc32(crc_span));
}

}  // namespace detail

/// Truecolor 8-bit PNG with an uncompressed zlib stream (stored deflate blocks,
/// filter type 0 on every scanline).
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  static constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  static constexpr std::size_t kMaxStored = 65535;

  const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((row_bytes + 1) * img.height());
  const auto px = img.samples();
  for (int y = 0; y < img.height(); ++y) {
    raw.push_back(0);
    const auto row = px.subspan(static_cast<std::size_t>(y) * row_bytes, row_bytes);
    raw.insert(raw.end(), row.begin(), row.end());
  }

  std::vector<std::uint8_t> zlib;
  const std::size_t blocks = std::max<std::size_t>(1, (raw.size() + kMaxStored - 1) / kMaxStored);
  zlib.reserve(2 + raw.size() + blocks * 5 + 4);
  zlib.push_back(0x78);  // CM=8, CINFO=7
  zlib.push_back(0x01);  // FLEVEL=0, FCHECK makes 0x7801 % 31 == 0
  std::size_t off = 0;
  do {
    const std::size_t len = std::min(kMaxStored, raw.size() - off);
    const bool final = off + len == raw.size();
    zlib.push_back(final ? 0x01 : 0x00);
    zlib.push_back(static_cast<std::uint8_t>(len));
    zlib.push_back(static_cast<std::uint8_t>(len >> 8));
    zlib.push_back(static_cast<std::uint8_t>(~len));
    zlib.push_back(static_cast<std::uint8_t>(~len >> 8));
    zlib.insert(zlib.end(), raw.begin() + static_cast<std::ptrdiff_t>(off),
                raw.begin() + static_cast<std::ptrdiff_t>(off + len));
    off += len;
  } while (off < raw.size());
  detail::put_be32(zlib, detail::adler32(raw));

  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.width()));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(img.height()));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // depth, truecolor, deflate, adaptive, no interlace

  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());
  out.reserve(out.size() + 25 + zlib.size() + 12 + 12);
  detail::put_chunk(out, "IHDR", ihdr);
  detail::put_chunk(out, "IDAT", zlib);
  detail::put_chunk(out, "IEND", {});
  return out;
}

}  // namespace noisebench
