#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisebench {

/// 8-bit RGB raster, row-major, channels interleaved R,G,B.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image(int width, int height, std::uint8_t fill = 0)
      : width_(checked_dim(width, "width")),
        height_(checked_dim(height, "height")),
        data_(static_cast<std::size_t>(width) * height * kChannels, fill) {}

  Image(int width, int height, std::vector<std::uint8_t> samples)
      : width_(checked_dim(width, "width")),
        height_(checked_dim(height, "height")),
        data_(std::move(samples)) {
    if (data_.size() != static_cast<std::size_t>(width_) * height_ * kChannels)
      throw std::invalid_argument("Image: sample count does not match " +
                                  std::to_string(width_) + "x" +
                                  std::to_string(height_) + "x3");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t sample_count() const noexcept { return data_.size(); }

  std::size_t index(int row, int col, int channel) const noexcept {
    return (static_cast<std::size_t>(row) * width_ + col) * kChannels + channel;
  }

  std::uint8_t at(int row, int col, int channel) const noexcept {
    return data_[index(row, col, channel)];
  }
  std::uint8_t& at(int row, int col, int channel) noexcept {
    return data_[index(row, col, channel)];
  }

  std::span<const std::uint8_t> samples() const noexcept { return data_; }
  std::span<std::uint8_t> samples() noexcept { return data_; }

  bool same_shape(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static int checked_dim(int v, const char* what) {
    if (v < 1) throw std::invalid_argument(std::string("Image: ") + what + " must be >= 1");
    return v;
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
};

/// 64-bit FNV-1a over dimensions and raster; used for golden fixtures.
inline std::uint64_t fingerprint(const Image& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int v : {img.width(), img.height()})
    for (int s = 0; s < 32; s += 8) mix(static_cast<std::uint8_t>(v >> s));
  for (auto b : img.samples()) mix(b);
  return h;
}

}  // namespace noisebench
