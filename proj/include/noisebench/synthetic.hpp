#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisebench/image.hpp"
#include "noisebench/rng.hpp"

namespace noisebench {

struct SyntheticSample {
  std::string id;
  std::string label;
  Image image;
};

namespace detail {

struct ShapeColor {
  const char* name;
  std::array<std::uint8_t, 3> rgb;
};

// Class colors avoid 0 and 255 so the impulse detector never flags clean pixels.
inline constexpr std::array<ShapeColor, 4> kShapeColors{{
    {"red", {220, 40, 40}},
    {"green", {40, 200, 40}},
    {"blue", {40, 40, 220}},
    {"yellow", {220, 220, 40}},
}};

inline constexpr std::array<const char*, 2> kShapes{"circle", "square"};

}  // namespace detail

inline constexpr int kSyntheticSize = 64;
inline constexpr std::uint8_t kSyntheticBackground = 180;

/// The eight class names in generation order.
inline std::vector<std::string> synthetic_classes() {
  std::vector<std::string> out;
  for (const char* shape : detail::kShapes)
    for (const auto& color : detail::kShapeColors) out.push_back(std::string(color.name) + "_" + shape);
  return out;
}

/// 64x64 shapes on a gray-180 background: {circle, square} x {red, green,
/// blue, yellow}. Sample s of class c is drawn from derive_seed(seed, c, s):
/// center offset in [-8, 8] per axis, radius / half-side in [12, 24].
/// Output is interleaved by class: index = s * 8 + c.
inline std::vector<SyntheticSample> generate_synthetic_corpus(int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
  const auto classes = synthetic_classes();
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(n_per_class) * classes.size());
  for (int s = 0; s < n_per_class; ++s) {
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const bool circle = c < detail::kShapeColors.size();
      const auto& rgb = detail::kShapeColors[c % detail::kShapeColors.size()].rgb;
      Rng rng(derive_seed(seed, c, static_cast<std::uint64_t>(s)));
      const int cx = kSyntheticSize / 2 + static_cast<int>(rng.next_u64() % 17) - 8;
      const int cy = kSyntheticSize / 2 + static_cast<int>(rng.next_u64() % 17) - 8;
      const int size = 12 + static_cast<int>(rng.next_u64() % 13);

      Image img(kSyntheticSize, kSyntheticSize, kSyntheticBackground);
      for (int y = 0; y < kSyntheticSize; ++y)
        for (int x = 0; x < kSyntheticSize; ++x) {
          const int dx = x - cx;
          const int dy = y - cy;
          const bool inside = circle ? dx * dx + dy * dy <= size * size
                                     : std::abs(dx) <= size && std::abs(dy) <= size;
          if (inside)
            for (int k = 0; k < 3; ++k) img.at(y, x, k) = rgb[k];
        }

      char id[64];
      std::snprintf(id, sizeof id, "syn%04zu_%s", out.size(), classes[c].c_str());
      out.push_back({id, classes[c], std::move(img)});
    }
  }
  return out;
}

}  // namespace noisebench
