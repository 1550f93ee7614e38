#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisebench/image.hpp"

namespace noisebench {

struct FilterConfig {
  int initial_radius = 1;
  int max_radius = 3;
  int max_passes = 5;
  double lowpass_sigma = 1.0;

  void validate() const {
    if (initial_radius < 1 || max_radius < 1 || max_passes < 1)
      throw std::invalid_argument("filter radii and pass count must be >= 1");
    if (initial_radius > max_radius)
      throw std::invalid_argument("initial_radius must not exceed max_radius");
    if (!(lowpass_sigma > 0.0) || !std::isfinite(lowpass_sigma))
      throw std::invalid_argument("lowpass_sigma must be > 0");
  }
};

/// True at every sample equal to 0 or 255, same layout as Image::samples().
inline std::vector<bool> detect_impulse_mask(const Image& img) {
  std::vector<bool> mask(img.sample_count());
  const auto px = img.samples();
  for (std::size_t i = 0; i < px.size(); ++i) mask[i] = px[i] == 0 || px[i] == 255;
  return mask;
}

namespace detail {

inline std::uint8_t lower_median(std::vector<std::uint8_t>& v) {
  auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace detail

/// Impulse restoration by inverse-distance weighted averaging.
///
/// Each pass reads the previous pass's buffer and validity map. A flagged
/// sample takes round(sum(w v) / sum(w)) over valid same-channel samples in the
/// (2r+1)x(2r+1) window, w = 1 / |offset|, starting at initial_radius and
/// growing to max_radius until a valid neighbour exists. Samples restored in a
/// pass become valid for the next one. Anything still flagged after max_passes
/// falls back to the lower median of the channel's originally unflagged samples
/// (128 for an entirely flagged channel). Unflagged samples are never written.
inline Image weighted_average_filter(const Image& img, const FilterConfig& cfg = {}) {
  cfg.validate();
  const int w = img.width();
  const int h = img.height();
  const std::vector<bool> flagged = detect_impulse_mask(img);

  Image cur = img;
  std::vector<bool> valid(flagged.size());
  std::size_t pending = 0;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    valid[i] = !flagged[i];
    pending += flagged[i];
  }

  std::vector<double> inv_dist((2 * cfg.max_radius + 1) * (2 * cfg.max_radius + 1));
  const int span = 2 * cfg.max_radius + 1;
  for (int dy = -cfg.max_radius; dy <= cfg.max_radius; ++dy)
    for (int dx = -cfg.max_radius; dx <= cfg.max_radius; ++dx)
      inv_dist[(dy + cfg.max_radius) * span + dx + cfg.max_radius] =
          (dx == 0 && dy == 0) ? 0.0 : 1.0 / std::sqrt(static_cast<double>(dx * dx + dy * dy));

  for (int pass = 0; pass < cfg.max_passes && pending > 0; ++pass) {
    Image next = cur;
    std::vector<bool> next_valid = valid;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < Image::kChannels; ++c) {
          const std::size_t at = cur.index(y, x, c);
          if (valid[at]) continue;
          for (int r = cfg.initial_radius; r <= cfg.max_radius; ++r) {
            double num = 0.0;
            double den = 0.0;
            for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
              for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
                const std::size_t n = cur.index(yy, xx, c);
                if (!valid[n]) continue;
                const double wt = inv_dist[(yy - y + cfg.max_radius) * span + xx - x + cfg.max_radius];
                num += wt * cur.samples()[n];
                den += wt;
              }
            }
            if (den > 0.0) {
              next.samples()[at] = static_cast<std::uint8_t>(std::clamp(std::round(num / den), 0.0, 255.0));
              next_valid[at] = true;
              --pending;
              break;
            }
          }
        }
      }
    }
    cur = std::move(next);
    valid = std::move(next_valid);
  }

  if (pending > 0) {
    for (int c = 0; c < Image::kChannels; ++c) {
      std::vector<std::uint8_t> clean;
      for (std::size_t i = static_cast<std::size_t>(c); i < flagged.size(); i += Image::kChannels)
        if (!flagged[i]) clean.push_back(img.samples()[i]);
      const std::uint8_t fill = clean.empty() ? 128 : detail::lower_median(clean);
      for (std::size_t i = static_cast<std::size_t>(c); i < valid.size(); i += Image::kChannels)
        if (!valid[i]) cur.samples()[i] = fill;
    }
  }
  return cur;
}

/// Normalized 1-D Gaussian taps, radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("lowpass sigma must be > 0, got " + std::to_string(sigma));
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable Gaussian blur per channel, border samples replicated. The
/// intermediate stays in double; only the final result is rounded and clipped.
inline Image gaussian_lowpass(const Image& img, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width();
  const int h = img.height();
  constexpr int C = Image::kChannels;

  std::vector<double> tmp(img.sample_count());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * img.at(y, std::clamp(x + i, 0, w - 1), c);
        tmp[img.index(y, x, c)] = acc;
      }

  Image out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * tmp[img.index(std::clamp(y + i, 0, h - 1), x, c)];
        out.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::round(acc), 0.0, 255.0));
      }
  return out;
}

enum class FilterKind { WeightedAverage, Lowpass };

inline std::string to_string(FilterKind k) {
  return k == FilterKind::WeightedAverage ? "weighted" : "lowpass";
}

inline FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "weighted") return FilterKind::WeightedAverage;
  if (s == "lowpass") return FilterKind::Lowpass;
  throw std::invalid_argument("unknown filter '" + s + "' (expected weighted|lowpass)");
}

inline Image apply_filter(const Image& img, FilterKind kind, const FilterConfig& cfg) {
  cfg.validate();
  return kind == FilterKind::WeightedAverage ? weighted_average_filter(img, cfg)
                                             : gaussian_lowpass(img, cfg.lowpass_sigma);
}

}  // namespace noisebench
