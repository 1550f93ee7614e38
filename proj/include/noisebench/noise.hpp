#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "noisebench/image.hpp"
#include "noisebench/rng.hpp"

namespace noisebench {

enum class NoiseKind { Impulse, Gaussian };

inline std::string to_string(NoiseKind k) { return k == NoiseKind::Impulse ? "impulse" : "gaussian"; }

inline NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "impulse") return NoiseKind::Impulse;
  if (s == "gaussian") return NoiseKind::Gaussian;
  throw std::invalid_argument("unknown noise kind '" + s + "' (expected impulse|gaussian)");
}

/// Salt-and-pepper corruption, independently per channel sample. One uniform
/// draw u per sample in row-major, then channel, order:
/// u < p/2 -> 0, u >= 1 - p/2 -> 255, otherwise unchanged.
inline Image add_impulse(const Image& img, double density, std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0))
    throw std::invalid_argument("impulse density must be in [0,1], got " + std::to_string(density));
  Image out = img;
  Rng rng(seed);
  const double low = density / 2.0;
  const double high = 1.0 - density / 2.0;
  for (auto& s : out.samples()) {
    const double u = rng.uniform();
    if (u < low)
      s = 0;
    else if (u >= high)
      s = 255;
  }
  return out;
}

/// Additive zero-mean Gaussian noise. Each sample consumes two uniform draws
/// (u1, u2) in row-major, then channel, order and receives
/// sigma * sqrt(-2 ln(1 - u1)) * cos(2 pi u2); the sum is rounded half away
/// from zero and clipped to [0, 255].
inline Image add_gaussian(const Image& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("gaussian sigma must be finite and >= 0, got " + std::to_string(sigma));
  Image out = img;
  if (sigma == 0.0) return out;
  Rng rng(seed);
  for (auto& s : out.samples()) {
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double z = std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
    const double v = std::round(static_cast<double>(s) + sigma * z);
    s = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

/// Density-style dial for Gaussian noise: sigma = density * kGaussianSigmaMax.
inline constexpr double kGaussianSigmaMax = 100.0;

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Impulse;
  double parameter = 0.0;  // density p for Impulse, sigma for Gaussian
  std::uint64_t seed = 0;

  static NoiseSpec impulse(double p, std::uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("impulse density must be in [0,1]");
    return {NoiseKind::Impulse, p, seed};
  }
  static NoiseSpec gaussian(double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian sigma must be >= 0");
    return {NoiseKind::Gaussian, sigma, seed};
  }
};

inline Image apply_noise(const Image& img, const NoiseSpec& spec) {
  return spec.kind == NoiseKind::Impulse ? add_impulse(img, spec.parameter, spec.seed)
                                         : add_gaussian(img, spec.parameter, spec.seed);
}

/// Escalation/curve dial: impulse uses the density directly, Gaussian maps it
/// linearly onto sigma in (0, kGaussianSigmaMax].
inline Image apply_noise_at_density(const Image& img, NoiseKind kind, double density,
                                    std::uint64_t seed) {
  return kind == NoiseKind::Impulse ? add_impulse(img, density, seed)
                                    : add_gaussian(img, density * kGaussianSigmaMax, seed);
}

}  // namespace noisebench
