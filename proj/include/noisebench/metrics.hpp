#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <string>

#include "noisebench/annotation.hpp"
#include "noisebench/image.hpp"

namespace noisebench {

/// PSNR in dB, or Infinite for identical images.
class PsnrValue {
 public:
  static PsnrValue infinite() { return PsnrValue(); }
  static PsnrValue finite(double db) { return PsnrValue(db); }

  bool is_infinite() const noexcept { return infinite_; }
  /// +inf for identical images.
  double db() const noexcept { return infinite_ ? HUGE_VAL : db_; }

  /// "inf" or fixed six decimals.
  std::string str() const {
    if (infinite_) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", db_);
    return buf;
  }

  friend bool operator==(const PsnrValue&, const PsnrValue&) = default;

 private:
  PsnrValue() = default;
  explicit PsnrValue(double db) : infinite_(false), db_(db) {}

  bool infinite_ = true;
  double db_ = 0.0;
};

inline double mean_squared_error(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("psnr: dimension mismatch " + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                                "x" + std::to_string(b.height()));
  const auto sa = a.samples();
  const auto sb = b.samples();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const int d = static_cast<int>(sa[i]) - static_cast<int>(sb[i]);
    sum += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(sum) / static_cast<double>(sa.size());
}

/// 10 log10(255^2 / MSE), MSE averaged over all 3*w*h samples.
inline PsnrValue psnr(const Image& a, const Image& b) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return PsnrValue::infinite();
  return PsnrValue::finite(10.0 * std::log10(255.0 * 255.0 / mse));
}

struct LabelFilter {
  double min_score = 0.5;
  int top_k = 10;
};

/// Lowercased texts of the first top_k labels scoring at least min_score.
inline std::set<std::string> confident_labels(const Annotation& a, const LabelFilter& f) {
  if (!(f.min_score >= 0.0 && f.min_score <= 1.0))
    throw std::invalid_argument("min_score must be in [0,1]");
  if (f.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  std::vector<Label> sorted = a.labels;
  std::stable_sort(sorted.begin(), sorted.end(), label_order);
  std::set<std::string> out;
  int taken = 0;
  for (const auto& l : sorted) {
    if (taken == f.top_k || l.score < f.min_score) break;
    out.insert(lowercase(l.text));
    ++taken;
  }
  return out;
}

/// |A ∩ B| / |A ∪ B| over confident label sets; 1 when both are empty.
inline double label_jaccard(const Annotation& a, const Annotation& b, const LabelFilter& f = {}) {
  const auto sa = confident_labels(a, f);
  const auto sb = confident_labels(b, f);
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline bool top1_changed(const Annotation& a, const Annotation& b) {
  const Label* ta = top_label(a);
  const Label* tb = top_label(b);
  if (ta == nullptr || tb == nullptr) return (ta == nullptr) != (tb == nullptr);
  return lowercase(ta->text) != lowercase(tb->text);
}

}  // namespace noisebench
