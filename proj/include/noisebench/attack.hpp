#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "noisebench/annotation.hpp"
#include "noisebench/denoise.hpp"
#include "noisebench/image.hpp"
#include "noisebench/metrics.hpp"
#include "noisebench/noise.hpp"
#include "noisebench/oracle.hpp"
#include "noisebench/rng.hpp"

namespace noisebench {

/// Confidence cut that separates the surrogate's top classes from its 1/C floor.
inline constexpr double kSurrogateMinScore = 0.15;

enum class DetectionFeature { Faces, Text };

/// Decides whether a noisy image's annotation counts as "changed" relative to
/// the clean baseline.
struct SuccessCriterion {
  enum class Kind { Top1Changed, JaccardBelow, DetectionVanished };

  Kind kind = Kind::JaccardBelow;
  double threshold = 0.0;  // JaccardBelow: success iff jaccard <= threshold
  LabelFilter filter;      // JaccardBelow only
  DetectionFeature feature = DetectionFeature::Faces;

  static SuccessCriterion top1_changed() { return {Kind::Top1Changed, 0.0, {}, DetectionFeature::Faces}; }
  static SuccessCriterion jaccard_below(double tau = 0.0, LabelFilter f = {}) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("jaccard threshold must be in [0,1]");
    if (!(f.min_score >= 0.0 && f.min_score <= 1.0)) throw std::invalid_argument("min_score must be in [0,1]");
    if (f.top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    return {Kind::JaccardBelow, tau, f, DetectionFeature::Faces};
  }
  static SuccessCriterion detection_vanished(DetectionFeature feature) {
    return {Kind::DetectionVanished, 0.0, {}, feature};
  }

  bool holds(const Annotation& baseline, const Annotation& candidate) const {
    switch (kind) {
      case Kind::Top1Changed:
        return noisebench::top1_changed(baseline, candidate);
      case Kind::JaccardBelow:
        return label_jaccard(baseline, candidate, filter) <= threshold;
      case Kind::DetectionVanished:
        if (feature == DetectionFeature::Faces)
          return baseline.face_count.value_or(0) > 0 && candidate.face_count.value_or(0) == 0;
        return baseline.text_blocks && !baseline.text_blocks->empty() &&
               (!candidate.text_blocks || candidate.text_blocks->empty());
    }
    return false;
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Top1Changed:
        return "top1_changed";
      case Kind::JaccardBelow:
        return "jaccard_below";
      case Kind::DetectionVanished:
        return feature == DetectionFeature::Faces ? "faces_vanished" : "text_vanished";
    }
    return "unknown";
  }
};

/// Density grid start, start+step, ... capped at max.
struct Schedule {
  double start = 0.05;
  double step = 0.05;
  double max = 1.0;

  void validate() const {
    if (!(start > 0.0 && start <= max && max <= 1.0))
      throw std::invalid_argument("schedule requires 0 < start <= max <= 1");
    if (!(step > 0.0)) throw std::invalid_argument("schedule step must be > 0");
  }

  /// floor((max - start) / step) + 1 points; a 1e-9 slack absorbs
  /// representation error so 0.05..1.0 by 0.05 yields 20 points.
  std::vector<double> densities() const {
    validate();
    const auto n = static_cast<std::size_t>(std::floor((max - start) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::min(max, start + static_cast<double>(i) * step);
    return out;
  }
};

struct AttackStep {
  double density = 0.0;
  std::uint64_t seed = 0;
  Annotation annotation;
  bool success = false;
  PsnrValue psnr = PsnrValue::infinite();
};

struct AttackTrace {
  std::string image_id;
  Annotation baseline;
  std::vector<AttackStep> steps;
  std::optional<double> outcome;  // density of the first successful step
  int total_queries = 0;
};

struct AttackParams {
  NoiseKind noise = NoiseKind::Impulse;
  Schedule schedule;
  SuccessCriterion criterion;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Oracle failure inside an escalation; density is absent for the baseline query.
class EscalationError : public OracleError {
 public:
  EscalationError(const std::string& image_id, std::optional<double> density, const std::string& cause)
      : OracleError("image " + image_id + ": oracle failed" +
                    (density ? " at density " + std::to_string(*density) : std::string(" on baseline")) +
                    ": " + cause),
        density_(density) {}
  std::optional<double> density() const noexcept { return density_; }

 private:
  std::optional<double> density_;
};

/// Noise seed for step `index` of image `image_id`.
inline std::uint64_t step_seed(std::uint64_t global, const std::string& image_id, std::size_t index) {
  return derive_seed(global, hash_id(image_id), index);
}

/// Escalation attack: baseline query, then noisier copies on the schedule
/// until the criterion fires or the grid is exhausted.
inline AttackTrace run_escalation(const Image& img, const std::string& image_id, Oracle& oracle,
                                  const AttackParams& params) {
  const auto grid = params.schedule.densities();
  AttackTrace trace;
  trace.image_id = image_id;
  try {
    trace.baseline = oracle.annotate(img);
  } catch (const std::exception& e) {
    throw EscalationError(image_id, std::nullopt, e.what());
  }
  trace.total_queries = 1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    AttackStep step;
    step.density = grid[i];
    step.seed = step_seed(params.seed, image_id, i);
    const Image noisy = apply_noise_at_density(img, params.noise, step.density, step.seed);
    step.psnr = psnr(noisy, img);
    try {
      step.annotation = oracle.annotate(noisy);
    } catch (const std::exception& e) {
      throw EscalationError(image_id, step.density, e.what());
    }
    ++trace.total_queries;
    step.success = params.criterion.holds(trace.baseline, step.annotation);
    trace.steps.push_back(std::move(step));
    if (trace.steps.back().success) {
      trace.outcome = trace.steps.back().density;
      break;
    }
  }
  return trace;
}

struct CorpusItem {
  std::string id;
  Image image;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is claimed from
/// a shared counter; fn must write only to slot i of its outputs.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
            next = n;
          }
        }
      });
  }
  if (first_error) std::rethrow_exception(first_error);
}

struct CorpusEntry {
  std::string image_id;
  std::optional<AttackTrace> trace;
  std::optional<std::string> error;
};

struct CorpusResult {
  std::vector<CorpusEntry> entries;
  std::optional<double> mean_min_density;  // over deceived images; absent if none
  double deception_rate = 0.0;             // deceived / non-errored images
  std::size_t deceived = 0;
  std::size_t errored = 0;
};

/// One independently seeded escalation per image. Oracle failures are recorded
/// per image and excluded from the statistics.
inline CorpusResult run_corpus(const std::vector<CorpusItem>& corpus, Oracle& oracle,
                               const AttackParams& params) {
  if (corpus.empty()) throw std::invalid_argument("run_corpus: empty corpus");
  params.schedule.validate();
  CorpusResult result;
  result.entries.resize(corpus.size());
  parallel_for(corpus.size(), params.workers, [&](std::size_t i) {
    auto& entry = result.entries[i];
    entry.image_id = corpus[i].id;
    try {
      entry.trace = run_escalation(corpus[i].image, corpus[i].id, oracle, params);
    } catch (const OracleError& e) {
      entry.error = e.what();
    }
  });

  double sum = 0.0;
  for (const auto& e : result.entries) {
    if (e.error) {
      ++result.errored;
    } else if (e.trace->outcome) {
      ++result.deceived;
      sum += *e.trace->outcome;
    }
  }
  if (result.deceived > 0) result.mean_min_density = sum / static_cast<double>(result.deceived);
  const std::size_t usable = corpus.size() - result.errored;
  result.deception_rate = usable == 0 ? 0.0 : static_cast<double>(result.deceived) / static_cast<double>(usable);
  return result;
}

struct CurvePoint {
  double density = 0.0;
  double success_rate = 0.0;
  std::size_t successes = 0;
  std::size_t n = 0;
};

struct CurveResult {
  std::vector<CurvePoint> points;
  std::size_t errored = 0;
  std::vector<std::string> errors;
};

/// Stream tag separating curve seeds from escalation seeds.
inline constexpr std::uint64_t kCurveStream = 0x6375727665ULL;  // "curve"

/// Seed for repeat r at density index d of image `image_id`:
/// derive_seed(derive_seed(global, hash(id), d), kCurveStream, r).
inline std::uint64_t curve_seed(std::uint64_t global, const std::string& image_id, std::size_t density_index,
                                std::size_t repeat) {
  return derive_seed(derive_seed(global, hash_id(image_id), density_index), kCurveStream, repeat);
}

/// Per-density success rate. Every density re-corrupts every image `repeats`
/// times independently; no escalation state is shared between densities.
inline CurveResult success_curve(const std::vector<CorpusItem>& corpus, Oracle& oracle,
                                 const std::vector<double>& densities, NoiseKind noise,
                                 const SuccessCriterion& criterion, std::uint64_t seed, int repeats,
                                 int workers = 1) {
  if (corpus.empty()) throw std::invalid_argument("success_curve: empty corpus");
  if (densities.empty()) throw std::invalid_argument("success_curve: no densities");
  for (double d : densities)
    if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("success_curve: densities must lie in (0,1]");
  if (repeats < 1) throw std::invalid_argument("success_curve: repeats must be >= 1");

  // hits[i][d] = successes of image i at density index d
  std::vector<std::vector<std::size_t>> hits(corpus.size(), std::vector<std::size_t>(densities.size(), 0));
  std::vector<std::optional<std::string>> failed(corpus.size());
  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    const auto& item = corpus[i];
    try {
      const Annotation baseline = oracle.annotate(item.image);
      for (std::size_t d = 0; d < densities.size(); ++d)
        for (int r = 0; r < repeats; ++r) {
          const Image noisy = apply_noise_at_density(item.image, noise, densities[d],
                                                     curve_seed(seed, item.id, d, static_cast<std::size_t>(r)));
          hits[i][d] += criterion.holds(baseline, oracle.annotate(noisy));
        }
    } catch (const OracleError& e) {
      failed[i] = "image " + item.id + ": " + e.what();
    }
  });

  CurveResult out;
  for (const auto& f : failed)
    if (f) {
      ++out.errored;
      out.errors.push_back(*f);
    }
  const std::size_t usable = corpus.size() - out.errored;
  if (usable == 0) throw OracleError("success_curve: every image failed; first error: " + out.errors.front());
  for (std::size_t d = 0; d < densities.size(); ++d) {
    CurvePoint p;
    p.density = densities[d];
    p.n = usable * static_cast<std::size_t>(repeats);
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (!failed[i]) p.successes += hits[i][d];
    p.success_rate = static_cast<double>(p.successes) / static_cast<double>(p.n);
    out.points.push_back(p);
  }
  return out;
}

struct CountermeasureImage {
  std::string image_id;
  Annotation original;
  Annotation noisy;
  Annotation restored;
  bool top1_restored = false;  // restored top-1 == original top-1
  double jaccard_noisy = 0.0;
  double jaccard_restored = 0.0;
  PsnrValue psnr_noisy = PsnrValue::infinite();
  PsnrValue psnr_restored = PsnrValue::infinite();
};

struct CountermeasureReport {
  std::vector<CountermeasureImage> images;
  std::vector<std::string> errors;
  std::size_t errored = 0;
  double restoration_match_rate = 0.0;
  double mean_jaccard_noisy = 0.0;
  double mean_jaccard_restored = 0.0;
  PsnrValue mean_psnr_noisy = PsnrValue::infinite();
  PsnrValue mean_psnr_restored = PsnrValue::infinite();
};

struct CountermeasureParams {
  NoiseSpec noise;  // noise.seed is the global seed; per-image seeds derive from it
  FilterKind filter = FilterKind::WeightedAverage;
  FilterConfig filter_config;
  LabelFilter comparison;
  int workers = 1;
};

namespace detail {

/// Mean dB; Infinite if any term is Infinite.
inline PsnrValue mean_psnr(const std::vector<PsnrValue>& values) {
  double sum = 0.0;
  for (const auto& v : values) {
    if (v.is_infinite()) return PsnrValue::infinite();
    sum += v.db();
  }
  return PsnrValue::finite(sum / static_cast<double>(values.size()));
}

}  // namespace detail

/// Annotates original, noisy and restored versions of every image and
/// aggregates how far filtering brings the oracle back to its clean output.
inline CountermeasureReport evaluate_countermeasure(const std::vector<CorpusItem>& corpus, Oracle& oracle,
                                                    const CountermeasureParams& params) {
  if (corpus.empty()) throw std::invalid_argument("evaluate_countermeasure: empty corpus");
  params.filter_config.validate();
  std::vector<std::optional<CountermeasureImage>> slots(corpus.size());
  std::vector<std::optional<std::string>> failed(corpus.size());
  parallel_for(corpus.size(), params.workers, [&](std::size_t i) {
    const auto& item = corpus[i];
    NoiseSpec spec = params.noise;
    spec.seed = derive_seed(params.noise.seed, hash_id(item.id), 0);
    const Image noisy = apply_noise(item.image, spec);
    const Image restored = apply_filter(noisy, params.filter, params.filter_config);
    try {
      CountermeasureImage r;
      r.image_id = item.id;
      r.original = oracle.annotate(item.image);
      r.noisy = oracle.annotate(noisy);
      r.restored = oracle.annotate(restored);
      r.top1_restored = !top1_changed(r.original, r.restored);
      r.jaccard_noisy = label_jaccard(r.original, r.noisy, params.comparison);
      r.jaccard_restored = label_jaccard(r.original, r.restored, params.comparison);
      r.psnr_noisy = psnr(noisy, item.image);
      r.psnr_restored = psnr(restored, item.image);
      slots[i] = std::move(r);
    } catch (const OracleError& e) {
      failed[i] = "image " + item.id + ": " + e.what();
    }
  });

  CountermeasureReport rep;
  std::vector<PsnrValue> pn, pr;
  std::size_t matches = 0;
  double jn = 0.0, jr = 0.0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (failed[i]) {
      ++rep.errored;
      rep.errors.push_back(*failed[i]);
      continue;
    }
    auto& r = *slots[i];
    matches += r.top1_restored;
    jn += r.jaccard_noisy;
    jr += r.jaccard_restored;
    pn.push_back(r.psnr_noisy);
    pr.push_back(r.psnr_restored);
    rep.images.push_back(std::move(r));
  }
  if (rep.images.empty()) throw OracleError("evaluate_countermeasure: every image failed; first error: " + rep.errors.front());
  const auto n = static_cast<double>(rep.images.size());
  rep.restoration_match_rate = static_cast<double>(matches) / n;
  rep.mean_jaccard_noisy = jn / n;
  rep.mean_jaccard_restored = jr / n;
  rep.mean_psnr_noisy = detail::mean_psnr(pn);
  rep.mean_psnr_restored = detail::mean_psnr(pr);
  return rep;
}

}  // namespace noisebench
