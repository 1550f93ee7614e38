#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "noisebench/annotation.hpp"
#include "noisebench/attack.hpp"
#include "noisebench/metrics.hpp"

namespace noisebench {

using ordered_json = nlohmann::ordered_json;

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// PSNR as a JSON number, or the string "inf".
inline ordered_json to_json(const PsnrValue& p) {
  if (p.is_infinite()) return "inf";
  return p.db();
}

inline ordered_json to_json(const Annotation& a) {
  ordered_json j;
  j["labels"] = ordered_json::array();
  for (const auto& l : a.labels) j["labels"].push_back({{"text", l.text}, {"score", l.score}});
  if (a.face_count) j["face_count"] = *a.face_count;
  if (a.text_blocks) j["text_blocks"] = *a.text_blocks;
  return j;
}

inline ordered_json to_json(const SuccessCriterion& c) {
  ordered_json j;
  j["kind"] = c.describe();
  if (c.kind == SuccessCriterion::Kind::JaccardBelow) {
    j["threshold"] = c.threshold;
    j["min_score"] = c.filter.min_score;
    j["top_k"] = c.filter.top_k;
  }
  return j;
}

inline ordered_json to_json(const AttackTrace& t) {
  ordered_json j;
  j["image_id"] = t.image_id;
  j["baseline"] = to_json(t.baseline);
  j["steps"] = ordered_json::array();
  for (const auto& s : t.steps) {
    ordered_json step;
    step["density"] = s.density;
    step["seed"] = s.seed;
    step["success"] = s.success;
    step["psnr_db"] = to_json(s.psnr);
    step["annotation"] = to_json(s.annotation);
    j["steps"].push_back(std::move(step));
  }
  j["outcome_density"] = t.outcome ? ordered_json(*t.outcome) : ordered_json(nullptr);
  j["total_queries"] = t.total_queries;
  return j;
}

inline ordered_json to_json(const CorpusResult& r) {
  ordered_json j;
  j["summary"] = {{"images", r.entries.size()},
                  {"deceived", r.deceived},
                  {"errored_images", r.errored},
                  {"deception_rate", r.deception_rate},
                  {"mean_min_density", r.mean_min_density ? ordered_json(*r.mean_min_density) : ordered_json(nullptr)}};
  j["traces"] = ordered_json::array();
  for (const auto& e : r.entries) {
    if (e.trace) {
      j["traces"].push_back(to_json(*e.trace));
    } else {
      j["traces"].push_back({{"image_id", e.image_id}, {"error", *e.error}});
    }
  }
  return j;
}

inline ordered_json to_json(const CurveResult& c) {
  ordered_json j;
  j["points"] = ordered_json::array();
  for (const auto& p : c.points)
    j["points"].push_back({{"density", p.density}, {"success_rate", p.success_rate}, {"successes", p.successes}, {"n", p.n}});
  j["errored_images"] = c.errored;
  j["errors"] = c.errors;
  return j;
}

inline ordered_json to_json(const CountermeasureReport& r) {
  ordered_json j;
  j["summary"] = {{"images", r.images.size() + r.errored},
                  {"errored_images", r.errored},
                  {"restoration_match_rate", r.restoration_match_rate},
                  {"mean_jaccard_noisy", r.mean_jaccard_noisy},
                  {"mean_jaccard_restored", r.mean_jaccard_restored},
                  {"mean_psnr_noisy_db", to_json(r.mean_psnr_noisy)},
                  {"mean_psnr_restored_db", to_json(r.mean_psnr_restored)}};
  j["images"] = ordered_json::array();
  for (const auto& i : r.images) {
    ordered_json e;
    e["image_id"] = i.image_id;
    e["top1_restored"] = i.top1_restored;
    e["jaccard_noisy"] = i.jaccard_noisy;
    e["jaccard_restored"] = i.jaccard_restored;
    e["psnr_noisy_db"] = to_json(i.psnr_noisy);
    e["psnr_restored_db"] = to_json(i.psnr_restored);
    e["original"] = to_json(i.original);
    e["noisy"] = to_json(i.noisy);
    e["restored"] = to_json(i.restored);
    j["images"].push_back(std::move(e));
  }
  j["errors"] = r.errors;
  return j;
}

/// density,success_rate,n with 4 and 6 decimals.
inline std::string curve_csv(const CurveResult& c) {
  std::ostringstream os;
  os << "density,success_rate,n\n";
  for (const auto& p : c.points) os << fixed(p.density, 4) << ',' << fixed(p.success_rate, 6) << ',' << p.n << '\n';
  return os.str();
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace detail

/// image_id,outcome_density,queries,baseline_top1,final_top1. outcome_density is
/// "none" for undeceived images and "error" (with empty remaining fields) for
/// images whose oracle failed.
inline std::string corpus_csv(const CorpusResult& r) {
  std::ostringstream os;
  os << "image_id,outcome_density,queries,baseline_top1,final_top1\n";
  for (const auto& e : r.entries) {
    os << detail::csv_field(e.image_id) << ',';
    if (!e.trace) {
      os << "error,,,\n";
      continue;
    }
    const auto& t = *e.trace;
    os << (t.outcome ? fixed(*t.outcome, 4) : std::string("none")) << ',' << t.total_queries << ','
       << detail::csv_field(top1_text(t.baseline)) << ','
       << detail::csv_field(t.steps.empty() ? top1_text(t.baseline) : top1_text(t.steps.back().annotation)) << '\n';
  }
  return os.str();
}

}  // namespace noisebench
