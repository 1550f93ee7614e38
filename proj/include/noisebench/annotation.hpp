#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace noisebench {

struct Label {
  std::string text;
  double score = 0.0;

  friend bool operator==(const Label&, const Label&) = default;
};

/// Oracle output. Labels are kept sorted by descending score, ties by text.
struct Annotation {
  std::vector<Label> labels;
  std::optional<int> face_count;
  std::optional<std::vector<std::string>> text_blocks;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

inline bool label_order(const Label& a, const Label& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.text < b.text;
}

/// Validates scores, sorts, and drops repeated texts keeping the best-ranked one.
inline Annotation normalized(Annotation a) {
  for (const auto& l : a.labels)
    if (!(l.score >= 0.0 && l.score <= 1.0))
      throw std::invalid_argument("label '" + l.text + "' has score outside [0,1]");
  if (a.face_count && *a.face_count < 0) throw std::invalid_argument("negative face count");
  std::stable_sort(a.labels.begin(), a.labels.end(), label_order);
  std::unordered_set<std::string> seen;
  std::erase_if(a.labels, [&seen](const Label& l) { return !seen.insert(l.text).second; });
  return a;
}

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Highest-scoring label, ties to the lexicographically smallest text.
inline const Label* top_label(const Annotation& a) {
  const Label* best = nullptr;
  for (const auto& l : a.labels)
    if (best == nullptr || label_order(l, *best)) best = &l;
  return best;
}

inline std::string top1_text(const Annotation& a) {
  const Label* t = top_label(a);
  return t ? t->text : std::string();
}

}  // namespace noisebench
