#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisebench/image.hpp"
#include "noisebench/oracle.hpp"

namespace noisebench {

inline constexpr int kSurrogateGrid = 16;
inline constexpr std::size_t kSurrogateFeatures = kSurrogateGrid * kSurrogateGrid * 3;

/// Box-average downsample to 16x16x3, row-major. Cell (u, v) covers source
/// columns [u*W/16, (u+1)*W/16) (at least one column), likewise for rows.
inline std::vector<double> downsample16(const Image& img) {
  std::vector<double> out(kSurrogateFeatures);
  const int w = img.width();
  const int h = img.height();
  for (int gy = 0; gy < kSurrogateGrid; ++gy) {
    const int y0 = std::min(gy * h / kSurrogateGrid, h - 1);
    const int y1 = std::max(y0 + 1, (gy + 1) * h / kSurrogateGrid);
    for (int gx = 0; gx < kSurrogateGrid; ++gx) {
      const int x0 = std::min(gx * w / kSurrogateGrid, w - 1);
      const int x1 = std::max(x0 + 1, (gx + 1) * w / kSurrogateGrid);
      const double n = static_cast<double>(y1 - y0) * (x1 - x0);
      for (int c = 0; c < 3; ++c) {
        std::uint64_t sum = 0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) sum += img.at(y, x, c);
        out[(static_cast<std::size_t>(gy) * kSurrogateGrid + gx) * 3 + c] = static_cast<double>(sum) / n;
      }
    }
  }
  return out;
}

struct SurrogateModel {
  std::vector<std::string> classes;
  std::vector<std::vector<double>> centroids;  // one 16x16x3 row-major vector per class
  nlohmann::json meta = nlohmann::json::object();

  void validate() const {
    if (classes.size() < 2) throw std::invalid_argument("surrogate model needs >= 2 classes");
    if (centroids.size() != classes.size())
      throw std::invalid_argument("surrogate model: centroid count != class count");
    for (const auto& c : centroids) {
      if (c.size() != kSurrogateFeatures)
        throw std::invalid_argument("surrogate model: centroid must have 768 samples");
      for (double v : c)
        if (!std::isfinite(v) || v < 0.0 || v > 255.0)
          throw std::invalid_argument("surrogate model: centroid sample outside [0,255]");
    }
  }
};

using LabeledImage = std::pair<Image, std::string>;

/// Per-class mean of 16x16 box-averaged images. Classes appear in order of
/// first occurrence in the corpus; the seed is recorded in meta.
inline SurrogateModel build_surrogate(const std::vector<LabeledImage>& corpus, std::uint64_t seed,
                                      const std::string& source = "user corpus") {
  SurrogateModel model;
  std::map<std::string, std::size_t> slot;
  std::vector<std::size_t> counts;
  for (const auto& [img, cls] : corpus) {
    if (cls.empty()) throw std::invalid_argument("build_surrogate: empty class name");
    auto [it, inserted] = slot.emplace(cls, model.classes.size());
    if (inserted) {
      model.classes.push_back(cls);
      model.centroids.emplace_back(kSurrogateFeatures, 0.0);
      counts.push_back(0);
    }
    const auto feat = downsample16(img);
    auto& acc = model.centroids[it->second];
    for (std::size_t i = 0; i < feat.size(); ++i) acc[i] += feat[i];
    ++counts[it->second];
  }
  if (model.classes.size() < 2) throw std::invalid_argument("build_surrogate: need >= 2 classes");
  for (std::size_t c = 0; c < model.classes.size(); ++c)
    for (auto& v : model.centroids[c]) v /= static_cast<double>(counts[c]);
  model.meta = {{"source", source},
                {"seed", seed},
                {"images", corpus.size()},
                {"grid", kSurrogateGrid}};
  return model;
}

/// Nearest-centroid scoring: s_c = (1/d_c) / sum(1/d), Euclidean d on the
/// 16x16x3 grid. Zero-distance classes share the whole mass equally.
inline Annotation surrogate_annotate(const SurrogateModel& model, const Image& img) {
  const auto feat = downsample16(img);
  const std::size_t n = model.classes.size();
  std::vector<double> dist(n);
  std::size_t zero = 0;
  for (std::size_t c = 0; c < n; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < feat.size(); ++i) {
      const double d = feat[i] - model.centroids[c][i];
      s += d * d;
    }
    dist[c] = std::sqrt(s);
    zero += dist[c] == 0.0;
  }
  Annotation a;
  a.labels.reserve(n);
  if (zero > 0) {
    for (std::size_t c = 0; c < n; ++c)
      a.labels.push_back({model.classes[c], dist[c] == 0.0 ? 1.0 / static_cast<double>(zero) : 0.0});
  } else {
    double total = 0.0;
    for (double d : dist) total += 1.0 / d;
    for (std::size_t c = 0; c < n; ++c) a.labels.push_back({model.classes[c], (1.0 / dist[c]) / total});
  }
  std::stable_sort(a.labels.begin(), a.labels.end(), label_order);
  return a;
}

inline nlohmann::json to_json(const SurrogateModel& m) {
  return {{"classes", m.classes}, {"centroids", m.centroids}, {"meta", m.meta}};
}

inline SurrogateModel surrogate_from_json(const nlohmann::json& j) {
  SurrogateModel m;
  try {
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    if (j.contains("meta")) m.meta = j.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("surrogate model JSON: ") + e.what());
  }
  m.validate();
  std::map<std::string, int> seen;
  for (const auto& c : m.classes)
    if (++seen[c] > 1) throw std::invalid_argument("surrogate model JSON: duplicate class " + c);
  return m;
}

class SurrogateOracle final : public Oracle {
 public:
  explicit SurrogateOracle(SurrogateModel model) : model_(std::move(model)) { model_.validate(); }

  Annotation annotate(const Image& img) override { return surrogate_annotate(model_, img); }

  std::string identity() const override {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& c : model_.classes) mix(c.data(), c.size() + 1);
    for (const auto& cen : model_.centroids) mix(cen.data(), cen.size() * sizeof(double));
    char buf[40];
    std::snprintf(buf, sizeof buf, "surrogate:%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  const SurrogateModel& model() const noexcept { return model_; }

 private:
  SurrogateModel model_;
};

}  // namespace noisebench
