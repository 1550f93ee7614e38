#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "noisebench/annotation.hpp"
#include "noisebench/oracle.hpp"
#include "noisebench/png.hpp"

namespace noisebench {

enum class RemoteFeature { Labels, Faces, Text };

inline const char* feature_type(RemoteFeature f) {
  switch (f) {
    case RemoteFeature::Labels: return "LABEL_DETECTION";
    case RemoteFeature::Faces: return "FACE_DETECTION";
    case RemoteFeature::Text: return "TEXT_DETECTION";
  }
  return "";
}

inline RemoteFeature remote_feature_from_string(const std::string& s) {
  if (s == "labels") return RemoteFeature::Labels;
  if (s == "faces") return RemoteFeature::Faces;
  if (s == "text") return RemoteFeature::Text;
  throw std::invalid_argument("unknown feature '" + s + "' (expected labels|faces|text)");
}

struct RemoteOracleConfig {
  std::string endpoint = "https://vision.googleapis.com/v1/images:annotate";
  std::string api_key_env = "VISION_API_KEY";
  std::vector<RemoteFeature> features{RemoteFeature::Labels};
  int max_results = 10;
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  double max_requests_per_second = 5.0;

  void validate() const {
    if (max_results < 1) throw std::invalid_argument("max_results must be >= 1");
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    if (features.empty()) throw std::invalid_argument("at least one feature is required");
    if (!(max_requests_per_second > 0.0)) throw std::invalid_argument("rate limit must be > 0");
    if (timeout.count() <= 0) throw std::invalid_argument("timeout must be positive");
    if (backoff_base.count() < 0) throw std::invalid_argument("backoff base must be >= 0");
  }
};

/// Reads {"endpoint", "api_key_env", "features", "max_results", "timeout_ms",
/// "max_attempts", "backoff_base_ms", "max_requests_per_second"}; every key
/// is optional.
inline RemoteOracleConfig remote_config_from_json(const nlohmann::json& j) {
  RemoteOracleConfig cfg;
  try {
    if (j.contains("endpoint")) cfg.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("api_key_env")) cfg.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("features")) {
      cfg.features.clear();
      for (const auto& f : j.at("features")) cfg.features.push_back(remote_feature_from_string(f.get<std::string>()));
    }
    if (j.contains("max_results")) cfg.max_results = j.at("max_results").get<int>();
    if (j.contains("timeout_ms")) cfg.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<std::int64_t>());
    if (j.contains("max_attempts")) cfg.max_attempts = j.at("max_attempts").get<int>();
    if (j.contains("backoff_base_ms"))
      cfg.backoff_base = std::chrono::milliseconds(j.at("backoff_base_ms").get<std::int64_t>());
    if (j.contains("max_requests_per_second"))
      cfg.max_requests_per_second = j.at("max_requests_per_second").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("remote oracle config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

/// Spaces request starts at least 1/rate apart, measured from the previous
/// caller's actual wake-up rather than its scheduled slot, so a late wake-up
/// cannot squeeze two starts together. Thread-safe; callers queue on the mutex.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double per_second)
      : interval_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / per_second))) {}

  void acquire() {
    std::lock_guard lock(mu_);
    std::this_thread::sleep_until(next_);
    next_ = Clock::now() + interval_;
  }

 private:
  std::mutex mu_;
  Clock::duration interval_;
  Clock::time_point next_{};
};

/// JSON body for one image: {"requests":[{"image":{"content":...},"features":[...]}]}.
inline std::string build_annotate_request(std::span<const std::uint8_t> image_bytes,
                                          const RemoteOracleConfig& cfg) {
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  for (auto f : cfg.features) features.push_back({{"type", feature_type(f)}, {"maxResults", cfg.max_results}});
  const std::string raw(image_bytes.begin(), image_bytes.end());
  nlohmann::ordered_json request;
  request["image"]["content"] = httplib::detail::base64_encode(raw);
  request["features"] = std::move(features);
  nlohmann::ordered_json body;
  body["requests"] = nlohmann::ordered_json::array({std::move(request)});
  return body.dump();
}

/// Maps the first entry of "responses" onto an Annotation.
inline Annotation parse_annotate_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ResponseParseError(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("responses") || !j["responses"].is_array() || j["responses"].empty())
    throw ResponseParseError("response lacks a non-empty \"responses\" array");
  const auto& r = j["responses"][0];
  if (!r.is_object()) throw ResponseParseError("responses[0] is not an object");
  if (r.contains("error"))
    throw ResponseParseError("API reported error: " + r["error"].dump());

  Annotation a;
  try {
    if (r.contains("labelAnnotations")) {
      for (const auto& l : r.at("labelAnnotations"))
        a.labels.push_back({l.at("description").get<std::string>(), l.at("score").get<double>()});
    }
    if (r.contains("faceAnnotations")) {
      if (!r.at("faceAnnotations").is_array()) throw ResponseParseError("faceAnnotations is not an array");
      a.face_count = static_cast<int>(r.at("faceAnnotations").size());
    }
    if (r.contains("textAnnotations")) {
      std::vector<std::string> blocks;
      for (const auto& t : r.at("textAnnotations")) blocks.push_back(t.at("description").get<std::string>());
      a.text_blocks = std::move(blocks);
    }
    return normalized(std::move(a));
  } catch (const nlohmann::json::exception& e) {
    throw ResponseParseError(std::string("unexpected response schema: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ResponseParseError(e.what());
  }
}

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string target;  // /path[?query]
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint must be an absolute URL: " + url);
  const auto path_at = url.find('/', scheme_end + 3);
  if (path_at == std::string::npos) return {url, "/"};
  return {url.substr(0, path_at), url.substr(path_at)};
}

inline bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace detail

/// Blocking vision-API client. Safe for concurrent use: each call opens its own
/// connection, the rate limiter is shared.
class RemoteClient {
 public:
  explicit RemoteClient(RemoteOracleConfig cfg) : cfg_(std::move(cfg)), limiter_(cfg_.max_requests_per_second) {
    cfg_.validate();
    url_ = detail::split_url(cfg_.endpoint);
  }

  /// POSTs the PNG bytes verbatim (base64) and parses the reply. `attempts`,
  /// when given, receives the number of HTTP requests issued.
  Annotation annotate_png(std::span<const std::uint8_t> png, int* attempts = nullptr) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr) throw MissingCredentials(cfg_.api_key_env);

    std::string target = url_.target;
    target += target.find('?') == std::string::npos ? '?' : '&';
    target += "key=" + httplib::detail::encode_query_param(key);
    const std::string body = build_annotate_request(png, cfg_);

    httplib::Client client(url_.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    client.set_connection_timeout(secs.count(), usec.count());
    client.set_read_timeout(secs.count(), usec.count());
    client.set_write_timeout(secs.count(), usec.count());

    std::string last_failure;
    int last_status = 0;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
      if (attempts) *attempts = attempt;
      limiter_.acquire();
      auto res = client.Post(target, body, "application/json");
      if (!res) {
        last_failure = httplib::to_string(res.error());
        last_status = 0;
      } else if (res->status >= 200 && res->status < 300) {
        return parse_annotate_response(res->body);
      } else if (!detail::retryable_status(res->status)) {
        throw HttpStatusError(res->status, res->body);
      } else {
        last_status = res->status;
        last_failure = res->body;
      }
      if (attempt < cfg_.max_attempts) std::this_thread::sleep_for(cfg_.backoff_base * (1LL << (attempt - 1)));
    }
    if (last_status != 0) throw HttpStatusError(last_status, last_failure);
    throw TransportError(last_failure, cfg_.max_attempts);
  }

  const RemoteOracleConfig& config() const noexcept { return cfg_; }

 private:
  RemoteOracleConfig cfg_;
  RateLimiter limiter_;
  detail::SplitUrl url_;
};

/// One-shot call; prefer RemoteOracle for repeated queries so the rate limit
/// is shared.
inline Annotation remote_annotate(const RemoteOracleConfig& cfg, std::span<const std::uint8_t> png,
                                  int* attempts = nullptr) {
  RemoteClient client(cfg);
  return client.annotate_png(png, attempts);
}

class RemoteOracle final : public Oracle {
 public:
  explicit RemoteOracle(RemoteOracleConfig cfg) : client_(std::move(cfg)) {}

  Annotation annotate(const Image& img) override { return client_.annotate_png(encode_png(img)); }
  std::string identity() const override { return "remote:" + client_.config().endpoint; }

 private:
  RemoteClient client_;
};

}  // namespace noisebench
