// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "noisebench/noisebench.hpp"
#include "test_support.hpp"

using namespace noisebench;
using namespace std::chrono_literals;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int workers() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

Annotation labels(std::vector<Label> ls) { return normalized(Annotation{std::move(ls), std::nullopt, std::nullopt}); }

std::vector<CorpusItem> synthetic_hundred() {
  std::vector<CorpusItem> out;
  for (auto& s : generate_synthetic_corpus(13, 7)) {
    if (out.size() == 100) break;
    out.push_back({s.id, s.image});
  }
  return out;
}

SurrogateOracle bundled_surrogate() {
  return SurrogateOracle(surrogate_from_json(nlohmann::json::parse(
      read_file(testsupport::data_dir() / "models" / "surrogate.json"))));
}

Outcome ac1_psnr() {
  const auto zero = psnr(Image(16, 16, 0), Image(16, 16, 255));
  Image red(1, 1);
  red.at(0, 0, 0) = 255;
  const double one = psnr(Image(1, 1), red).db();
  const Image x = testsupport::random_image(32, 32, 1);
  const bool ok = !zero.is_infinite() && zero.db() == 0.0 && std::abs(one - 10.0 * std::log10(3.0)) <= 1e-9 &&
                  psnr(x, x).is_infinite();
  return {ok, "psnr(0,255)=" + zero.str() + " psnr(1px)=" + fmt("%.12f", one)};
}

Outcome ac2_impulse() {
  const Image noisy = add_impulse(Image(512, 512, 128), 0.2, 20170401);
  std::size_t salt = 0, pepper = 0;
  for (auto s : noisy.samples()) {
    salt += s == 255;
    pepper += s == 0;
  }
  const double frac = static_cast<double>(salt + pepper) / static_cast<double>(noisy.sample_count());
  const double ratio = static_cast<double>(salt) / static_cast<double>(pepper);
  return {frac >= 0.19 && frac <= 0.21 && ratio >= 0.95 && ratio <= 1.05,
          "extreme fraction " + fmt("%.5f", frac) + ", salt:pepper " + fmt("%.5f", ratio)};
}

Outcome ac3_gaussian() {
  const Image noisy = add_gaussian(Image(512, 512, 128), 20.0, 20170402);
  double sum = 0.0, sq = 0.0;
  for (auto s : noisy.samples()) {
    sum += s;
    sq += static_cast<double>(s) * s;
  }
  const double n = static_cast<double>(noisy.sample_count());
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  const Image white = add_gaussian(Image(512, 512, 255), 30.0, 20170403);
  // Samples are uint8, so "no sample > 255" holds by type; check the clip kept them at the ceiling too.
  const auto top = *std::max_element(white.samples().begin(), white.samples().end());
  return {std::abs(mean - 128.0) <= 0.5 && std::abs(sd - 20.0) <= 0.5 && top == 255,
          "mean " + fmt("%.4f", mean) + ", sd " + fmt("%.4f", sd) + ", max(white) " + std::to_string(top)};
}

Outcome ac4_determinism() {
  std::vector<std::string> failures;
  auto same = [&](const std::string& what, const std::function<std::string()>& f) {
    if (f() != f()) failures.push_back(what);
  };
  const Image img = testsupport::bundled_image("chelsea");
  auto bytes = [](const Image& i) { return std::string(i.samples().begin(), i.samples().end()); };
  same("impulse", [&] { return bytes(add_impulse(img, 0.3, 11)); });
  same("gaussian", [&] { return bytes(add_gaussian(img, 25.0, 11)); });
  same("weighted filter", [&] { return bytes(weighted_average_filter(add_impulse(img, 0.3, 11))); });
  same("lowpass", [&] { return bytes(gaussian_lowpass(add_gaussian(img, 25.0, 11), 1.5)); });
  same("png", [&] {
    const auto p = encode_png(img);
    return std::string(p.begin(), p.end());
  });
  same("synthetic corpus", [&] {
    std::string s;
    for (const auto& x : generate_synthetic_corpus(2, 99)) s += x.id + bytes(x.image);
    return s;
  });
  auto oracle = bundled_surrogate();
  std::vector<CorpusItem> corpus;
  for (auto& s : generate_synthetic_corpus(2, 31)) corpus.push_back({s.id, s.image});
  AttackParams ap;
  ap.criterion = SuccessCriterion::jaccard_below(0.0, {kSurrogateMinScore, 10});
  ap.seed = 5;
  ap.workers = workers();
  same("escalation trace", [&] { return to_json(run_escalation(img, "chelsea", oracle, ap)).dump(); });
  same("corpus report", [&] { return to_json(run_corpus(corpus, oracle, ap)).dump() + corpus_csv(run_corpus(corpus, oracle, ap)); });
  same("curve", [&] {
    return curve_csv(success_curve(corpus, oracle, {0.2, 0.6}, NoiseKind::Impulse, ap.criterion, 5, 2, workers()));
  });
  CountermeasureParams cp;
  cp.noise = NoiseSpec::impulse(0.15, 5);
  cp.workers = workers();
  same("countermeasure report", [&] { return to_json(evaluate_countermeasure(corpus, oracle, cp)).dump(); });
  std::string detail = "12 seeded operations compared";
  for (const auto& f : failures) detail += "; differs: " + f;
  return {failures.empty(), detail};
}

Outcome ac5_filter() {
  bool ok = true;
  double worst_gain = 1e9, worst_abs = 1e9;
  for (const auto& name : testsupport::bundled_image_names()) {
    const Image clean = testsupport::bundled_image(name);
    int k = 0;
    for (double p : {0.05, 0.10, 0.15, 0.20, 0.25, 0.30}) {
      const Image noisy = add_impulse(clean, p, derive_seed(5, hash_id(name), static_cast<std::uint64_t>(k++)));
      const double before = psnr(noisy, clean).db();
      const auto after = psnr(weighted_average_filter(noisy), clean);
      const double a = after.is_infinite() ? 1e9 : after.db();
      worst_gain = std::min(worst_gain, a - before);
      worst_abs = std::min(worst_abs, a);
      ok = ok && a >= before + 5.0 && a >= 22.0;
    }
  }
  return {ok, "min gain " + fmt("%.2f", worst_gain) + " dB, min restored " + fmt("%.2f", worst_abs) + " dB"};
}

Outcome ac6_escalation() {
  int agree = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Image img = testsupport::random_image(32, 24, 100 + k, 30, 225);
    const double thr = 7.0 + 0.5 * static_cast<double>(k);
    testsupport::PsnrThresholdOracle oracle(img, thr);
    AttackParams p;
    p.criterion = SuccessCriterion::top1_changed();
    p.seed = 4242 + k;
    const std::string id = "img" + std::to_string(k);
    const auto trace = run_escalation(img, id, oracle, p);

    std::optional<double> brute;
    const auto grid = p.schedule.densities();
    for (std::size_t i = 0; i < grid.size() && !brute; ++i) {
      const std::uint64_t s = derive_seed(p.seed, hash_id(id), i);
      const auto q = psnr(add_impulse(img, grid[i], s), img);
      if (!q.is_infinite() && q.db() < thr) brute = grid[i];
    }
    agree += trace.outcome == brute;
  }
  return {agree == 20, std::to_string(agree) + "/20 images agree"};
}

Outcome ac7_curve() {
  auto oracle = bundled_surrogate();
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  const auto curve = success_curve(synthetic_hundred(), oracle, grid, NoiseKind::Impulse,
                                   SuccessCriterion::jaccard_below(0.0, {kSurrogateMinScore, 10}), 1, 1, workers());
  bool monotone = true;
  std::string rates;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i > 0 && curve.points[i].success_rate < curve.points[i - 1].success_rate - 0.05) monotone = false;
    rates += (i ? " " : "") + fmt("%.2f", curve.points[i].success_rate);
  }
  const double last = curve.points.back().success_rate;
  return {monotone && last >= 0.8 && curve.errored == 0, "rates [" + rates + "]"};
}

Outcome ac8_countermeasure() {
  auto oracle = bundled_surrogate();
  CountermeasureParams p;
  p.noise = NoiseSpec::impulse(0.15, 8);
  p.comparison = {kSurrogateMinScore, 10};
  p.workers = workers();
  const auto rep = evaluate_countermeasure(synthetic_hundred(), oracle, p);
  return {rep.restoration_match_rate >= 0.9 && rep.mean_jaccard_restored > rep.mean_jaccard_noisy && rep.errored == 0,
          "match " + fmt("%.2f", rep.restoration_match_rate) + ", jaccard noisy " + fmt("%.3f", rep.mean_jaccard_noisy) +
              " restored " + fmt("%.3f", rep.mean_jaccard_restored)};
}

Outcome ac9_label_fixture() {
  const Annotation original = labels({{"Mammal", 0.92}, {"Gazelle", 0.91}, {"Vertebrate", 0.90}, {"Wildlife", 0.87},
                                      {"Springbok", 0.87}, {"Impala", 0.86}, {"Fauna", 0.85}, {"Antelope", 0.83}});
  const Annotation noisy = labels({{"Ecosystem", 0.84}, {"Leaf", 0.65}, {"Forest", 0.64}, {"Flower", 0.57}});
  const Annotation restored = labels({{"Mammal", 0.92}, {"Gazelle", 0.91}, {"Vertebrate", 0.90}, {"Wildlife", 0.88},
                                      {"Springbok", 0.86}, {"Impala", 0.86}, {"Fauna", 0.85}, {"Antelope", 0.84}});
  const double jn = label_jaccard(original, noisy);
  const double jr = label_jaccard(original, restored);
  return {jn == 0.0 && jr == 1.0, "noisy " + fmt("%.1f", jn) + ", restored " + fmt("%.1f", jr)};
}

class StubServer {
 public:
  StubServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/images:annotate"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

Outcome ac10_wire() {
  const char* kTeapot = R"({"responses":[{"labelAnnotations":[{"description":"Teapot","score":0.92}]}]})";
  ::setenv("NOISEBENCH_ACCEPTANCE_KEY", "k", 1);
  StubServer stub;
  std::mutex mu;
  std::vector<std::string> bodies;
  std::vector<std::chrono::steady_clock::time_point> arrivals;
  int failures_left = 2;
  stub.server().Post("/v1/images:annotate", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    bodies.push_back(req.body);
    arrivals.push_back(std::chrono::steady_clock::now());
    if (failures_left > 0) {
      --failures_left;
      res.status = 500;
      return;
    }
    res.set_content(kTeapot, "application/json");
  });
  RemoteOracleConfig cfg;
  cfg.endpoint = stub.endpoint();
  cfg.api_key_env = "NOISEBENCH_ACCEPTANCE_KEY";
  cfg.backoff_base = 10ms;
  cfg.timeout = 2000ms;
  cfg.max_requests_per_second = 20.0;

  RemoteClient client(cfg);
  int attempts = 0;
  const auto png = encode_png(testsupport::random_image(8, 8, 1));
  const Annotation a = client.annotate_png(png, &attempts);
  const bool parsed = a.labels.size() == 1 && a.labels[0].text == "Teapot" && a.labels[0].score == 0.92;
  const std::string redacted =
      std::regex_replace(bodies.at(0), std::regex(R"re("content":"[A-Za-z0-9+/=]*")re"), R"("content":"<B64>")");
  const bool wire = redacted ==
                    R"({"requests":[{"image":{"content":"<B64>"},"features":[{"type":"LABEL_DETECTION","maxResults":10}]}]})";

  // Rate limit: 30 more requests from 3 threads; no 1 s window may see more than 20 starts.
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 3; ++t)
      pool.emplace_back([&] {
        for (int i = 0; i < 10; ++i) client.annotate_png(png);
      });
  }
  std::size_t worst = 0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    std::size_t in_window = 0;
    for (std::size_t j = 0; j < arrivals.size(); ++j)
      in_window += arrivals[j] >= arrivals[i] && arrivals[j] - arrivals[i] < 1s;
    worst = std::max(worst, in_window);
  }
  const bool limited = worst <= 20;
  return {parsed && wire && attempts == 3 && limited,
          std::string("request ") + (wire ? "exact" : "MISMATCH") + ", parsed " + (parsed ? "Teapot/0.92" : "WRONG") +
              ", attempts " + std::to_string(attempts) + ", max starts per 1 s window " + std::to_string(worst) +
              " (limit 20)"};
}

Outcome ac11_png() {
  int exact = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const int w = 1 + static_cast<int>(derive_seed(11, k, 0) % 300);
    const int h = 1 + static_cast<int>(derive_seed(11, k, 1) % 300);
    const Image img = testsupport::random_image(w, h, k);
    const auto decoded = testsupport::decode_png_reference(encode_png(img));
    exact += decoded.width == static_cast<std::uint32_t>(w) && decoded.height == static_cast<std::uint32_t>(h) &&
             std::equal(decoded.rgb.begin(), decoded.rgb.end(), img.samples().begin(), img.samples().end());
  }
  return {exact == 20, std::to_string(exact) + "/20 round-trip through libpng"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1 psnr oracles", 1, ac1_psnr},
      {"AC2 impulse statistics", 1, ac2_impulse},
      {"AC3 gaussian statistics", 1, ac3_gaussian},
      {"AC4 determinism", 60, ac4_determinism},
      {"AC5 filter efficacy", 10, ac5_filter},
      {"AC6 escalation vs brute force", 5, ac6_escalation},
      {"AC7 success curve shape", 60, ac7_curve},
      {"AC8 countermeasure restoration", 60, ac8_countermeasure},
      {"AC9 label fixture jaccard", 1, ac9_label_fixture},
      {"AC10 wire conformance", 5, ac10_wire},
      {"AC11 png conformance", 5, ac11_png},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::printf("%s  %-32s %7.3fs (budget %.0fs%s)  %s\n", pass ? "PASS" : "FAIL", c.name.c_str(), secs, c.budget_s,
                in_budget ? "" : ", EXCEEDED", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
