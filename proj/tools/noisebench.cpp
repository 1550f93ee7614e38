// noisebench: command-line front end for noise corruption, denoising, PSNR,
// escalation attacks, success curves and countermeasure evaluation.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "noisebench/noisebench.hpp"

namespace fs = std::filesystem;
using namespace noisebench;

namespace {

constexpr const char* kVersion = "1.0.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int default_workers() { return static_cast<int>(std::max(1U, std::thread::hardware_concurrency())); }

struct RunConfig {
  // images
  std::string in, out, reference, a, b;
  // noise
  std::string noise = "impulse";
  double density = 0.1;
  double sigma = 20.0;
  std::uint64_t seed = 0;
  // filter
  std::string filter = "weighted";
  int initial_radius = 1;
  int max_radius = 3;
  int passes = 5;
  double lowpass_sigma = 1.0;
  // corpus
  std::string corpus_dir;
  int synthetic = 0;
  std::uint64_t corpus_seed = 7;
  int limit = 0;
  // oracle
  std::string model, remote, constant;
  // attack / curve
  double start = 0.05, step = 0.05, max = 1.0;
  std::string densities;
  int repeats = 1;
  std::string criterion = "jaccard";
  double tau = 0.0;
  double min_score = 0.5;
  int top_k = 10;
  int workers = default_workers();
  std::string csv, json_out;
  // gen-corpus / build-surrogate
  std::string out_dir;
  int per_class = 2;
};

std::string format_psnr(const PsnrValue& p) { return "psnr_db=" + p.str(); }

std::vector<double> parse_densities(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw UsageError("bad density '" + tok + "'");
    }
    if (used != tok.size()) throw UsageError("bad density '" + tok + "'");
    if (!(v > 0.0 && v <= 1.0)) throw UsageError("densities must lie in (0,1]: " + tok);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--densities is empty");
  return out;
}

std::vector<CorpusItem> load_corpus(const RunConfig& cfg) {
  std::vector<CorpusItem> corpus;
  if (!cfg.corpus_dir.empty() && cfg.synthetic > 0)
    throw UsageError("choose one of --corpus-dir and --synthetic");
  if (!cfg.corpus_dir.empty()) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cfg.corpus_dir))
      if (e.is_regular_file() && e.path().extension() == ".ppm") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) corpus.push_back({f.stem().string(), read_ppm_file(f)});
  } else if (cfg.synthetic > 0) {
    for (auto& s : generate_synthetic_corpus(cfg.synthetic, cfg.corpus_seed))
      corpus.push_back({std::move(s.id), std::move(s.image)});
  } else {
    throw UsageError("a corpus is required: --corpus-dir DIR or --synthetic N");
  }
  if (cfg.limit > 0 && static_cast<std::size_t>(cfg.limit) < corpus.size())
    corpus.erase(corpus.begin() + cfg.limit, corpus.end());
  if (corpus.empty()) throw UsageError("corpus is empty");
  return corpus;
}

nlohmann::json read_json_file(const std::string& path) {
  const Bytes data = read_file(path);
  try {
    return nlohmann::json::parse(data.begin(), data.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::unique_ptr<Oracle> make_oracle(const RunConfig& cfg) {
  const int chosen = !cfg.model.empty() + !cfg.remote.empty() + !cfg.constant.empty();
  if (chosen != 1) throw UsageError("select exactly one oracle: --model, --remote or --constant");
  if (!cfg.model.empty()) return std::make_unique<SurrogateOracle>(surrogate_from_json(read_json_file(cfg.model)));
  if (!cfg.remote.empty()) return std::make_unique<RemoteOracle>(remote_config_from_json(read_json_file(cfg.remote)));
  return std::make_unique<ConstantOracle>(Annotation{{{cfg.constant, 1.0}}, std::nullopt, std::nullopt});
}

SuccessCriterion make_criterion(const RunConfig& cfg) {
  if (cfg.criterion == "jaccard") return SuccessCriterion::jaccard_below(cfg.tau, {cfg.min_score, cfg.top_k});
  if (cfg.criterion == "top1") return SuccessCriterion::top1_changed();
  if (cfg.criterion == "faces") return SuccessCriterion::detection_vanished(DetectionFeature::Faces);
  if (cfg.criterion == "text") return SuccessCriterion::detection_vanished(DetectionFeature::Text);
  throw UsageError("unknown criterion '" + cfg.criterion + "'");
}

FilterConfig make_filter_config(const RunConfig& cfg) {
  FilterConfig f{cfg.initial_radius, cfg.max_radius, cfg.passes, cfg.lowpass_sigma};
  try {
    f.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return f;
}

ordered_json corpus_config(const RunConfig& c) {
  ordered_json j;
  if (!c.corpus_dir.empty()) j["corpus_dir"] = c.corpus_dir;
  if (c.synthetic > 0) {
    j["synthetic"] = c.synthetic;
    j["corpus_seed"] = c.corpus_seed;
  }
  if (c.limit > 0) j["limit"] = c.limit;
  return j;
}

ordered_json oracle_config(const RunConfig& c) {
  ordered_json j;
  if (!c.model.empty()) j["model"] = c.model;
  if (!c.remote.empty()) j["remote"] = c.remote;
  if (!c.constant.empty()) j["constant"] = c.constant;
  return j;
}

ordered_json criterion_config(const RunConfig& c) {
  return {{"criterion", c.criterion}, {"tau", c.tau}, {"min_score", c.min_score}, {"top_k", c.top_k}};
}

ordered_json report_meta(const std::string& command, const RunConfig& c, const Oracle& oracle, ordered_json params) {
  ordered_json meta;
  meta["tool"] = "noisebench";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["seed"] = c.seed;
  meta["oracle"] = oracle.identity();
  meta["gaussian_density_convention"] = "sigma = density * 100";
  meta["seed_derivation"] =
      "splitmix64(splitmix64(splitmix64(seed) ^ fnv1a64(image_id)) ^ index), mt19937_64 per noisy image";
  meta["config"] = std::move(params);
  return meta;
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_json(const std::string& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

// ---- subcommands ------------------------------------------------------------

int cmd_corrupt(const RunConfig& c) {
  const Image img = read_ppm_file(c.in);
  const auto kind = noise_kind_from_string(c.noise);
  const NoiseSpec spec = kind == NoiseKind::Impulse ? NoiseSpec::impulse(c.density, c.seed)
                                                    : NoiseSpec::gaussian(c.sigma, c.seed);
  const Image noisy = apply_noise(img, spec);
  write_ppm_file(c.out, noisy);
  std::cout << format_psnr(psnr(noisy, img)) << '\n';
  return 0;
}

int cmd_denoise(const RunConfig& c) {
  const Image img = read_ppm_file(c.in);
  const Image restored = apply_filter(img, filter_kind_from_string(c.filter), make_filter_config(c));
  write_ppm_file(c.out, restored);
  if (!c.reference.empty()) std::cout << format_psnr(psnr(restored, read_ppm_file(c.reference))) << '\n';
  return 0;
}

int cmd_psnr(const RunConfig& c) {
  const Image a = read_ppm_file(c.a);
  const Image b = read_ppm_file(c.b);
  if (!a.same_shape(b)) throw UsageError("images differ in size");
  std::cout << format_psnr(psnr(a, b)) << '\n';
  return 0;
}

int cmd_gen_corpus(const RunConfig& c) {
  fs::create_directories(c.out_dir);
  const auto corpus = generate_synthetic_corpus(c.per_class, c.corpus_seed);
  std::string manifest = "file,label\n";
  for (const auto& s : corpus) {
    write_ppm_file(fs::path(c.out_dir) / (s.id + ".ppm"), s.image);
    manifest += s.id + ".ppm," + s.label + "\n";
  }
  write_text((fs::path(c.out_dir) / "corpus.csv").string(), manifest);
  std::cout << "images=" << corpus.size() << '\n';
  return 0;
}

int cmd_build_surrogate(const RunConfig& c) {
  std::vector<LabeledImage> labeled;
  std::string source;
  if (!c.corpus_dir.empty()) {
    std::ifstream manifest(fs::path(c.corpus_dir) / "corpus.csv");
    if (!manifest) throw IoError("missing " + (fs::path(c.corpus_dir) / "corpus.csv").string());
    std::string line;
    std::getline(manifest, line);  // header
    while (std::getline(manifest, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw FormatError("corpus.csv: expected file,label in '" + line + "'");
      labeled.emplace_back(read_ppm_file(fs::path(c.corpus_dir) / line.substr(0, comma)), line.substr(comma + 1));
    }
    source = "directory " + c.corpus_dir;
  } else if (c.synthetic > 0) {
    for (auto& s : generate_synthetic_corpus(c.synthetic, c.corpus_seed)) labeled.emplace_back(std::move(s.image), s.label);
    source = "synthetic shapes, n_per_class=" + std::to_string(c.synthetic) + ", corpus_seed=" + std::to_string(c.corpus_seed);
  } else {
    throw UsageError("build-surrogate needs --corpus-dir DIR or --synthetic N");
  }
  const SurrogateModel model = build_surrogate(labeled, c.seed, source);
  write_text(c.out, to_json(model).dump() + "\n");
  std::cout << "classes=" << model.classes.size() << '\n';
  return 0;
}

int cmd_attack(const RunConfig& c) {
  const auto corpus = load_corpus(c);
  auto oracle = make_oracle(c);
  AttackParams p;
  p.noise = noise_kind_from_string(c.noise);
  p.schedule = {c.start, c.step, c.max};
  try {
    p.schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  p.criterion = make_criterion(c);
  p.seed = c.seed;
  p.workers = c.workers;

  const CorpusResult result = run_corpus(corpus, *oracle, p);
  ordered_json params = corpus_config(c);
  params.update(oracle_config(c));
  params.update(criterion_config(c));
  params.update({{"noise", c.noise}, {"start", c.start}, {"step", c.step}, {"max", c.max}, {"workers", c.workers}});
  ordered_json report;
  report["meta"] = report_meta("attack", c, *oracle, std::move(params));
  report["result"] = to_json(result);
  write_json(c.out, report);
  if (!c.csv.empty()) write_text(c.csv, corpus_csv(result));
  std::cout << "deception_rate=" << fixed(result.deception_rate, 6) << " mean_min_density="
            << (result.mean_min_density ? fixed(*result.mean_min_density, 4) : std::string("none"))
            << " errored_images=" << result.errored << '\n';
  return 0;
}

int cmd_curve(const RunConfig& c) {
  const auto corpus = load_corpus(c);
  auto oracle = make_oracle(c);
  std::vector<double> grid;
  if (!c.densities.empty()) {
    grid = parse_densities(c.densities);
  } else {
    try {
      grid = Schedule{c.start, c.step, c.max}.densities();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  const CurveResult curve = success_curve(corpus, *oracle, grid, noise_kind_from_string(c.noise),
                                          make_criterion(c), c.seed, c.repeats, c.workers);
  write_text(c.out, curve_csv(curve));
  if (!c.json_out.empty()) {
    ordered_json params = corpus_config(c);
    params.update(oracle_config(c));
    params.update(criterion_config(c));
    params.update({{"noise", c.noise}, {"densities", grid}, {"repeats", c.repeats}, {"workers", c.workers}});
    ordered_json report;
    report["meta"] = report_meta("curve", c, *oracle, std::move(params));
    report["result"] = to_json(curve);
    write_json(c.json_out, report);
  }
  std::cout << "points=" << curve.points.size() << " errored_images=" << curve.errored << '\n';
  return 0;
}

int cmd_evaluate(const RunConfig& c) {
  const auto corpus = load_corpus(c);
  auto oracle = make_oracle(c);
  CountermeasureParams p;
  const auto kind = noise_kind_from_string(c.noise);
  p.noise = kind == NoiseKind::Impulse ? NoiseSpec::impulse(c.density, c.seed) : NoiseSpec::gaussian(c.sigma, c.seed);
  p.filter = filter_kind_from_string(c.filter);
  p.filter_config = make_filter_config(c);
  p.comparison = {c.min_score, c.top_k};
  p.workers = c.workers;

  const CountermeasureReport rep = evaluate_countermeasure(corpus, *oracle, p);
  ordered_json params = corpus_config(c);
  params.update(oracle_config(c));
  params.update({{"noise", c.noise},
                 {kind == NoiseKind::Impulse ? "density" : "sigma", p.noise.parameter},
                 {"filter", c.filter},
                 {"initial_radius", c.initial_radius},
                 {"max_radius", c.max_radius},
                 {"passes", c.passes},
                 {"lowpass_sigma", c.lowpass_sigma},
                 {"min_score", c.min_score},
                 {"top_k", c.top_k},
                 {"workers", c.workers}});
  ordered_json report;
  report["meta"] = report_meta("evaluate", c, *oracle, std::move(params));
  report["result"] = to_json(rep);
  write_json(c.out, report);
  std::cout << "restoration_match_rate=" << fixed(rep.restoration_match_rate, 6)
            << " mean_jaccard_noisy=" << fixed(rep.mean_jaccard_noisy, 6)
            << " mean_jaccard_restored=" << fixed(rep.mean_jaccard_restored, 6) << " errored_images=" << rep.errored
            << '\n';
  return 0;
}

// ---- option wiring ----------------------------------------------------------

void add_noise_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--noise", c.noise, "impulse | gaussian")->check(CLI::IsMember({"impulse", "gaussian"}));
  sub->add_option("--density", c.density, "impulse density p")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--sigma", c.sigma, "gaussian standard deviation")->check(CLI::NonNegativeNumber);
}

void add_filter_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--filter", c.filter, "weighted | lowpass")->check(CLI::IsMember({"weighted", "lowpass"}));
  sub->add_option("--initial-radius", c.initial_radius)->check(CLI::PositiveNumber);
  sub->add_option("--max-radius", c.max_radius)->check(CLI::PositiveNumber);
  sub->add_option("--passes", c.passes)->check(CLI::PositiveNumber);
  sub->add_option("--lowpass-sigma", c.lowpass_sigma)->check(CLI::PositiveNumber);
}

void add_corpus_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--corpus-dir", c.corpus_dir, "directory of .ppm images (id = file stem)");
  sub->add_option("--synthetic", c.synthetic, "generate N synthetic images per class")->check(CLI::NonNegativeNumber);
  sub->add_option("--corpus-seed", c.corpus_seed, "seed for --synthetic");
  sub->add_option("--limit", c.limit, "keep only the first N images")->check(CLI::NonNegativeNumber);
}

void add_oracle_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--model", c.model, "surrogate model JSON");
  sub->add_option("--remote", c.remote, "remote oracle config JSON");
  sub->add_option("--constant", c.constant, "constant oracle emitting this label");
  sub->add_option("--workers", c.workers, "parallel corpus workers")->check(CLI::PositiveNumber);
}

void add_criterion_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--criterion", c.criterion, "jaccard | top1 | faces | text")
      ->check(CLI::IsMember({"jaccard", "top1", "faces", "text"}));
  sub->add_option("--tau", c.tau, "jaccard success threshold")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--min-score", c.min_score, "label confidence cut")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--top-k", c.top_k, "labels compared")->check(CLI::PositiveNumber);
}

void add_schedule_options(CLI::App* sub, RunConfig& c) {
  sub->add_option("--start", c.start)->check(CLI::Range(0.0, 1.0));
  sub->add_option("--step", c.step)->check(CLI::PositiveNumber);
  sub->add_option("--max", c.max)->check(CLI::Range(0.0, 1.0));
}

/// Turns a JSON manifest into "--key value" arguments placed ahead of the user's
/// flags; with TakeLast, explicit flags win.
std::vector<std::string> config_args(const std::string& path) {
  const auto j = read_json_file(path);
  if (!j.is_object()) throw UsageError(path + ": config must be a JSON object");
  std::vector<std::string> out;
  for (const auto& [key, value] : j.items()) {
    if (key == "config") continue;
    out.push_back("--" + key);
    if (value.is_string()) {
      out.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      out.push_back(joined);
    } else {
      out.push_back(value.dump());
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisebench: noise attacks on image annotators and their denoising countermeasure"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  RunConfig c;
  std::string config_path;

  auto* corrupt = app.add_subcommand("corrupt", "add impulse or gaussian noise to a PPM");
  corrupt->add_option("--in", c.in)->required();
  corrupt->add_option("--out", c.out)->required();
  add_noise_options(corrupt, c);
  corrupt->add_option("--seed", c.seed);

  auto* denoise = app.add_subcommand("denoise", "restore a PPM with the weighted-average or low-pass filter");
  denoise->add_option("--in", c.in)->required();
  denoise->add_option("--out", c.out)->required();
  denoise->add_option("--reference", c.reference, "print PSNR of the output against this image");
  add_filter_options(denoise, c);

  auto* psnr_cmd = app.add_subcommand("psnr", "PSNR between two PPMs");
  psnr_cmd->add_option("a", c.a)->required();
  psnr_cmd->add_option("b", c.b)->required();

  auto* gen = app.add_subcommand("gen-corpus", "write the synthetic shape corpus as PPMs + corpus.csv");
  gen->add_option("--out-dir", c.out_dir)->required();
  gen->add_option("--per-class", c.per_class)->check(CLI::PositiveNumber);
  gen->add_option("--corpus-seed,--seed", c.corpus_seed);

  auto* build = app.add_subcommand("build-surrogate", "fit the nearest-centroid surrogate oracle");
  build->add_option("--corpus-dir", c.corpus_dir, "directory with corpus.csv (file,label)");
  build->add_option("--synthetic", c.synthetic, "train on N synthetic images per class")->check(CLI::NonNegativeNumber);
  build->add_option("--corpus-seed", c.corpus_seed);
  build->add_option("--seed", c.seed);
  build->add_option("--out", c.out)->required();

  auto* attack = app.add_subcommand("attack", "escalating-noise attack over a corpus");
  auto* curve = app.add_subcommand("curve", "success rate per noise density");
  auto* evaluate = app.add_subcommand("evaluate", "countermeasure evaluation (original / noisy / restored)");
  for (auto* sub : {attack, curve, evaluate}) {
    sub->add_option("--config", config_path, "JSON file mirroring the flags");
    sub->add_option("--seed", c.seed);
    sub->add_option("--out", c.out)->required();
    add_corpus_options(sub, c);
    add_oracle_options(sub, c);
  }
  for (auto* sub : {attack, curve}) {
    sub->add_option("--noise", c.noise)->check(CLI::IsMember({"impulse", "gaussian"}));
    add_criterion_options(sub, c);
    add_schedule_options(sub, c);
  }
  attack->add_option("--csv", c.csv, "per-image summary CSV");
  curve->add_option("--densities", c.densities, "comma-separated densities (overrides --start/--step/--max)");
  curve->add_option("--repeats", c.repeats)->check(CLI::PositiveNumber);
  curve->add_option("--json", c.json_out, "full JSON report");
  add_noise_options(evaluate, c);
  add_filter_options(evaluate, c);
  evaluate->add_option("--min-score", c.min_score)->check(CLI::Range(0.0, 1.0));
  evaluate->add_option("--top-k", c.top_k)->check(CLI::PositiveNumber);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") {
        auto injected = config_args(args[i + 1]);
        args.insert(args.begin() + 1, injected.begin(), injected.end());
        break;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector

  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*corrupt) return cmd_corrupt(c);
    if (*denoise) return cmd_denoise(c);
    if (*psnr_cmd) return cmd_psnr(c);
    if (*gen) return cmd_gen_corpus(c);
    if (*build) return cmd_build_surrogate(c);
    if (*attack) return cmd_attack(c);
    if (*curve) return cmd_curve(c);
    if (*evaluate) return cmd_evaluate(c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
