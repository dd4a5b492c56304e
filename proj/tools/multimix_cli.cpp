// Copyright (c) 2026 The multimix authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "multimix/experiments.hpp"
#include "multimix/io.hpp"
#include "multimix/mixers.hpp"
#include "multimix/net.hpp"
#include "multimix/rng.hpp"
#include "multimix/variance.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace multimix;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCheckFailed = 3;

/// Thrown for bad options / malformed values (exit code 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Layered key=value options: defaults < config file < command line.
/// Any key absent from the defaults table is an error.
class Options {
 public:
  explicit Options(std::map<std::string, std::string> defaults)
      : values_(std::move(defaults)) {}

  void apply(const std::map<std::string, std::string>& overrides, const std::string& source) {
    for (const auto& [key, value] : overrides) {
      if (values_.find(key) == values_.end()) {
        throw UsageError("unknown option '" + key + "' (" + source + ")");
      }
      values_[key] = value;
    }
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  long long integer(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(str(key), &pos);
      if (pos != str(key).size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw UsageError("option '" + key + "' needs an integer, got '" + str(key) + "'");
    }
  }

  double real(const std::string& key) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(str(key), &pos);
      if (pos != str(key).size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw UsageError("option '" + key + "' needs a number, got '" + str(key) + "'");
    }
  }

  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    const std::string& s = str(key);
    std::size_t start = 0;
    while (start <= s.size()) {
      const std::size_t comma = s.find(',', start);
      const std::string tok = s.substr(start, comma == std::string::npos ? comma : comma - start);
      try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size() || v < 1) throw std::invalid_argument("bad");
        out.push_back(v);
      } catch (const std::exception&) {
        throw UsageError("option '" + key + "' needs a comma-separated list of positive "
                         "integers, got '" + s + "'");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (out.empty()) throw UsageError("option '" + key + "' must not be empty");
    return out;
  }

  const std::map<std::string, std::string>& all() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Run manifest: written as "running" up front, finalized with artifact
/// checksums and timing when the command ends.
class Manifest {
 public:
  Manifest(const fs::path& out_dir, const std::string& subcommand, const Options& opts)
      : path_(out_dir / "manifest.json"), start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "multimix";
    doc_["version"] = kVersion;
    doc_["subcommand"] = subcommand;
    doc_["status"] = "running";
    json config = json::object();
    for (const auto& [k, v] : opts.all()) config[k] = v;
    doc_["config"] = config;
    doc_["artifacts"] = json::array();
    write();
  }

  void add_artifact(const fs::path& p) { artifacts_.push_back(p); }

  void finalize(const std::string& status) {
    json arts = json::array();
    for (const auto& p : artifacts_) {
      char hex[32];
      std::snprintf(hex, sizeof(hex), "%016llx",
                    static_cast<unsigned long long>(file_checksum(p.string())));
      arts.push_back({{"path", p.filename().string()}, {"fnv1a", hex}});
    }
    doc_["artifacts"] = arts;
    doc_["status"] = status;
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    doc_["elapsed_seconds"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count() / 1000.0;
    write();
  }

 private:
  void write() const {
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest " + path_.string());
    out << doc_.dump(2) << '\n';
  }

  fs::path path_;
  json doc_;
  std::vector<fs::path> artifacts_;
  std::chrono::steady_clock::time_point start_;
};

fs::path resolve_out_dir(const Options& opts) {
  std::string dir = opts.str("out");
  if (const char* env = std::getenv("MULTIMIX_OUT"); env && *env) dir = env;
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

SpiralParams spiral_params_from(const Options& opts) {
  SpiralParams params;
  params.n = static_cast<int>(opts.integer("n"));
  params.r_max = opts.real("r_max");
  params.theta_max = opts.real("theta_max");
  params.noise_std = opts.real("noise_std");
  params.flip_frac = opts.real("flip_frac");
  params.train_frac = opts.real("train_frac");
  return params;
}

std::map<std::string, std::string> spiral_geometry_defaults() {
  const SpiralParams params;  // single source of truth for the frozen geometry
  return {{"n", std::to_string(params.n)},
          {"r_max", fmt_g17(params.r_max)},
          {"theta_max", fmt_g17(params.theta_max)},
          {"noise_std", fmt_g17(params.noise_std)},
          {"flip_frac", fmt_g17(params.flip_frac)},
          {"train_frac", fmt_g17(params.train_frac)}};
}

Sample sample_from_ppm(const std::string& path, const std::vector<double>& label) {
  const PpmImage img = read_ppm(path);
  Sample s;
  s.shape = {img.width, img.height, img.channels};
  s.features.reserve(img.pixels.size());
  for (std::uint8_t p : img.pixels) s.features.push_back(p / 255.0);
  s.label = label;
  return s;
}

void write_panel(const fs::path& path, const MixedSample& mixed) {
  PpmImage img;
  img.width = mixed.shape.width;
  img.height = mixed.shape.height;
  img.channels = mixed.shape.channels;
  img.pixels = preview_to_image(mixed);
  write_ppm(path.string(), img);
}

// Horizontal strip of equally sized panels with a 2-pixel white separator.
void write_montage(const fs::path& path, const std::vector<MixedSample>& panels) {
  const ImageShape shape = panels.front().shape;
  const int sep = 2;
  PpmImage strip;
  strip.height = shape.height;
  strip.channels = shape.channels;
  strip.width = static_cast<int>(panels.size()) * shape.width +
                (static_cast<int>(panels.size()) - 1) * sep;
  strip.pixels.assign(static_cast<std::size_t>(strip.width) * strip.height * strip.channels,
                      255);
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto raster = preview_to_image(panels[p]);
    const int x_off = static_cast<int>(p) * (shape.width + sep);
    for (int y = 0; y < shape.height; ++y) {
      for (int x = 0; x < shape.width; ++x) {
        for (int c = 0; c < shape.channels; ++c) {
          strip.pixels[(static_cast<std::size_t>(y) * strip.width + x_off + x) *
                           strip.channels + c] =
              raster[(static_cast<std::size_t>(y) * shape.width + x) * shape.channels + c];
        }
      }
    }
  }
  write_ppm(path.string(), strip);
}

// The frozen tiny problem every exact-mode variance run uses: four 2D points,
// a linear softmax net, and a 3-atom discretized Beta weight distribution.
ExactProblem canonical_problem(double alpha, int atoms, std::uint64_t seed) {
  ExactProblem problem;
  Rng rng(seed);
  problem.net = Mlp::init({2, 2}, rng);
  const double coords[4][2] = {{1.0, 0.4}, {-0.8, 0.9}, {0.2, -1.1}, {-0.5, -0.3}};
  for (int i = 0; i < 4; ++i) {
    Sample s;
    s.features = {coords[i][0], coords[i][1]};
    s.label = (i % 2 == 0) ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
    problem.data.push_back(s);
  }
  problem.weights = discretize_beta(alpha, atoms);
  return problem;
}

// ---------------------------------------------------------------------------

int cmd_spiral(const Options& opts) {
  const fs::path out = resolve_out_dir(opts);
  Manifest manifest(out, "spiral", opts);

  const SpiralParams params = spiral_params_from(opts);
  const std::uint64_t seed0 = static_cast<std::uint64_t>(opts.integer("seed"));
  const int seeds = static_cast<int>(opts.integer("seeds"));
  if (seeds < 1) throw UsageError("seeds must be >= 1");

  struct Variant {
    const char* name;
    MixMode mode;
    int k;
  };
  const std::vector<Variant> variants = {
      {"none", MixMode::None, 1},
      {"manifold_k1", MixMode::Manifold, 1},
      {"multimix_k5", MixMode::Manifold, 5},
  };

  std::map<std::string, std::vector<double>> accuracy;  // variant -> per-seed %
  const fs::path summary_path = out / "summary.csv";
  CsvWriter summary(summary_path.string());
  summary.row({"variant", "seed", "test_accuracy"});

  for (int si = 0; si < seeds; ++si) {
    const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(si);
    Rng data_rng(seed);
    const SpiralDataset data = gen_spiral(data_rng, params);
    for (const auto& variant : variants) {
      RunConfig config;
      config.mode = variant.mode;
      config.k = variant.k;
      config.alpha = opts.real("alpha");
      config.epochs = static_cast<int>(opts.integer("epochs"));
      config.batch = static_cast<int>(opts.integer("batch"));
      config.lr = opts.real("lr");
      config.l2 = opts.real("l2");
      config.seed = seed;
      config.eval_every = static_cast<int>(opts.integer("eval_every"));
      const TrainResult run = train(data, config);
      const double acc = 100.0 - run.final_test_error;
      accuracy[variant.name].push_back(acc);
      summary.row({variant.name, std::to_string(seed), fmt_g17(acc)});
      std::printf("spiral seed %llu %-12s test accuracy %.2f%%\n",
                  static_cast<unsigned long long>(seed), variant.name, acc);

      const std::string tag = std::string(variant.name) + "_seed" + std::to_string(seed);
      const fs::path metrics_path = out / ("metrics_" + tag + ".csv");
      CsvWriter metrics(metrics_path.string());
      metrics.row({"epoch", "train_loss", "test_error"});
      for (const auto& h : run.history) {
        metrics.row({std::to_string(h.epoch), fmt_g17(h.train_loss), fmt_g17(h.test_error)});
      }
      metrics.close();
      manifest.add_artifact(metrics_path);

      if (si == 0) {
        const BoundaryRaster raster =
            eval_boundary(run.net, data, static_cast<int>(opts.integer("resolution")));
        const fs::path bcsv = out / ("boundary_" + std::string(variant.name) + ".csv");
        const fs::path bppm = out / ("boundary_" + std::string(variant.name) + ".ppm");
        export_boundary(raster, data, bcsv.string(), bppm.string());
        manifest.add_artifact(bcsv);
        manifest.add_artifact(bppm);
        const fs::path ckpt = out / ("net_" + std::string(variant.name) + ".ckpt");
        run.net.save(ckpt.string());
        manifest.add_artifact(ckpt);
      }
    }
  }
  summary.close();
  manifest.add_artifact(summary_path);

  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const double med_none = median(accuracy["none"]);
  const double med_k1 = median(accuracy["manifold_k1"]);
  const double med_k5 = median(accuracy["multimix_k5"]);
  const bool ordering = med_k5 >= med_k1 && med_k1 >= med_none;

  const fs::path med_path = out / "summary_median.csv";
  CsvWriter med(med_path.string());
  med.row({"variant", "median_accuracy", "ordering_ok"});
  med.row({"none", fmt_g17(med_none), ordering ? "1" : "0"});
  med.row({"manifold_k1", fmt_g17(med_k1), ordering ? "1" : "0"});
  med.row({"multimix_k5", fmt_g17(med_k5), ordering ? "1" : "0"});
  med.close();
  manifest.add_artifact(med_path);
  std::printf("medians: none %.2f%%, K=1 %.2f%%, K=5 %.2f%%, ordering %s\n", med_none,
              med_k1, med_k5, ordering ? "ok" : "VIOLATED");

  manifest.finalize("complete");
  return kExitOk;
}

int cmd_variance(const Options& opts) {
  const fs::path out = resolve_out_dir(opts);
  Manifest manifest(out, "variance", opts);

  const std::string mode = opts.str("mode");
  const std::vector<int> k_list = opts.int_list("k_list");
  const int b = static_cast<int>(opts.integer("b"));
  const double alpha = opts.real("alpha");
  const std::uint64_t seed = static_cast<std::uint64_t>(opts.integer("seed"));
  const double tol = opts.real("tol");
  bool check_failed = false;

  if (mode == "exact") {
    const ExactProblem problem =
        canonical_problem(alpha, static_cast<int>(opts.integer("atoms")), seed);
    const ExactStats stats = compute_exact_stats(problem);
    const auto& d = stats.decomposition;

    const fs::path dec_path = out / "decomposition.csv";
    CsvWriter dec(dec_path.string());
    dec.row({"component", "value"});
    dec.row({"var_g", fmt_g17(d.var_g)});
    dec.row({"var_pair_g1", fmt_g17(d.var_pair_g1)});
    dec.row({"var_lambda_g2", fmt_g17(d.var_lambda_g2)});
    dec.row({"e_pair_var_lambda", fmt_g17(d.e_pair_var_lambda)});
    dec.row({"e_lambda_var_pair", fmt_g17(d.e_lambda_var_pair)});
    dec.row({"residual_pair_identity", fmt_g17(d.residual_pair_identity)});
    dec.row({"residual_lambda_identity", fmt_g17(d.residual_lambda_identity)});
    dec.close();
    manifest.add_artifact(dec_path);
    if (std::fabs(d.residual_pair_identity) > tol ||
        std::fabs(d.residual_lambda_identity) > tol) {
      std::fprintf(stderr, "decomposition residuals exceed tolerance %g\n", tol);
      check_failed = true;
    }

    const fs::path var_path = out / "variance_report.csv";
    CsvWriter var(var_path.string());
    var.row({"estimator", "k", "b", "var", "ci_lo", "ci_hi", "exact"});
    for (int k : k_list) {
      const double closed = closed_form_var_multimix(stats, k, b);
      std::string enumerated;
      try {
        const double direct = enumerate_var_multimix(problem, k, b);
        enumerated = fmt_g17(direct);
        if (std::fabs(direct - closed) > tol) {
          std::fprintf(stderr, "closed form vs enumeration mismatch at K=%d\n", k);
          check_failed = true;
        }
      } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "K=%d: %s (closed form reported alone)\n", k, e.what());
      }
      var.row({"multimix", std::to_string(k), std::to_string(b), fmt_g17(closed), "", "",
               enumerated});
      var.row({"largebatch", std::to_string(k), std::to_string(b),
               fmt_g17(closed_form_var_largebatch(stats, k, b)), "", "", ""});
      std::printf("exact K=%d B=%d: Var[multimix] %.6e, Var[largebatch] %.6e\n", k, b,
                  closed, closed_form_var_largebatch(stats, k, b));
    }
    var.close();
    manifest.add_artifact(var_path);

    // B0 report with the comparison over the B sweep
    const int k_for_b0 = std::max(2, k_list.back());
    const Prop2Report prop2 = check_proposition2(problem, k_for_b0, opts.int_list("b_list"));
    const fs::path b0_path = out / "b0_report.csv";
    CsvWriter b0(b0_path.string());
    b0.row({"b0", fmt_g17(prop2.b0)});
    b0.row({"k", std::to_string(k_for_b0)});
    b0.row({"b", "var_multimix", "var_largebatch", "multimix_no_worse", "predicted"});
    for (const auto& row : prop2.rows) {
      b0.row({std::to_string(row.b), fmt_g17(row.var_multimix), fmt_g17(row.var_largebatch),
              row.multimix_no_worse ? "1" : "0", row.predicted_no_worse ? "1" : "0"});
    }
    b0.close();
    manifest.add_artifact(b0_path);
    if (!prop2.equivalence_holds) {
      std::fprintf(stderr, "B0 threshold prediction violated\n");
      check_failed = true;
    }
    std::printf("B0 = %.6g (threshold %s)\n", prop2.b0,
                prop2.equivalence_holds ? "confirmed" : "VIOLATED");
  } else if (mode == "mc") {
    const ExactProblem problem = canonical_problem(alpha, 3, seed);
    SamplerConfig config;
    config.net = &problem.net;
    config.dataset = &problem.data;
    config.alpha = alpha;
    config.b = b;
    const int replicates = static_cast<int>(opts.integer("replicates"));

    const fs::path var_path = out / "variance_report.csv";
    CsvWriter var(var_path.string());
    var.row({"estimator", "k", "b", "var", "ci_lo", "ci_hi", "mean_sq_norm"});
    for (int k : k_list) {
      config.k = k;
      Rng rng(seed + static_cast<std::uint64_t>(k));
      const VarianceReport report = estimate_variance(
          [&](Rng& r) { return grad_multimix(config, r); }, replicates, rng);
      var.row({report.estimator, std::to_string(k), std::to_string(b),
               fmt_g17(report.variance), fmt_g17(report.ci_lo), fmt_g17(report.ci_hi),
               fmt_g17(report.mean_sq_norm)});
      std::printf("mc K=%d B=%d: var %.6e [%.6e, %.6e]\n", k, b, report.variance,
                  report.ci_lo, report.ci_hi);
    }
    var.close();
    manifest.add_artifact(var_path);
  } else {
    throw UsageError("mode must be 'exact' or 'mc', got '" + mode + "'");
  }

  manifest.finalize(check_failed ? "check_failed" : "complete");
  return check_failed ? kExitCheckFailed : kExitOk;
}

int cmd_mix_preview(const Options& opts) {
  const fs::path out = resolve_out_dir(opts);
  Manifest manifest(out, "mix-preview", opts);

  if (opts.str("image_a").empty() || opts.str("image_b").empty()) {
    throw UsageError("mix-preview needs image_a and image_b");
  }
  const Sample a = sample_from_ppm(opts.str("image_a"), {1.0, 0.0});
  const Sample b = sample_from_ppm(opts.str("image_b"), {0.0, 1.0});
  if (a.shape.width != b.shape.width || a.shape.height != b.shape.height ||
      a.shape.channels != b.shape.channels) {
    throw std::runtime_error("mix-preview: image dimensions differ");
  }

  const int k = static_cast<int>(opts.integer("k"));
  Rng rng(static_cast<std::uint64_t>(opts.integer("seed")));
  const std::vector<double> seq = sample_ordered_weights(rng, opts.real("alpha"), k);

  const fs::path panels_path = out / "panels.csv";
  CsvWriter panels(panels_path.string());
  panels.row({"mixer", "k_index", "lambda", "lambda_effective", "box_x0", "box_y0", "box_x1",
              "box_y1"});

  std::string mixers = opts.str("mixers");
  std::size_t start = 0;
  while (start <= mixers.size()) {
    const std::size_t comma = mixers.find(',', start);
    const std::string name =
        mixers.substr(start, comma == std::string::npos ? comma : comma - start);
    std::vector<MixedSample> mixed;
    std::vector<CutBox> boxes;
    if (name == "input") {
      mixed = input_multimix(a, b, seq);
    } else if (name == "cutmix") {
      mixed = cut_multimix(a, b, seq, rng, &boxes);
    } else if (name == "puzzle") {
      const int grid = static_cast<int>(opts.integer("grid"));
      mixed = puzzle_multimix(a, b, seq, rng, static_cast<int>(opts.integer("puzzle_d")),
                              grid, grid);
    } else {
      throw UsageError("unknown mixer '" + name + "' (input, cutmix, puzzle)");
    }
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      const fs::path panel = out / ("preview_" + name + "_k" + std::to_string(i) + ".ppm");
      write_panel(panel, mixed[i]);
      manifest.add_artifact(panel);
      std::vector<std::string> row = {name, std::to_string(i), fmt_g17(seq[i]),
                                      fmt_g17(mixed[i].provenance.lambda_effective)};
      if (name == "cutmix") {
        row.push_back(std::to_string(boxes[i].x0));
        row.push_back(std::to_string(boxes[i].y0));
        row.push_back(std::to_string(boxes[i].x1));
        row.push_back(std::to_string(boxes[i].y1));
      } else {
        row.insert(row.end(), {"", "", "", ""});
      }
      panels.row(row);
      std::printf("%s panel %zu: lambda %.4f, lambda_effective %.4f\n", name.c_str(), i,
                  seq[i], mixed[i].provenance.lambda_effective);
    }
    const fs::path montage = out / ("montage_" + name + ".ppm");
    write_montage(montage, mixed);
    manifest.add_artifact(montage);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  panels.close();
  manifest.add_artifact(panels_path);
  manifest.finalize("complete");
  return kExitOk;
}

int cmd_calib(const Options& opts) {
  const fs::path out = resolve_out_dir(opts);
  Manifest manifest(out, "calib", opts);

  if (opts.str("checkpoint").empty()) throw UsageError("calib needs a checkpoint path");
  const Mlp net = Mlp::load(opts.str("checkpoint"));

  const SpiralParams params = spiral_params_from(opts);
  Rng rng(static_cast<std::uint64_t>(opts.integer("seed")));
  const SpiralDataset data = gen_spiral(rng, params);
  const std::string split = opts.str("split");
  const std::vector<int>& idx = split == "train" ? data.train_idx : data.test_idx;
  if (split != "train" && split != "test") {
    throw UsageError("split must be 'train' or 'test', got '" + split + "'");
  }
  const Matrix x = gather_rows(data.points, idx);
  const std::vector<int> labels =
      gather_labels(split == "train" ? data.labels : data.clean_labels, idx);

  const int m = static_cast<int>(opts.integer("m"));
  const EceReport report = ece(net, x, labels, m);
  const fs::path ece_path = out / "ece.csv";
  CsvWriter csv(ece_path.string());
  csv.row({"bin", "lo", "hi", "count", "accuracy", "confidence"});
  for (int bin = 0; bin < m; ++bin) {
    csv.row({std::to_string(bin + 1), fmt_g17(static_cast<double>(bin) / m),
             fmt_g17(static_cast<double>(bin + 1) / m),
             std::to_string(report.bins[bin].count), fmt_g17(report.bins[bin].acc),
             fmt_g17(report.bins[bin].conf)});
  }
  csv.row({"ece", "", "", std::to_string(report.n), fmt_g17(report.ece), ""});
  csv.close();
  manifest.add_artifact(ece_path);
  std::printf("ECE (M=%d, %s split, n=%d): %.6f\n", m, split.c_str(), report.n, report.ece);

  manifest.finalize("complete");
  return kExitOk;
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> common_defaults() {
  return {{"seed", "1"}, {"out", "out"}};
}

std::map<std::string, std::string> spiral_defaults() {
  auto d = common_defaults();
  d.insert({{"seeds", "1"}, {"epochs", "3000"}, {"batch", "256"}, {"lr", "0.01"},
            {"l2", "0.0001"}, {"alpha", "1.0"}, {"resolution", "200"},
            {"eval_every", "50"}});
  const auto geom = spiral_geometry_defaults();
  d.insert(geom.begin(), geom.end());
  return d;
}

std::map<std::string, std::string> variance_defaults() {
  auto d = common_defaults();
  d.insert({{"mode", "exact"}, {"k_list", "1,2,4,8"}, {"b", "2"},
            {"b_list", "1,2,4,8,16"}, {"alpha", "1.0"}, {"atoms", "3"},
            {"replicates", "2000"}, {"tol", "1e-10"}});
  return d;
}

std::map<std::string, std::string> preview_defaults() {
  auto d = common_defaults();
  d.insert({{"image_a", ""}, {"image_b", ""}, {"k", "4"}, {"alpha", "1.0"},
            {"mixers", "input,cutmix,puzzle"}, {"puzzle_d", "4"}, {"grid", "4"}});
  return d;
}

std::map<std::string, std::string> calib_defaults() {
  auto d = common_defaults();
  d.insert({{"checkpoint", ""}, {"m", "10"}, {"split", "test"}});
  const auto geom = spiral_geometry_defaults();
  d.insert(geom.begin(), geom.end());
  return d;
}

struct SubArgs {
  std::string config_file;
  std::string out_dir;
  std::string seed;
  std::vector<std::string> sets;
};

void attach_common(CLI::App* sub, SubArgs& args) {
  sub->add_option("--config", args.config_file, "key = value config file");
  sub->add_option("--out", args.out_dir, "output directory");
  sub->add_option("--seed", args.seed, "root RNG seed");
  sub->add_option("--set", args.sets, "override an option as key=value (repeatable)");
}

Options resolve(std::map<std::string, std::string> defaults, const SubArgs& args) {
  Options opts(std::move(defaults));
  if (!args.config_file.empty()) {
    opts.apply(read_config_file(args.config_file), "config file " + args.config_file);
  }
  std::map<std::string, std::string> cli;
  for (const std::string& kv : args.sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set needs key=value, got '" + kv + "'");
    cli[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (!args.out_dir.empty()) cli["out"] = args.out_dir;
  if (!args.seed.empty()) cli["seed"] = args.seed;
  opts.apply(cli, "command line");
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-mix: K ordered interpolations per sample pair — mixers, gradient "
               "variance lab, and the spiral study"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SubArgs spiral_args, variance_args, preview_args, calib_args;
  CLI::App* spiral = app.add_subcommand("spiral", "train the three spiral variants");
  attach_common(spiral, spiral_args);
  CLI::App* variance = app.add_subcommand("variance", "exact / Monte Carlo gradient variance");
  attach_common(variance, variance_args);
  CLI::App* preview = app.add_subcommand("mix-preview", "render mixer previews from two images");
  attach_common(preview, preview_args);
  CLI::App* calib = app.add_subcommand("calib", "ECE report for a checkpoint");
  attach_common(calib, calib_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (spiral->parsed()) return cmd_spiral(resolve(spiral_defaults(), spiral_args));
    if (variance->parsed()) return cmd_variance(resolve(variance_defaults(), variance_args));
    if (preview->parsed()) return cmd_mix_preview(resolve(preview_defaults(), preview_args));
    if (calib->parsed()) return cmd_calib(resolve(calib_defaults(), calib_args));
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
