// Command-line driver for the extrema-weighted feature pipeline: data
// simulation, feature extraction, additive-model fits, baseline models,
// randomization inference, and the split-based prediction study.
//
// Conventions shared by every subcommand:
//   - artifacts land under --out and embed the resolved configuration hash
//     (plus the seed where one applies) in a header comment / note field;
//   - identical configuration and seed produce byte-identical artifacts;
//   - failures print one JSON object to stderr and remove partial artifacts;
//   - exit codes: 0 ok, 2 validation/parse, 3 convergence, 4 I/O.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xwf/baselines.hpp"
#include "xwf/csv.hpp"
#include "xwf/error.hpp"
#include "xwf/features.hpp"
#include "xwf/gam.hpp"
#include "xwf/inference.hpp"
#include "xwf/marginal.hpp"
#include "xwf/rng.hpp"
#include "xwf/search.hpp"
#include "xwf/simulate.hpp"
#include "xwf/trajectory.hpp"

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Artifact bookkeeping: every output path is registered so a failing run can
// delete what it started.

std::vector<std::string> g_artifacts;

std::string artifact(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::string path = (fs::path(dir) / name).string();
  g_artifacts.push_back(path);
  return path;
}

void remove_artifacts() {
  for (const auto& p : g_artifacts) {
    std::error_code ec;
    fs::remove(p, ec);
  }
}

// ---------------------------------------------------------------------------
// Resolved configuration, hashed so artifacts carry their provenance. Output
// locations stay out of the hash; two runs that differ only in where they
// write produce identical bytes.

class Config {
 public:
  void set(const std::string& key, const std::string& value) {
    kv_[key] = value;
  }
  void set(const std::string& key, double value) {
    kv_[key] = xwf::format_double(value);
  }
  void set(const std::string& key, int value) {
    kv_[key] = std::to_string(value);
  }
  void set(const std::string& key, std::uint64_t value) {
    kv_[key] = std::to_string(value);
  }
  void set(const std::string& key, bool value) {
    kv_[key] = value ? "true" : "false";
  }
  void set(const std::string& key, const std::vector<double>& values) {
    std::string joined;
    for (size_t i = 0; i < values.size(); ++i) {
      if (i) joined += ';';
      joined += xwf::format_double(values[i]);
    }
    kv_[key] = joined;
  }

  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
      }
    };
    for (const auto& [k, v] : kv_) {
      mix(k);
      mix("=");
      mix(v);
      mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }

  std::string header(std::optional<std::uint64_t> seed = std::nullopt) const {
    std::string out = "config=" + hash();
    if (seed) out += " seed=" + std::to_string(*seed);
    return out;
  }

 private:
  std::map<std::string, std::string> kv_;
};

void emit_error_json(const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

int exit_code(xwf::ErrorKind kind) {
  switch (kind) {
    case xwf::ErrorKind::convergence:
      return 3;
    case xwf::ErrorKind::io:
      return 4;
    default:
      return 2;
  }
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw xwf::Error(xwf::ErrorKind::io, "cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw xwf::Error(xwf::ErrorKind::io, "write failed for " + path);
}

// ---------------------------------------------------------------------------
// Shared option blocks.

struct DataArgs {
  std::string traj_path;
  std::string table_path;
  bool clean = false;
  xwf::CleaningPolicy policy;
  double target_dt = 30.0;
};

void add_data_options(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--traj", d.traj_path,
                  "trajectory CSV: subject_id,t_seconds,value")
      ->required();
  cmd->add_option("--table", d.table_path,
                  "subject table CSV: subject_id,y,z1,...")
      ->required();
  cmd->add_flag("--clean", d.clean,
                "apply the cleaning policy, then fill gaps at --target-dt");
  cmd->add_option("--value-min", d.policy.value_min,
                  "cleaning: smallest plausible value");
  cmd->add_option("--value-max", d.policy.value_max,
                  "cleaning: largest plausible value");
  cmd->add_option("--max-gap", d.policy.max_gap,
                  "cleaning: reject subjects with a larger gap (seconds)");
  cmd->add_option("--min-duration", d.policy.min_duration,
                  "cleaning: reject shorter records (seconds)");
  cmd->add_option("--target-dt", d.target_dt,
                  "gap-fill spacing after cleaning (seconds)");
}

void config_of_data(Config& c, const DataArgs& d) {
  c.set("traj", d.traj_path);
  c.set("table", d.table_path);
  c.set("clean", d.clean);
  if (d.clean) {
    c.set("value_min", d.policy.value_min);
    c.set("value_max", d.policy.value_max);
    c.set("max_gap", d.policy.max_gap);
    c.set("min_duration", d.policy.min_duration);
    c.set("target_dt", d.target_dt);
  }
}

xwf::Dataset load_input(const DataArgs& d, const std::string& out_dir,
                        const std::string& header) {
  xwf::Dataset data = xwf::load_dataset(d.traj_path, d.table_path);
  if (d.clean) {
    std::vector<xwf::CleaningReportRow> report;
    data = xwf::apply_cleaning(data, d.policy, d.target_dt, &report);
    xwf::write_cleaning_report(artifact(out_dir, "cleaning_report.csv"),
                               report, header);
  }
  return data;
}

struct GamArgs {
  int basis_size = 8;
  int gcv_cycles = 3;
};

void add_gam_options(CLI::App* cmd, GamArgs& g) {
  cmd->add_option("--basis-size", g.basis_size,
                  "spline basis functions per smooth term")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--gcv-cycles", g.gcv_cycles,
                  "smoothing re-selection rounds per fit")
      ->check(CLI::PositiveNumber);
}

xwf::GamSpec spec_of(const GamArgs& g) {
  xwf::GamSpec spec;
  spec.basis_size = g.basis_size;
  spec.gcv_cycles = g.gcv_cycles;
  return spec;
}

void config_of_gam(Config& c, const GamArgs& g) {
  c.set("basis_size", g.basis_size);
  c.set("gcv_cycles", g.gcv_cycles);
}

xwf::WeightParams weights_from(const std::vector<double>& left,
                               const std::vector<double>& right) {
  auto fill = [](const std::vector<double>& src, xwf::Side side,
                 xwf::WeightParams& p) {
    if (src.size() != 1 && src.size() != xwf::kNumLocalFeatures) {
      throw xwf::Error(xwf::ErrorKind::validation,
                       "weights: give one value or one per local feature");
    }
    for (int j = 0; j < xwf::kNumLocalFeatures; ++j) {
      p.at(j, side) = src.size() == 1 ? src[0] : src[static_cast<size_t>(j)];
    }
  };
  xwf::WeightParams params = xwf::WeightParams::defaults();
  fill(left, xwf::Side::left, params);
  fill(right, xwf::Side::right, params);
  params.validate();
  return params;
}

void write_fit_table(const xwf::GamFit& fit, const std::string& path,
                     const std::string& header) {
  xwf::CsvWriter w(path);
  w.comment(header);
  w.row({"term", "kind", "lambda", "edf", "coef", "se", "p_value"});
  for (const auto& st : fit.smooth_terms) {
    w.row({st.label, "smooth", xwf::format_double(st.lambda),
           xwf::format_double(st.edf), "", "",
           xwf::format_double(st.pvalue)});
  }
  for (const auto& lt : fit.linear_terms) {
    w.row({lt.label, "linear", "", "", xwf::format_double(lt.coef),
           xwf::format_double(lt.se), xwf::format_double(lt.pvalue)});
  }
  w.close();
}

void write_weights(const xwf::WeightParams& params, const std::string& path,
                   const std::string& header) {
  xwf::CsvWriter w(path);
  w.comment(header);
  w.row({"term", "feature", "side", "b"});
  for (xwf::Side side : {xwf::Side::left, xwf::Side::right}) {
    for (int j = 0; j < xwf::kNumLocalFeatures; ++j) {
      w.row({xwf::feature_label(j, side), std::to_string(j + 1),
             xwf::to_string(side), xwf::format_double(params.at(j, side))});
    }
  }
  w.close();
}

void write_fit_artifacts(const xwf::GamFit& fit, const std::string& out_dir,
                         const std::string& header) {
  write_fit_table(fit, artifact(out_dir, "fit.csv"), header);
  xwf::save_fit_json(fit, artifact(out_dir, "fit.json"), header);
  xwf::save_smooth_grids(fit, artifact(out_dir, "smooths.csv"), 100, header);
}

// ---------------------------------------------------------------------------
// simulate-freq / simulate-ar

struct SimFreqArgs {
  xwf::FreqSimConfig cfg;
  std::string out;
  bool latents = false;
};

void run_simulate_freq(const SimFreqArgs& a) {
  Config c;
  c.set("command", "simulate-freq");
  c.set("n", a.cfg.n);
  c.set("n_i", a.cfg.n_i);
  c.set("q", a.cfg.q);
  c.set("seed", a.cfg.seed);
  std::string header = c.header(a.cfg.seed);

  xwf::FreqSimLatents lat;
  xwf::Dataset data = xwf::frequency_sim(a.cfg, &lat);
  xwf::save_dataset(data, artifact(a.out, "trajectories.csv"),
                    artifact(a.out, "table.csv"), header);
  if (a.latents) {
    xwf::save_latents(data, lat, artifact(a.out, "latents.csv"), header);
  }
}

struct SimArArgs {
  xwf::ArSimConfig cfg;
  std::string out;
  bool latents = false;
};

void run_simulate_ar(const SimArArgs& a) {
  Config c;
  c.set("command", "simulate-ar");
  c.set("n", a.cfg.n);
  c.set("n_i", a.cfg.n_i);
  c.set("q", a.cfg.q);
  c.set("var_lo", a.cfg.var_lo);
  c.set("var_hi", a.cfg.var_hi);
  c.set("persistence_threshold", a.cfg.persistence_threshold);
  c.set("exceedance_level", a.cfg.exceedance_level);
  c.set("floor_probability", a.cfg.floor_probability);
  c.set("seed", a.cfg.seed);
  std::string header = c.header(a.cfg.seed);

  xwf::ArSimLatents lat;
  xwf::Dataset data = xwf::ar_sim(a.cfg, &lat);
  xwf::save_dataset(data, artifact(a.out, "trajectories.csv"),
                    artifact(a.out, "table.csv"), header);
  if (a.latents) {
    xwf::save_latents(data, lat, artifact(a.out, "latents.csv"), header);
  }
}

// ---------------------------------------------------------------------------
// extract: marginal distribution + feature matrix at fixed weight values.

struct ExtractArgs {
  DataArgs data;
  std::string out;
  int grid_size = 1024;
  double bandwidth = 0.0;
  std::vector<double> b_left{0.25};
  std::vector<double> b_right{0.75};
};

void run_extract(const ExtractArgs& a, int threads) {
  Config c;
  c.set("command", "extract");
  config_of_data(c, a.data);
  c.set("grid_size", a.grid_size);
  c.set("bandwidth", a.bandwidth);
  c.set("b_left", a.b_left);
  c.set("b_right", a.b_right);
  std::string header = c.header();

  xwf::Dataset data = load_input(a.data, a.out, header);
  xwf::MarginalModel marginal =
      xwf::fit_marginal(data.trajectories, {a.grid_size, a.bandwidth});
  xwf::save_marginal(marginal, artifact(a.out, "marginal.csv"), header);

  xwf::WeightParams params = weights_from(a.b_left, a.b_right);
  auto quads = xwf::build_quadratures(data.trajectories, marginal, threads);
  std::vector<xwf::XwfFeatures> rows;
  rows.reserve(quads.size());
  for (const auto& q : quads) rows.push_back(q.features(params));
  xwf::save_features(rows, artifact(a.out, "features.csv"), header);
}

// ---------------------------------------------------------------------------
// fit-xwf: weight search plus the final additive fit.

struct FitXwfArgs {
  DataArgs data;
  std::string out;
  int grid_size = 1024;
  double bandwidth = 0.0;
  int levels = 3;
  GamArgs gam;
};

void run_fit_xwf(const FitXwfArgs& a, int threads) {
  Config c;
  c.set("command", "fit-xwf");
  config_of_data(c, a.data);
  c.set("grid_size", a.grid_size);
  c.set("bandwidth", a.bandwidth);
  c.set("levels", a.levels);
  config_of_gam(c, a.gam);
  std::string header = c.header();

  xwf::Dataset data = load_input(a.data, a.out, header);
  xwf::MarginalModel marginal =
      xwf::fit_marginal(data.trajectories, {a.grid_size, a.bandwidth});
  xwf::SearchOptions options;
  options.levels = a.levels;
  options.gam = spec_of(a.gam);
  xwf::SearchResult res =
      xwf::adaptive_grid_search(data, marginal, options, threads);

  write_weights(res.params, artifact(a.out, "weights.csv"), header);
  xwf::save_search_trace(res.trace, artifact(a.out, "search_trace.csv"),
                         header);
  write_fit_artifacts(res.fit, a.out, header);
}

// ---------------------------------------------------------------------------
// fit-arv / fit-spectrum baselines.

struct FitArvArgs {
  DataArgs data;
  std::string out;
  GamArgs gam;
};

void run_fit_arv(const FitArvArgs& a) {
  Config c;
  c.set("command", "fit-arv");
  config_of_data(c, a.data);
  config_of_gam(c, a.gam);
  std::string header = c.header();

  xwf::Dataset data = load_input(a.data, a.out, header);
  Eigen::VectorXd values = xwf::arv_all(data.trajectories);
  {
    xwf::CsvWriter w(artifact(a.out, "arv.csv"));
    w.comment(header);
    w.row({"subject_id", "arv"});
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      w.row({data.trajectories[static_cast<size_t>(i)].subject_id,
             xwf::format_double(values(i))});
    }
    w.close();
  }
  xwf::GamFit fit =
      xwf::fit_baseline_gam(values, {"arv"}, data, spec_of(a.gam));
  write_fit_artifacts(fit, a.out, header);
}

struct FitSpectrumArgs {
  DataArgs data;
  std::string out;
  xwf::SpectrumOptions spectrum;
  xwf::PcaOptions pca;
  GamArgs gam;
};

void add_spectrum_options(CLI::App* cmd, xwf::SpectrumOptions& s,
                          xwf::PcaOptions& p) {
  cmd->add_option("--common-dt", s.common_dt,
                  "uniform resampling step, seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-bins", s.max_bins, "shared frequency-grid length")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--components", p.components, "principal components kept")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--screen-threshold", p.screen_threshold,
                  "score-statistic magnitude needed to keep a frequency");
  cmd->add_flag("!--no-log-power", p.log_power,
                "screen and decompose raw power instead of log(1 + power)");
}

void config_of_spectrum(Config& c, const xwf::SpectrumOptions& s,
                        const xwf::PcaOptions& p) {
  c.set("common_dt", s.common_dt);
  c.set("max_bins", s.max_bins);
  c.set("components", p.components);
  c.set("screen_threshold", p.screen_threshold);
  c.set("log_power", p.log_power);
}

std::vector<std::string> pc_labels(int k) {
  std::vector<std::string> labels;
  for (int j = 1; j <= k; ++j) labels.push_back("pc" + std::to_string(j));
  return labels;
}

void run_fit_spectrum(const FitSpectrumArgs& a) {
  Config c;
  c.set("command", "fit-spectrum");
  config_of_data(c, a.data);
  config_of_spectrum(c, a.spectrum, a.pca);
  config_of_gam(c, a.gam);
  std::string header = c.header();

  xwf::Dataset data = load_input(a.data, a.out, header);
  xwf::SpectrumFeatures spectra =
      xwf::compute_spectra(data.trajectories, a.spectrum);
  xwf::save_spectra(spectra, artifact(a.out, "spectra.csv"), header);

  xwf::SupervisedPcs pcs =
      xwf::supervised_pca(spectra, data.outcomes, a.pca);
  xwf::save_pc_loadings(pcs, spectra.freq_grid,
                        artifact(a.out, "pc_loadings.csv"), header);
  {
    xwf::CsvWriter w(artifact(a.out, "pcs.csv"));
    w.comment(header);
    std::vector<std::string> head{"subject_id"};
    for (const auto& l : pc_labels(a.pca.components)) head.push_back(l);
    w.row(head);
    for (Eigen::Index i = 0; i < pcs.scores.rows(); ++i) {
      std::vector<std::string> row{
          data.trajectories[static_cast<size_t>(i)].subject_id};
      for (Eigen::Index j = 0; j < pcs.scores.cols(); ++j) {
        row.push_back(xwf::format_double(pcs.scores(i, j)));
      }
      w.row(row);
    }
    w.close();
  }
  xwf::GamFit fit = xwf::fit_baseline_gam(
      pcs.scores, pc_labels(a.pca.components), data, spec_of(a.gam));
  write_fit_artifacts(fit, a.out, header);
}

// ---------------------------------------------------------------------------
// permtest: randomization inference for one pipeline.

struct PermArgs {
  DataArgs data;
  std::string out;
  std::string pipeline = "xwf";
  int replicates = 99;
  std::uint64_t seed = 0;
  int grid_size = 1024;
  double bandwidth = 0.0;
  int levels = 3;
  xwf::SpectrumOptions spectrum;
  xwf::PcaOptions pca;
  GamArgs gam;
};

void run_permtest(const PermArgs& a, int threads) {
  Config c;
  c.set("command", "permtest");
  config_of_data(c, a.data);
  c.set("pipeline", a.pipeline);
  c.set("replicates", a.replicates);
  c.set("seed", a.seed);
  config_of_gam(c, a.gam);
  if (a.pipeline == "xwf") {
    c.set("grid_size", a.grid_size);
    c.set("bandwidth", a.bandwidth);
    c.set("levels", a.levels);
  } else if (a.pipeline == "spectrum") {
    config_of_spectrum(c, a.spectrum, a.pca);
  }
  std::string header = c.header(a.seed);

  xwf::Dataset data = load_input(a.data, a.out, header);
  xwf::GamSpec spec = spec_of(a.gam);

  xwf::Pipeline pipeline;
  xwf::MarginalModel marginal;
  std::vector<xwf::SubjectQuadrature> quads;
  std::optional<xwf::WeightParams> observed_params;
  if (a.pipeline == "xwf") {
    marginal =
        xwf::fit_marginal(data.trajectories, {a.grid_size, a.bandwidth});
    quads = xwf::build_quadratures(data.trajectories, marginal, threads);
    xwf::SearchOptions options;
    options.levels = a.levels;
    options.gam = spec;
    pipeline = xwf::xwf_pipeline(quads, data.covariates, options);
    xwf::SearchResult obs = xwf::adaptive_grid_search(
        xwf::xwf_feature_source(quads), data.covariates, data.outcomes,
        options);
    observed_params = obs.params;
    write_weights(obs.params, artifact(a.out, "weights.csv"), header);
  } else if (a.pipeline == "arv") {
    pipeline =
        xwf::arv_pipeline(xwf::arv_all(data.trajectories), data.covariates,
                          spec);
  } else if (a.pipeline == "spectrum") {
    xwf::SpectrumFeatures spectra =
        xwf::compute_spectra(data.trajectories, a.spectrum);
    pipeline = xwf::spectrum_pipeline(spectra, data.covariates, a.pca, spec);
  } else {
    throw xwf::Error(xwf::ErrorKind::validation,
                     "permtest: unknown pipeline " + a.pipeline);
  }

  xwf::PermutationResult res =
      xwf::randomization_test(pipeline, data.outcomes, a.replicates, a.seed);

  {
    xwf::CsvWriter w(artifact(a.out, "pvalues.csv"));
    w.comment(header);
    w.row({"method", "parameter", "b", "p_value"});
    for (size_t t = 0; t < res.term_labels.size(); ++t) {
      std::string b;
      if (observed_params) {
        for (xwf::Side side : {xwf::Side::left, xwf::Side::right}) {
          for (int j = 0; j < xwf::kNumLocalFeatures; ++j) {
            if (xwf::feature_label(j, side) == res.term_labels[t]) {
              b = xwf::format_double(observed_params->at(j, side));
            }
          }
        }
      }
      w.row({a.pipeline, res.term_labels[t], b,
             xwf::format_double(
                 res.calibrated(static_cast<Eigen::Index>(t)))});
    }
    w.close();
  }
  xwf::save_permutation_json(res, artifact(a.out, "pvalues.json"), header);
}

// ---------------------------------------------------------------------------
// predict-study: repeated stratified splits, three models, AUC per split.

struct PredictArgs {
  DataArgs data;
  std::string out;
  int splits = 10;
  int test_pos = 40;
  int test_neg = 360;
  std::uint64_t seed = 0;
  int grid_size = 1024;
  double bandwidth = 0.0;
  int levels = 3;
  xwf::SpectrumOptions spectrum;
  xwf::PcaOptions pca;
  GamArgs gam;
};

void run_predict_study(const PredictArgs& a, int threads) {
  Config c;
  c.set("command", "predict-study");
  config_of_data(c, a.data);
  c.set("splits", a.splits);
  c.set("test_pos", a.test_pos);
  c.set("test_neg", a.test_neg);
  c.set("seed", a.seed);
  c.set("grid_size", a.grid_size);
  c.set("bandwidth", a.bandwidth);
  c.set("levels", a.levels);
  config_of_spectrum(c, a.spectrum, a.pca);
  config_of_gam(c, a.gam);
  std::string header = c.header(a.seed);

  xwf::Dataset data = load_input(a.data, a.out, header);
  xwf::GamSpec spec = spec_of(a.gam);
  std::vector<xwf::AucRow> rows;
  const std::vector<std::string> models{"xwf", "arv", "spectrum"};

  for (int s = 0; s < a.splits; ++s) {
    std::uint64_t split_seed =
        xwf::RngStream(a.seed, static_cast<std::uint64_t>(s + 1)).bits();
    auto [train, test] =
        xwf::stratified_split(data, a.test_pos, a.test_neg, split_seed);

    // Weighted features: the marginal comes from the training subjects only,
    // and test subjects are scored under it.
    xwf::MarginalModel marginal =
        xwf::fit_marginal(train.trajectories, {a.grid_size, a.bandwidth});
    xwf::SearchOptions options;
    options.levels = a.levels;
    options.gam = spec;
    xwf::SearchResult res =
        xwf::adaptive_grid_search(train, marginal, options, threads);
    auto test_quads =
        xwf::build_quadratures(test.trajectories, marginal, threads);
    Eigen::MatrixXd test_features = xwf::xwf_matrix(test_quads, res.params);
    double auc_xwf = xwf::auc(
        xwf::predict_all(res.fit, test_features, test.covariates),
        test.outcomes);

    xwf::GamFit arv_fit = xwf::fit_baseline_gam(
        xwf::arv_all(train.trajectories), {"arv"}, train, spec);
    Eigen::MatrixXd test_arv = xwf::arv_all(test.trajectories);
    double auc_arv = xwf::auc(
        xwf::predict_all(arv_fit, test_arv, test.covariates), test.outcomes);

    xwf::SpectrumFeatures spectra =
        xwf::compute_spectra(train.trajectories, a.spectrum);
    xwf::SupervisedPcs pcs =
        xwf::supervised_pca(spectra, train.outcomes, a.pca);
    xwf::GamFit pc_fit = xwf::fit_baseline_gam(
        pcs.scores, pc_labels(a.pca.components), train, spec);
    Eigen::MatrixXd test_scores(static_cast<Eigen::Index>(test.size()),
                                pcs.scores.cols());
    for (size_t i = 0; i < test.size(); ++i) {
      test_scores.row(static_cast<Eigen::Index>(i)) =
          pcs.project(xwf::power_spectrum(test.trajectories[i],
                                          a.spectrum.common_dt,
                                          a.spectrum.max_bins))
              .transpose();
    }
    double auc_pc = xwf::auc(
        xwf::predict_all(pc_fit, test_scores, test.covariates),
        test.outcomes);

    rows.push_back({s + 1, "xwf", auc_xwf});
    rows.push_back({s + 1, "arv", auc_arv});
    rows.push_back({s + 1, "spectrum", auc_pc});
  }

  xwf::save_auc_report(rows, artifact(a.out, "auc.csv"), header);

  nlohmann::json j;
  j["note"] = header;
  j["seed"] = a.seed;
  j["splits"] = a.splits;
  nlohmann::json by_model;
  for (const auto& m : models) {
    std::vector<double> values;
    for (const auto& r : rows) {
      if (r.model == m) values.push_back(r.value);
    }
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    by_model[m] = {{"mean", mean}, {"per_split", values}};
  }
  j["models"] = by_model;
  nlohmann::json diffs;
  for (size_t i = 0; i < models.size(); ++i) {
    for (size_t k = i + 1; k < models.size(); ++k) {
      double total = 0;
      int count = 0;
      for (int s = 1; s <= a.splits; ++s) {
        double vi = 0, vk = 0;
        for (const auto& r : rows) {
          if (r.split != s) continue;
          if (r.model == models[i]) vi = r.value;
          if (r.model == models[k]) vk = r.value;
        }
        total += std::abs(vi - vk);
        ++count;
      }
      diffs[models[i] + "_vs_" + models[k]] = total / count;
    }
  }
  j["pairwise_mean_abs_diff"] = diffs;
  write_json(j, artifact(a.out, "auc.json"));
}

// ---------------------------------------------------------------------------
// report: collate a run directory into one JSON document.

struct ReportArgs {
  std::string dir;
  std::string out;
};

nlohmann::json csv_as_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw xwf::Error(xwf::ErrorKind::io, "cannot read " + path);
  nlohmann::json j;
  j["comments"] = nlohmann::json::array();
  j["rows"] = nlohmann::json::array();
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string text = line.substr(1);
      if (!text.empty() && text.front() == ' ') text.erase(0, 1);
      j["comments"].push_back(text);
      continue;
    }
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!have_header) {
      j["header"] = fields;
      have_header = true;
    } else {
      j["rows"].push_back(fields);
    }
  }
  return j;
}

void run_report(const ReportArgs& a) {
  Config c;
  c.set("command", "report");
  c.set("dir", a.dir);
  std::string out_path =
      a.out.empty() ? (fs::path(a.dir) / "report.json").string() : a.out;

  if (!fs::is_directory(a.dir)) {
    throw xwf::Error(xwf::ErrorKind::io, "not a directory: " + a.dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.dir)) {
    if (!entry.is_regular_file()) continue;
    if (fs::absolute(entry.path()) == fs::absolute(out_path)) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".csv" || ext == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  nlohmann::json j;
  j["note"] = c.header();
  nlohmann::json artifacts = nlohmann::json::object();
  for (const auto& f : files) {
    std::string name = f.filename().string();
    if (f.extension() == ".json") {
      std::ifstream in(f);
      if (!in) throw xwf::Error(xwf::ErrorKind::io, "cannot read " + name);
      try {
        artifacts[name] = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw xwf::Error(xwf::ErrorKind::parse,
                         name + ": " + std::string(e.what()));
      }
    } else {
      artifacts[name] = csv_as_json(f.string());
    }
  }
  j["artifacts"] = artifacts;

  g_artifacts.push_back(out_path);
  write_json(j, out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"extrema-weighted features for functional predictors"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "flat key=value file; command-line options take precedence");
  int threads = 1;
  app.add_option("--threads", threads, "worker budget hint for parallel steps")
      ->check(CLI::PositiveNumber);

  SimFreqArgs sim_freq;
  auto* freq = app.add_subcommand(
      "simulate-freq", "generate the sinusoid-plus-level dataset");
  freq->add_option("--n", sim_freq.cfg.n, "subjects")
      ->check(CLI::PositiveNumber);
  freq->add_option("--samples", sim_freq.cfg.n_i, "samples per subject")
      ->check(CLI::PositiveNumber);
  freq->add_option("--covariates", sim_freq.cfg.q, "extra normal covariates")
      ->check(CLI::NonNegativeNumber);
  freq->add_option("--seed", sim_freq.cfg.seed, "generator seed")->required();
  freq->add_flag("--latents", sim_freq.latents,
                 "also write the latent variables (diagnostics only)");
  freq->add_option("--out", sim_freq.out, "output directory")->required();
  freq->callback([&] { run_simulate_freq(sim_freq); });

  SimArArgs sim_ar;
  auto* ar = app.add_subcommand("simulate-ar",
                                "generate the autoregressive dataset");
  ar->add_option("--n", sim_ar.cfg.n, "subjects")->check(CLI::PositiveNumber);
  ar->add_option("--samples", sim_ar.cfg.n_i, "samples per subject")
      ->check(CLI::PositiveNumber);
  ar->add_option("--covariates", sim_ar.cfg.q, "extra normal covariates")
      ->check(CLI::NonNegativeNumber);
  ar->add_option("--var-lo", sim_ar.cfg.var_lo, "marginal variance lower bound");
  ar->add_option("--var-hi", sim_ar.cfg.var_hi, "marginal variance upper bound");
  ar->add_option("--persistence-threshold", sim_ar.cfg.persistence_threshold,
                 "persistence needed for outcome risk");
  ar->add_option("--exceedance-level", sim_ar.cfg.exceedance_level,
                 "level whose exceedances drive risk");
  ar->add_option("--floor-probability", sim_ar.cfg.floor_probability,
                 "baseline outcome probability");
  ar->add_option("--seed", sim_ar.cfg.seed, "generator seed")->required();
  ar->add_flag("--latents", sim_ar.latents,
               "also write the latent variables (diagnostics only)");
  ar->add_option("--out", sim_ar.out, "output directory")->required();
  ar->callback([&] { run_simulate_ar(sim_ar); });

  ExtractArgs extract;
  auto* ext = app.add_subcommand(
      "extract", "marginal distribution and weighted features at fixed b");
  add_data_options(ext, extract.data);
  ext->add_option("--grid-size", extract.grid_size, "marginal grid length")
      ->check(CLI::PositiveNumber);
  ext->add_option("--bandwidth", extract.bandwidth,
                  "density bandwidth; 0 selects automatically");
  ext->add_option("--b-left", extract.b_left,
                  "left tail weight(s): one value or one per feature")
      ->expected(1, xwf::kNumLocalFeatures);
  ext->add_option("--b-right", extract.b_right,
                  "right tail weight(s): one value or one per feature")
      ->expected(1, xwf::kNumLocalFeatures);
  ext->add_option("--out", extract.out, "output directory")->required();
  ext->callback([&] { run_extract(extract, threads); });

  FitXwfArgs fit_xwf;
  auto* fx = app.add_subcommand("fit-xwf",
                                "adaptive weight search plus additive fit");
  add_data_options(fx, fit_xwf.data);
  fx->add_option("--grid-size", fit_xwf.grid_size, "marginal grid length")
      ->check(CLI::PositiveNumber);
  fx->add_option("--bandwidth", fit_xwf.bandwidth,
                 "density bandwidth; 0 selects automatically");
  fx->add_option("--levels", fit_xwf.levels, "search refinement levels")
      ->check(CLI::PositiveNumber);
  add_gam_options(fx, fit_xwf.gam);
  fx->add_option("--out", fit_xwf.out, "output directory")->required();
  fx->callback([&] { run_fit_xwf(fit_xwf, threads); });

  FitArvArgs fit_arv;
  auto* fa = app.add_subcommand("fit-arv", "average-variability baseline fit");
  add_data_options(fa, fit_arv.data);
  add_gam_options(fa, fit_arv.gam);
  fa->add_option("--out", fit_arv.out, "output directory")->required();
  fa->callback([&] { run_fit_arv(fit_arv); });

  FitSpectrumArgs fit_spec;
  auto* fsmd = app.add_subcommand(
      "fit-spectrum", "spectral principal-component baseline fit");
  add_data_options(fsmd, fit_spec.data);
  add_spectrum_options(fsmd, fit_spec.spectrum, fit_spec.pca);
  add_gam_options(fsmd, fit_spec.gam);
  fsmd->add_option("--out", fit_spec.out, "output directory")->required();
  fsmd->callback([&] { run_fit_spectrum(fit_spec); });

  PermArgs perm;
  auto* pt = app.add_subcommand("permtest",
                                "randomization test for one pipeline");
  add_data_options(pt, perm.data);
  pt->add_option("--pipeline", perm.pipeline, "xwf, arv, or spectrum")
      ->check(CLI::IsMember({"xwf", "arv", "spectrum"}));
  pt->add_option("--replicates", perm.replicates, "permutation replicates")
      ->check(CLI::PositiveNumber);
  pt->add_option("--seed", perm.seed, "permutation seed")->required();
  pt->add_option("--grid-size", perm.grid_size, "marginal grid length")
      ->check(CLI::PositiveNumber);
  pt->add_option("--bandwidth", perm.bandwidth,
                 "density bandwidth; 0 selects automatically");
  pt->add_option("--levels", perm.levels, "search refinement levels")
      ->check(CLI::PositiveNumber);
  add_spectrum_options(pt, perm.spectrum, perm.pca);
  add_gam_options(pt, perm.gam);
  pt->add_option("--out", perm.out, "output directory")->required();
  pt->callback([&] { run_permtest(perm, threads); });

  PredictArgs pred;
  auto* ps = app.add_subcommand(
      "predict-study", "held-out AUC comparison across repeated splits");
  add_data_options(ps, pred.data);
  ps->add_option("--splits", pred.splits, "number of stratified splits")
      ->check(CLI::PositiveNumber);
  ps->add_option("--test-pos", pred.test_pos, "positive test subjects")
      ->check(CLI::PositiveNumber);
  ps->add_option("--test-neg", pred.test_neg, "negative test subjects")
      ->check(CLI::PositiveNumber);
  ps->add_option("--seed", pred.seed, "split seed")->required();
  ps->add_option("--grid-size", pred.grid_size, "marginal grid length")
      ->check(CLI::PositiveNumber);
  ps->add_option("--bandwidth", pred.bandwidth,
                 "density bandwidth; 0 selects automatically");
  ps->add_option("--levels", pred.levels, "search refinement levels")
      ->check(CLI::PositiveNumber);
  add_spectrum_options(ps, pred.spectrum, pred.pca);
  add_gam_options(ps, pred.gam);
  ps->add_option("--out", pred.out, "output directory")->required();
  ps->callback([&] { run_predict_study(pred, threads); });

  ReportArgs report;
  auto* rp = app.add_subcommand("report",
                                "collate a run directory into one JSON");
  rp->add_option("--dir", report.dir, "directory of artifacts")->required();
  rp->add_option("--out", report.out,
                 "output path (default: <dir>/report.json)");
  rp->callback([&] { run_report(report); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  } catch (const xwf::Error& e) {
    emit_error_json(xwf::to_string(e.kind()), e.what());
    remove_artifacts();
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    emit_error_json("parse", e.what());
    remove_artifacts();
    return 2;
  } catch (const fs::filesystem_error& e) {
    emit_error_json("io", e.what());
    remove_artifacts();
    return 4;
  } catch (const std::exception& e) {
    emit_error_json("internal", e.what());
    remove_artifacts();
    return 4;
  }
}
