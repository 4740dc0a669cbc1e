// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the exit code is the number of failures. Criteria 4, 5, and 11 write the
// tables they evaluate under ./acceptance_artifacts/.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <xwf/baselines.hpp>
#include <xwf/csv.hpp>
#include <xwf/features.hpp>
#include <xwf/gam.hpp>
#include <xwf/inference.hpp>
#include <xwf/marginal.hpp>
#include <xwf/rng.hpp>
#include <xwf/search.hpp>
#include <xwf/simulate.hpp>
#include <xwf/trajectory.hpp>

namespace fs = std::filesystem;
using namespace xwf;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: weight-function closed forms.

Outcome criterion1() {
  auto t0 = std::chrono::steady_clock::now();
  RngStream rng(1001, 0, 0);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    double bl = 1e-9 + (0.5 - 1e-9) * rng.uniform();
    double br = 0.5 + (0.5 - 1e-9) * rng.uniform();
    double expect_l = u <= bl ? 1.0 : (1.0 - u) / (1.0 - bl);
    double expect_r = u >= br ? 1.0 : u / br;
    worst = std::max(worst, std::abs(omega_left(u, bl) - expect_l));
    worst = std::max(worst, std::abs(omega_right(u, br) - expect_r));
  }
  // Boundary points.
  worst = std::max(worst, std::abs(omega_left(0.3, 0.3) - 1.0));
  worst = std::max(worst, std::abs(omega_right(0.7, 0.7) - 1.0));
  worst = std::max(worst, std::abs(omega_left(1.0, 0.25)));
  worst = std::max(worst, std::abs(omega_right(0.0, 0.75)));
  double secs = seconds_since(t0);
  bool pass = worst <= 1e-12 && secs < 1.0;
  return {pass, "max |error| " + fmt("%.2e", worst) + " over 10^4 pairs, " +
                    fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// Criterion 2: quadrature against a 1 s fine-grid oracle.

struct Harmonic {
  double amp, freq, phase;
};

Outcome criterion2() {
  auto t0 = std::chrono::steady_clock::now();
  RngStream rng(2002, 0, 0);
  const int n = 50;
  const double duration = 7170.0;  // both grids end exactly here
  std::vector<std::vector<Harmonic>> specs(n);
  std::vector<double> levels(n);
  std::vector<Trajectory> coarse(n);
  for (int i = 0; i < n; ++i) {
    levels[i] = rng.uniform(80.0, 120.0);
    for (int h = 0; h < 4; ++h) {
      specs[i].push_back({rng.uniform(0.5, 2.0),
                          rng.uniform(1.0 / 7200.0, 1.0 / 3600.0),
                          rng.uniform(0.0, 2.0 * 3.14159265358979323846)});
    }
    Trajectory tr;
    tr.subject_id = "c" + std::to_string(i + 1);
    for (double t = 0; t <= duration + 0.5; t += 30.0) {
      double v = levels[i];
      for (const auto& h : specs[i])
        v += h.amp * std::sin(2 * 3.14159265358979323846 * h.freq * t +
                              h.phase);
      tr.times.push_back(t);
      tr.values.push_back(v);
    }
    coarse[i] = std::move(tr);
  }
  MarginalModel marginal = fit_marginal(coarse, {});
  WeightParams params = WeightParams::defaults();

  double worst_rel = 0;
  for (int i = 0; i < n; ++i) {
    XwfFeatures lib = compute_xwf(coarse[i], marginal, params);

    // Oracle: plain trapezoid at 1 s with the analytic derivative and the
    // same fitted marginal CDF.
    std::array<double, kNumLocalFeatures> ol{}, orr{};
    int m = static_cast<int>(duration) + 1;
    double prev_gl[4] = {0, 0, 0, 0}, prev_gr[4] = {0, 0, 0, 0};
    for (int k = 0; k < m; ++k) {
      double t = k;
      double v = levels[i], dv = 0;
      for (const auto& h : specs[i]) {
        double arg = 2 * 3.14159265358979323846 * h.freq * t + h.phase;
        v += h.amp * std::sin(arg);
        dv += h.amp * 2 * 3.14159265358979323846 * h.freq * std::cos(arg);
      }
      double u = cdf_eval(marginal, v);
      double psi[4] = {1.0, v, std::max(dv, 0.0), std::max(-dv, 0.0)};
      for (int j = 0; j < 4; ++j) {
        double gl = omega_left(u, params.b_left[static_cast<size_t>(j)]) *
                    psi[j];
        double gr = omega_right(u, params.b_right[static_cast<size_t>(j)]) *
                    psi[j];
        if (k > 0) {
          ol[static_cast<size_t>(j)] += 0.5 * (prev_gl[j] + gl);
          orr[static_cast<size_t>(j)] += 0.5 * (prev_gr[j] + gr);
        }
        prev_gl[j] = gl;
        prev_gr[j] = gr;
      }
    }
    for (int j = 0; j < 4; ++j) {
      ol[static_cast<size_t>(j)] /= duration;
      orr[static_cast<size_t>(j)] /= duration;
      double rl = std::abs(lib.w_left[static_cast<size_t>(j)] -
                           ol[static_cast<size_t>(j)]) /
                  std::abs(ol[static_cast<size_t>(j)]);
      double rr = std::abs(lib.w_right[static_cast<size_t>(j)] -
                           orr[static_cast<size_t>(j)]) /
                  std::abs(orr[static_cast<size_t>(j)]);
      worst_rel = std::max({worst_rel, rl, rr});
    }
  }
  double secs = seconds_since(t0);
  bool pass = worst_rel <= 1e-3 && secs < 30.0;
  return {pass, "max relative error " + fmt("%.2e", worst_rel) +
                    " across 50 trajectories x 8 features, " +
                    fmt("%.2f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// Criterion 3: search grid membership and exhaustive optimum on p = 1.

bool on_grid16(double b) {
  double scaled = b * 16.0;
  return std::abs(scaled - std::round(scaled)) < 1e-12;
}

Outcome criterion3() {
  auto t0 = std::chrono::steady_clock::now();
  std::string detail;

  // Grid membership on a full-size search.
  ArSimConfig acfg;
  acfg.n = 300;
  acfg.n_i = 200;
  acfg.q = 2;
  acfg.seed = 33;
  Dataset ar = ar_sim(acfg);
  MarginalModel amarg = fit_marginal(ar.trajectories, {});
  auto aquads = build_quadratures(ar.trajectories, amarg, 1);
  SearchOptions opt;
  opt.levels = 3;
  SearchResult big = adaptive_grid_search(xwf_feature_source(aquads),
                                          ar.covariates, ar.outcomes, opt);
  bool grid_ok = true;
  for (int j = 0; j < kNumLocalFeatures; ++j) {
    double bl = big.params.at(j, Side::left);
    double br = big.params.at(j, Side::right);
    grid_ok = grid_ok && on_grid16(bl) && bl > 0 && bl <= 0.5;
    grid_ok = grid_ok && on_grid16(br) && br >= 0.5 && br < 1.0;
  }

  // p = 1 toy: outcome driven by the right-weighted constant feature at a
  // grid value of b, so the likelihood surface over (b_L, b_R) is smooth.
  FreqSimConfig fcfg;
  fcfg.n = 150;
  fcfg.n_i = 100;
  fcfg.q = 1;
  fcfg.seed = 7;
  Dataset toy = frequency_sim(fcfg);
  MarginalModel tmarg = fit_marginal(toy.trajectories, {});
  auto tquads = build_quadratures(toy.trajectories, tmarg, 1);
  Eigen::VectorXd driver = xwf_column(tquads, 0, Side::right, 0.75);
  double dm = driver.mean();
  double ds = std::sqrt((driver.array() - dm).square().mean());
  RngStream yrng(777, 0, 0);
  for (int i = 0; i < toy.outcomes.size(); ++i) {
    double eta = 4.0 * (driver(i) - dm) / ds;
    toy.outcomes(i) = yrng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
  }

  FeatureSource src;
  src.features = 1;
  src.column = [&tquads](int, Side side, double b) {
    return xwf_column(tquads, 0, side, b);
  };

  // Exhaustive oracle over the full 2^-4 lattice (8 points per side).
  GamSpec spec;
  Eigen::MatrixXd surface(8, 8);
  for (int il = 0; il < 8; ++il) {
    for (int ir = 0; ir < 8; ++ir) {
      double bl = (il + 1) / 16.0;
      double br = (ir + 8) / 16.0;
      Eigen::MatrixXd feats(toy.outcomes.size(), 2);
      feats.col(0) = src.column(0, Side::left, bl);
      feats.col(1) = src.column(0, Side::right, br);
      GamFit f = fit_gam(feats, toy.covariates, toy.outcomes, spec,
                         {"wL1", "wR1"});
      surface(il, ir) = f.log_likelihood;
    }
  }
  // Coordinate-wise unimodality of the oracle surface.
  auto unimodal = [](const Eigen::VectorXd& v) {
    Eigen::Index peak = 0;
    v.maxCoeff(&peak);
    for (Eigen::Index k = 1; k <= peak; ++k)
      if (v(k) < v(k - 1)) return false;
    for (Eigen::Index k = peak + 1; k < v.size(); ++k)
      if (v(k) > v(k - 1)) return false;
    return true;
  };
  bool surface_unimodal = true;
  for (int il = 0; il < 8; ++il)
    surface_unimodal = surface_unimodal &&
                       unimodal(Eigen::VectorXd(surface.row(il).transpose()));
  for (int ir = 0; ir < 8; ++ir)
    surface_unimodal =
        surface_unimodal && unimodal(Eigen::VectorXd(surface.col(ir)));

  SearchOptions topt;
  topt.levels = 3;
  SearchResult res = adaptive_grid_search(src, toy.covariates, toy.outcomes,
                                          topt);
  double grid_max = surface.maxCoeff();
  bool toy_grid_ok = on_grid16(res.params.b_left[0]) &&
                     on_grid16(res.params.b_right[0]);
  bool optimum_ok = res.trace.final_loglik >= grid_max - 1e-9;

  double secs = seconds_since(t0);
  bool pass = grid_ok && toy_grid_ok && optimum_ok && secs < 300.0;
  detail = std::string("2^-4 grid membership ") +
           (grid_ok && toy_grid_ok ? "ok" : "VIOLATED") +
           "; oracle surface unimodal: " +
           (surface_unimodal ? "yes" : "no") + "; search loglik " +
           fmt("%.6f", res.trace.final_loglik) + " vs exhaustive max " +
           fmt("%.6f", grid_max) + ", " + fmt("%.1f", secs) + " s";
  if (!surface_unimodal) {
    // The equality clause is conditional on unimodality; membership alone
    // decides, but record the surface state for the log.
    pass = grid_ok && toy_grid_ok && secs < 300.0;
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------
// Criteria 4/5 shared runner: one simulation seed through all three
// pipelines, tables written per seed.

struct SeedResult {
  double xwf_cal[10] = {};  // wL1..wL4, wR1..wR4, z1, z2
  double arv_cal = 1.0;
  double pc_cal[3] = {1.0, 1.0, 1.0};
  WeightParams chosen = WeightParams::defaults();
};

SeedResult run_sim_seed(bool freq, std::uint64_t seed, const fs::path& dir) {
  Dataset data;
  if (freq) {
    FreqSimConfig cfg;
    cfg.n = 1000;
    cfg.n_i = 500;
    cfg.q = 2;
    cfg.seed = seed;
    data = frequency_sim(cfg);
  } else {
    ArSimConfig cfg;
    cfg.n = 1000;
    cfg.n_i = 500;
    cfg.q = 2;
    cfg.seed = seed;
    data = ar_sim(cfg);
  }
  MarginalModel marginal = fit_marginal(data.trajectories, {});
  auto quads = build_quadratures(data.trajectories, marginal, 1);
  SearchOptions opt;
  opt.levels = 3;

  Pipeline px = xwf_pipeline(quads, data.covariates, opt);
  PermutationResult rx = randomization_test(px, data.outcomes, 99, seed);
  SearchResult obs = adaptive_grid_search(xwf_feature_source(quads),
                                          data.covariates, data.outcomes, opt);

  Pipeline pa = arv_pipeline(arv_all(data.trajectories), data.covariates,
                             opt.gam);
  PermutationResult ra = randomization_test(pa, data.outcomes, 99, seed);

  SpectrumOptions so;
  so.common_dt = 1.0;
  so.max_bins = 250;
  PcaOptions po;
  SpectrumFeatures spectra = compute_spectra(data.trajectories, so);
  Pipeline ps = spectrum_pipeline(spectra, data.covariates, po, opt.gam);
  PermutationResult rs = randomization_test(ps, data.outcomes, 99, seed);

  fs::create_directories(dir);
  CsvWriter w((dir / "pvalues.csv").string());
  w.comment(std::string(freq ? "frequency" : "autoregressive") +
            " simulation, seed " + std::to_string(seed) +
            ", 99 permutations per pipeline");
  w.row({"method", "parameter", "b", "p_value"});
  SeedResult out;
  for (size_t t = 0; t < rx.term_labels.size(); ++t) {
    out.xwf_cal[t] = rx.calibrated(static_cast<Eigen::Index>(t));
    std::string b;
    for (Side side : {Side::left, Side::right}) {
      for (int j = 0; j < kNumLocalFeatures; ++j) {
        if (feature_label(j, side) == rx.term_labels[t])
          b = format_double(obs.params.at(j, side));
      }
    }
    w.row({"xwf", rx.term_labels[t], b, format_double(out.xwf_cal[t])});
  }
  out.arv_cal = ra.calibrated(0);
  w.row({"arv", "arv", "", format_double(out.arv_cal)});
  for (int k = 0; k < 3; ++k) {
    out.pc_cal[k] = rs.calibrated(k);
    w.row({"spectrum", "PC" + std::to_string(k + 1), "",
           format_double(out.pc_cal[k])});
  }
  w.close();
  out.chosen = obs.params;
  return out;
}

Outcome criterion4(std::vector<SeedResult>& store) {
  auto t0 = std::chrono::steady_clock::now();
  int n_r3 = 0, n_arv = 0, n_pc1 = 0;
  std::vector<double> b_r3;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    SeedResult r = run_sim_seed(true, s,
                                fs::path("acceptance_artifacts") / "freq" /
                                    ("seed" + std::to_string(s)));
    store.push_back(r);
    if (r.xwf_cal[6] < 0.05) ++n_r3;
    if (r.arv_cal < 0.05) ++n_arv;
    if (r.pc_cal[0] < 0.05) ++n_pc1;
    b_r3.push_back(r.chosen.at(2, Side::right));
  }
  std::sort(b_r3.begin(), b_r3.end());
  double median_b = 0.5 * (b_r3[4] + b_r3[5]);

  CsvWriter w("acceptance_artifacts/freq/summary.csv");
  w.row({"seed", "b_R3", "p_R3", "p_arv", "p_pc1"});
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const SeedResult& r = store[s - 1];
    w.row({std::to_string(s), format_double(r.chosen.at(2, Side::right)),
           format_double(r.xwf_cal[6]), format_double(r.arv_cal),
           format_double(r.pc_cal[0])});
  }
  w.close();

  double secs = seconds_since(t0);
  bool b_ok = std::abs(median_b - 0.66) <= 0.15;
  bool pass = n_r3 >= 8 && n_arv >= 8 && n_pc1 >= 8 && b_ok && secs < 7200;
  return {pass, "beta_R3 " + std::to_string(n_r3) + "/10 (need 8), ARV " +
                    std::to_string(n_arv) + "/10, PC1 " +
                    std::to_string(n_pc1) + "/10, median b_R3 " +
                    fmt("%.4f", median_b) + (b_ok ? " in" : " OUTSIDE") +
                    " 0.66+-0.15, " + fmt("%.0f", secs) + " s"};
}

Outcome criterion5(std::vector<SeedResult>& store) {
  auto t0 = std::chrono::steady_clock::now();
  int n_l1 = 0, n_r4 = 0, n_arv_ns = 0, n_pc1 = 0, n_pc2 = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    SeedResult r = run_sim_seed(false, s,
                                fs::path("acceptance_artifacts") / "ar" /
                                    ("seed" + std::to_string(s)));
    store.push_back(r);
    if (r.xwf_cal[0] < 0.05) ++n_l1;
    if (r.xwf_cal[7] < 0.05) ++n_r4;
    if (r.arv_cal >= 0.05) ++n_arv_ns;
    if (r.pc_cal[0] < 0.05) ++n_pc1;
    if (r.pc_cal[1] < 0.05) ++n_pc2;
  }
  CsvWriter w("acceptance_artifacts/ar/summary.csv");
  w.row({"seed", "p_L1", "p_R4", "p_arv", "p_pc1", "p_pc2"});
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const SeedResult& r = store[s - 1];
    w.row({std::to_string(s), format_double(r.xwf_cal[0]),
           format_double(r.xwf_cal[7]), format_double(r.arv_cal),
           format_double(r.pc_cal[0]), format_double(r.pc_cal[1])});
  }
  w.close();

  double secs = seconds_since(t0);
  bool pass = n_l1 >= 7 && n_r4 >= 5 && n_arv_ns >= 7 && n_pc1 >= 7 &&
              n_pc2 >= 7 && secs < 7200;
  return {pass, "beta_L1 " + std::to_string(n_l1) + "/10 (need 7), beta_R4 " +
                    std::to_string(n_r4) + "/10 (need 5), ARV insignificant " +
                    std::to_string(n_arv_ns) + "/10 (need 7), PC1 " +
                    std::to_string(n_pc1) + "/10, PC2 " +
                    std::to_string(n_pc2) + "/10 (need 7), " +
                    fmt("%.0f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// Criterion 6: calibrated p-values uniform under a true null.

Outcome criterion6() {
  auto t0 = std::chrono::steady_clock::now();
  FreqSimConfig cfg;
  cfg.n = 200;
  cfg.n_i = 500;
  cfg.q = 2;
  cfg.seed = 66;
  Dataset data = frequency_sim(cfg);
  MarginalModel marginal = fit_marginal(data.trajectories, {});
  auto quads = build_quadratures(data.trajectories, marginal, 1);
  SearchOptions opt;
  opt.levels = 1;  // reduced design: one refinement level per replicate
  Pipeline pipe = xwf_pipeline(quads, data.covariates, opt);

  const int meta = 200, R = 49;
  std::vector<double> smooth_ps, linear_ps;
  for (int rep = 0; rep < meta; ++rep) {
    // Permute the outcome first so the analyzed data is null by build.
    RngStream perm(909, static_cast<std::uint64_t>(rep) + 1, 0);
    Eigen::VectorXi y = data.outcomes;
    for (Eigen::Index i = y.size() - 1; i > 0; --i) {
      Eigen::Index j = static_cast<Eigen::Index>(
          perm.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(y(i), y(j));
    }
    PermutationResult res = randomization_test(
        pipe, y, R, 5000 + static_cast<std::uint64_t>(rep));
    for (int t = 0; t < 8; ++t) smooth_ps.push_back(res.calibrated(t));
    for (int t = 8; t < 10; ++t) linear_ps.push_back(res.calibrated(t));
  }

  // Exact null CDF of the add-one estimator: uniform on {1/50, ..., 50/50}.
  auto ks_discrete = [R](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double n = static_cast<double>(v.size());
    double d = 0;
    for (int k = 1; k <= R + 1; ++k) {
      double atom = static_cast<double>(k) / (R + 1);
      double ecdf = static_cast<double>(
                        std::upper_bound(v.begin(), v.end(), atom + 1e-12) -
                        v.begin()) /
                    n;
      d = std::max(d, std::abs(ecdf - atom));
    }
    return d;
  };
  double d_smooth = ks_discrete(smooth_ps);
  double d_linear = ks_discrete(linear_ps);
  double crit_smooth = 1.628 / std::sqrt(static_cast<double>(smooth_ps.size()));
  double crit_linear = 1.628 / std::sqrt(static_cast<double>(linear_ps.size()));

  double secs = seconds_since(t0);
  bool pass = d_smooth < crit_smooth && d_linear < crit_linear && secs < 3600;
  return {pass, "KS smooth terms " + fmt("%.4f", d_smooth) + " (crit " +
                    fmt("%.4f", crit_smooth) + "), linear terms " +
                    fmt("%.4f", d_linear) + " (crit " +
                    fmt("%.4f", crit_linear) + "), " + fmt("%.0f", secs) +
                    " s"};
}

// ---------------------------------------------------------------------------
// Criterion 7: GAM gradient and objective diagnostics.

Outcome criterion7() {
  auto t0 = std::chrono::steady_clock::now();
  double worst_grad = 0, worst_fd = 0;
  bool monotone = true;

  RngStream rng(7007, 0, 0);
  for (int fixture = 0; fixture < 3; ++fixture) {
    Dataset data;
    if (fixture == 0) {
      FreqSimConfig cfg;
      cfg.n = 400;
      cfg.n_i = 120;
      cfg.q = 2;
      cfg.seed = 70;
      data = frequency_sim(cfg);
    } else if (fixture == 1) {
      ArSimConfig cfg;
      cfg.n = 400;
      cfg.n_i = 120;
      cfg.q = 2;
      cfg.seed = 71;
      data = ar_sim(cfg);
    } else {
      ArSimConfig cfg;
      cfg.n = 300;
      cfg.n_i = 80;
      cfg.q = 0;
      cfg.seed = 72;
      data = ar_sim(cfg);
    }
    MarginalModel marginal = fit_marginal(data.trajectories, {});
    auto quads = build_quadratures(data.trajectories, marginal, 1);
    Eigen::MatrixXd feats = xwf_matrix(quads, WeightParams::defaults());
    GamSpec spec;
    spec.keep_internals = true;
    spec.tolerance = 1e-10;
    spec.max_iterations = 400;
    GamFit fit = fit_gam(feats, data.covariates, data.outcomes, spec);
    const GamInternals& gi = *fit.internals;

    worst_grad = std::max(
        worst_grad, penalized_gradient(gi, gi.beta).cwiseAbs().maxCoeff());

    for (size_t k = 1; k < gi.objective_trace.size(); ++k)
      monotone = monotone &&
                 gi.objective_trace[k] >= gi.objective_trace[k - 1] - 1e-10;

    // Central finite differences at random coefficient points.
    int points = fixture == 0 ? 8 : 6;  // 20 total across fixtures
    for (int p = 0; p < points; ++p) {
      Eigen::VectorXd beta = gi.beta;
      for (Eigen::Index c = 0; c < beta.size(); ++c)
        beta(c) += 0.05 * rng.normal();
      Eigen::VectorXd g = penalized_gradient(gi, beta);
      Eigen::VectorXd gfd(beta.size());
      for (Eigen::Index c = 0; c < beta.size(); ++c) {
        double h = 1e-5 * std::max(1.0, std::abs(beta(c)));
        Eigen::VectorXd bp = beta, bm = beta;
        bp(c) += h;
        bm(c) -= h;
        gfd(c) = (penalized_loglik(gi, bp) - penalized_loglik(gi, bm)) /
                 (2 * h);
      }
      double rel = (g - gfd).cwiseAbs().maxCoeff() /
                   std::max(1.0, g.cwiseAbs().maxCoeff());
      worst_fd = std::max(worst_fd, rel);
    }
  }

  double secs = seconds_since(t0);
  bool pass = worst_grad < 1e-6 && worst_fd < 1e-4 && monotone;
  return {pass, "gradient sup-norm " + fmt("%.2e", worst_grad) +
                    ", FD relative mismatch " + fmt("%.2e", worst_fd) +
                    " at 20 points, objective " +
                    (monotone ? "monotone" : "NOT monotone") + ", " +
                    fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// Criterion 8: ARV against a brute-force oracle plus invariances.

Outcome criterion8() {
  RngStream rng(8008, 0, 0);
  double worst = 0;
  for (int c = 0; c < 20; ++c) {
    int m = 5 + static_cast<int>(rng.below(8));
    Trajectory tr;
    tr.subject_id = "a" + std::to_string(c);
    double t = rng.uniform(0.0, 100.0);
    for (int k = 0; k < m; ++k) {
      tr.times.push_back(t);
      tr.values.push_back(rng.uniform(-50.0, 150.0));
      t += rng.uniform(1.0, 120.0);
    }
    // Oracle: gap-weighted absolute changes over the duration, written out
    // term by term.
    double total = 0, dur = tr.times.back() - tr.times.front();
    for (int k = 0; k + 1 < m; ++k) {
      double gap = tr.times[static_cast<size_t>(k + 1)] -
                   tr.times[static_cast<size_t>(k)];
      double step = std::abs(tr.values[static_cast<size_t>(k + 1)] -
                             tr.values[static_cast<size_t>(k)]);
      total += gap * step;
    }
    double oracle = total / dur;
    worst = std::max(worst, std::abs(arv(tr) - oracle) /
                                std::max(1.0, std::abs(oracle)));

    // Time dilation and value scaling.
    Trajectory dil = tr, sc = tr;
    for (auto& tt : dil.times) tt = 3.5 * tt + 11.0;
    for (auto& vv : sc.values) vv *= -2.25;
    worst = std::max(worst, std::abs(arv(dil) - arv(tr)) /
                                std::max(1.0, std::abs(arv(tr))));
    worst = std::max(worst, std::abs(arv(sc) - 2.25 * arv(tr)) /
                                std::max(1.0, 2.25 * std::abs(arv(tr))));
  }
  bool pass = worst <= 1e-12;
  return {pass, "max relative deviation " + fmt("%.2e", worst) +
                    " over 20 trajectories and invariances"};
}

// ---------------------------------------------------------------------------
// Criterion 9: spectrum sanity (Parseval, sinusoid localization).

Outcome criterion9() {
  const double dt = 30.0;
  const int bins = 40;  // native grid: 80 resampled points
  RngStream rng(9009, 0, 0);

  // Parseval on an irregular random walk resampling to exactly 2*bins points.
  Trajectory tr;
  tr.subject_id = "p";
  const double span = (2 * bins - 1) * dt;
  double t = 0, v = 100;
  while (t < span - 50.0) {
    tr.times.push_back(t);
    tr.values.push_back(v);
    v += rng.normal() * 4.0;
    t += rng.uniform(10.0, 45.0);
  }
  // Close the span exactly so the resampled length is 2 * bins.
  tr.times.push_back(span);
  tr.values.push_back(v);
  Eigen::VectorXd power = power_spectrum(tr, dt, bins);

  // Independent resample + variance.
  int m = 2 * bins;
  double mean = 0;
  std::vector<double> res(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    double tk = tr.times.front() + k * dt;
    auto it = std::lower_bound(tr.times.begin(), tr.times.end(), tk);
    double val;
    if (it == tr.times.begin()) {
      val = tr.values.front();
    } else if (it == tr.times.end()) {
      val = tr.values.back();
    } else {
      size_t hi = static_cast<size_t>(it - tr.times.begin());
      double t1 = tr.times[hi - 1], t2 = tr.times[hi];
      double w = (tk - t1) / (t2 - t1);
      val = (1 - w) * tr.values[hi - 1] + w * tr.values[hi];
    }
    res[static_cast<size_t>(k)] = val;
    mean += val;
  }
  mean /= m;
  double var = 0;
  for (double x : res) var += (x - mean) * (x - mean);
  var /= m;
  double parseval_rel = std::abs(power.sum() - var) / var;

  // Localization: a pure on-grid sinusoid concentrates in its bin.
  int target_bin = 12;
  double f0 = (target_bin + 1) * (1.0 / (2 * bins * dt));
  Trajectory sine;
  sine.subject_id = "s";
  for (int k = 0; k < 2 * bins; ++k) {
    sine.times.push_back(k * dt);
    sine.values.push_back(
        5.0 * std::sin(2 * 3.14159265358979323846 * f0 * k * dt) + 90.0);
  }
  Eigen::VectorXd spower = power_spectrum(sine, dt, bins);
  Eigen::Index peak = 0;
  spower.maxCoeff(&peak);
  double share = spower(target_bin) / spower.sum();

  bool pass = parseval_rel <= 1e-6 && peak == target_bin && share > 0.99;
  return {pass, "Parseval relative error " + fmt("%.2e", parseval_rel) +
                    ", sinusoid peak bin " + std::to_string(peak) +
                    " (expected " + std::to_string(target_bin) +
                    ") holding " + fmt("%.4f", share) + " of total power"};
}

// ---------------------------------------------------------------------------
// Criterion 10: held-out AUC comparison across the three models.

Outcome criterion10() {
  auto t0 = std::chrono::steady_clock::now();
  FreqSimConfig cfg;
  cfg.n = 4000;
  cfg.n_i = 500;
  cfg.q = 2;
  cfg.seed = 100;
  Dataset data = frequency_sim(cfg);

  SpectrumOptions so;
  so.common_dt = 1.0;
  so.max_bins = 250;
  PcaOptions po;
  GamSpec spec;
  SearchOptions opt;
  opt.levels = 3;

  std::vector<double> auc_xwf, auc_arv, auc_pc;
  for (int s = 0; s < 10; ++s) {
    std::uint64_t split_seed =
        RngStream(100, static_cast<std::uint64_t>(s) + 1, 0).bits();
    auto [train, test] = stratified_split(data, 40, 360, split_seed);

    MarginalModel marginal = fit_marginal(train.trajectories, {});
    auto quads = build_quadratures(train.trajectories, marginal, 1);
    SearchResult sr = adaptive_grid_search(xwf_feature_source(quads),
                                           train.covariates, train.outcomes,
                                           opt);
    Eigen::MatrixXd test_feats(static_cast<Eigen::Index>(test.size()), 8);
    for (size_t i = 0; i < test.size(); ++i) {
      XwfFeatures f = compute_xwf(test.trajectories[i], marginal, sr.params);
      for (int j = 0; j < 4; ++j) {
        test_feats(static_cast<Eigen::Index>(i), j) =
            f.w_left[static_cast<size_t>(j)];
        test_feats(static_cast<Eigen::Index>(i), 4 + j) =
            f.w_right[static_cast<size_t>(j)];
      }
    }
    auc_xwf.push_back(auc(predict_all(sr.fit, test_feats, test.covariates),
                          test.outcomes));

    Eigen::MatrixXd train_arv = arv_all(train.trajectories);
    GamFit fa = fit_baseline_gam(train_arv, {"arv"}, train, spec);
    Eigen::MatrixXd test_arv = arv_all(test.trajectories);
    auc_arv.push_back(auc(predict_all(fa, test_arv, test.covariates),
                          test.outcomes));

    SpectrumFeatures spectra = compute_spectra(train.trajectories, so);
    SupervisedPcs pcs = supervised_pca(spectra, train.outcomes, po);
    GamFit fp = fit_baseline_gam(pcs.scores, {"PC1", "PC2", "PC3"}, train,
                                 spec);
    Eigen::MatrixXd test_scores(static_cast<Eigen::Index>(test.size()), 3);
    for (size_t i = 0; i < test.size(); ++i) {
      Eigen::VectorXd row = power_spectrum(test.trajectories[i], so.common_dt,
                                           so.max_bins);
      test_scores.row(static_cast<Eigen::Index>(i)) =
          pcs.project(row).transpose();
    }
    auc_pc.push_back(auc(predict_all(fp, test_scores, test.covariates),
                         test.outcomes));
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  double m_xwf = mean_of(auc_xwf), m_arv = mean_of(auc_arv),
         m_pc = mean_of(auc_pc);
  bool range_ok = true;
  for (const auto* v : {&auc_xwf, &auc_arv, &auc_pc})
    for (double a : *v) range_ok = range_ok && a >= 0.5 && a <= 1.0;
  double d1 = 0, d2 = 0, d3 = 0;
  for (int s = 0; s < 10; ++s) {
    d1 += std::abs(auc_xwf[static_cast<size_t>(s)] -
                   auc_arv[static_cast<size_t>(s)]) / 10;
    d2 += std::abs(auc_xwf[static_cast<size_t>(s)] -
                   auc_pc[static_cast<size_t>(s)]) / 10;
    d3 += std::abs(auc_arv[static_cast<size_t>(s)] -
                   auc_pc[static_cast<size_t>(s)]) / 10;
  }
  bool diff_ok = d1 < 0.1 && d2 < 0.1 && d3 < 0.1;
  bool xwf_ok = m_xwf >= std::max(m_arv, m_pc) - 0.05;

  double secs = seconds_since(t0);
  bool pass = range_ok && diff_ok && xwf_ok && secs < 3600;
  return {pass, "mean AUC xwf " + fmt("%.3f", m_xwf) + ", arv " +
                    fmt("%.3f", m_arv) + ", spectrum " + fmt("%.3f", m_pc) +
                    "; mean |pairwise diff| " + fmt("%.3f", d1) + "/" +
                    fmt("%.3f", d2) + "/" + fmt("%.3f", d3) + ", " +
                    fmt("%.0f", secs) + " s"};
}

// ---------------------------------------------------------------------------
// Criterion 11: determinism of the criterion 4/5 tables.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion11() {
  auto t0 = std::chrono::steady_clock::now();
  bool identical = true;
  std::string mismatch;
  for (bool freq : {true, false}) {
    for (std::uint64_t s = 1; s <= 2; ++s) {
      fs::path first = fs::path("acceptance_artifacts") /
                       (freq ? "freq" : "ar") / ("seed" + std::to_string(s));
      fs::path rerun = fs::path("acceptance_artifacts") / "rerun" /
                       (freq ? "freq" : "ar") / ("seed" + std::to_string(s));
      run_sim_seed(freq, s, rerun);
      if (slurp(first / "pvalues.csv") != slurp(rerun / "pvalues.csv")) {
        identical = false;
        mismatch = (first / "pvalues.csv").string();
      }
    }
  }
  double secs = seconds_since(t0);
  return {identical,
          identical ? "reruns byte-identical (2 seeds per simulation), " +
                          fmt("%.0f", secs) + " s"
                    : "MISMATCH at " + mismatch};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select a subset of criteria by number; no arguments
  // runs all eleven (criterion 11 needs 4 and 5 to have run first).
  std::vector<int> wanted;
  for (int a = 1; a < argc; ++a) wanted.push_back(std::atoi(argv[a]));

  struct Entry {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  std::vector<SeedResult> freq_store, ar_store;
  std::vector<Entry> entries = {
      {1, "weight-function closed forms", criterion1},
      {2, "quadrature vs fine-grid oracle", criterion2},
      {3, "search grid and exhaustive optimum", criterion3},
      {4, "frequency simulation reproduction",
       [&] { return criterion4(freq_store); }},
      {5, "autoregressive simulation reproduction",
       [&] { return criterion5(ar_store); }},
      {6, "null calibration uniformity", criterion6},
      {7, "gam gradient and objective", criterion7},
      {8, "arv exactness and invariance", criterion8},
      {9, "spectrum parseval and localization", criterion9},
      {10, "predictive study protocol", criterion10},
      {11, "determinism of simulation tables", criterion11},
  };

  int failures = 0;
  for (auto& e : entries) {
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), e.number) == wanted.end())
      continue;
    Outcome o;
    try {
      o = e.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    if (!o.pass) ++failures;
    std::printf("acceptance criterion %2d (%s): %s - %s\n", e.number, e.name,
                o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  if (wanted.empty()) {
    if (failures > 0)
      std::printf("%d of 11 acceptance criteria failed\n", failures);
    else
      std::printf("all 11 acceptance criteria passed\n");
  }
  return failures;
}
