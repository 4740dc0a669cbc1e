#include "xwf/baselines.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>

#include "xwf/csv.hpp"

namespace xwf {

namespace {

// Linear interpolation of (ts, xs) at t; ts strictly increasing, t inside.
double interp(const std::vector<double>& ts, const std::vector<double>& xs,
              double t) {
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  if (it == ts.begin()) return xs.front();
  if (it == ts.end()) return xs.back();
  size_t hi = static_cast<size_t>(it - ts.begin());
  size_t lo = hi - 1;
  double frac = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return xs[lo] + frac * (xs[hi] - xs[lo]);
}

// One-sided periodogram of a demeaned uniform signal, normalized so the bin
// sum equals the sample variance. Bin k holds frequency k / (m * dt).
std::vector<double> periodogram(std::vector<double> x) {
  int m = static_cast<int>(x.size());
  std::vector<double> power(static_cast<size_t>(m / 2));
  double* in = fftw_alloc_real(static_cast<size_t>(m));
  fftw_complex* out = fftw_alloc_complex(static_cast<size_t>(m / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(m, in, out, FFTW_ESTIMATE);
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);
  double mm = static_cast<double>(m) * m;
  for (int k = 1; k <= m / 2; ++k) {
    double re = out[k][0];
    double im = out[k][1];
    double p = (re * re + im * im) / mm;
    bool nyquist = (m % 2 == 0) && k == m / 2;
    power[static_cast<size_t>(k - 1)] = nyquist ? p : 2 * p;
  }
  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);
  return power;
}

}  // namespace

double arv(const Trajectory& traj) {
  traj.validate();
  double total = 0;
  for (size_t k = 1; k < traj.size(); ++k) {
    total += (traj.times[k] - traj.times[k - 1]) *
             std::abs(traj.values[k] - traj.values[k - 1]);
  }
  return total / traj.duration();
}

Eigen::VectorXd arv_all(const std::vector<Trajectory>& trajectories) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(trajectories.size()));
  for (size_t i = 0; i < trajectories.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = arv(trajectories[i]);
  }
  return out;
}

void SpectrumOptions::validate() const {
  if (!(common_dt > 0)) {
    throw Error(ErrorKind::validation, "spectrum: common_dt must be positive");
  }
  if (max_bins < 1) {
    throw Error(ErrorKind::validation, "spectrum: max_bins must be >= 1");
  }
}

void SpectrumFeatures::validate() const {
  if (power.rows() != static_cast<Eigen::Index>(subject_ids.size()) ||
      power.cols() != static_cast<Eigen::Index>(freq_grid.size())) {
    throw Error(ErrorKind::validation, "spectra: inconsistent dimensions");
  }
  for (size_t k = 1; k < freq_grid.size(); ++k) {
    if (!(freq_grid[k] > freq_grid[k - 1])) {
      throw Error(ErrorKind::validation, "spectra: grid not increasing");
    }
  }
  if (power.size() > 0 && power.minCoeff() < 0) {
    throw Error(ErrorKind::validation, "spectra: negative power");
  }
}

std::vector<double> spectrum_grid(double common_dt, int max_bins) {
  double df = 1.0 / (2.0 * max_bins * common_dt);
  std::vector<double> grid(static_cast<size_t>(max_bins));
  for (int k = 1; k <= max_bins; ++k) {
    grid[static_cast<size_t>(k - 1)] = k * df;
  }
  return grid;
}

Eigen::VectorXd power_spectrum(const Trajectory& traj, double common_dt,
                               int max_bins) {
  traj.validate();
  SpectrumOptions{common_dt, max_bins}.validate();
  if (traj.duration() < 4 * common_dt) {
    throw Error(ErrorKind::validation,
                "spectrum: trajectory " + traj.subject_id +
                    " shorter than 4 resampling steps");
  }

  int m = static_cast<int>(std::floor(traj.duration() / common_dt)) + 1;
  std::vector<double> x(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    x[static_cast<size_t>(i)] =
        interp(traj.times, traj.values, traj.times.front() + i * common_dt);
  }
  double mean = 0;
  for (double v : x) mean += v / m;
  for (double& v : x) v -= mean;

  std::vector<double> native = periodogram(std::move(x));
  double native_df = 1.0 / (m * common_dt);

  // Shared-grid value by linear interpolation; (0, 0) anchors the low end
  // (the mean is removed) and the last native bin extends to Nyquist.
  Eigen::VectorXd out(max_bins);
  double df = 1.0 / (2.0 * max_bins * common_dt);
  for (int j = 1; j <= max_bins; ++j) {
    double f = j * df;
    double pos = f / native_df;  // native bin coordinate, bin k at pos k
    double val;
    if (pos >= static_cast<double>(native.size())) {
      val = native.back();
    } else {
      size_t k = static_cast<size_t>(pos);  // floor; segment [k, k+1]
      double lo = k == 0 ? 0.0 : native[k - 1];
      double hi = native[k];
      val = lo + (pos - k) * (hi - lo);
    }
    out(j - 1) = std::max(val, 0.0);
  }
  return out;
}

SpectrumFeatures compute_spectra(const std::vector<Trajectory>& trajectories,
                                 const SpectrumOptions& options) {
  options.validate();
  SpectrumFeatures out;
  out.freq_grid = spectrum_grid(options.common_dt, options.max_bins);
  out.power.resize(static_cast<Eigen::Index>(trajectories.size()),
                   options.max_bins);
  for (size_t i = 0; i < trajectories.size(); ++i) {
    out.subject_ids.push_back(trajectories[i].subject_id);
    out.power.row(static_cast<Eigen::Index>(i)) =
        power_spectrum(trajectories[i], options.common_dt, options.max_bins)
            .transpose();
  }
  out.validate();
  return out;
}

void PcaOptions::validate() const {
  if (components < 1) {
    throw Error(ErrorKind::validation, "pca: components must be >= 1");
  }
  if (!(screen_threshold >= 0)) {
    throw Error(ErrorKind::validation, "pca: negative screen threshold");
  }
}

void SupervisedPcs::validate() const {
  Eigen::Index s = loadings.rows();
  Eigen::Index k = loadings.cols();
  if (col_mean.size() != s || col_sd.size() != s || scores.cols() != k) {
    throw Error(ErrorKind::validation, "pcs: inconsistent dimensions");
  }
  Eigen::MatrixXd gram = loadings.transpose() * loadings;
  if ((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-8) {
    throw Error(ErrorKind::validation, "pcs: loadings not orthonormal");
  }
}

Eigen::VectorXd SupervisedPcs::project(const Eigen::VectorXd& power_row) const {
  if (power_row.size() != static_cast<Eigen::Index>(selected_mask.size())) {
    throw Error(ErrorKind::validation, "pcs: power row has wrong length");
  }
  Eigen::VectorXd x(loadings.rows());
  Eigen::Index s = 0;
  for (size_t c = 0; c < selected_mask.size(); ++c) {
    if (!selected_mask[c]) continue;
    double v = power_row(static_cast<Eigen::Index>(c));
    if (log_power) v = std::log1p(v);
    x(s) = (v - col_mean(s)) / col_sd(s);
    ++s;
  }
  return loadings.transpose() * x;
}

SupervisedPcs supervised_pca(const SpectrumFeatures& spectra,
                             const Eigen::VectorXi& y,
                             const PcaOptions& options) {
  options.validate();
  spectra.validate();
  Eigen::Index n = spectra.power.rows();
  Eigen::Index bins = spectra.power.cols();
  if (y.size() != n) {
    throw Error(ErrorKind::validation, "pca: outcome length mismatch");
  }
  if (n < 50) {
    throw Error(ErrorKind::validation, "pca: need at least 50 subjects");
  }
  int pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) != 0 && y(i) != 1) {
      throw Error(ErrorKind::validation, "pca: outcomes must be 0/1");
    }
    pos += y(i);
  }
  if (pos == 0 || pos == n) {
    throw Error(ErrorKind::validation, "pca: both classes required");
  }

  Eigen::MatrixXd X = spectra.power;
  if (options.log_power) X = X.array().log1p().matrix();

  // Univariate logistic score statistic per frequency: the score test of a
  // single standardized column against the intercept-only fit.
  double ybar = static_cast<double>(pos) / static_cast<double>(n);
  Eigen::VectorXd resid = y.cast<double>().array() - ybar;
  Eigen::VectorXd zstat(bins);
  for (Eigen::Index c = 0; c < bins; ++c) {
    double xbar = X.col(c).mean();
    double ss = (X.col(c).array() - xbar).square().sum();
    double v = ybar * (1 - ybar) * ss;
    zstat(c) = v > 0 ? X.col(c).dot(resid) / std::sqrt(v) : 0.0;
  }

  int k = options.components;
  int floor_keep = std::max(10, 5 * k);
  std::vector<double> mags;
  for (Eigen::Index c = 0; c < bins; ++c) {
    if (std::abs(zstat(c)) > 0) mags.push_back(std::abs(zstat(c)));
  }
  if (static_cast<int>(mags.size()) < k) {
    throw Error(ErrorKind::degenerate,
                "pca: fewer usable frequencies than components");
  }
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double threshold = options.screen_threshold;
  if (static_cast<int>(mags.size()) >= floor_keep) {
    threshold = std::min(threshold, mags[static_cast<size_t>(floor_keep - 1)]);
  } else {
    threshold = std::min(threshold, mags.back());
  }

  SupervisedPcs out;
  out.log_power = options.log_power;
  out.threshold_used = threshold;
  out.selected_mask.assign(static_cast<size_t>(bins), false);
  std::vector<Eigen::Index> selected;
  for (Eigen::Index c = 0; c < bins; ++c) {
    if (std::abs(zstat(c)) >= threshold && std::abs(zstat(c)) > 0) {
      out.selected_mask[static_cast<size_t>(c)] = true;
      selected.push_back(c);
    }
  }
  Eigen::Index s = static_cast<Eigen::Index>(selected.size());
  if (s < k) {
    throw Error(ErrorKind::degenerate,
                "pca: screening kept fewer frequencies than components");
  }

  Eigen::MatrixXd Xs(n, s);
  out.col_mean.resize(s);
  out.col_sd.resize(s);
  for (Eigen::Index j = 0; j < s; ++j) {
    Eigen::VectorXd col = X.col(selected[static_cast<size_t>(j)]);
    double mean = col.mean();
    double sd = std::sqrt((col.array() - mean).square().sum() /
                          static_cast<double>(n - 1));
    out.col_mean(j) = mean;
    out.col_sd(j) = sd;
    Xs.col(j) = (col.array() - mean) / sd;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Xs,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.matrixV().cols() < k) {
    throw Error(ErrorKind::degenerate, "pca: rank below component count");
  }
  out.loadings = svd.matrixV().leftCols(k);
  // Deterministic orientation: the dominant coordinate of each loading is
  // positive.
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index arg = 0;
    out.loadings.col(j).cwiseAbs().maxCoeff(&arg);
    if (out.loadings(arg, j) < 0) out.loadings.col(j) = -out.loadings.col(j);
  }
  out.scores = Xs * out.loadings;
  out.validate();
  return out;
}

GamFit fit_baseline_gam(const Eigen::MatrixXd& features,
                        const std::vector<std::string>& labels,
                        const Dataset& data, const GamSpec& spec) {
  return fit_gam(features, data.covariates, data.outcomes, spec, labels);
}

void save_spectra(const SpectrumFeatures& spectra, const std::string& path,
                  const std::string& header_comment) {
  CsvWriter out(path);
  if (!header_comment.empty()) out.comment(header_comment);
  out.row({"subject_id", "f", "power"});
  for (Eigen::Index i = 0; i < spectra.power.rows(); ++i) {
    for (Eigen::Index c = 0; c < spectra.power.cols(); ++c) {
      out.row({spectra.subject_ids[static_cast<size_t>(i)],
               format_double(spectra.freq_grid[static_cast<size_t>(c)]),
               format_double(spectra.power(i, c))});
    }
  }
  out.close();
}

void save_pc_loadings(const SupervisedPcs& pcs,
                      const std::vector<double>& freq_grid,
                      const std::string& path,
                      const std::string& header_comment) {
  if (freq_grid.size() != pcs.selected_mask.size()) {
    throw Error(ErrorKind::validation, "pcs: grid length mismatch");
  }
  CsvWriter out(path);
  if (!header_comment.empty()) out.comment(header_comment);
  std::vector<std::string> header{"f"};
  for (Eigen::Index j = 0; j < pcs.loadings.cols(); ++j) {
    header.push_back("pc" + std::to_string(j + 1));
  }
  out.row(header);
  Eigen::Index s = 0;
  for (size_t c = 0; c < pcs.selected_mask.size(); ++c) {
    if (!pcs.selected_mask[c]) continue;
    std::vector<std::string> row{format_double(freq_grid[c])};
    for (Eigen::Index j = 0; j < pcs.loadings.cols(); ++j) {
      row.push_back(format_double(pcs.loadings(s, j)));
    }
    out.row(row);
    ++s;
  }
  out.close();
}

}  // namespace xwf
