#include "xwf/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xwf/csv.hpp"

namespace xwf {

void MarginalModel::validate() const {
  if (grid.size() < 2 || pdf.size() != grid.size() || cdf.size() != grid.size()) {
    throw Error(ErrorKind::validation, "marginal model: inconsistent table sizes");
  }
  if (!(bandwidth > 0)) {
    throw Error(ErrorKind::validation, "marginal model: bandwidth must be positive");
  }
  for (size_t k = 0; k < grid.size(); ++k) {
    if (pdf[k] < 0) {
      throw Error(ErrorKind::validation, "marginal model: negative pdf value");
    }
    if (k > 0 && !(grid[k] > grid[k - 1])) {
      throw Error(ErrorKind::validation, "marginal model: grid not increasing");
    }
    if (k > 0 && cdf[k] < cdf[k - 1]) {
      throw Error(ErrorKind::validation, "marginal model: cdf decreasing");
    }
  }
}

std::vector<double> sample_weights(const Trajectory& traj) {
  size_t n = traj.size();
  const auto& t = traj.times;
  std::vector<double> w(n);
  // Half-gap spacing: interior samples own half of each adjacent gap, the
  // endpoints own half of their single gap. Spacings sum to T_i exactly.
  w[0] = (t[1] - t[0]) / 2;
  w[n - 1] = (t[n - 1] - t[n - 2]) / 2;
  for (size_t k = 1; k + 1 < n; ++k) w[k] = (t[k + 1] - t[k - 1]) / 2;
  double T = traj.duration();
  for (double& v : w) v /= T;
  return w;
}

namespace {

double weighted_quantile(std::vector<std::pair<double, double>>& sorted_xw,
                         double q) {
  // sorted_xw sorted by x, weights summing to 1; returns smallest x with
  // cumulative weight >= q.
  double cum = 0;
  for (const auto& [x, w] : sorted_xw) {
    cum += w;
    if (cum >= q) return x;
  }
  return sorted_xw.back().first;
}

}  // namespace

MarginalModel fit_marginal(const std::vector<Trajectory>& trajectories,
                           const MarginalOptions& options) {
  if (trajectories.empty()) {
    throw Error(ErrorKind::validation, "fit_marginal: no trajectories");
  }
  if (options.grid_size < 64) {
    throw Error(ErrorKind::validation, "fit_marginal: grid_size must be >= 64");
  }

  size_t total = 0;
  for (const auto& traj : trajectories) total += traj.size();
  std::vector<std::pair<double, double>> xw;
  xw.reserve(total);
  double n_subjects = static_cast<double>(trajectories.size());
  for (const auto& traj : trajectories) {
    traj.validate();
    auto w = sample_weights(traj);
    for (size_t k = 0; k < traj.size(); ++k) {
      xw.emplace_back(traj.values[k], w[k] / n_subjects);
    }
  }

  double mean = 0;
  for (const auto& [x, w] : xw) mean += w * x;
  double var = 0, sumsq_w = 0;
  for (const auto& [x, w] : xw) {
    var += w * (x - mean) * (x - mean);
    sumsq_w += w * w;
  }
  double sd = std::sqrt(var);

  std::sort(xw.begin(), xw.end());
  double x_min = xw.front().first, x_max = xw.back().first;

  double h = options.bandwidth;
  if (h <= 0) {
    double iqr = weighted_quantile(xw, 0.75) - weighted_quantile(xw, 0.25);
    double spread = sd;
    if (iqr > 0) spread = std::min(sd, iqr / 1.34);
    // Relative floor absorbs rounding residue when all values coincide.
    if (!(spread > 1e-12 * std::max(1.0, std::abs(mean)))) {
      throw Error(ErrorKind::degenerate,
                  "fit_marginal: values essentially identical, bandwidth would be 0");
    }
    double n_eff = 1.0 / sumsq_w;
    h = 0.9 * spread * std::pow(n_eff, -0.2);
  }

  MarginalModel model;
  model.bandwidth = h;
  int m = options.grid_size;
  double lo = x_min - 3 * h, hi = x_max + 3 * h;
  double step = (hi - lo) / (m - 1);
  if (!(step > 0) || lo + step == lo) {
    throw Error(ErrorKind::degenerate,
                "fit_marginal: value range too narrow to resolve a grid");
  }
  model.grid.resize(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) model.grid[static_cast<size_t>(k)] = lo + step * k;
  model.pdf.assign(static_cast<size_t>(m), 0.0);

  // Scatter each kernel onto the grid points within 8h (tail mass below
  // double precision of the later normalization).
  double inv_h = 1.0 / h;
  double reach = 8 * h;
  for (const auto& [x, w] : xw) {
    int k0 = std::max(0, static_cast<int>(std::ceil((x - reach - lo) / step)));
    int k1 = std::min(m - 1, static_cast<int>(std::floor((x - lo + reach) / step)));
    for (int k = k0; k <= k1; ++k) {
      double z = (model.grid[static_cast<size_t>(k)] - x) * inv_h;
      model.pdf[static_cast<size_t>(k)] += w * std::exp(-0.5 * z * z);
    }
  }
  double norm_kernel = 1.0 / (h * std::sqrt(2 * M_PI));
  for (double& v : model.pdf) v *= norm_kernel;

  // The grid clips the kernel tails, so renormalize to unit trapezoid mass.
  double mass = 0;
  for (int k = 1; k < m; ++k) {
    mass += 0.5 * step * (model.pdf[static_cast<size_t>(k)] +
                          model.pdf[static_cast<size_t>(k - 1)]);
  }
  if (!(mass > 0)) {
    throw Error(ErrorKind::degenerate, "fit_marginal: zero total density mass");
  }
  for (double& v : model.pdf) v /= mass;

  model.cdf.resize(static_cast<size_t>(m));
  model.cdf[0] = 0.0;
  for (int k = 1; k < m; ++k) {
    model.cdf[static_cast<size_t>(k)] =
        model.cdf[static_cast<size_t>(k - 1)] +
        0.5 * step * (model.pdf[static_cast<size_t>(k)] +
                      model.pdf[static_cast<size_t>(k - 1)]);
  }
  for (double& v : model.cdf) v = std::clamp(v, 0.0, 1.0);
  model.cdf.back() = 1.0;

  model.validate();
  return model;
}

double cdf_eval(const MarginalModel& model, double x) {
  const auto& g = model.grid;
  if (x <= g.front()) return x < g.front() ? 0.0 : model.cdf.front();
  if (x >= g.back()) return x > g.back() ? 1.0 : model.cdf.back();
  // Uniform grid: direct index, then guard against rounding.
  double step = (g.back() - g.front()) / static_cast<double>(g.size() - 1);
  auto k = static_cast<size_t>((x - g.front()) / step);
  if (k >= g.size() - 1) k = g.size() - 2;
  while (k > 0 && x < g[k]) --k;
  while (k + 2 < g.size() && x >= g[k + 1]) ++k;
  double frac = (x - g[k]) / (g[k + 1] - g[k]);
  return model.cdf[k] + frac * (model.cdf[k + 1] - model.cdf[k]);
}

void save_marginal(const MarginalModel& model, const std::string& path,
                   const std::string& header_comment) {
  model.validate();
  CsvWriter w(path);
  if (!header_comment.empty()) w.comment(header_comment);
  w.comment("bandwidth=" + format_double(model.bandwidth));
  w.row({"x", "pdf", "cdf"});
  for (size_t k = 0; k < model.grid.size(); ++k) {
    w.row({format_double(model.grid[k]), format_double(model.pdf[k]),
           format_double(model.cdf[k])});
  }
  w.close();
}

MarginalModel load_marginal(const std::string& path) {
  MarginalModel model;
  {
    // Bandwidth travels in a comment the row reader skips.
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    std::string raw;
    while (std::getline(in, raw)) {
      if (raw.empty() || raw[0] != '#') break;
      auto pos = raw.find("bandwidth=");
      if (pos != std::string::npos) {
        model.bandwidth = parse_double(raw.substr(pos + 10), path, 0);
      }
    }
  }
  CsvReader reader(path);
  auto header = reader.next();
  if (!header || header->size() != 3 || (*header)[0] != "x") {
    throw Error(ErrorKind::parse, path + ": expected header x,pdf,cdf");
  }
  while (auto row = reader.next()) {
    if (row->size() != 3) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(reader.line()) +
                                        ": expected 3 fields");
    }
    model.grid.push_back(parse_double((*row)[0], path, reader.line()));
    model.pdf.push_back(parse_double((*row)[1], path, reader.line()));
    model.cdf.push_back(parse_double((*row)[2], path, reader.line()));
  }
  model.validate();
  return model;
}

}  // namespace xwf
