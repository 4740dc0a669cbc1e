#include "xwf/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xwf/csv.hpp"
#include "xwf/parallel.hpp"

namespace xwf {

const char* to_string(Side s) { return s == Side::left ? "L" : "R"; }

WeightParams WeightParams::defaults() {
  WeightParams p;
  p.b_left.fill(0.25);
  p.b_right.fill(0.75);
  return p;
}

void WeightParams::validate() const {
  for (int j = 0; j < kNumLocalFeatures; ++j) {
    double bl = b_left[static_cast<size_t>(j)];
    double br = b_right[static_cast<size_t>(j)];
    if (!(bl > 0.0) || !(bl <= 0.5)) {
      throw Error(ErrorKind::validation,
                  "weight params: b_left[" + std::to_string(j + 1) + "] = " +
                      format_double(bl) + " outside (0, 1/2]");
    }
    if (!(br >= 0.5) || !(br < 1.0)) {
      throw Error(ErrorKind::validation,
                  "weight params: b_right[" + std::to_string(j + 1) + "] = " +
                      format_double(br) + " outside [1/2, 1)");
    }
  }
}

double omega_left(double u, double b) {
  return u <= b ? 1.0 : (1.0 - u) / (1.0 - b);
}

double omega_right(double u, double b) { return u >= b ? 1.0 : u / b; }

double local_feature(int j, const Trajectory& traj,
                     const std::vector<double>& deriv, size_t k) {
  switch (j) {
    case 0: return 1.0;
    case 1: return traj.values.at(k);
    case 2: return std::max(0.0, deriv.at(k));
    case 3: return std::max(0.0, -deriv.at(k));
    default:
      throw Error(ErrorKind::validation,
                  "local_feature: index " + std::to_string(j) + " out of range");
  }
}

void XwfFeatures::validate() const {
  for (int j = 0; j < kNumLocalFeatures; ++j) {
    if (!std::isfinite(w_left[static_cast<size_t>(j)]) ||
        !std::isfinite(w_right[static_cast<size_t>(j)])) {
      throw Error(ErrorKind::validation,
                  "features for " + subject_id + ": non-finite entry");
    }
  }
  // psi_1 = 1 and omega in [0,1] bound the first pair; quadrature rounding
  // may overshoot by a few ulps.
  constexpr double slack = 1e-9;
  if (w_left[0] < -slack || w_left[0] > 1 + slack || w_right[0] < -slack ||
      w_right[0] > 1 + slack) {
    throw Error(ErrorKind::validation,
                "features for " + subject_id + ": w1 outside [0,1]");
  }
}

SubjectQuadrature::SubjectQuadrature(const Trajectory& traj,
                                     const MarginalModel& marginal)
    : subject_id_(traj.subject_id) {
  traj.validate();
  size_t n = traj.size();
  auto c = sample_weights(traj);
  auto deriv = derivative(traj);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> u(n);
  for (size_t k = 0; k < n; ++k) u[k] = cdf_eval(marginal, traj.values[k]);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return u[a] < u[b]; });

  u_sorted_.resize(n);
  for (int j = 0; j < kNumLocalFeatures; ++j) {
    prefix_[static_cast<size_t>(j)].assign(n + 1, 0.0);
    prefix_u_[static_cast<size_t>(j)].assign(n + 1, 0.0);
  }
  for (size_t k = 0; k < n; ++k) {
    size_t i = order[k];
    u_sorted_[k] = u[i];
    std::array<double, kNumLocalFeatures> psi = {
        1.0, traj.values[i], std::max(0.0, deriv[i]), std::max(0.0, -deriv[i])};
    for (int j = 0; j < kNumLocalFeatures; ++j) {
      auto js = static_cast<size_t>(j);
      double cp = c[i] * psi[js];
      prefix_[js][k + 1] = prefix_[js][k] + cp;
      prefix_u_[js][k + 1] = prefix_u_[js][k] + cp * u[i];
    }
  }
}

double SubjectQuadrature::integrate(int j, Side s, double b) const {
  auto js = static_cast<size_t>(j);
  const auto& P = prefix_[js];
  const auto& Pu = prefix_u_[js];
  size_t n = u_sorted_.size();
  if (s == Side::left) {
    // Samples with u <= b weigh 1; the rest weigh (1-u)/(1-b).
    auto split = static_cast<size_t>(
        std::upper_bound(u_sorted_.begin(), u_sorted_.end(), b) -
        u_sorted_.begin());
    double head = P[split];
    double tail = (P[n] - P[split]) - (Pu[n] - Pu[split]);
    return head + tail / (1.0 - b);
  }
  // Samples with u >= b weigh 1; the rest weigh u/b.
  auto split = static_cast<size_t>(
      std::lower_bound(u_sorted_.begin(), u_sorted_.end(), b) -
      u_sorted_.begin());
  double head = Pu[split];
  double tail = P[n] - P[split];
  return tail + head / b;
}

XwfFeatures SubjectQuadrature::features(const WeightParams& params) const {
  params.validate();
  XwfFeatures f;
  f.subject_id = subject_id_;
  for (int j = 0; j < kNumLocalFeatures; ++j) {
    auto js = static_cast<size_t>(j);
    f.w_left[js] = integrate(j, Side::left, params.b_left[js]);
    f.w_right[js] = integrate(j, Side::right, params.b_right[js]);
  }
  f.validate();
  return f;
}

XwfFeatures compute_xwf(const Trajectory& traj, const MarginalModel& marginal,
                        const WeightParams& params) {
  return SubjectQuadrature(traj, marginal).features(params);
}

std::vector<SubjectQuadrature> build_quadratures(
    const std::vector<Trajectory>& trajectories, const MarginalModel& marginal,
    int threads) {
  std::vector<SubjectQuadrature> quads;
  quads.reserve(trajectories.size());
  if (threads <= 1) {
    for (const auto& traj : trajectories) quads.emplace_back(traj, marginal);
    return quads;
  }
  // Slot-indexed construction keeps output order schedule-independent.
  std::vector<std::optional<SubjectQuadrature>> slots(trajectories.size());
  parallel_for(trajectories.size(), threads, [&](size_t i) {
    slots[i].emplace(trajectories[i], marginal);
  });
  for (auto& s : slots) quads.push_back(std::move(*s));
  return quads;
}

int feature_column(int j, Side s) {
  return (s == Side::left ? 0 : kNumLocalFeatures) + j;
}

std::string feature_label(int j, Side s) {
  return std::string("w") + to_string(s) + std::to_string(j + 1);
}

Eigen::MatrixXd xwf_matrix(const std::vector<SubjectQuadrature>& quads,
                           const WeightParams& params) {
  params.validate();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(quads.size()),
                    2 * kNumLocalFeatures);
  for (size_t i = 0; i < quads.size(); ++i) {
    auto f = quads[i].features(params);
    for (int j = 0; j < kNumLocalFeatures; ++j) {
      auto js = static_cast<size_t>(j);
      M(static_cast<Eigen::Index>(i), feature_column(j, Side::left)) =
          f.w_left[js];
      M(static_cast<Eigen::Index>(i), feature_column(j, Side::right)) =
          f.w_right[js];
    }
  }
  return M;
}

Eigen::VectorXd xwf_column(const std::vector<SubjectQuadrature>& quads, int j,
                           Side s, double b) {
  Eigen::VectorXd col(static_cast<Eigen::Index>(quads.size()));
  for (size_t i = 0; i < quads.size(); ++i) {
    col(static_cast<Eigen::Index>(i)) = quads[i].integrate(j, s, b);
  }
  return col;
}

void save_features(const std::vector<XwfFeatures>& rows,
                   const std::string& path,
                   const std::string& header_comment) {
  CsvWriter w(path);
  if (!header_comment.empty()) w.comment(header_comment);
  std::vector<std::string> header = {"subject_id"};
  for (int j = 0; j < kNumLocalFeatures; ++j)
    header.push_back(feature_label(j, Side::left));
  for (int j = 0; j < kNumLocalFeatures; ++j)
    header.push_back(feature_label(j, Side::right));
  w.row(header);
  for (const auto& f : rows) {
    std::vector<std::string> row = {f.subject_id};
    for (int j = 0; j < kNumLocalFeatures; ++j)
      row.push_back(format_double(f.w_left[static_cast<size_t>(j)]));
    for (int j = 0; j < kNumLocalFeatures; ++j)
      row.push_back(format_double(f.w_right[static_cast<size_t>(j)]));
    w.row(row);
  }
  w.close();
}

std::vector<XwfFeatures> load_features(const std::string& path) {
  CsvReader reader(path);
  auto header = reader.next();
  if (!header || header->size() != 1 + 2 * kNumLocalFeatures ||
      (*header)[0] != "subject_id") {
    throw Error(ErrorKind::parse, path + ": expected feature matrix header");
  }
  std::vector<XwfFeatures> rows;
  while (auto row = reader.next()) {
    if (row->size() != 1 + 2 * kNumLocalFeatures) {
      throw Error(ErrorKind::parse, path + ":" + std::to_string(reader.line()) +
                                        ": wrong field count");
    }
    XwfFeatures f;
    f.subject_id = (*row)[0];
    for (int j = 0; j < kNumLocalFeatures; ++j) {
      f.w_left[static_cast<size_t>(j)] =
          parse_double((*row)[static_cast<size_t>(1 + j)], path, reader.line());
      f.w_right[static_cast<size_t>(j)] = parse_double(
          (*row)[static_cast<size_t>(1 + kNumLocalFeatures + j)], path,
          reader.line());
    }
    f.validate();
    rows.push_back(std::move(f));
  }
  return rows;
}

}  // namespace xwf
