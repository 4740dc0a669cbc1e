#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "xwf/marginal.hpp"
#include "xwf/trajectory.hpp"

namespace xwf {

// Number of local feature functionals: 1, x, rise rate, fall rate.
inline constexpr int kNumLocalFeatures = 4;

enum class Side { left, right };

const char* to_string(Side s);

// Tail-weight parameters per local feature. Left weights emphasize low
// quantiles, right weights high quantiles.
struct WeightParams {
  std::array<double, kNumLocalFeatures> b_left;
  std::array<double, kNumLocalFeatures> b_right;

  static WeightParams defaults();  // 0.25 and 0.75 everywhere
  void validate() const;
  double& at(int j, Side s) { return s == Side::left ? b_left.at(static_cast<size_t>(j)) : b_right.at(static_cast<size_t>(j)); }
  double at(int j, Side s) const { return s == Side::left ? b_left.at(static_cast<size_t>(j)) : b_right.at(static_cast<size_t>(j)); }
};

// omega_left(u;b) = 1 for u <= b, (1-u)/(1-b) above; b in (0, 1/2].
double omega_left(double u, double b);
// omega_right(u;b) = 1 for u >= b, u/b below; b in [1/2, 1).
double omega_right(double u, double b);

// psi_j at sample k: j=0 constant 1, j=1 value, j=2 rise rate (x')+,
// j=3 fall rate (x')-.
double local_feature(int j, const Trajectory& traj,
                     const std::vector<double>& deriv, size_t k);

struct XwfFeatures {
  std::string subject_id;
  std::array<double, kNumLocalFeatures> w_left{};
  std::array<double, kNumLocalFeatures> w_right{};
  void validate() const;
};

// Per-subject quadrature state reused across weight-parameter candidates.
// The weighted integral (1/T) trapz(omega{F(x)} psi_j) equals a sum of
// half-gap-weighted samples; sorting by u and storing prefix sums makes each
// (j, b) query O(log n) instead of O(n).
class SubjectQuadrature {
 public:
  SubjectQuadrature(const Trajectory& traj, const MarginalModel& marginal);

  double integrate(int j, Side s, double b) const;
  XwfFeatures features(const WeightParams& params) const;
  const std::string& subject_id() const { return subject_id_; }
  size_t sample_count() const { return u_sorted_.size(); }

 private:
  std::string subject_id_;
  std::vector<double> u_sorted_;
  // prefix[j][k] = sum over the k smallest-u samples of c*psi_j, and
  // prefix_u likewise for c*psi_j*u.
  std::array<std::vector<double>, kNumLocalFeatures> prefix_;
  std::array<std::vector<double>, kNumLocalFeatures> prefix_u_;
};

XwfFeatures compute_xwf(const Trajectory& traj, const MarginalModel& marginal,
                        const WeightParams& params);

std::vector<SubjectQuadrature> build_quadratures(
    const std::vector<Trajectory>& trajectories, const MarginalModel& marginal,
    int threads = 1);

// n x 2p feature matrix, columns wL1..wL4 then wR1..wR4.
Eigen::MatrixXd xwf_matrix(const std::vector<SubjectQuadrature>& quads,
                           const WeightParams& params);
// Single column of the above for (j, side); used when one b changes.
Eigen::VectorXd xwf_column(const std::vector<SubjectQuadrature>& quads, int j,
                           Side s, double b);
// Column index of (j, side) in the feature matrix.
int feature_column(int j, Side s);
std::string feature_label(int j, Side s);

void save_features(const std::vector<XwfFeatures>& rows,
                   const std::string& path,
                   const std::string& header_comment = "");
std::vector<XwfFeatures> load_features(const std::string& path);

}  // namespace xwf
