#pragma once

#include <string>
#include <vector>

#include "xwf/trajectory.hpp"

namespace xwf {

// Population marginal distribution of predictor values, estimated with equal
// weight per subject (each sample weighted by its local time spacing / T_i).
struct MarginalModel {
  std::vector<double> grid;  // strictly increasing, uniform spacing
  std::vector<double> pdf;   // nonnegative, trapezoid integral 1
  std::vector<double> cdf;   // nondecreasing, 0 at grid front, 1 at back
  double bandwidth = 0.0;

  void validate() const;
};

struct MarginalOptions {
  int grid_size = 1024;
  double bandwidth = 0.0;  // 0 selects the weighted plug-in rule
};

MarginalModel fit_marginal(const std::vector<Trajectory>& trajectories,
                           const MarginalOptions& options = {});

// F(x) by linear interpolation of the cdf table; 0 below the grid, 1 above.
double cdf_eval(const MarginalModel& model, double x);

void save_marginal(const MarginalModel& model, const std::string& path,
                   const std::string& header_comment = "");
MarginalModel load_marginal(const std::string& path);

// Duration-weighted per-sample weights for one trajectory: half-gap spacing
// around each sample divided by T_i, so they sum to 1 per subject.
std::vector<double> sample_weights(const Trajectory& traj);

}  // namespace xwf
