#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "xwf/gam.hpp"
#include "xwf/trajectory.hpp"

namespace xwf {

// Duration-weighted mean absolute change per second. Invariant under time
// translation and dilation; homogeneous of degree one in the values.
double arv(const Trajectory& traj);
Eigen::VectorXd arv_all(const std::vector<Trajectory>& trajectories);

struct SpectrumOptions {
  double common_dt = 30.0;  // uniform resampling step, seconds
  int max_bins = 1000;      // shared grid length; bins span (0, Nyquist]
  void validate() const;
};

// Per-subject periodograms mapped onto one shared frequency grid. The grid
// step is Nyquist / max_bins, so a trajectory resampled to exactly
// 2 * max_bins points keeps its native bins unchanged.
struct SpectrumFeatures {
  std::vector<std::string> subject_ids;
  std::vector<double> freq_grid;  // cycles per second, strictly increasing
  Eigen::MatrixXd power;          // n x bins, nonnegative
  void validate() const;
};

std::vector<double> spectrum_grid(double common_dt, int max_bins);

// Linear resample at common_dt, mean removal, one-sided periodogram
// normalized so total power equals the sample variance, then linear
// interpolation in frequency onto the shared grid.
Eigen::VectorXd power_spectrum(const Trajectory& traj, double common_dt,
                               int max_bins);

SpectrumFeatures compute_spectra(const std::vector<Trajectory>& trajectories,
                                 const SpectrumOptions& options);

struct PcaOptions {
  int components = 3;
  double screen_threshold = 2.0;  // |score statistic| cutoff
  bool log_power = true;          // log(1 + power) before screening and PCA
  void validate() const;
};

// Outcome-screened principal components: frequencies pass a univariate
// logistic score screen (threshold lowered until at least max(10, 5k)
// survive), surviving columns are standardized, and the top-k right singular
// vectors give the loadings.
struct SupervisedPcs {
  std::vector<bool> selected_mask;  // one flag per shared-grid frequency
  Eigen::MatrixXd loadings;         // selected x k, orthonormal columns
  Eigen::MatrixXd scores;           // n x k
  Eigen::VectorXd col_mean;         // training standardization, transformed
  Eigen::VectorXd col_sd;           // scale of the selected columns
  double threshold_used = 0;
  bool log_power = true;

  void validate() const;
  // Scores for one new subject given its power row on the shared grid.
  Eigen::VectorXd project(const Eigen::VectorXd& power_row) const;
};

SupervisedPcs supervised_pca(const SpectrumFeatures& spectra,
                             const Eigen::VectorXi& y,
                             const PcaOptions& options);

// The comparison models swap the extrema-weighted features for ARV or for
// PC scores; covariate terms are untouched.
GamFit fit_baseline_gam(const Eigen::MatrixXd& features,
                        const std::vector<std::string>& labels,
                        const Dataset& data, const GamSpec& spec);

// CSV schemas: spectra as subject_id,f,power; loadings as f,pc1,...,pck on
// the selected frequencies.
void save_spectra(const SpectrumFeatures& spectra, const std::string& path,
                  const std::string& header_comment = "");
void save_pc_loadings(const SupervisedPcs& pcs,
                      const std::vector<double>& freq_grid,
                      const std::string& path,
                      const std::string& header_comment = "");

}  // namespace xwf
