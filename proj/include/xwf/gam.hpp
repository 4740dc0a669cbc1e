#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "xwf/error.hpp"

namespace xwf {

// Additive logistic model: intercept + linear covariate terms + one
// penalized cubic-spline smooth per feature column.
struct GamSpec {
  int basis_size = 8;
  int penalty_order = 2;
  std::vector<double> lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2};
  int max_iterations = 200;
  double tolerance = 1e-8;   // relative penalized-loglik change
  int gcv_cycles = 3;        // smoothing re-selection rounds
  double gcv_gamma = 1.4;    // degrees-of-freedom inflation guarding overfit
  std::vector<double> init_lambdas;  // warm start per term; empty = 1.0 each
  bool keep_internals = false;       // retain design/penalty for diagnostics

  void validate() const;
};

struct SmoothTermFit {
  std::string label;
  double lambda = 1.0;
  double edf = 0.0;
  double pvalue = 1.0;
  bool degenerate = false;  // constant feature or singular covariance
  Eigen::VectorXd coefs;    // constrained-basis coefficients (basis_size - 1)
  Eigen::MatrixXd constraint_null;  // basis_size x (basis_size - 1)
  Eigen::MatrixXd cov;              // posterior covariance of coefs
  double x_lo = 0, x_hi = 1;        // training range on the standardized scale
};

struct LinearTermFit {
  std::string label;
  double coef = 0.0;
  double se = 0.0;
  double pvalue = 1.0;
};

// Assembled optimization problem, retained when spec.keep_internals is set.
struct GamInternals {
  Eigen::MatrixXd design;   // n x P
  Eigen::MatrixXd penalty;  // P x P at the chosen lambdas
  Eigen::VectorXd beta;     // P
  Eigen::VectorXd y;
  std::vector<double> objective_trace;  // penalized loglik per accepted step
};

struct GamFit {
  double intercept = 0.0;
  std::vector<LinearTermFit> linear_terms;
  std::vector<SmoothTermFit> smooth_terms;
  double log_likelihood = 0.0;  // unpenalized, at the fitted coefficients
  bool separation_warning = false;
  Eigen::VectorXd feature_mean, feature_scale;  // per smooth feature column
  std::optional<GamInternals> internals;

  // p-values ordered smooth terms first, then linear terms.
  std::vector<double> term_pvalues() const;
};

// One smooth term per column of `features`; linear terms for columns of `z`.
GamFit fit_gam(const Eigen::MatrixXd& features, const Eigen::MatrixXd& z,
               const Eigen::VectorXi& y, const GamSpec& spec = {},
               const std::vector<std::string>& feature_labels = {});

double predict(const GamFit& fit, const Eigen::VectorXd& feature_row,
               const Eigen::VectorXd& z_row);
Eigen::VectorXd predict_all(const GamFit& fit, const Eigen::MatrixXd& features,
                            const Eigen::MatrixXd& z);

// Bernoulli log likelihood with probabilities clamped to [1e-12, 1-1e-12].
double log_likelihood(const Eigen::VectorXd& probabilities,
                      const Eigen::VectorXi& y);

// Centered smooth contribution (and standard error) for one term at a raw
// feature value.
double smooth_value(const GamFit& fit, int term, double x_raw,
                    double* se = nullptr);

// Penalized objective and analytic gradient for diagnostics and tests.
double penalized_loglik(const GamInternals& prob, const Eigen::VectorXd& beta);
Eigen::VectorXd penalized_gradient(const GamInternals& prob,
                                   const Eigen::VectorXd& beta);

void save_fit_json(const GamFit& fit, const std::string& path,
                   const std::string& note = "");
void save_smooth_grids(const GamFit& fit, const std::string& path,
                       int grid_points = 100,
                       const std::string& header_comment = "");

}  // namespace xwf
