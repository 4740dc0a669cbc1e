#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "xwf/trajectory.hpp"

namespace xwf {

// Sinusoid-plus-level design: frequency and level are latent uniforms, the
// outcome depends on frequency scaled by a capped level term.
struct FreqSimConfig {
  int n = 1000;
  int n_i = 500;  // samples per subject at t = 1..n_i seconds
  int q = 2;
  std::uint64_t seed = 0;
  void validate() const;
};

struct FreqSimLatents {
  Eigen::VectorXd phi;    // frequency, Uniform(0,1)
  Eigen::VectorXd level;  // m, Uniform(0,1)
  Eigen::VectorXd theta;  // 20 * phi * min(10 m, 7)
};

Dataset frequency_sim(const FreqSimConfig& config,
                      FreqSimLatents* latents = nullptr);

// Stationary AR(1) design: innovation variance (1 - phi^2) v keeps the
// marginal variance at v; the outcome rewards persistence above a threshold,
// weighted by time spent above the exceedance level.
struct ArSimConfig {
  int n = 1000;
  int n_i = 500;
  int q = 2;
  double var_lo = 1.0;
  double var_hi = 10.0;
  double persistence_threshold = 0.2;
  double exceedance_level = 2.0;
  double floor_probability = 0.01;
  std::uint64_t seed = 0;
  void validate() const;
};

struct ArSimLatents {
  Eigen::VectorXd phi;   // persistence, Uniform(0,1)
  Eigen::VectorXd v;     // marginal variance, Uniform(var_lo, var_hi)
  Eigen::VectorXi w;     // exceedance counts
  Eigen::VectorXd prob;  // outcome probability
};

Dataset ar_sim(const ArSimConfig& config, ArSimLatents* latents = nullptr);

// latents.csv schemas: subject_id,phi,m,theta and subject_id,phi,v,w,prob.
void save_latents(const Dataset& data, const FreqSimLatents& latents,
                  const std::string& path,
                  const std::string& header_comment = "");
void save_latents(const Dataset& data, const ArSimLatents& latents,
                  const std::string& path,
                  const std::string& header_comment = "");

}  // namespace xwf
