#include "xwf/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xwf/csv.hpp"
#include "xwf/rng.hpp"

namespace xwf {

namespace {

// Feature draws use sub-stream (seed, i+1, 0) and the outcome draw
// (seed, i+1, 1), so outcomes can be resolved after the population statistic
// without disturbing per-subject sequences, and generation order never
// matters.
constexpr std::uint64_t kFeatureStream = 0;
constexpr std::uint64_t kOutcomeStream = 1;

std::string subject_name(int i) { return "s" + std::to_string(i + 1); }

double median_of(Eigen::VectorXd values) {
  std::sort(values.data(), values.data() + values.size());
  Eigen::Index n = values.size();
  return n % 2 == 1 ? values(n / 2)
                    : 0.5 * (values(n / 2 - 1) + values(n / 2));
}

}  // namespace

void FreqSimConfig::validate() const {
  if (n < 2 || n_i < 2 || q < 0) {
    throw Error(ErrorKind::validation, "freq sim: bad dimensions");
  }
}

Dataset frequency_sim(const FreqSimConfig& config, FreqSimLatents* latents) {
  config.validate();
  Dataset d;
  d.covariates.resize(config.n, config.q);
  d.outcomes.resize(config.n);
  FreqSimLatents lat;
  lat.phi.resize(config.n);
  lat.level.resize(config.n);
  lat.theta.resize(config.n);

  for (int i = 0; i < config.n; ++i) {
    RngStream rng(config.seed, static_cast<std::uint64_t>(i + 1),
                  kFeatureStream);
    double phi = rng.uniform();
    double m = rng.uniform();
    for (int j = 0; j < config.q; ++j) d.covariates(i, j) = rng.normal();

    Trajectory traj;
    traj.subject_id = subject_name(i);
    traj.times.reserve(static_cast<size_t>(config.n_i));
    traj.values.reserve(static_cast<size_t>(config.n_i));
    for (int k = 1; k <= config.n_i; ++k) {
      traj.times.push_back(k);
      traj.values.push_back(std::sin(std::numbers::pi * phi * k / 25.0) +
                            10.0 * m);
    }
    d.trajectories.push_back(std::move(traj));

    lat.phi(i) = phi;
    lat.level(i) = m;
    lat.theta(i) = 20.0 * phi * std::min(10.0 * m, 7.0);
  }

  double center = median_of(lat.theta);
  for (int i = 0; i < config.n; ++i) {
    double p = 1.0 / (1.0 + std::exp(center - lat.theta(i)));
    RngStream rng(config.seed, static_cast<std::uint64_t>(i + 1),
                  kOutcomeStream);
    d.outcomes(i) = rng.uniform() < p ? 1 : 0;
  }

  d.validate();
  if (latents != nullptr) *latents = std::move(lat);
  return d;
}

void ArSimConfig::validate() const {
  if (n < 2 || n_i < 2 || q < 0) {
    throw Error(ErrorKind::validation, "ar sim: bad dimensions");
  }
  if (!(var_lo > 0) || !(var_hi >= var_lo)) {
    throw Error(ErrorKind::validation, "ar sim: bad variance bounds");
  }
  if (!(persistence_threshold > 0 && persistence_threshold < 1)) {
    throw Error(ErrorKind::validation, "ar sim: threshold outside (0, 1)");
  }
  if (!(floor_probability >= 0 && floor_probability < 1)) {
    throw Error(ErrorKind::validation, "ar sim: bad floor probability");
  }
}

Dataset ar_sim(const ArSimConfig& config, ArSimLatents* latents) {
  config.validate();
  Dataset d;
  d.covariates.resize(config.n, config.q);
  d.outcomes.resize(config.n);
  ArSimLatents lat;
  lat.phi.resize(config.n);
  lat.v.resize(config.n);
  lat.w.resize(config.n);
  lat.prob.resize(config.n);

  for (int i = 0; i < config.n; ++i) {
    RngStream rng(config.seed, static_cast<std::uint64_t>(i + 1),
                  kFeatureStream);
    double phi = rng.uniform();
    double v = rng.uniform(config.var_lo, config.var_hi);
    for (int j = 0; j < config.q; ++j) d.covariates(i, j) = rng.normal();

    Trajectory traj;
    traj.subject_id = subject_name(i);
    traj.times.reserve(static_cast<size_t>(config.n_i));
    traj.values.reserve(static_cast<size_t>(config.n_i));
    double innovation_sd = std::sqrt((1 - phi * phi) * v);
    double x = std::sqrt(v) * rng.normal();
    int exceed = x > config.exceedance_level ? 1 : 0;
    traj.times.push_back(1);
    traj.values.push_back(x);
    for (int k = 2; k <= config.n_i; ++k) {
      x = phi * x + innovation_sd * rng.normal();
      if (x > config.exceedance_level) ++exceed;
      traj.times.push_back(k);
      traj.values.push_back(x);
    }
    d.trajectories.push_back(std::move(traj));

    lat.phi(i) = phi;
    lat.v(i) = v;
    lat.w(i) = exceed;
  }

  int max_w = lat.w.maxCoeff();
  for (int i = 0; i < config.n; ++i) {
    double share = max_w > 0 ? static_cast<double>(lat.w(i)) / max_w : 0.0;
    double p = config.floor_probability +
               (1 - config.floor_probability) *
                   (lat.phi(i) > config.persistence_threshold ? share : 0.0);
    lat.prob(i) = p;
    RngStream rng(config.seed, static_cast<std::uint64_t>(i + 1),
                  kOutcomeStream);
    d.outcomes(i) = rng.uniform() < p ? 1 : 0;
  }

  d.validate();
  if (latents != nullptr) *latents = std::move(lat);
  return d;
}

void save_latents(const Dataset& data, const FreqSimLatents& latents,
                  const std::string& path,
                  const std::string& header_comment) {
  CsvWriter out(path);
  if (!header_comment.empty()) out.comment(header_comment);
  out.row({"subject_id", "phi", "m", "theta"});
  for (size_t i = 0; i < data.trajectories.size(); ++i) {
    Eigen::Index k = static_cast<Eigen::Index>(i);
    out.row({data.trajectories[i].subject_id, format_double(latents.phi(k)),
             format_double(latents.level(k)),
             format_double(latents.theta(k))});
  }
  out.close();
}

void save_latents(const Dataset& data, const ArSimLatents& latents,
                  const std::string& path,
                  const std::string& header_comment) {
  CsvWriter out(path);
  if (!header_comment.empty()) out.comment(header_comment);
  out.row({"subject_id", "phi", "v", "w", "prob"});
  for (size_t i = 0; i < data.trajectories.size(); ++i) {
    Eigen::Index k = static_cast<Eigen::Index>(i);
    out.row({data.trajectories[i].subject_id, format_double(latents.phi(k)),
             format_double(latents.v(k)), std::to_string(latents.w(k)),
             format_double(latents.prob(k))});
  }
  out.close();
}

}  // namespace xwf
