#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "xwf/error.hpp"

namespace xwf {

// One subject's irregularly sampled functional predictor on its own time
// domain. Times are seconds, strictly increasing, at least two samples.
struct Trajectory {
  std::string subject_id;
  std::vector<double> times;
  std::vector<double> values;

  size_t size() const { return times.size(); }
  double duration() const { return times.back() - times.front(); }
  void validate() const;
};

// Trajectories joined with per-subject covariates z (n x q) and binary
// outcomes y, all indexed consistently by subject.
struct Dataset {
  std::vector<Trajectory> trajectories;
  Eigen::MatrixXd covariates;
  Eigen::VectorXi outcomes;

  size_t size() const { return trajectories.size(); }
  Dataset subset(const std::vector<int>& indices) const;
  void validate() const;
};

struct CleaningPolicy {
  double value_min = 10.0;
  double value_max = 250.0;
  double max_gap = 300.0;        // seconds
  double min_duration = 1800.0;  // seconds
  void validate() const;
};

enum class RejectReason { none, gap, short_duration, empty };

const char* to_string(RejectReason r);

// Rejection is a normal outcome, not a failure.
struct CleanResult {
  bool kept = false;
  RejectReason reason = RejectReason::none;
  Trajectory trajectory;
};

CleanResult clean(const Trajectory& traj, const CleaningPolicy& policy);

// Inserts linearly interpolated samples so no inter-sample gap exceeds
// target_dt. Existing (t, x) pairs are preserved exactly; idempotent.
Trajectory fill_gaps(const Trajectory& traj, double target_dt);

// Per-sample slope estimate: central divided differences on interior points,
// one-sided at the two endpoints. Units are value per second.
std::vector<double> derivative(const Trajectory& traj);

// CSV schemas:
//   trajectories: subject_id,t_seconds,value   (rows in any order)
//   table:        subject_id,y,z1,...,zq       (q inferred from header)
Dataset load_dataset(const std::string& trajectory_path,
                     const std::string& table_path);
void save_dataset(const Dataset& data, const std::string& trajectory_path,
                  const std::string& table_path,
                  const std::string& header_comment = "");

struct CleaningReportRow {
  std::string subject_id;
  bool kept = false;
  RejectReason reason = RejectReason::none;
};

void write_cleaning_report(const std::string& path,
                           const std::vector<CleaningReportRow>& rows,
                           const std::string& header_comment = "");

// Cleans and gap-fills every trajectory, dropping rejected subjects from the
// dataset (covariates and outcomes stay aligned). Rejections are reported,
// not silently discarded.
Dataset apply_cleaning(const Dataset& data, const CleaningPolicy& policy,
                       double target_dt,
                       std::vector<CleaningReportRow>* report = nullptr);

}  // namespace xwf
