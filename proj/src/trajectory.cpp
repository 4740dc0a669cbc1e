#include "xwf/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "xwf/csv.hpp"

namespace xwf {

void Trajectory::validate() const {
  if (times.size() != values.size()) {
    throw Error(ErrorKind::validation,
                "trajectory " + subject_id + ": " +
                    std::to_string(times.size()) + " times vs " +
                    std::to_string(values.size()) + " values");
  }
  if (times.size() < 2) {
    throw Error(ErrorKind::validation,
                "trajectory " + subject_id + ": needs at least 2 samples, has " +
                    std::to_string(times.size()));
  }
  for (size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw Error(ErrorKind::validation,
                  "trajectory " + subject_id +
                      ": times not strictly increasing at index " +
                      std::to_string(k));
    }
  }
  for (size_t k = 0; k < times.size(); ++k) {
    if (!std::isfinite(times[k]) || !std::isfinite(values[k])) {
      throw Error(ErrorKind::validation,
                  "trajectory " + subject_id + ": non-finite sample at index " +
                      std::to_string(k));
    }
  }
}

Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.trajectories.reserve(indices.size());
  out.covariates.resize(static_cast<Eigen::Index>(indices.size()),
                        covariates.cols());
  out.outcomes.resize(static_cast<Eigen::Index>(indices.size()));
  for (size_t k = 0; k < indices.size(); ++k) {
    int i = indices[k];
    if (i < 0 || static_cast<size_t>(i) >= trajectories.size()) {
      throw Error(ErrorKind::validation,
                  "subset index " + std::to_string(i) + " out of range");
    }
    out.trajectories.push_back(trajectories[static_cast<size_t>(i)]);
    out.covariates.row(static_cast<Eigen::Index>(k)) = covariates.row(i);
    out.outcomes(static_cast<Eigen::Index>(k)) = outcomes(i);
  }
  return out;
}

void Dataset::validate() const {
  auto n = static_cast<Eigen::Index>(trajectories.size());
  if (covariates.rows() != n || outcomes.size() != n) {
    throw Error(ErrorKind::validation,
                "dataset: " + std::to_string(trajectories.size()) +
                    " trajectories, " + std::to_string(covariates.rows()) +
                    " covariate rows, " + std::to_string(outcomes.size()) +
                    " outcomes");
  }
  for (const auto& traj : trajectories) traj.validate();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (outcomes(i) != 0 && outcomes(i) != 1) {
      throw Error(ErrorKind::validation,
                  "outcome for subject " + trajectories[static_cast<size_t>(i)].subject_id +
                      " is " + std::to_string(outcomes(i)) + ", expected 0 or 1");
    }
  }
  if (!covariates.allFinite()) {
    throw Error(ErrorKind::validation, "dataset: non-finite covariate");
  }
}

void CleaningPolicy::validate() const {
  if (!(value_min < value_max)) {
    throw Error(ErrorKind::validation, "cleaning: value_min must be < value_max");
  }
  if (!(max_gap > 0) || !(min_duration > 0)) {
    throw Error(ErrorKind::validation,
                "cleaning: max_gap and min_duration must be positive");
  }
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::none: return "none";
    case RejectReason::gap: return "gap";
    case RejectReason::short_duration: return "short";
    case RejectReason::empty: return "empty";
  }
  return "unknown";
}

CleanResult clean(const Trajectory& traj, const CleaningPolicy& policy) {
  traj.validate();
  policy.validate();

  Trajectory kept;
  kept.subject_id = traj.subject_id;
  for (size_t k = 0; k < traj.size(); ++k) {
    double x = traj.values[k];
    if (x >= policy.value_min && x <= policy.value_max) {
      kept.times.push_back(traj.times[k]);
      kept.values.push_back(x);
    }
  }

  CleanResult res;
  // Reason precedence when several apply: empty, then gap, then short.
  if (kept.size() < 2) {
    res.reason = RejectReason::empty;
    return res;
  }
  for (size_t k = 1; k < kept.size(); ++k) {
    if (kept.times[k] - kept.times[k - 1] > policy.max_gap) {
      res.reason = RejectReason::gap;
      return res;
    }
  }
  if (kept.duration() < policy.min_duration) {
    res.reason = RejectReason::short_duration;
    return res;
  }
  res.kept = true;
  res.trajectory = std::move(kept);
  return res;
}

Trajectory fill_gaps(const Trajectory& traj, double target_dt) {
  traj.validate();
  if (!(target_dt > 0)) {
    throw Error(ErrorKind::validation, "fill_gaps: target_dt must be positive");
  }
  Trajectory out;
  out.subject_id = traj.subject_id;
  out.times.push_back(traj.times[0]);
  out.values.push_back(traj.values[0]);
  for (size_t k = 1; k < traj.size(); ++k) {
    double t0 = traj.times[k - 1], t1 = traj.times[k];
    double x0 = traj.values[k - 1], x1 = traj.values[k];
    double gap = t1 - t0;
    if (gap > target_dt) {
      // m interior points split the gap into m+1 pieces each <= target_dt.
      auto m = static_cast<long>(std::ceil(gap / target_dt)) - 1;
      for (long j = 1; j <= m; ++j) {
        double frac = static_cast<double>(j) / static_cast<double>(m + 1);
        out.times.push_back(t0 + frac * gap);
        out.values.push_back(x0 + frac * (x1 - x0));
      }
    }
    out.times.push_back(t1);
    out.values.push_back(x1);
  }
  return out;
}

std::vector<double> derivative(const Trajectory& traj) {
  traj.validate();
  size_t n = traj.size();
  const auto& t = traj.times;
  const auto& x = traj.values;
  std::vector<double> d(n);
  d[0] = (x[1] - x[0]) / (t[1] - t[0]);
  d[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
  for (size_t k = 1; k + 1 < n; ++k) {
    d[k] = (x[k + 1] - x[k - 1]) / (t[k + 1] - t[k - 1]);
  }
  return d;
}

namespace {

struct TableRow {
  int y = 0;
  std::vector<double> z;
};

}  // namespace

Dataset load_dataset(const std::string& trajectory_path,
                     const std::string& table_path) {
  // Subject table first: defines the expected subject set and q.
  std::vector<std::string> subject_order;
  std::unordered_map<std::string, TableRow> table;
  size_t q = 0;
  {
    CsvReader reader(table_path);
    auto header = reader.next();
    if (!header || header->size() < 2 || (*header)[0] != "subject_id" ||
        (*header)[1] != "y") {
      throw Error(ErrorKind::parse,
                  table_path + ": expected header subject_id,y,z1,...");
    }
    q = header->size() - 2;
    while (auto row = reader.next()) {
      if (row->size() != q + 2) {
        throw Error(ErrorKind::parse,
                    table_path + ":" + std::to_string(reader.line()) +
                        ": expected " + std::to_string(q + 2) + " fields, got " +
                        std::to_string(row->size()));
      }
      const std::string& id = (*row)[0];
      if (table.count(id)) {
        throw Error(ErrorKind::join,
                    table_path + ": duplicate subject_id " + id);
      }
      TableRow tr;
      tr.y = static_cast<int>(parse_long((*row)[1], table_path, reader.line()));
      tr.z.reserve(q);
      for (size_t j = 0; j < q; ++j) {
        tr.z.push_back(parse_double((*row)[j + 2], table_path, reader.line()));
      }
      subject_order.push_back(id);
      table.emplace(id, std::move(tr));
    }
  }

  // Trajectory samples accumulate per subject; (t, x) sorted per subject
  // afterwards since row order is unconstrained.
  std::unordered_map<std::string, std::vector<std::pair<double, double>>> samples;
  {
    CsvReader reader(trajectory_path);
    auto header = reader.next();
    if (!header || header->size() != 3 || (*header)[0] != "subject_id" ||
        (*header)[1] != "t_seconds" || (*header)[2] != "value") {
      throw Error(ErrorKind::parse,
                  trajectory_path + ": expected header subject_id,t_seconds,value");
    }
    while (auto row = reader.next()) {
      if (row->size() != 3) {
        throw Error(ErrorKind::parse,
                    trajectory_path + ":" + std::to_string(reader.line()) +
                        ": expected 3 fields, got " +
                        std::to_string(row->size()));
      }
      const std::string& id = (*row)[0];
      if (!table.count(id)) {
        throw Error(ErrorKind::join,
                    trajectory_path + ":" + std::to_string(reader.line()) +
                        ": subject " + id + " has no table row");
      }
      double t = parse_double((*row)[1], trajectory_path, reader.line());
      double x = parse_double((*row)[2], trajectory_path, reader.line());
      samples[id].emplace_back(t, x);
    }
  }

  Dataset data;
  data.trajectories.reserve(subject_order.size());
  data.covariates.resize(static_cast<Eigen::Index>(subject_order.size()),
                         static_cast<Eigen::Index>(q));
  data.outcomes.resize(static_cast<Eigen::Index>(subject_order.size()));
  for (size_t i = 0; i < subject_order.size(); ++i) {
    const std::string& id = subject_order[i];
    auto it = samples.find(id);
    if (it == samples.end()) {
      throw Error(ErrorKind::join, "subject " + id + " has no trajectory rows");
    }
    auto& pairs = it->second;
    std::sort(pairs.begin(), pairs.end());
    for (size_t k = 1; k < pairs.size(); ++k) {
      if (pairs[k].first == pairs[k - 1].first) {
        throw Error(ErrorKind::validation,
                    "subject " + id + ": duplicate timestamp " +
                        format_double(pairs[k].first));
      }
    }
    Trajectory traj;
    traj.subject_id = id;
    traj.times.reserve(pairs.size());
    traj.values.reserve(pairs.size());
    for (auto& [t, x] : pairs) {
      traj.times.push_back(t);
      traj.values.push_back(x);
    }
    traj.validate();
    data.trajectories.push_back(std::move(traj));
    const TableRow& tr = table.at(id);
    for (size_t j = 0; j < q; ++j) {
      data.covariates(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(j)) = tr.z[j];
    }
    data.outcomes(static_cast<Eigen::Index>(i)) = tr.y;
  }
  data.validate();
  return data;
}

void save_dataset(const Dataset& data, const std::string& trajectory_path,
                  const std::string& table_path,
                  const std::string& header_comment) {
  data.validate();
  {
    CsvWriter w(trajectory_path);
    if (!header_comment.empty()) w.comment(header_comment);
    w.row({"subject_id", "t_seconds", "value"});
    for (const auto& traj : data.trajectories) {
      for (size_t k = 0; k < traj.size(); ++k) {
        w.row({traj.subject_id, format_double(traj.times[k]),
               format_double(traj.values[k])});
      }
    }
    w.close();
  }
  {
    CsvWriter w(table_path);
    if (!header_comment.empty()) w.comment(header_comment);
    std::vector<std::string> header = {"subject_id", "y"};
    for (Eigen::Index j = 0; j < data.covariates.cols(); ++j) {
      header.push_back("z" + std::to_string(j + 1));
    }
    w.row(header);
    for (size_t i = 0; i < data.size(); ++i) {
      std::vector<std::string> row = {data.trajectories[i].subject_id,
                                      std::to_string(data.outcomes(
                                          static_cast<Eigen::Index>(i)))};
      for (Eigen::Index j = 0; j < data.covariates.cols(); ++j) {
        row.push_back(format_double(
            data.covariates(static_cast<Eigen::Index>(i), j)));
      }
      w.row(row);
    }
    w.close();
  }
}

void write_cleaning_report(const std::string& path,
                           const std::vector<CleaningReportRow>& rows,
                           const std::string& header_comment) {
  CsvWriter w(path);
  if (!header_comment.empty()) w.comment(header_comment);
  w.row({"subject_id", "status", "reason"});
  for (const auto& r : rows) {
    w.row({r.subject_id, r.kept ? "kept" : "rejected", to_string(r.reason)});
  }
  w.close();
}

Dataset apply_cleaning(const Dataset& data, const CleaningPolicy& policy,
                       double target_dt,
                       std::vector<CleaningReportRow>* report) {
  data.validate();
  std::vector<int> kept_indices;
  std::vector<Trajectory> kept_trajs;
  for (size_t i = 0; i < data.size(); ++i) {
    CleanResult res = clean(data.trajectories[i], policy);
    if (report) {
      report->push_back({data.trajectories[i].subject_id, res.kept, res.reason});
    }
    if (res.kept) {
      kept_indices.push_back(static_cast<int>(i));
      kept_trajs.push_back(fill_gaps(res.trajectory, target_dt));
    }
  }
  Dataset out = data.subset(kept_indices);
  out.trajectories = std::move(kept_trajs);
  return out;
}

}  // namespace xwf
