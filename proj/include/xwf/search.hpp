#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "xwf/features.hpp"
#include "xwf/gam.hpp"
#include "xwf/marginal.hpp"
#include "xwf/trajectory.hpp"

namespace xwf {

// Supplies one feature column per (local feature, side, weight value). The
// search swaps a single column at a time, so column construction should be
// cheap; the quadrature-backed source answers each query in O(n log n_i).
struct FeatureSource {
  int features = kNumLocalFeatures;  // p, between 1 and kNumLocalFeatures
  std::function<Eigen::VectorXd(int j, Side side, double b)> column;
};

FeatureSource xwf_feature_source(const std::vector<SubjectQuadrature>& quads);

struct SearchStep {
  int level = 0;    // 1-based refinement level
  int feature = 0;  // 0-based local feature index
  Side side = Side::left;
  std::string candidate;  // "keep", "down", or "up"
  double b_value = 0;
  double loglik = 0;  // -inf marks a failed fit
  bool chosen = false;
};

struct SearchTrace {
  std::vector<SearchStep> steps;
  double initial_loglik = 0;
  WeightParams final_params = WeightParams::defaults();
  double final_loglik = 0;
};

struct SearchOptions {
  int levels = 3;  // step at level l is 2^(-1-l); final resolution 2^(-1-levels)
  GamSpec gam;     // spec for every candidate fit

  void validate() const;
};

struct SearchResult {
  WeightParams params;
  GamFit fit;  // fit at params under SearchOptions::gam
  SearchTrace trace;
};

// Coordinate descent on the tail-weight parameters: per level and feature,
// tries keep/down/up for the left weight, moves to the best, then the same
// for the right weight. Ties keep the current value; candidates outside the
// weight domain are skipped; a failed candidate fit scores -inf.
SearchResult adaptive_grid_search(const FeatureSource& source,
                                  const Eigen::MatrixXd& z,
                                  const Eigen::VectorXi& y,
                                  const SearchOptions& options);

SearchResult adaptive_grid_search(const Dataset& data,
                                  const MarginalModel& marginal,
                                  const SearchOptions& options,
                                  int threads = 1);

void save_search_trace(const SearchTrace& trace, const std::string& path,
                       const std::string& header_comment = "");

}  // namespace xwf
