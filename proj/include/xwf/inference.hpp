#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "xwf/baselines.hpp"
#include "xwf/features.hpp"
#include "xwf/gam.hpp"
#include "xwf/search.hpp"
#include "xwf/trajectory.hpp"

namespace xwf {

// A fitting procedure reduced to what the randomization test needs: fixed
// predictors, outcome vector in, internal per-term p-values out. Every
// outcome-dependent stage (weight search, screening, fitting) must live
// inside the closure so permuted outcomes rerun all of it.
struct Pipeline {
  std::vector<std::string> labels;
  std::function<Eigen::VectorXd(const Eigen::VectorXi& y)> pvalues;
};

Pipeline xwf_pipeline(const std::vector<SubjectQuadrature>& quads,
                      const Eigen::MatrixXd& z, const SearchOptions& options);
Pipeline arv_pipeline(const Eigen::VectorXd& arv_values,
                      const Eigen::MatrixXd& z, const GamSpec& spec);
Pipeline spectrum_pipeline(const SpectrumFeatures& spectra,
                           const Eigen::MatrixXd& z,
                           const PcaOptions& pca_options, const GamSpec& spec);

struct PermutationResult {
  std::vector<std::string> term_labels;
  Eigen::VectorXd observed;      // internal p-values on the original outcome
  Eigen::MatrixXd null_pvalues;  // replicates x terms
  Eigen::VectorXd calibrated;    // add-one rule, in (0, 1]
  int replicates = 0;
  std::uint64_t seed = 0;
  int failed_replicates = 0;  // exhausted retries, scored conservatively

  void validate() const;
};

// Permutes the outcome uniformly at random per replicate (sub-seeded, so the
// result is schedule independent), reruns the pipeline, and calibrates:
// calibrated[t] = (1 + #{r : null[r][t] <= observed[t]}) / (R + 1).
// A replicate whose fits keep failing after 3 retries scores 0 for every
// term, which can only push calibrated p-values up.
PermutationResult randomization_test(const Pipeline& pipeline,
                                     const Eigen::VectorXi& y, int replicates,
                                     std::uint64_t seed);

void save_permutation_json(const PermutationResult& result,
                           const std::string& path,
                           const std::string& note = "");

// Uniform without-replacement selection per class into the test set.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data,
                                             int n_pos_test, int n_neg_test,
                                             std::uint64_t seed);

// Probability a random positive outscores a random negative, ties half.
double auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels);

struct AucRow {
  int split = 0;
  std::string model;
  double value = 0;
};

void save_auc_report(const std::vector<AucRow>& rows, const std::string& path,
                     const std::string& header_comment = "");

}  // namespace xwf
