#include "xwf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "xwf/csv.hpp"
#include "xwf/rng.hpp"

namespace xwf {

namespace {

Eigen::VectorXd term_pvalue_vector(const GamFit& fit) {
  auto ps = fit.term_pvalues();
  return Eigen::Map<const Eigen::VectorXd>(ps.data(),
                                           static_cast<Eigen::Index>(ps.size()));
}

std::vector<std::string> gam_term_labels(
    const std::vector<std::string>& smooth_labels, Eigen::Index q) {
  std::vector<std::string> labels = smooth_labels;
  for (Eigen::Index j = 0; j < q; ++j) {
    labels.push_back("z" + std::to_string(j + 1));
  }
  return labels;
}

}  // namespace

Pipeline xwf_pipeline(const std::vector<SubjectQuadrature>& quads,
                      const Eigen::MatrixXd& z, const SearchOptions& options) {
  Pipeline p;
  std::vector<std::string> smooth_labels;
  for (int j = 0; j < kNumLocalFeatures; ++j) {
    smooth_labels.push_back(feature_label(j, Side::left));
  }
  for (int j = 0; j < kNumLocalFeatures; ++j) {
    smooth_labels.push_back(feature_label(j, Side::right));
  }
  p.labels = gam_term_labels(smooth_labels, z.cols());
  p.pvalues = [&quads, z, options](const Eigen::VectorXi& y) {
    auto res = adaptive_grid_search(xwf_feature_source(quads), z, y, options);
    return term_pvalue_vector(res.fit);
  };
  return p;
}

Pipeline arv_pipeline(const Eigen::VectorXd& arv_values,
                      const Eigen::MatrixXd& z, const GamSpec& spec) {
  Pipeline p;
  p.labels = gam_term_labels({"arv"}, z.cols());
  Eigen::MatrixXd features = arv_values;
  p.pvalues = [features, z, spec](const Eigen::VectorXi& y) {
    return term_pvalue_vector(fit_gam(features, z, y, spec, {"arv"}));
  };
  return p;
}

Pipeline spectrum_pipeline(const SpectrumFeatures& spectra,
                           const Eigen::MatrixXd& z,
                           const PcaOptions& pca_options, const GamSpec& spec) {
  Pipeline p;
  std::vector<std::string> pc_labels;
  for (int j = 0; j < pca_options.components; ++j) {
    pc_labels.push_back("PC" + std::to_string(j + 1));
  }
  p.labels = gam_term_labels(pc_labels, z.cols());
  p.pvalues = [&spectra, z, pca_options, spec,
               pc_labels](const Eigen::VectorXi& y) {
    auto pcs = supervised_pca(spectra, y, pca_options);
    return term_pvalue_vector(fit_gam(pcs.scores, z, y, spec, pc_labels));
  };
  return p;
}

void PermutationResult::validate() const {
  Eigen::Index t = observed.size();
  if (static_cast<Eigen::Index>(term_labels.size()) != t ||
      calibrated.size() != t || null_pvalues.cols() != t ||
      null_pvalues.rows() != replicates) {
    throw Error(ErrorKind::validation, "permutation: inconsistent dimensions");
  }
  for (Eigen::Index k = 0; k < t; ++k) {
    if (!(calibrated(k) > 0 && calibrated(k) <= 1)) {
      throw Error(ErrorKind::validation,
                  "permutation: calibrated p outside (0, 1]");
    }
  }
}

PermutationResult randomization_test(const Pipeline& pipeline,
                                     const Eigen::VectorXi& y, int replicates,
                                     std::uint64_t seed) {
  if (replicates < 19) {
    throw Error(ErrorKind::validation,
                "randomization test: need at least 19 replicates");
  }
  if (pipeline.labels.empty() || !pipeline.pvalues) {
    throw Error(ErrorKind::validation, "randomization test: empty pipeline");
  }

  PermutationResult res;
  res.term_labels = pipeline.labels;
  res.replicates = replicates;
  res.seed = seed;
  res.observed = pipeline.pvalues(y);
  Eigen::Index t = res.observed.size();
  if (t != static_cast<Eigen::Index>(pipeline.labels.size())) {
    throw Error(ErrorKind::validation,
                "randomization test: label/p-value count mismatch");
  }

  res.null_pvalues.resize(replicates, t);
  std::vector<int> pool(y.data(), y.data() + y.size());
  for (int r = 0; r < replicates; ++r) {
    bool done = false;
    for (int attempt = 0; attempt <= 3 && !done; ++attempt) {
      RngStream rng(seed, static_cast<std::uint64_t>(r + 1),
                    static_cast<std::uint64_t>(attempt));
      std::vector<int> shuffled = pool;
      rng.shuffle(shuffled);
      Eigen::VectorXi perm =
          Eigen::Map<const Eigen::VectorXi>(shuffled.data(), y.size());
      try {
        Eigen::VectorXd row = pipeline.pvalues(perm);
        if (row.size() != t) {
          throw Error(ErrorKind::validation,
                      "randomization test: replicate p-value count changed");
        }
        res.null_pvalues.row(r) = row.transpose();
        done = true;
      } catch (const Error&) {
      }
    }
    if (!done) {
      res.null_pvalues.row(r).setZero();
      ++res.failed_replicates;
    }
  }

  res.calibrated.resize(t);
  for (Eigen::Index k = 0; k < t; ++k) {
    int count = 0;
    for (int r = 0; r < replicates; ++r) {
      if (res.null_pvalues(r, k) <= res.observed(k)) ++count;
    }
    res.calibrated(k) = (1.0 + count) / (replicates + 1.0);
  }
  res.validate();
  return res;
}

void save_permutation_json(const PermutationResult& result,
                           const std::string& path, const std::string& note) {
  nlohmann::json j;
  if (!note.empty()) j["note"] = note;
  j["replicates"] = result.replicates;
  j["seed"] = result.seed;
  j["failed_replicates"] = result.failed_replicates;
  nlohmann::json terms = nlohmann::json::array();
  for (size_t k = 0; k < result.term_labels.size(); ++k) {
    terms.push_back(
        {{"term", result.term_labels[k]},
         {"observed_internal_p", result.observed(static_cast<Eigen::Index>(k))},
         {"calibrated_p", result.calibrated(static_cast<Eigen::Index>(k))}});
  }
  j["terms"] = terms;
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::io, "cannot write " + path);
  }
  out << j.dump(2) << "\n";
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data,
                                             int n_pos_test, int n_neg_test,
                                             std::uint64_t seed) {
  if (n_pos_test < 0 || n_neg_test < 0) {
    throw Error(ErrorKind::validation, "split: negative test counts");
  }
  std::vector<int> pos, neg;
  for (Eigen::Index i = 0; i < data.outcomes.size(); ++i) {
    (data.outcomes(i) == 1 ? pos : neg).push_back(static_cast<int>(i));
  }
  if (static_cast<int>(pos.size()) < n_pos_test) {
    throw Error(ErrorKind::validation,
                "split: need " + std::to_string(n_pos_test) +
                    " positive test subjects, dataset has " +
                    std::to_string(pos.size()));
  }
  if (static_cast<int>(neg.size()) < n_neg_test) {
    throw Error(ErrorKind::validation,
                "split: need " + std::to_string(n_neg_test) +
                    " negative test subjects, dataset has " +
                    std::to_string(neg.size()));
  }

  RngStream rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<int> test_idx(pos.begin(), pos.begin() + n_pos_test);
  test_idx.insert(test_idx.end(), neg.begin(), neg.begin() + n_neg_test);
  std::vector<int> train_idx(pos.begin() + n_pos_test, pos.end());
  train_idx.insert(train_idx.end(), neg.begin() + n_neg_test, neg.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {data.subset(train_idx), data.subset(test_idx)};
}

double auc(const Eigen::VectorXd& scores, const Eigen::VectorXi& labels) {
  Eigen::Index n = scores.size();
  if (labels.size() != n || n == 0) {
    throw Error(ErrorKind::validation, "auc: size mismatch");
  }
  Eigen::Index npos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != 0 && labels(i) != 1) {
      throw Error(ErrorKind::validation, "auc: labels must be 0/1");
    }
    npos += labels(i);
  }
  if (npos == 0 || npos == n) {
    throw Error(ErrorKind::validation, "auc: both classes required");
  }

  // Average ranks with ties shared equally; Mann-Whitney identity.
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores(a) < scores(b); });
  std::vector<double> rank(static_cast<size_t>(n));
  size_t k = 0;
  while (k < order.size()) {
    size_t j = k;
    while (j + 1 < order.size() &&
           scores(order[j + 1]) == scores(order[k])) {
      ++j;
    }
    double avg = (static_cast<double>(k) + static_cast<double>(j)) / 2 + 1;
    for (size_t a = k; a <= j; ++a) rank[static_cast<size_t>(order[a])] = avg;
    k = j + 1;
  }
  double rank_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) == 1) rank_sum += rank[static_cast<size_t>(i)];
  }
  double np = static_cast<double>(npos);
  double nn = static_cast<double>(n - npos);
  return (rank_sum - np * (np + 1) / 2) / (np * nn);
}

void save_auc_report(const std::vector<AucRow>& rows, const std::string& path,
                     const std::string& header_comment) {
  CsvWriter out(path);
  if (!header_comment.empty()) out.comment(header_comment);
  out.row({"split", "model", "auc"});
  for (const auto& r : rows) {
    out.row({std::to_string(r.split), r.model, format_double(r.value)});
  }
  out.close();
}

}  // namespace xwf
