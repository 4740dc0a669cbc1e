#include "xwf/search.hpp"

#include <cmath>
#include <limits>

#include "xwf/csv.hpp"

namespace xwf {

namespace {

constexpr double kFailed = -std::numeric_limits<double>::infinity();

bool in_domain(double b, Side side) {
  return side == Side::left ? (b > 0.0 && b <= 0.5) : (b >= 0.5 && b < 1.0);
}

double fit_or_fail(const Eigen::MatrixXd& features, const Eigen::MatrixXd& z,
                   const Eigen::VectorXi& y, const GamSpec& spec,
                   const std::vector<std::string>& labels, GamFit* out) {
  try {
    GamFit fit = fit_gam(features, z, y, spec, labels);
    double ll = fit.log_likelihood;
    *out = std::move(fit);
    return ll;
  } catch (const Error&) {
    return kFailed;
  }
}

}  // namespace

FeatureSource xwf_feature_source(const std::vector<SubjectQuadrature>& quads) {
  FeatureSource src;
  src.features = kNumLocalFeatures;
  src.column = [&quads](int j, Side side, double b) {
    return xwf_column(quads, j, side, b);
  };
  return src;
}

void SearchOptions::validate() const {
  if (levels < 1) {
    throw Error(ErrorKind::validation, "search: levels must be >= 1");
  }
  gam.validate();
}

SearchResult adaptive_grid_search(const FeatureSource& source,
                                  const Eigen::MatrixXd& z,
                                  const Eigen::VectorXi& y,
                                  const SearchOptions& options) {
  options.validate();
  int p = source.features;
  if (p < 1 || p > kNumLocalFeatures) {
    throw Error(ErrorKind::validation, "search: feature count out of range");
  }

  WeightParams params = WeightParams::defaults();
  std::vector<std::string> labels;
  for (int j = 0; j < p; ++j) labels.push_back(feature_label(j, Side::left));
  for (int j = 0; j < p; ++j) labels.push_back(feature_label(j, Side::right));

  Eigen::MatrixXd features(y.size(), 2 * p);
  for (int j = 0; j < p; ++j) {
    features.col(j) = source.column(j, Side::left, params.at(j, Side::left));
    features.col(p + j) =
        source.column(j, Side::right, params.at(j, Side::right));
  }

  // The incumbent fit always corresponds to the current parameter vector, so
  // the "keep" candidate never needs refitting.
  GamFit incumbent = fit_gam(features, z, y, options.gam, labels);
  double inc_loglik = incumbent.log_likelihood;

  SearchResult res;
  res.trace.initial_loglik = inc_loglik;

  for (int level = 1; level <= options.levels; ++level) {
    double step = std::ldexp(1.0, -1 - level);
    for (int j = 0; j < p; ++j) {
      for (Side side : {Side::left, Side::right}) {
        int col = side == Side::left ? j : p + j;
        double cur = params.at(j, side);
        Eigen::VectorXd cur_col = features.col(col);

        size_t first_row = res.trace.steps.size();
        res.trace.steps.push_back(
            {level, j, side, "keep", cur, inc_loglik, false});

        double best_ll = inc_loglik;
        double best_b = cur;
        GamFit best_fit;
        Eigen::VectorXd best_col;
        bool moved = false;

        for (double offset : {-step, step}) {
          double cand = cur + offset;
          if (!in_domain(cand, side)) continue;
          Eigen::VectorXd cand_col = source.column(j, side, cand);
          features.col(col) = cand_col;
          GamFit fit;
          double ll = fit_or_fail(features, z, y, options.gam, labels, &fit);
          res.trace.steps.push_back({level, j, side,
                                     offset < 0 ? "down" : "up", cand, ll,
                                     false});
          if (ll > best_ll) {
            best_ll = ll;
            best_b = cand;
            best_fit = std::move(fit);
            best_col = std::move(cand_col);
            moved = true;
          }
        }

        // Unreachable while the incumbent fit is valid, but the contract
        // demands a hard stop if every candidate at a step fails.
        if (best_ll == kFailed) {
          throw Error(ErrorKind::convergence,
                      "search: all candidates failed at level " +
                          std::to_string(level));
        }

        if (moved) {
          params.at(j, side) = best_b;
          features.col(col) = best_col;
          incumbent = std::move(best_fit);
          inc_loglik = best_ll;
        } else {
          features.col(col) = cur_col;
        }
        for (size_t k = first_row; k < res.trace.steps.size(); ++k) {
          res.trace.steps[k].chosen = res.trace.steps[k].b_value == best_b;
        }
      }
    }
  }

  res.params = params;
  res.fit = std::move(incumbent);
  res.trace.final_params = params;
  res.trace.final_loglik = inc_loglik;
  return res;
}

SearchResult adaptive_grid_search(const Dataset& data,
                                  const MarginalModel& marginal,
                                  const SearchOptions& options, int threads) {
  auto quads = build_quadratures(data.trajectories, marginal, threads);
  return adaptive_grid_search(xwf_feature_source(quads), data.covariates,
                              data.outcomes, options);
}

void save_search_trace(const SearchTrace& trace, const std::string& path,
                       const std::string& header_comment) {
  CsvWriter out(path);
  if (!header_comment.empty()) out.comment(header_comment);
  out.row({"level", "feature", "side", "candidate", "b_value", "loglik",
           "chosen"});
  for (const auto& s : trace.steps) {
    out.row({std::to_string(s.level), std::to_string(s.feature + 1),
             to_string(s.side), s.candidate, format_double(s.b_value),
             format_double(s.loglik), s.chosen ? "1" : "0"});
  }
  out.close();
}

}  // namespace xwf
