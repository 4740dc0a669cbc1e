#include "xwf/gam.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>

#include "xwf/csv.hpp"
#include "xwf/splines.hpp"

namespace xwf {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kWeightFloor = 1e-10;
constexpr double kSeparationEta = 30.0;

double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

double chi_sq_upper_p(double nu, double t) {
  if (!(t > 0)) return 1.0;
  return boost::math::gamma_q(nu / 2.0, t / 2.0);
}

// Per-term design/penalty block within the assembled problem.
struct TermBlock {
  int feature = -1;  // source feature column
  int offset = 0;    // first coefficient index
  int size = 0;
  BSplineBasis basis{0.0, 1.0, 4};
  Eigen::MatrixXd constraint_null;  // K x (K-1)
  Eigen::MatrixXd penalty;          // scaled, (K-1) x (K-1)
};

struct Assembled {
  Eigen::MatrixXd X;
  Eigen::VectorXd yv;
  std::vector<TermBlock> blocks;  // one per non-degenerate smooth
  int q = 0;                      // linear terms
  int P = 0;
};

Eigen::MatrixXd total_penalty(const Assembled& a,
                              const std::vector<double>& lambdas) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(a.P, a.P);
  for (size_t m = 0; m < a.blocks.size(); ++m) {
    const auto& b = a.blocks[m];
    S.block(b.offset, b.offset, b.size, b.size) +=
        lambdas[m] * b.penalty;
  }
  return S;
}

double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double p = clamp_prob(logistic(eta(i)));
    ll += y(i) * std::log(p) + (1 - y(i)) * std::log(1 - p);
  }
  return ll;
}

struct PirlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  Eigen::VectorXd w;      // working weights at beta
  Eigen::VectorXd zwork;  // working response at beta
  std::vector<double> trace;
  bool plateaued = false;  // stopped on step-halving exhaustion
};

PirlsResult run_pirls(const Assembled& a, const Eigen::MatrixXd& S,
                      const GamSpec& spec, const Eigen::VectorXd* beta0) {
  Eigen::Index n = a.X.rows();
  Eigen::VectorXd beta =
      beta0 ? *beta0 : Eigen::VectorXd::Zero(a.P);
  Eigen::VectorXd eta = a.X * beta;
  double obj = bernoulli_loglik(eta, a.yv) - 0.5 * beta.dot(S * beta);
  PirlsResult res;
  res.trace.push_back(obj);

  Eigen::VectorXd w(n), zwork(n);
  // Newton converges quadratically near the optimum; requiring two
  // consecutive sub-tolerance improvements drives the gradient to ~0.
  int quiet_steps = 0;
  bool converged = false;
  for (int iter = 0; iter < spec.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = logistic(eta(i));
      double wi = std::max(mu * (1 - mu), kWeightFloor);
      w(i) = wi;
      zwork(i) = eta(i) + (a.yv(i) - mu) / wi;
    }
    Eigen::MatrixXd A = a.X.transpose() * w.asDiagonal() * a.X;
    Eigen::VectorXd r = a.X.transpose() * (w.asDiagonal() * zwork);
    Eigen::MatrixXd H = A + S;
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    Eigen::VectorXd beta_new;
    if (llt.info() == Eigen::Success) {
      beta_new = llt.solve(r);
    } else {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
      if (ldlt.info() != Eigen::Success) {
        throw Error(ErrorKind::convergence,
                    "gam: singular penalized system (iteration " +
                        std::to_string(iter) + ")");
      }
      beta_new = ldlt.solve(r);
    }

    // Step-halving keeps the penalized objective monotone.
    Eigen::VectorXd step = beta_new - beta;
    double obj_new = 0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      Eigen::VectorXd cand = beta + step;
      Eigen::VectorXd eta_cand = a.X * cand;
      obj_new = bernoulli_loglik(eta_cand, a.yv) - 0.5 * cand.dot(S * cand);
      if (obj_new >= obj - 1e-12 * (1 + std::abs(obj))) {
        beta = cand;
        eta = eta_cand;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Step-halving exhausted: numerical optimum (or likelihood plateau).
      res.plateaued = true;
      converged = true;
      break;
    }
    res.trace.push_back(obj_new);
    double change = std::abs(obj_new - obj);
    obj = obj_new;
    if (change <= spec.tolerance * (1 + std::abs(obj))) {
      if (++quiet_steps >= 2) {
        converged = true;
        break;
      }
    } else {
      quiet_steps = 0;
    }
  }
  if (!converged) {
    double dev = -2 * bernoulli_loglik(eta, a.yv);
    throw Error(ErrorKind::convergence,
                "gam: no convergence after " +
                    std::to_string(spec.max_iterations) +
                    " iterations, deviance " + format_double(dev));
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    double mu = logistic(eta(i));
    double wi = std::max(mu * (1 - mu), kWeightFloor);
    w(i) = wi;
    zwork(i) = eta(i) + (a.yv(i) - mu) / wi;
  }
  res.beta = beta;
  res.eta = eta;
  res.w = w;
  res.zwork = zwork;
  return res;
}

// One coordinate-descent pass of smoothing selection over the lambda grid,
// holding the working weights and response fixed at the current fit. The
// score is the known-dispersion UBRE/Cp form, working RSS + 2*gamma*edf:
// Bernoulli responses fix the scale at 1, and the additive edf charge stays
// in control when quasi-separation drives the weighted RSS itself to zero
// (a ratio-form score degenerates there and picks the smallest lambda for
// every term).
bool gcv_pass(const Assembled& a, const PirlsResult& fit, const GamSpec& spec,
              std::vector<double>& lambdas) {
  Eigen::Index n = a.X.rows();
  Eigen::MatrixXd A = a.X.transpose() * fit.w.asDiagonal() * a.X;
  Eigen::VectorXd r = a.X.transpose() * (fit.w.asDiagonal() * fit.zwork);
  double zwz = fit.zwork.dot(fit.w.asDiagonal() * fit.zwork);

  // Candidates are scanned from the largest lambda down and must beat the
  // incumbent by a relative margin, so near-flat score profiles resolve to
  // the smoothest fit.
  std::vector<double> grid = spec.lambda_grid;
  std::sort(grid.begin(), grid.end(), std::greater<double>());

  bool changed = false;
  for (size_t m = 0; m < a.blocks.size(); ++m) {
    double best_gcv = std::numeric_limits<double>::infinity();
    double best_lambda = lambdas[m];
    for (double cand : grid) {
      std::vector<double> trial = lambdas;
      trial[m] = cand;
      Eigen::MatrixXd H = A + total_penalty(a, trial);
      Eigen::LLT<Eigen::MatrixXd> llt(H);
      if (llt.info() != Eigen::Success) continue;
      Eigen::VectorXd beta = llt.solve(r);
      double edf = llt.solve(A).trace();
      if (edf >= static_cast<double>(n)) continue;
      double rss = zwz - 2 * beta.dot(r) + beta.dot(A * beta);
      rss = std::max(rss, 0.0);
      double gcv = rss + 2.0 * spec.gcv_gamma * edf;
      if (gcv * (1 + 1e-7) < best_gcv) {
        best_gcv = gcv;
        best_lambda = cand;
      }
    }
    if (best_lambda != lambdas[m]) {
      lambdas[m] = best_lambda;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

void GamSpec::validate() const {
  if (basis_size < 4) {
    throw Error(ErrorKind::validation, "gam spec: basis_size must be >= 4");
  }
  if (penalty_order < 1 || penalty_order >= basis_size) {
    throw Error(ErrorKind::validation, "gam spec: bad penalty_order");
  }
  if (!(tolerance > 0)) {
    throw Error(ErrorKind::validation, "gam spec: tolerance must be positive");
  }
  if (lambda_grid.empty()) {
    throw Error(ErrorKind::validation, "gam spec: empty lambda grid");
  }
  if (!(gcv_gamma >= 1.0)) {
    throw Error(ErrorKind::validation, "gam spec: gcv_gamma must be >= 1");
  }
  for (double l : lambda_grid) {
    if (!(l > 0)) {
      throw Error(ErrorKind::validation, "gam spec: lambdas must be positive");
    }
  }
  if (max_iterations < 1 || gcv_cycles < 0) {
    throw Error(ErrorKind::validation, "gam spec: bad iteration counts");
  }
}

std::vector<double> GamFit::term_pvalues() const {
  std::vector<double> p;
  for (const auto& s : smooth_terms) p.push_back(s.pvalue);
  for (const auto& l : linear_terms) p.push_back(l.pvalue);
  return p;
}

GamFit fit_gam(const Eigen::MatrixXd& features, const Eigen::MatrixXd& z,
               const Eigen::VectorXi& y, const GamSpec& spec,
               const std::vector<std::string>& feature_labels) {
  spec.validate();
  Eigen::Index n = y.size();
  Eigen::Index m = features.cols();
  Eigen::Index q = z.cols();
  if (features.rows() != n || (q > 0 && z.rows() != n)) {
    throw Error(ErrorKind::validation, "gam: row counts disagree");
  }
  if (n < 2 || y.minCoeff() == y.maxCoeff()) {
    throw Error(ErrorKind::validation, "gam: need both outcome classes");
  }
  if (!features.allFinite() || (q > 0 && !z.allFinite())) {
    throw Error(ErrorKind::validation, "gam: non-finite inputs");
  }

  GamFit out;
  out.feature_mean.resize(m);
  out.feature_scale.resize(m);
  Eigen::MatrixXd std_features(n, m);
  std::vector<bool> degenerate(static_cast<size_t>(m), false);
  for (Eigen::Index j = 0; j < m; ++j) {
    double mean = features.col(j).mean();
    double sd = std::sqrt((features.col(j).array() - mean).square().sum() /
                          static_cast<double>(n));
    out.feature_mean(j) = mean;
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      degenerate[static_cast<size_t>(j)] = true;
      out.feature_scale(j) = 1.0;
      std_features.col(j).setZero();
    } else {
      out.feature_scale(j) = sd;
      std_features.col(j) = (features.col(j).array() - mean) / sd;
    }
  }

  // Assemble: intercept, linear z columns, then constrained spline blocks.
  Assembled a;
  a.q = static_cast<int>(q);
  a.yv = y.cast<double>();
  int K = spec.basis_size;
  int P = 1 + static_cast<int>(q);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!degenerate[static_cast<size_t>(j)]) P += K - 1;
  }
  a.P = P;
  a.X.resize(n, P);
  a.X.col(0).setOnes();
  if (q > 0) a.X.middleCols(1, q) = z;

  Eigen::MatrixXd S_raw = difference_penalty(K, spec.penalty_order);
  int offset = 1 + static_cast<int>(q);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (degenerate[static_cast<size_t>(j)]) continue;
    TermBlock blk;
    blk.feature = static_cast<int>(j);
    blk.offset = offset;
    blk.size = K - 1;
    double lo = std_features.col(j).minCoeff();
    double hi = std_features.col(j).maxCoeff();
    blk.basis = BSplineBasis(lo, hi, K);
    Eigen::MatrixXd B = blk.basis.design(std_features.col(j));
    // Sum-to-zero over training points: coefficients restricted to the
    // orthogonal complement of B' 1.
    Eigen::VectorXd c = B.colwise().sum().transpose();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
    Eigen::MatrixXd Qfull = qr.householderQ();
    blk.constraint_null = Qfull.rightCols(K - 1);
    Eigen::MatrixXd Xm = B * blk.constraint_null;
    Eigen::MatrixXd Sm = blk.constraint_null.transpose() * S_raw * blk.constraint_null;
    double scale = (Xm.transpose() * Xm).trace() / Sm.trace();
    blk.penalty = scale * Sm;
    a.X.middleCols(offset, K - 1) = Xm;
    a.blocks.push_back(std::move(blk));
    offset += K - 1;
  }

  std::vector<double> lambdas(a.blocks.size(), 1.0);
  if (!spec.init_lambdas.empty()) {
    if (spec.init_lambdas.size() != static_cast<size_t>(m)) {
      throw Error(ErrorKind::validation,
                  "gam: init_lambdas must have one entry per feature");
    }
    for (size_t b = 0; b < a.blocks.size(); ++b) {
      lambdas[b] = spec.init_lambdas[static_cast<size_t>(a.blocks[b].feature)];
    }
  }

  PirlsResult fit;
  for (int cycle = 0; cycle <= spec.gcv_cycles; ++cycle) {
    Eigen::MatrixXd S = total_penalty(a, lambdas);
    const Eigen::VectorXd* warm = cycle > 0 ? &fit.beta : nullptr;
    fit = run_pirls(a, S, spec, warm);
    if (cycle == spec.gcv_cycles) break;
    if (!a.blocks.empty()) {
      bool changed = gcv_pass(a, fit, spec, lambdas);
      if (!changed) break;
    } else {
      break;
    }
  }

  Eigen::MatrixXd S = total_penalty(a, lambdas);
  Eigen::MatrixXd A = a.X.transpose() * fit.w.asDiagonal() * a.X;
  Eigen::MatrixXd H = A + S;
  Eigen::LDLT<Eigen::MatrixXd> hs(H);
  if (hs.info() != Eigen::Success) {
    throw Error(ErrorKind::convergence, "gam: singular information matrix");
  }
  Eigen::MatrixXd M = hs.solve(A);  // EDF contributions
  Eigen::MatrixXd V = hs.solve(Eigen::MatrixXd::Identity(a.P, a.P));

  out.intercept = fit.beta(0);
  out.log_likelihood = bernoulli_loglik(fit.eta, a.yv);
  out.separation_warning = fit.eta.cwiseAbs().minCoeff() > kSeparationEta;

  for (Eigen::Index jq = 0; jq < q; ++jq) {
    LinearTermFit lt;
    lt.label = "z" + std::to_string(jq + 1);
    lt.coef = fit.beta(1 + jq);
    lt.se = std::sqrt(std::max(V(1 + jq, 1 + jq), 0.0));
    lt.pvalue = lt.se > 0 ? normal_two_sided_p(lt.coef / lt.se) : 1.0;
    out.linear_terms.push_back(std::move(lt));
  }

  size_t block_idx = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    SmoothTermFit st;
    st.label = feature_labels.size() > static_cast<size_t>(j)
                   ? feature_labels[static_cast<size_t>(j)]
                   : "s" + std::to_string(j + 1);
    if (degenerate[static_cast<size_t>(j)]) {
      st.degenerate = true;
      st.pvalue = 1.0;
      st.lambda = 1.0;
      out.smooth_terms.push_back(std::move(st));
      continue;
    }
    const auto& blk = a.blocks[block_idx];
    st.lambda = lambdas[block_idx];
    st.coefs = fit.beta.segment(blk.offset, blk.size);
    st.constraint_null = blk.constraint_null;
    st.cov = V.block(blk.offset, blk.offset, blk.size, blk.size);
    st.x_lo = blk.basis.lo();
    st.x_hi = blk.basis.hi();
    st.edf = M.block(blk.offset, blk.offset, blk.size, blk.size).trace();

    // Wald test against a chi-square with edf degrees of freedom, using the
    // penalized covariance truncated to that effective rank.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.cov);
    if (eig.info() != Eigen::Success) {
      st.degenerate = true;
      st.pvalue = 1.0;
    } else {
      Eigen::VectorXd d = eig.eigenvalues().reverse();
      Eigen::MatrixXd U = eig.eigenvectors().rowwise().reverse();
      double d_max = d.maxCoeff();
      double nu = std::max(st.edf, 1e-6);
      int full = static_cast<int>(std::floor(nu));
      double frac = nu - full;
      double t_stat = 0;
      bool singular = d_max <= 0;
      for (int k = 0; k < std::min<int>(full + (frac > 0 ? 1 : 0), blk.size);
           ++k) {
        if (d(k) <= 1e-12 * d_max) {
          singular = true;
          break;
        }
        double proj = U.col(k).dot(st.coefs);
        double share = k < full ? 1.0 : frac;
        t_stat += share * proj * proj / d(k);
      }
      if (singular) {
        st.degenerate = true;
        st.pvalue = 1.0;
      } else {
        st.pvalue = chi_sq_upper_p(nu, t_stat);
      }
    }
    out.smooth_terms.push_back(std::move(st));
    ++block_idx;
  }

  if (spec.keep_internals) {
    GamInternals gi;
    gi.design = a.X;
    gi.penalty = S;
    gi.beta = fit.beta;
    gi.y = a.yv;
    gi.objective_trace = fit.trace;
    out.internals = std::move(gi);
  }
  return out;
}

double predict(const GamFit& fit, const Eigen::VectorXd& feature_row,
               const Eigen::VectorXd& z_row) {
  double eta = fit.intercept;
  for (size_t jq = 0; jq < fit.linear_terms.size(); ++jq) {
    eta += fit.linear_terms[jq].coef * z_row(static_cast<Eigen::Index>(jq));
  }
  for (size_t j = 0; j < fit.smooth_terms.size(); ++j) {
    eta += smooth_value(fit, static_cast<int>(j),
                        feature_row(static_cast<Eigen::Index>(j)));
  }
  return clamp_prob(logistic(eta));
}

Eigen::VectorXd predict_all(const GamFit& fit, const Eigen::MatrixXd& features,
                            const Eigen::MatrixXd& z) {
  Eigen::VectorXd p(features.rows());
  Eigen::VectorXd empty_z(0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    p(i) = predict(fit, features.row(i).transpose(),
                   z.cols() > 0 ? Eigen::VectorXd(z.row(i).transpose())
                                : empty_z);
  }
  return p;
}

double log_likelihood(const Eigen::VectorXd& probabilities,
                      const Eigen::VectorXi& y) {
  double ll = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double p = clamp_prob(probabilities(i));
    ll += y(i) ? std::log(p) : std::log(1 - p);
  }
  return ll;
}

double smooth_value(const GamFit& fit, int term, double x_raw, double* se) {
  const auto& st = fit.smooth_terms.at(static_cast<size_t>(term));
  if (st.degenerate && st.coefs.size() == 0) {
    if (se) *se = 0;
    return 0;
  }
  double x_std = (x_raw - fit.feature_mean(term)) / fit.feature_scale(term);
  x_std = std::clamp(x_std, st.x_lo, st.x_hi);
  BSplineBasis basis(st.x_lo, st.x_hi,
                     static_cast<int>(st.constraint_null.rows()));
  Eigen::VectorXd b = st.constraint_null.transpose() * basis.eval(x_std);
  if (se) *se = std::sqrt(std::max(0.0, b.dot(st.cov * b)));
  return b.dot(st.coefs);
}

double penalized_loglik(const GamInternals& prob, const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = prob.design * beta;
  return bernoulli_loglik(eta, prob.y) - 0.5 * beta.dot(prob.penalty * beta);
}

Eigen::VectorXd penalized_gradient(const GamInternals& prob,
                                   const Eigen::VectorXd& beta) {
  Eigen::VectorXd eta = prob.design * beta;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu(i) = logistic(eta(i));
  return prob.design.transpose() * (prob.y - mu) - prob.penalty * beta;
}

void save_fit_json(const GamFit& fit, const std::string& path,
                   const std::string& note) {
  nlohmann::json j;
  if (!note.empty()) j["note"] = note;
  j["intercept"] = fit.intercept;
  j["log_likelihood"] = fit.log_likelihood;
  j["separation_warning"] = fit.separation_warning;
  j["linear_terms"] = nlohmann::json::array();
  for (const auto& lt : fit.linear_terms) {
    j["linear_terms"].push_back({{"label", lt.label},
                                 {"coef", lt.coef},
                                 {"se", lt.se},
                                 {"pvalue", lt.pvalue}});
  }
  j["smooth_terms"] = nlohmann::json::array();
  for (const auto& st : fit.smooth_terms) {
    j["smooth_terms"].push_back({{"label", st.label},
                                 {"lambda", st.lambda},
                                 {"edf", st.edf},
                                 {"pvalue", st.pvalue},
                                 {"degenerate", st.degenerate}});
  }
  std::vector<double> means(fit.feature_mean.data(),
                            fit.feature_mean.data() + fit.feature_mean.size());
  std::vector<double> scales(fit.feature_scale.data(),
                             fit.feature_scale.data() + fit.feature_scale.size());
  j["feature_mean"] = means;
  j["feature_scale"] = scales;
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

void save_smooth_grids(const GamFit& fit, const std::string& path,
                       int grid_points, const std::string& header_comment) {
  CsvWriter w(path);
  if (!header_comment.empty()) w.comment(header_comment);
  w.row({"feature", "value", "fitted", "se"});
  for (size_t j = 0; j < fit.smooth_terms.size(); ++j) {
    const auto& st = fit.smooth_terms[j];
    if (st.degenerate && st.coefs.size() == 0) continue;
    auto ji = static_cast<Eigen::Index>(j);
    for (int k = 0; k < grid_points; ++k) {
      double x_std =
          st.x_lo + (st.x_hi - st.x_lo) * k / (grid_points - 1);
      double x_raw = fit.feature_mean(ji) + fit.feature_scale(ji) * x_std;
      double se = 0;
      double val = smooth_value(fit, static_cast<int>(j), x_raw, &se);
      w.row({st.label, format_double(x_raw), format_double(val),
             format_double(se)});
    }
  }
  w.close();
}

}  // namespace xwf
