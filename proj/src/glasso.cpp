#include "wersig/glasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "wersig/errors.hpp"
#include "wersig/rng.hpp"
#include "wersig/union_find.hpp"

namespace wersig {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

double mean_abs_offdiag(const MatrixXd& s) {
  const Index n = s.rows();
  if (n < 2) return 0.0;
  const double total = s.cwiseAbs().sum() - s.diagonal().cwiseAbs().sum();
  return total / static_cast<double>(n * (n - 1));
}

MatrixXd submatrix(const MatrixXd& m, const std::vector<std::size_t>& idx) {
  const auto p = static_cast<Index>(idx.size());
  MatrixXd out(p, p);
  for (Index a = 0; a < p; ++a) {
    for (Index b = 0; b < p; ++b) out(a, b) = m(idx[a], idx[b]);
  }
  return out;
}

/// Column coefficients implied by a precision matrix: beta_{kj} = -theta_kj / theta_jj.
MatrixXd coefficients_from_theta(const MatrixXd& theta) {
  MatrixXd beta(theta.rows(), theta.cols());
  for (Index j = 0; j < theta.cols(); ++j) {
    beta.col(j) = -theta.col(j) / theta(j, j);
    beta(j, j) = 0.0;
  }
  return beta;
}

/// Precision from W and the last column coefficients. Entries are averaged
/// across the two columns that produce them; a pair is zero only when both
/// columns zeroed it.
MatrixXd theta_from_coefficients(const MatrixXd& w, const MatrixXd& beta) {
  const Index p = w.rows();
  MatrixXd theta(p, p);
  for (Index j = 0; j < p; ++j) {
    double schur = w(j, j);
    for (Index k = 0; k < p; ++k) {
      if (k != j) schur -= w(k, j) * beta(k, j);
    }
    if (!(schur > 0.0)) {
      throw InternalError("glasso: non-positive-definite iterate at column " + std::to_string(j) +
                          " (Schur complement " + std::to_string(schur) + ")");
    }
    theta(j, j) = 1.0 / schur;
    for (Index k = 0; k < p; ++k) {
      if (k != j) theta(k, j) = -beta(k, j) / schur;
    }
  }
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < i; ++j) {
      const double v = 0.5 * (theta(i, j) + theta(j, i));
      theta(i, j) = v;
      theta(j, i) = v;
    }
  }
  return theta;
}

struct BcdResult {
  MatrixXd w;
  MatrixXd beta;
  int iterations = 0;
  bool converged = false;
};

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// With `support`, coefficients outside the mask are pinned to zero and the
/// rest are unpenalized: the Gaussian MLE under a fixed zero pattern.
BcdResult block_coordinate_descent(const MatrixXd& s, double lambda, const GlassoConfig& cfg,
                                   MatrixXd w, MatrixXd beta, GlassoTrace* trace,
                                   const Mask* support = nullptr) {
  if (support) lambda = 0.0;
  const Index p = s.rows();
  const double threshold = cfg.convergence_tol * mean_abs_offdiag(s);
  VectorXd u(p);
  BcdResult result;
  if (trace) trace->objective.emplace_back();

  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    double change = 0.0;
    for (Index j = 0; j < p; ++j) {
      auto b = beta.col(j);
      b(j) = 0.0;
      u.noalias() = w * b;
      // Lasso: minimize 1/2 b'W11 b - s12'b + lambda |b|_1 with b_j fixed at 0.
      for (int sweep = 0; sweep < cfg.max_inner_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (Index k = 0; k < p; ++k) {
          if (k == j || (support && !(*support)(k, j))) continue;
          const double old = b(k);
          const double partial = s(k, j) - (u(k) - w(k, k) * old);
          const double updated = soft_threshold(partial, lambda) / w(k, k);
          if (updated != old) {
            const double delta = updated - old;
            u.noalias() += delta * w.col(k);
            b(k) = updated;
            max_delta = std::max(max_delta, std::abs(delta));
          }
        }
        if (max_delta <= cfg.inner_tol) break;
      }
      for (Index k = 0; k < p; ++k) {
        if (k == j) continue;
        change += 2.0 * std::abs(u(k) - w(k, j));
        w(k, j) = u(k);
        w(j, k) = u(k);
      }
    }
    result.iterations = iter;
    if (trace) {
      trace->objective.back().push_back(
          glasso_objective(s, theta_from_coefficients(w, beta), lambda));
    }
    if (change / static_cast<double>(p * (p - 1)) <= threshold) {
      result.converged = true;
      break;
    }
  }
  result.w = std::move(w);
  result.beta = std::move(beta);
  return result;
}

/// Feasible positive-definite start: off-diagonals shrunk toward zero just
/// enough to sit inside the box |W_ij - S_ij| <= lambda.
MatrixXd cold_start(const MatrixXd& s, double lambda) {
  const double top = lambda_max(s);
  const double t = top > 0.0 ? std::min(1.0, lambda / top) : 1.0;
  MatrixXd w = (1.0 - t) * s;
  w.diagonal() = s.diagonal();
  return w;
}

void check_input(const MatrixXd& s, double lambda) {
  if (s.rows() != s.cols()) throw ValidationError("glasso input must be square");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("lambda must be a finite non-negative number");
  }
  for (Index i = 0; i < s.rows(); ++i) {
    if (!(s(i, i) > 0.0)) {
      throw ValidationError("glasso input has non-positive diagonal at " + std::to_string(i));
    }
    for (Index j = 0; j < i; ++j) {
      if (s(i, j) != s(j, i)) throw ValidationError("glasso input is not symmetric");
    }
  }
}

double held_out_log_likelihood(const MatrixXd& theta, const MatrixXd& s_test) {
  const Eigen::LLT<MatrixXd> llt(theta);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return logdet - s_test.cwiseProduct(theta).sum();
}

}  // namespace

double glasso_objective(const MatrixXd& s, const MatrixXd& theta, double lambda) {
  const Eigen::LLT<MatrixXd> llt(theta);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double trace = (s.cwiseProduct(theta)).sum();
  const double penalty = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
  return logdet - trace - lambda * penalty;
}

double glasso_dual_gap(const MatrixXd& s, const MatrixXd& theta, const MatrixXd& w,
                       double lambda) {
  const Eigen::LLT<MatrixXd> llt(w);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const double logdet_w = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -logdet_w - static_cast<double>(s.rows()) - glasso_objective(s, theta, lambda);
}

double lambda_max(const MatrixXd& s) {
  double top = 0.0;
  for (Index i = 0; i < s.rows(); ++i) {
    for (Index j = 0; j < i; ++j) top = std::max(top, std::abs(s(i, j)));
  }
  return top;
}

std::vector<double> lambda_grid(double top, std::size_t size) {
  std::vector<double> grid;
  if (size == 0) return grid;
  grid.reserve(size);
  if (size == 1) {
    grid.push_back(top);
    return grid;
  }
  const double step = std::log(0.01) / static_cast<double>(size - 1);
  for (std::size_t g = 0; g < size; ++g) {
    grid.push_back(g == 0 ? top : top * std::exp(step * static_cast<double>(g)));
  }
  grid.back() = 0.01 * top;
  return grid;
}

PrecisionEstimate solve_glasso(const CovarianceMatrix& corr, double lambda, const GlassoConfig& cfg,
                               const PrecisionEstimate* warm, GlassoTrace* trace) {
  const MatrixXd& s = corr.values;
  check_input(s, lambda);
  const Index n = s.rows();
  const bool use_warm = warm != nullptr && warm->w.rows() == n && warm->theta.rows() == n;

  UnionFind uf(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      if (!cfg.screen || std::abs(s(i, j)) > lambda) uf.unite(i, j);
    }
  }

  PrecisionEstimate est;
  est.theta = MatrixXd::Zero(n, n);
  est.w = MatrixXd::Zero(n, n);
  est.lambda_used = lambda;
  est.converged = true;

  for (const auto& comp : uf.components()) {
    if (comp.size() == 1) {
      const auto i = static_cast<Index>(comp.front());
      est.w(i, i) = s(i, i);
      est.theta(i, i) = 1.0 / s(i, i);
      continue;
    }
    const MatrixXd sub = submatrix(s, comp);
    if (lambda == 0.0 && Eigen::LLT<MatrixXd>(sub).info() != Eigen::Success) {
      throw ValidationError("unpenalized fit needs a positive-definite correlation matrix");
    }
    BcdResult r;
    bool solved = false;
    if (use_warm) {
      try {
        r = block_coordinate_descent(sub, lambda, cfg, submatrix(warm->w, comp),
                                     coefficients_from_theta(submatrix(warm->theta, comp)), trace);
        solved = true;
      } catch (const InternalError&) {
        // A warm W outside the new feasible box can lose definiteness; start cold.
      }
    }
    if (!solved) {
      const auto p = static_cast<Index>(comp.size());
      r = block_coordinate_descent(sub, lambda, cfg, cold_start(sub, lambda), MatrixXd::Zero(p, p),
                                   trace);
    }
    const MatrixXd theta = theta_from_coefficients(r.w, r.beta);
    for (std::size_t a = 0; a < comp.size(); ++a) {
      for (std::size_t b = 0; b < comp.size(); ++b) {
        est.theta(comp[a], comp[b]) = theta(a, b);
        est.w(comp[a], comp[b]) = r.w(a, b);
      }
    }
    est.iterations = std::max(est.iterations, r.iterations);
    est.converged = est.converged && r.converged;
  }
  est.dual_gap = glasso_dual_gap(s, est.theta, est.w, lambda);
  return est;
}

PrecisionEstimate refit_on_support(const CovarianceMatrix& corr, const PrecisionEstimate& est,
                                   const GlassoConfig& cfg) {
  const MatrixXd& s = corr.values;
  check_input(s, 0.0);
  const Index n = s.rows();
  if (est.theta.rows() != n) throw ValidationError("refit: precision and covariance sizes differ");

  UnionFind uf(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      if (est.theta(i, j) != 0.0) uf.unite(i, j);
    }
  }
  PrecisionEstimate out;
  out.theta = MatrixXd::Zero(n, n);
  out.w = MatrixXd::Zero(n, n);
  out.lambda_used = est.lambda_used;
  out.converged = true;
  for (const auto& comp : uf.components()) {
    if (comp.size() == 1) {
      const auto i = static_cast<Index>(comp.front());
      out.w(i, i) = s(i, i);
      out.theta(i, i) = 1.0 / s(i, i);
      continue;
    }
    const MatrixXd sub = submatrix(s, comp);
    const Eigen::LLT<MatrixXd> llt(sub);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
      throw ValidationError("refit needs a well-conditioned correlation on each component");
    }
    const MatrixXd theta_sub = submatrix(est.theta, comp);
    const Mask support = theta_sub.array() != 0.0;
    const auto p = static_cast<Index>(comp.size());
    const BcdResult r =
        block_coordinate_descent(sub, 0.0, cfg, sub, MatrixXd::Zero(p, p), nullptr, &support);
    const MatrixXd theta = theta_from_coefficients(r.w, r.beta);
    for (std::size_t a = 0; a < comp.size(); ++a) {
      for (std::size_t b = 0; b < comp.size(); ++b) {
        out.theta(comp[a], comp[b]) = theta(a, b);
        out.w(comp[a], comp[b]) = r.w(a, b);
      }
    }
    out.iterations = std::max(out.iterations, r.iterations);
    out.converged = out.converged && r.converged;
  }
  out.dual_gap = glasso_dual_gap(s, out.theta, out.w, 0.0);
  return out;
}

CvResult cross_validate_lambda(const EmbeddingMatrix& emb, const GlassoConfig& cfg) {
  const std::size_t dim = emb.dim();
  const std::size_t folds = cfg.cv_folds;
  if (folds < 2) throw ValidationError("cv_folds must be at least 2");
  if (folds > dim) {
    throw ValidationError("cv_folds (" + std::to_string(folds) + ") exceeds embedding dimension (" +
                          std::to_string(dim) + ")");
  }
  if (cfg.cv_grid_size == 0) throw ValidationError("cv_grid_size must be positive");

  CvResult result;
  const CovarianceMatrix full = to_correlation(empirical_covariance(emb));
  result.grid = lambda_grid(lambda_max(full.values), cfg.cv_grid_size);
  result.mean_score.assign(result.grid.size(), 0.0);

  // Standardize each row once over all columns.
  RowMatrix z = emb.values.colwise() - emb.values.rowwise().mean();
  for (Index i = 0; i < z.rows(); ++i) {
    const double sd = std::sqrt(z.row(i).squaredNorm() / static_cast<double>(dim - 1));
    if (!(sd > 0.0)) throw ValidationError("row " + emb.utt_ids[i] + " is constant");
    z.row(i) /= sd;
  }

  // Fold of column c is the position of c in a seeded shuffle, modulo folds.
  std::vector<std::size_t> perm(dim);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto eng = make_engine(cfg.rng_seed, 0);
  for (std::size_t k = dim - 1; k > 0; --k) std::swap(perm[k], perm[uniform_below(eng, k + 1)]);
  std::vector<std::size_t> fold_of(dim);
  for (std::size_t pos = 0; pos < dim; ++pos) fold_of[perm[pos]] = pos % folds;

  std::vector<std::vector<double>> scores(folds);
  parallel_for(folds, cfg.workers, [&](std::size_t f) {
    std::vector<Index> train;
    std::vector<Index> test;
    for (std::size_t c = 0; c < dim; ++c) (fold_of[c] == f ? test : train).push_back(c);
    const RowMatrix z_train = z(Eigen::all, train);
    const RowMatrix z_test = z(Eigen::all, test);
    const MatrixXd scatter = z_train * z_train.transpose() / static_cast<double>(train.size());
    const CovarianceMatrix s_train =
        to_correlation({scatter.selfadjointView<Eigen::Lower>(), full.source});
    const MatrixXd s_test = z_test * z_test.transpose() / static_cast<double>(test.size());

    GlassoConfig inner = cfg;
    inner.workers = 1;
    inner.convergence_tol = cfg.cv_convergence_tol;
    inner.inner_tol = cfg.cv_inner_tol;
    std::optional<PrecisionEstimate> prev;
    Mask last_support;
    scores[f].reserve(result.grid.size());
    for (const double lambda : result.grid) {
      prev = solve_glasso(s_train, lambda, inner, prev ? &*prev : nullptr);
      const Mask support = prev->theta.array() != 0.0;
      if (cfg.cv_score == CvScore::refit && !scores[f].empty() && support == last_support) {
        // Same zero pattern, same refit: repeat the score so the tie goes to the larger lambda.
        scores[f].push_back(scores[f].back());
        continue;
      }
      last_support = support;
      MatrixXd theta = prev->theta;
      if (cfg.cv_score == CvScore::refit) {
        try {
          theta = refit_on_support(s_train, *prev, inner).theta;
        } catch (const ValidationError&) {
          // Singular on the support (e.g. duplicated rows): score the penalized fit.
        } catch (const InternalError&) {
        }
      }
      scores[f].push_back(held_out_log_likelihood(theta, s_test));
    }
  });

  result.std_error.assign(result.grid.size(), 0.0);
  for (std::size_t g = 0; g < result.grid.size(); ++g) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds; ++f) total += scores[f][g];
    const double mean = total / static_cast<double>(folds);
    double ss = 0.0;
    for (std::size_t f = 0; f < folds; ++f) ss += (scores[f][g] - mean) * (scores[f][g] - mean);
    result.mean_score[g] = mean;
    result.std_error[g] = std::sqrt(ss / static_cast<double>(folds * (folds - 1)));
  }
  // Grid is descending, so a strict comparison breaks ties toward larger lambda.
  std::size_t best = 0;
  for (std::size_t g = 1; g < result.grid.size(); ++g) {
    if (result.mean_score[g] > result.mean_score[best]) best = g;
  }
  if (cfg.cv_one_se) {
    const double floor = result.mean_score[best] - result.std_error[best];
    for (std::size_t g = 0; g < best; ++g) {
      if (result.mean_score[g] >= floor) {
        best = g;
        break;
      }
    }
  }
  result.selected = result.grid[best];
  return result;
}

double select_lambda_cv(const EmbeddingMatrix& emb, const GlassoConfig& cfg) {
  return cross_validate_lambda(emb, cfg).selected;
}

PrecisionEstimate estimate_precision(const EmbeddingMatrix& emb, const GlassoConfig& cfg,
                                     const NonparanormalConfig& nonpara) {
  const EmbeddingMatrix transformed =
      nonpara.enabled ? apply_nonparanormal(emb, nonpara) : EmbeddingMatrix{};
  const EmbeddingMatrix& x = nonpara.enabled ? transformed : emb;
  CovarianceMatrix corr = to_correlation(empirical_covariance(x));
  corr.source = nonpara.enabled ? CovarianceSource::nonparanormal : CovarianceSource::gaussian;
  if (corr.size() == 1) {
    return PrecisionEstimate{MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), cfg.lambda.value_or(0.0),
                             true, 0, 0.0};
  }
  const double lambda = cfg.lambda ? *cfg.lambda : select_lambda_cv(x, cfg);
  return solve_glasso(corr, lambda, cfg);
}

void write_edge_list(std::ostream& out, const PrecisionEstimate& est) {
  const auto old_precision = out.precision(17);
  for (Index i = 0; i < est.theta.rows(); ++i) {
    for (Index j = i + 1; j < est.theta.cols(); ++j) {
      if (est.theta(i, j) != 0.0) out << i << '\t' << j << '\t' << est.theta(i, j) << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace wersig
