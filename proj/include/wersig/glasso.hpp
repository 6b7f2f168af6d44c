#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wersig/covariance.hpp"
#include "wersig/eval_data.hpp"
#include "wersig/parallel.hpp"

namespace wersig {

/// How a cross-validation fold scores a fitted lambda on held-out columns.
enum class CvScore {
  /// Gaussian log-likelihood of the penalized estimate itself.
  penalized,
  /// Gaussian log-likelihood of the unpenalized MLE restricted to the
  /// penalized estimate's zero pattern.
  refit,
};

struct GlassoConfig {
  /// Fixed penalty; empty means select by cross-validation.
  std::optional<double> lambda;
  int max_outer_iters = 100;
  /// Outer stop: mean |dW| over a sweep <= convergence_tol * mean_{i!=j} |S_ij|.
  double convergence_tol = 1e-8;
  /// Inner lasso stop: max coefficient change.
  double inner_tol = 1e-7;
  int max_inner_sweeps = 10000;
  std::size_t cv_folds = 5;
  std::size_t cv_grid_size = 20;
  CvScore cv_score = CvScore::refit;
  /// Tolerances for the fits inside cross-validation folds.
  double cv_convergence_tol = 1e-4;
  double cv_inner_tol = 1e-5;
  /// Take the largest lambda whose mean score is within one standard error of
  /// the best, instead of the best itself.
  bool cv_one_se = true;
  std::uint64_t rng_seed = 0;
  /// Split the problem along the connected components of {|S_ij| > lambda}.
  bool screen = true;
  unsigned workers = 1;
};

struct PrecisionEstimate {
  Eigen::MatrixXd theta;
  /// Estimated covariance, the inverse of theta at convergence.
  Eigen::MatrixXd w;
  double lambda_used = 0.0;
  bool converged = false;
  int iterations = 0;
  double dual_gap = 0.0;
};

/// log det(theta) - tr(S theta) - lambda * sum_{i != j} |theta_ij|.
/// Returns -inf when theta is not positive definite.
double glasso_objective(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta, double lambda);

/// Primal-dual gap for primal theta and dual w:
/// -log det(w) - n - objective(theta). Non-negative for feasible w.
double glasso_dual_gap(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta,
                       const Eigen::MatrixXd& w, double lambda);

struct GlassoTrace {
  /// Per screened component of two or more variables: the component's
  /// objective after each outer sweep.
  std::vector<std::vector<double>> objective;
};

/// Block coordinate descent for the l1-penalized Gaussian likelihood with the
/// penalty on off-diagonal entries only. `warm` seeds W and the column
/// coefficients from a solution at a larger lambda on the same matrix.
PrecisionEstimate solve_glasso(const CovarianceMatrix& corr, double lambda, const GlassoConfig& cfg,
                               const PrecisionEstimate* warm = nullptr,
                               GlassoTrace* trace = nullptr);

/// Gaussian MLE constrained to the zero pattern of `est.theta`, solved by the
/// same column-wise descent with unpenalized free entries. Throws
/// ValidationError when a component's correlation is numerically singular.
PrecisionEstimate refit_on_support(const CovarianceMatrix& corr, const PrecisionEstimate& est,
                                   const GlassoConfig& cfg);

/// max_{i != j} |S_ij|.
double lambda_max(const Eigen::MatrixXd& s);

/// Descending log-spaced grid from lambda_max down to 0.01 * lambda_max.
std::vector<double> lambda_grid(double lambda_max, std::size_t size);

struct CvResult {
  std::vector<double> grid;
  /// Mean held-out log-likelihood per grid point.
  std::vector<double> mean_score;
  /// Standard error of the mean score across folds.
  std::vector<double> std_error;
  double selected = 0.0;
};

/// K-fold cross-validation over embedding dimensions. Rows are standardized
/// once; each fold fits on the correlation of its training columns and scores
/// log det(theta) - tr(S_test theta) on the held-out columns' scatter.
CvResult cross_validate_lambda(const EmbeddingMatrix& emb, const GlassoConfig& cfg);

double select_lambda_cv(const EmbeddingMatrix& emb, const GlassoConfig& cfg);

/// Optional nonparanormal transform, correlation, lambda selection, solve.
PrecisionEstimate estimate_precision(const EmbeddingMatrix& emb, const GlassoConfig& cfg,
                                     const NonparanormalConfig& nonpara);

/// `i<TAB>j<TAB>theta_ij` for each nonzero off-diagonal pair with i < j.
void write_edge_list(std::ostream& out, const PrecisionEstimate& est);

}  // namespace wersig
