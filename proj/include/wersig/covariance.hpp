#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "wersig/eval_data.hpp"

namespace wersig {

enum class CovarianceSource { gaussian, nonparanormal };

/// Symmetric n_g x n_g matrix across utterances.
struct CovarianceMatrix {
  Eigen::MatrixXd values;
  CovarianceSource source = CovarianceSource::gaussian;

  Eigen::Index size() const noexcept { return values.rows(); }
};

struct NonparanormalConfig {
  bool enabled = false;
  /// Winsorization level in (0, 0.5); empty selects auto_winsorization_delta(L).
  std::optional<double> winsorization_delta;
};

/// 1 / (4 L^{1/4} sqrt(pi log L)).
double auto_winsorization_delta(std::size_t dim);

/// Standard normal quantile, accurate to ~1e-15 absolute on (1e-300, 1 - 1e-16).
double normal_quantile(double p);

/// Sample covariance across rows with divisor L - 1; each row is centred by
/// its own mean over the L columns.
CovarianceMatrix empirical_covariance(const EmbeddingMatrix& emb);

/// Row-wise Winsorized normal scores followed by per-row standardization to
/// zero mean and unit sample variance.
EmbeddingMatrix apply_nonparanormal(const EmbeddingMatrix& emb, const NonparanormalConfig& cfg);

/// Rescales to unit diagonal. Throws ValidationError on a zero variance.
CovarianceMatrix to_correlation(const CovarianceMatrix& cov);

}  // namespace wersig
