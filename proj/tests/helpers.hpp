#pragma once

#include <Eigen/Dense>

#include <random>
#include <string>

#include "wersig/covariance.hpp"
#include "wersig/eval_data.hpp"

namespace testing_support {

/// n rows of an AR(1)-like chain over L columns, so neighbouring rows correlate.
inline wersig::EmbeddingMatrix chain_embeddings(int n, int dim, double link, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  wersig::EmbeddingMatrix e;
  e.values.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    e.utt_ids.push_back("u" + std::to_string(i));
    for (int l = 0; l < dim; ++l) e.values(i, l) = nd(rng) + (i > 0 ? link * e.values(i - 1, l) : 0.0);
  }
  return e;
}

inline wersig::CovarianceMatrix random_correlation(int n, int dim, std::uint64_t seed, double link = 0.5) {
  return wersig::to_correlation(wersig::empirical_covariance(chain_embeddings(n, dim, link, seed)));
}

inline double kkt_violation(const wersig::CovarianceMatrix& s, const Eigen::MatrixXd& theta,
                            const Eigen::MatrixXd& w, double lambda) {
  double worst = 0.0;
  const auto n = theta.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double g = s.values(i, j) - w(i, j);
      const double th = theta(i, j);
      const double v = th == 0.0 ? std::max(0.0, std::abs(g) - lambda)
                                 : std::abs(g + lambda * (th > 0.0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
  }
  return worst;
}

}  // namespace testing_support
