#include "wersig/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "wersig/errors.hpp"

namespace wersig {

double auto_winsorization_delta(std::size_t dim) {
  const double l = static_cast<double>(dim);
  return 1.0 / (4.0 * std::pow(l, 0.25) * std::sqrt(std::numbers::pi * std::log(l)));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -HUGE_VAL;
    if (p == 1.0) return HUGE_VAL;
    throw ValidationError("normal_quantile: probability outside [0, 1]");
  }
  // Acklam's rational approximation (relative error ~1.15e-9).
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley step against the erfc-based CDF.
  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  const double e = cdf - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

CovarianceMatrix empirical_covariance(const EmbeddingMatrix& emb) {
  if (emb.dim() < 2) {
    throw ValidationError("covariance needs embedding dimension >= 2, got " +
                          std::to_string(emb.dim()));
  }
  const RowMatrix centred = emb.values.colwise() - emb.values.rowwise().mean();
  const auto n = centred.rows();
  Eigen::MatrixXd s(n, n);
  const double denom = static_cast<double>(emb.dim() - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = centred.row(i).dot(centred.row(j)) / denom;
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return {std::move(s), CovarianceSource::gaussian};
}

EmbeddingMatrix apply_nonparanormal(const EmbeddingMatrix& emb, const NonparanormalConfig& cfg) {
  const std::size_t dim = emb.dim();
  if (dim < 2) {
    throw ValidationError("nonparanormal transform needs embedding dimension >= 2");
  }
  const double delta = cfg.winsorization_delta.value_or(auto_winsorization_delta(dim));
  if (!(delta > 0.0 && delta < 0.5)) {
    throw ValidationError("winsorization delta must lie in (0, 0.5), got " + std::to_string(delta));
  }

  EmbeddingMatrix out;
  out.utt_ids = emb.utt_ids;
  out.values.resize(emb.values.rows(), emb.values.cols());
  std::vector<Eigen::Index> order(dim);
  std::vector<double> scores(dim);
  const double denom = static_cast<double>(dim) + 1.0;

  for (Eigen::Index i = 0; i < emb.values.rows(); ++i) {
    const auto row = emb.values.row(i);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index x, Eigen::Index y) { return row(x) < row(y); });
    if (row(order.front()) == row(order.back())) {
      throw ValidationError("row " + std::to_string(i) + " (" + emb.utt_ids[i] +
                            ") is constant; its correlation is undefined");
    }
    // Average ranks over runs of ties.
    std::size_t k = 0;
    while (k < dim) {
      std::size_t run_end = k + 1;
      while (run_end < dim && row(order[run_end]) == row(order[k])) ++run_end;
      const double rank = 0.5 * static_cast<double>(k + 1 + run_end);
      const double p = std::clamp(rank / denom, delta, 1.0 - delta);
      const double z = normal_quantile(p);
      for (std::size_t t = k; t < run_end; ++t) scores[order[t]] = z;
      k = run_end;
    }
    const Eigen::Map<const Eigen::RowVectorXd> z(scores.data(), static_cast<Eigen::Index>(dim));
    const double mean = z.mean();
    const double sd = std::sqrt((z.array() - mean).square().sum() / static_cast<double>(dim - 1));
    if (!(sd > 0.0)) {
      throw ValidationError("row " + std::to_string(i) + " (" + emb.utt_ids[i] +
                            ") has no spread after winsorization");
    }
    out.values.row(i) = (z.array() - mean) / sd;
  }
  return out;
}

CovarianceMatrix to_correlation(const CovarianceMatrix& cov) {
  const auto n = cov.size();
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = cov.values(i, i);
    if (!(v > 0.0)) {
      throw ValidationError("degenerate variance at index " + std::to_string(i) +
                            ": correlation undefined");
    }
    scale(i) = 1.0 / std::sqrt(v);
  }
  CovarianceMatrix out{Eigen::MatrixXd(n, n), cov.source};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = std::clamp(cov.values(i, j) * scale(i) * scale(j), -1.0, 1.0);
      out.values(i, j) = r;
      out.values(j, i) = r;
    }
  }
  return out;
}

}  // namespace wersig
