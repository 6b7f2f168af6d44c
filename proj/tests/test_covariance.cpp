#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "wersig/covariance.hpp"
#include "wersig/errors.hpp"

using namespace wersig;

namespace {

EmbeddingMatrix rows(std::vector<std::vector<double>> v) {
  EmbeddingMatrix e;
  e.values.resize(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(v[0].size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    e.utt_ids.push_back("u" + std::to_string(i));
    for (std::size_t l = 0; l < v[i].size(); ++l) e.values(i, l) = v[i][l];
  }
  return e;
}

}  // namespace

TEST_CASE("empirical covariance by hand") {
  const auto s = empirical_covariance(rows({{1, 2, 3}, {1, 0, -1}}));
  CHECK(s.values(0, 0) == doctest::Approx(1.0));
  CHECK(s.values(1, 1) == doctest::Approx(1.0));
  CHECK(s.values(0, 1) == doctest::Approx(-1.0));
  CHECK(s.values(0, 1) == s.values(1, 0));

  const auto dup = empirical_covariance(rows({{1, 4, 2, 8}, {1, 4, 2, 8}}));
  CHECK(dup.values(0, 1) == dup.values(0, 0));
  const auto flat = empirical_covariance(rows({{3, 3, 3}, {1, 5, 2}}));
  CHECK(flat.values(0, 0) == 0.0);
  CHECK(flat.values(0, 1) == 0.0);
  CHECK_THROWS_AS(empirical_covariance(rows({{1}, {2}})), ValidationError);
}

TEST_CASE("covariance is symmetric PSD and correlation is scale free") {
  auto e = testing_support::chain_embeddings(12, 40, 0.7, 5);
  const auto s = empirical_covariance(e);
  CHECK(s.values == s.values.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.values);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * s.values.diagonal().maxCoeff());

  const auto r = to_correlation(s);
  CHECK(r.values.diagonal().isOnes());
  CHECK(r.values.cwiseAbs().maxCoeff() <= 1.0);
  e.values.row(3) *= 7.5;
  const auto r2 = to_correlation(empirical_covariance(e));
  CHECK((r.values - r2.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("to_correlation examples") {
  CovarianceMatrix c{Eigen::Matrix2d{{4, 2}, {2, 4}}, CovarianceSource::gaussian};
  const auto r = to_correlation(c);
  CHECK(r.values(0, 1) == doctest::Approx(0.5));
  CovarianceMatrix diag{Eigen::Vector3d(2, 5, 9).asDiagonal(), CovarianceSource::gaussian};
  CHECK(to_correlation(diag).values.isIdentity());
  CovarianceMatrix bad{Eigen::Matrix2d{{1, 0}, {0, 0}}, CovarianceSource::gaussian};
  CHECK_THROWS_WITH_AS(to_correlation(bad), doctest::Contains("index 1"), ValidationError);
}

TEST_CASE("normal quantile against boost") {
  const boost::math::normal_distribution<double> nd;
  double worst = 0.0;
  for (double p : {1e-12, 1e-9, 1e-6, 1e-3, 0.01, 0.02425, 0.1, 0.25, 0.5, 0.6, 0.9, 0.97575, 0.999, 1 - 1e-9}) {
    worst = std::max(worst, std::abs(normal_quantile(p) - boost::math::quantile(nd, p)));
  }
  for (int k = 1; k < 2000; ++k) {
    const double p = k / 2000.0;
    worst = std::max(worst, std::abs(normal_quantile(p) - boost::math::quantile(nd, p)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("nonparanormal hand example") {
  NonparanormalConfig cfg;
  cfg.enabled = true;
  cfg.winsorization_delta = 0.1;
  const auto out = apply_nonparanormal(rows({{5, 1, 9}, {1, 2, 3}}), cfg);
  const boost::math::normal_distribution<double> nd;
  const double z[] = {boost::math::quantile(nd, 0.5), boost::math::quantile(nd, 0.25),
                      boost::math::quantile(nd, 0.75)};
  const double mean = (z[0] + z[1] + z[2]) / 3.0;
  const double sd = std::sqrt(((z[0] - mean) * (z[0] - mean) + (z[1] - mean) * (z[1] - mean) +
                               (z[2] - mean) * (z[2] - mean)) / 2.0);
  for (int l = 0; l < 3; ++l) CHECK(out.values(0, l) == doctest::Approx((z[l] - mean) / sd).epsilon(1e-12));
}

TEST_CASE("nonparanormal is rank invariant") {
  auto e = testing_support::chain_embeddings(6, 200, 0.4, 8);
  NonparanormalConfig cfg;
  cfg.enabled = true;
  const auto base = apply_nonparanormal(e, cfg);
  for (Eigen::Index l = 0; l < e.values.cols(); ++l) {
    e.values(2, l) = std::exp(e.values(2, l));
    e.values(4, l) = std::pow(e.values(4, l), 3.0) + 2.0;
  }
  const auto moved = apply_nonparanormal(e, cfg);
  CHECK(base.values == moved.values);
  CHECK(std::abs(moved.values.row(0).mean()) < 1e-12);
}

TEST_CASE("nonparanormal ties and errors") {
  NonparanormalConfig cfg;
  cfg.winsorization_delta = 0.01;
  const auto out = apply_nonparanormal(rows({{1, 1, 2, 3}, {4, 3, 2, 1}}), cfg);
  CHECK(out.values(0, 0) == out.values(0, 1));
  CHECK_THROWS_WITH_AS(apply_nonparanormal(rows({{1, 2, 3}, {7, 7, 7}}), cfg), doctest::Contains("row 1"),
                       ValidationError);
  const double d = auto_winsorization_delta(768);
  CHECK(d > 0.0);
  CHECK(d < 0.5);
}
