// Slow reference implementations used to check the library.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace oracle {

/// Plain recursion over the three edit operations, no memoization.
inline int edit_distance(const std::vector<std::string>& a, std::size_t i,
                         const std::vector<std::string>& b, std::size_t j) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  const int sub = edit_distance(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const int del = edit_distance(a, i + 1, b, j) + 1;
  const int ins = edit_distance(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

inline int edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return edit_distance(a, 0, b, 0);
}

/// Component label per vertex from the Warshall closure of the adjacency.
inline std::vector<std::vector<std::size_t>> closure_components(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) reach[i][i] = true;
  for (const auto& [i, j] : edges) reach[i][j] = reach[j][i] = true;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    blocks.emplace_back();
    for (std::size_t j = i; j < n; ++j) {
      if (reach[i][j]) {
        blocks.back().push_back(j);
        used[j] = true;
      }
    }
  }
  return blocks;
}

/// Percentile at fractional rank 1 + p (N - 1).
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double r = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(r));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (r - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct DualSolution {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd w;
  double gap = 0.0;
  int iterations = 0;
};

inline double logdet_or_nan(const Eigen::MatrixXd& m) {
  const Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nan("");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Projected gradient ascent on the dual: maximize log det W over
/// |W_ij - S_ij| <= lambda (i != j), W_ii = S_ii. Theta = W^-1 and the
/// primal-dual gap is tr(S Theta) + lambda sum_{i!=j} |Theta_ij| - n.
/// Once the active box faces settle, Newton steps on the free entries
/// finish the job.
inline DualSolution glasso_dual(const Eigen::MatrixXd& s, double lambda, double target_gap,
                                int max_iters = 200'000) {
  const Eigen::Index n = s.rows();
  auto project = [&](Eigen::MatrixXd w) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        w(i, j) = i == j ? s(i, i) : std::clamp(w(i, j), s(i, j) - lambda, s(i, j) + lambda);
      }
    }
    return w;
  };
  auto gap_of = [&](const Eigen::MatrixXd& theta) {
    double off = theta.cwiseAbs().sum() - theta.diagonal().cwiseAbs().sum();
    return (s.cwiseProduct(theta)).sum() + lambda * off - static_cast<double>(n);
  };

  DualSolution out;
  const double top = [&] {
    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j) m = std::max(m, std::abs(s(i, j)));
    return m;
  }();
  const double t0 = top > 0.0 ? std::min(1.0, lambda / top) : 1.0;
  Eigen::MatrixXd w = (1.0 - t0) * s;
  w.diagonal() = s.diagonal();
  double f = logdet_or_nan(w);
  double step = 1.0;
  auto finish = [&] {
    out.w = w;
    out.theta = w.inverse();
    out.theta = 0.5 * (out.theta + out.theta.transpose()).eval();
    out.gap = gap_of(out.theta);
    return out.gap <= target_gap;
  };
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it;
    if (finish()) return out;
    const Eigen::MatrixXd grad = out.theta;
    step = std::min(step * 2.0, 1e6);
    bool moved = false;
    while (step >= 1e-20) {
      const Eigen::MatrixXd cand = project(w + step * grad);
      const double fc = logdet_or_nan(cand);
      const Eigen::MatrixXd d = cand - w;
      // Armijo condition for the projected step.
      if (!std::isnan(fc) && fc >= f + 0.5 * grad.cwiseProduct(d).sum()) {
        w = cand;
        f = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    if (it % 1000 == 999) {
      // Newton on the entries strictly inside the box.
      std::vector<std::pair<Eigen::Index, Eigen::Index>> free;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
          if (std::abs(w(i, j) - s(i, j)) < lambda - 1e-12) free.emplace_back(i, j);
      if (free.empty()) continue;
      Eigen::MatrixXd trial = w;
      bool ok = true;
      for (int k = 0; k < 50 && ok; ++k) {
        const Eigen::MatrixXd th = trial.inverse();
        const auto m = static_cast<Eigen::Index>(free.size());
        Eigen::VectorXd g(m);
        Eigen::MatrixXd h(m, m);
        for (Eigen::Index a = 0; a < m; ++a) {
          const auto [i, j] = free[a];
          g(a) = 2.0 * th(i, j);
          for (Eigen::Index b = 0; b < m; ++b) {
            const auto [p, q] = free[b];
            h(a, b) = -2.0 * (th(q, i) * th(j, p) + th(p, i) * th(j, q));
          }
        }
        if (g.cwiseAbs().maxCoeff() < 1e-15) break;
        const Eigen::VectorXd delta = h.ldlt().solve(-g);
        for (Eigen::Index a = 0; a < m; ++a) {
          const auto [i, j] = free[a];
          trial(i, j) += delta(a);
          trial(j, i) = trial(i, j);
          if (std::abs(trial(i, j) - s(i, j)) > lambda) ok = false;
        }
        if (std::isnan(logdet_or_nan(trial))) ok = false;
      }
      if (ok && logdet_or_nan(trial) >= f - 1e-12) {
        w = trial;
        f = logdet_or_nan(w);
      }
    }
  }
  finish();
  return out;
}

}  // namespace oracle
