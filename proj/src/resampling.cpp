#include "wersig/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "wersig/errors.hpp"
#include "wersig/parallel.hpp"
#include "wersig/rng.hpp"

namespace wersig {

const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::wer_a: return "wer_a";
    case Statistic::wer_b: return "wer_b";
    case Statistic::delta_abs: return "delta_abs";
    case Statistic::delta_rel: return "delta_rel";
  }
  return "unknown";
}

const char* to_string(BootstrapMethod m) {
  return m == BootstrapMethod::bootstrap ? "bootstrap" : "block_bootstrap";
}

double Replicate::get(Statistic s) const noexcept {
  switch (s) {
    case Statistic::wer_a: return wer_a;
    case Statistic::wer_b: return wer_b;
    case Statistic::delta_abs: return delta_abs;
    case Statistic::delta_rel: return delta_rel;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

struct BlockSums {
  std::int64_t m = 0;
  std::int64_t e_a = 0;
  std::int64_t e_b = 0;
};

Replicate statistics_of(const BlockSums& t) {
  const auto m = static_cast<double>(t.m);
  Replicate r;
  r.wer_a = static_cast<double>(t.e_a) / m;
  r.wer_b = static_cast<double>(t.e_b) / m;
  r.delta_abs = static_cast<double>(t.e_b - t.e_a) / m;
  r.delta_rel = t.e_a > 0 ? static_cast<double>(t.e_b - t.e_a) / static_cast<double>(t.e_a)
                          : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace

std::vector<Replicate> bootstrap_replicates(const EvalDataset& dataset,
                                            const BlockPartition& partition,
                                            const BootstrapConfig& cfg) {
  validate_partition(partition, dataset.size());
  std::vector<BlockSums> sums(partition.blocks.size());
  BlockSums total;
  for (std::size_t k = 0; k < partition.blocks.size(); ++k) {
    for (const auto i : partition.blocks[k]) {
      const auto& r = dataset.records[i];
      sums[k].m += r.m;
      sums[k].e_a += r.e_a;
      sums[k].e_b += r.e_b;
    }
    total.m += sums[k].m;
  }
  if (total.m == 0) throw UndefinedStatisticError("WER undefined: dataset has no reference words");

  const std::uint64_t k_blocks = sums.size();
  std::vector<Replicate> out(cfg.n_replicates);
  parallel_for(cfg.n_replicates, cfg.workers, [&](std::size_t b) {
    auto eng = make_engine(cfg.rng_seed, b);
    BlockSums acc;
    for (std::uint64_t draw = 0; draw < k_blocks; ++draw) {
      const auto& s = sums[uniform_below(eng, k_blocks)];
      acc.m += s.m;
      acc.e_a += s.e_a;
      acc.e_b += s.e_b;
    }
    // A resample made only of empty references has no WER; count it as undefined.
    if (acc.m == 0) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out[b] = Replicate{nan, nan, nan, nan};
    } else {
      out[b] = statistics_of(acc);
    }
  });
  return out;
}

double percentile(std::vector<double> values, double p) {
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) throw ValidationError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double rank = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ConfidenceInterval percentile_ci(const std::vector<double>& values, double level, double point) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("ci level must lie in (0, 1)");
  std::vector<double> finite;
  finite.reserve(values.size());
  for (const double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.size() < 2) {
    throw ValidationError("insufficient replicates: " + std::to_string(finite.size()) +
                          " finite values, need at least 2");
  }
  ConfidenceInterval ci;
  ci.point = point;
  ci.level = level;
  ci.replicates = values.size();
  ci.dropped = values.size() - finite.size();
  const double tail = 0.5 * (1.0 - level);
  std::sort(finite.begin(), finite.end());
  ci.lower = percentile(finite, tail);
  ci.upper = percentile(std::move(finite), 1.0 - tail);
  if (ci.dropped * 100 > values.size()) {
    std::ostringstream msg;
    msg << ci.dropped << " of " << values.size() << " replicates undefined and dropped";
    ci.warning = msg.str();
  }
  return ci;
}

BlockVarianceEstimate block_variance(const EvalDataset& dataset, const BlockPartition& partition,
                                     System system) {
  validate_partition(partition, dataset.size());
  const std::int64_t m = dataset.records.front().m;
  for (const auto& r : dataset.records) {
    if (r.m != m) {
      throw ValidationError("block variance needs equal reference lengths; " + r.utt_id + " has " +
                            std::to_string(r.m) + " words, expected " + std::to_string(m));
    }
  }
  if (m == 0) throw UndefinedStatisticError("block variance undefined for empty references");

  const auto z = [&](std::size_t i) {
    const auto& r = dataset.records[i];
    return static_cast<double>(system == System::A ? r.e_a : r.e_b) / static_cast<double>(m);
  };
  const std::size_t n = dataset.size();
  double overall = 0.0;
  for (std::size_t i = 0; i < n; ++i) overall += z(i);
  overall /= static_cast<double>(n);

  BlockVarianceEstimate est;
  est.k_n = partition.blocks.size();
  est.d_n = n / est.k_n;
  double ss = 0.0;
  for (const auto& block : partition.blocks) {
    double mean = 0.0;
    for (const auto i : block) mean += z(i);
    mean /= static_cast<double>(block.size());
    ss += (mean - overall) * (mean - overall);
  }
  est.sigma_hat_sq = static_cast<double>(est.d_n) / static_cast<double>(est.k_n) * ss;
  return est;
}

AnalysisResult run_analysis(const EvalDataset& dataset, const BlockPartition& partition,
                            const BootstrapConfig& cfg) {
  if (cfg.n_replicates < 100) {
    throw ValidationError("confidence intervals need at least 100 replicates, got " +
                          std::to_string(cfg.n_replicates));
  }
  const WerSummary summary = compute_wer_summary(dataset);
  const auto replicates = bootstrap_replicates(dataset, partition, cfg);
  const bool singletons = partition.blocks.size() == dataset.size();

  AnalysisResult result;
  result.k_blocks = partition.blocks.size();
  std::vector<double> values(replicates.size());
  for (const Statistic stat : kAllStatistics) {
    double point = 0.0;
    switch (stat) {
      case Statistic::wer_a: point = summary.wer_a; break;
      case Statistic::wer_b: point = summary.wer_b; break;
      case Statistic::delta_abs: point = summary.delta_abs; break;
      case Statistic::delta_rel:
        if (!summary.delta_rel) continue;
        point = *summary.delta_rel;
        break;
    }
    for (std::size_t b = 0; b < replicates.size(); ++b) values[b] = replicates[b].get(stat);
    ConfidenceInterval ci = percentile_ci(values, cfg.ci_level, point);
    ci.statistic = stat;
    ci.method = singletons ? BootstrapMethod::bootstrap : BootstrapMethod::block_bootstrap;
    if (!ci.warning && cfg.n_replicates < 1000) {
      ci.warning = "only " + std::to_string(cfg.n_replicates) + " replicates; percentiles are coarse";
    }
    result.intervals.push_back(std::move(ci));
  }
  return result;
}

}  // namespace wersig
