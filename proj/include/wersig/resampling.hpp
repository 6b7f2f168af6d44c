#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wersig/blocks.hpp"
#include "wersig/eval_data.hpp"
#include "wersig/wer.hpp"

namespace wersig {

struct BootstrapConfig {
  std::size_t n_replicates = 10'000;
  std::uint64_t rng_seed = 0;
  double ci_level = 0.95;
  unsigned workers = 1;
};

enum class Statistic { wer_a, wer_b, delta_abs, delta_rel };
inline constexpr Statistic kAllStatistics[] = {Statistic::wer_a, Statistic::wer_b,
                                               Statistic::delta_abs, Statistic::delta_rel};
const char* to_string(Statistic s);

enum class BootstrapMethod { bootstrap, block_bootstrap };
const char* to_string(BootstrapMethod m);

/// Statistics of one bootstrap sample. delta_rel is NaN when the sample has
/// no system-A errors.
struct Replicate {
  double wer_a = 0.0;
  double wer_b = 0.0;
  double delta_abs = 0.0;
  double delta_rel = 0.0;

  double get(Statistic s) const noexcept;
};

struct ConfidenceInterval {
  Statistic statistic = Statistic::wer_a;
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  std::size_t replicates = 0;
  std::size_t dropped = 0;
  BootstrapMethod method = BootstrapMethod::bootstrap;
  std::optional<std::string> warning;

  double width() const noexcept { return upper - lower; }
};

struct BlockVarianceEstimate {
  double sigma_hat_sq = 0.0;
  std::size_t k_n = 0;
  std::size_t d_n = 0;
};

/// Replicate b draws K block indices with replacement from child stream b of
/// cfg.rng_seed, so the output is independent of cfg.workers. Singleton
/// partitions give the ordinary bootstrap.
std::vector<Replicate> bootstrap_replicates(const EvalDataset& dataset,
                                            const BlockPartition& partition,
                                            const BootstrapConfig& cfg);

/// Linear interpolation between order statistics: percentile p sits at
/// fractional rank 1 + p (N - 1). Non-finite values are dropped first.
double percentile(std::vector<double> sorted_or_not, double p);

/// Percentile interval at `level` after dropping undefined replicates. Warns
/// when more than 1% were dropped; throws with fewer than 2 usable values.
ConfidenceInterval percentile_ci(const std::vector<double>& values, double level, double point);

/// (d_n / K_n) sum_k (W_k - W_n)^2 with Z_i = e_i / m and d_n = floor(n / K_n).
/// Requires every record to share one m.
BlockVarianceEstimate block_variance(const EvalDataset& dataset, const BlockPartition& partition,
                                     System system = System::A);

struct AnalysisResult {
  std::vector<ConfidenceInterval> intervals;
  std::size_t k_blocks = 0;
};

/// One replicate stream feeds the percentile intervals of all four
/// statistics; point estimates come from the full dataset. A delta_rel
/// interval is omitted when the full dataset has no system-A errors.
AnalysisResult run_analysis(const EvalDataset& dataset, const BlockPartition& partition,
                            const BootstrapConfig& cfg);

}  // namespace wersig
