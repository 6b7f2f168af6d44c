#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "wersig/blocks.hpp"
#include "wersig/eval_data.hpp"

namespace wersig {

enum class Marginal { gaussian, cubed_gaussian };

/// Block model: every speaker's utterances split into consecutive true blocks
/// of `block_size`. Embedding rows in a block share a latent factor with
/// pairwise correlation `within_block_corr`; rows in different blocks are
/// independent. Error rates follow a beta hierarchy (speaker rate, then
/// block rate) and errors are binomial draws given the block rate.
struct SyntheticSpec {
  std::size_t n_speakers = 4;
  std::size_t utts_per_speaker = 24;
  std::size_t block_size = 3;
  double within_block_corr = 0.7;
  std::size_t embedding_dim = 2000;
  double error_rate_mean = 0.1;
  std::int64_t words_per_utt = 20;
  Marginal marginal = Marginal::gaussian;
  /// Fraction of the rate variance mu(1-mu) carried by a speaker-level rate
  /// shared across all of a speaker's blocks; 0 keeps blocks independent.
  double speaker_rate_share = 0.0;
  /// System B's block rate is system A's times this ratio.
  double b_rate_ratio = 0.85;
  std::uint64_t rng_seed = 0;

  std::size_t n_utterances() const noexcept { return n_speakers * utts_per_speaker; }
};

void validate_spec(const SyntheticSpec& spec);

struct SyntheticData {
  EvalDataset dataset;
  EmbeddingMatrix embeddings;
  SpeakerPartition speakers;
  BlockPartition truth;
};

SyntheticData generate(const SyntheticSpec& spec);

/// Closed-form moments of the system-A per-utterance error rate Z = e/m.
struct SyntheticMoments {
  double var_z = 0.0;
  /// Covariance of two utterances in the same true block.
  double cov_block = 0.0;
  /// Covariance of two utterances of one speaker in different blocks.
  double cov_speaker = 0.0;
  /// n Var(W_n): the asymptotic variance the block estimator targets.
  double sigma_sq = 0.0;
};

SyntheticMoments analytic_moments(const SyntheticSpec& spec);

/// Fraction of unordered pairs on which two partitions agree about being in
/// the same block (Rand index).
double pairwise_agreement(const BlockPartition& a, const BlockPartition& b, std::size_t n);

/// True when both partitions have the same blocks after canonicalization.
bool same_partition(BlockPartition a, BlockPartition b);

struct ConsistencyOptions {
  InferenceOptions inference;
  /// Score the ground-truth blocks instead of inferred ones.
  bool use_true_blocks = false;
  unsigned workers = 1;
};

struct ConsistencyRow {
  std::size_t n = 0;
  double sigma_sq = 0.0;
  double mean_sigma_hat_sq = 0.0;
  double mse = 0.0;
  double relative_rmse = 0.0;
  double mean_blocks = 0.0;
};

/// For each n (a multiple of utts_per_speaker) and each repetition: generate,
/// infer blocks, and record (sigma_hat_sq - sigma_sq)^2. Repetition r at grid
/// point g uses seed child_seed(child_seed(spec.rng_seed, g), r).
std::vector<ConsistencyRow> consistency_experiment(const SyntheticSpec& spec,
                                                   const std::vector<std::size_t>& n_grid,
                                                   std::size_t reps,
                                                   const ConsistencyOptions& opts);

}  // namespace wersig
