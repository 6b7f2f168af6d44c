#include "wersig/simulation.hpp"

#include <cmath>
#include <random>
#include <string>

#include "wersig/errors.hpp"
#include "wersig/parallel.hpp"
#include "wersig/resampling.hpp"
#include "wersig/rng.hpp"

namespace wersig {
namespace {

double draw_beta(Engine& eng, double mean, double concentration) {
  std::gamma_distribution<double> ga(mean * concentration, 1.0);
  std::gamma_distribution<double> gb((1.0 - mean) * concentration, 1.0);
  const double x = ga(eng);
  const double y = gb(eng);
  return x / (x + y);
}

/// Beta concentration giving rate variance share `share` of mean(1-mean):
/// Var = mean(1-mean) / (kappa + 1).
double concentration_for_share(double share) { return (1.0 - share) / share; }

/// Block-level concentration so that, without a speaker effect, two
/// utterances of a block have error-rate correlation rho: m / (m + kappa) = rho.
double block_concentration(const SyntheticSpec& spec) {
  const double rho = spec.within_block_corr;
  return static_cast<double>(spec.words_per_utt) * (1.0 - rho) / rho;
}

std::string pad(std::size_t value, std::size_t width) {
  auto s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

}  // namespace

void validate_spec(const SyntheticSpec& spec) {
  if (spec.n_speakers == 0 || spec.utts_per_speaker == 0 || spec.block_size == 0) {
    throw ValidationError("synthetic spec needs positive speaker, utterance and block counts");
  }
  if (spec.utts_per_speaker % spec.block_size != 0) {
    throw ValidationError("block_size must divide utts_per_speaker");
  }
  if (!(spec.within_block_corr >= 0.0 && spec.within_block_corr < 1.0)) {
    throw ValidationError("within_block_corr must lie in [0, 1)");
  }
  if (spec.embedding_dim < 2) throw ValidationError("embedding_dim must be at least 2");
  if (!(spec.error_rate_mean > 0.0 && spec.error_rate_mean < 1.0)) {
    throw ValidationError("error_rate_mean must lie in (0, 1)");
  }
  if (spec.words_per_utt <= 0) throw ValidationError("words_per_utt must be positive");
  if (!(spec.speaker_rate_share >= 0.0 && spec.speaker_rate_share < 1.0)) {
    throw ValidationError("speaker_rate_share must lie in [0, 1)");
  }
  if (!(spec.b_rate_ratio >= 0.0) || spec.b_rate_ratio * spec.error_rate_mean > 1.0) {
    throw ValidationError("b_rate_ratio must keep system B's mean rate within [0, 1]");
  }
}

SyntheticData generate(const SyntheticSpec& spec) {
  validate_spec(spec);
  const std::size_t n = spec.n_utterances();
  const std::size_t dim = spec.embedding_dim;
  const double rho = spec.within_block_corr;
  const double load = std::sqrt(rho);
  const double noise = std::sqrt(1.0 - rho);
  const double mu = spec.error_rate_mean;

  SyntheticData data;
  data.dataset.name = "synthetic";
  data.dataset.records.reserve(n);
  data.embeddings.utt_ids.reserve(n);
  data.embeddings.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  data.truth.provenance = BlockProvenance::inferred;

  const std::size_t id_width = std::to_string(n).size();
  std::vector<double> factor(dim);
  std::size_t row = 0;
  for (std::size_t s = 0; s < spec.n_speakers; ++s) {
    auto eng = make_engine(spec.rng_seed, s);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::string speaker = "spk" + pad(s, 4);
    SpeakerGroup group{speaker, {}};

    const double speaker_rate = spec.speaker_rate_share > 0.0
                                    ? draw_beta(eng, mu, concentration_for_share(spec.speaker_rate_share))
                                    : mu;
    for (std::size_t first = 0; first < spec.utts_per_speaker; first += spec.block_size) {
      const double block_rate =
          rho > 0.0 ? draw_beta(eng, speaker_rate, block_concentration(spec)) : speaker_rate;
      for (auto& f : factor) f = normal(eng);
      std::binomial_distribution<std::int64_t> errors_a(spec.words_per_utt, block_rate);
      std::binomial_distribution<std::int64_t> errors_b(spec.words_per_utt,
                                                         std::min(1.0, block_rate * spec.b_rate_ratio));
      std::vector<std::size_t> block;
      for (std::size_t u = 0; u < spec.block_size; ++u, ++row) {
        auto values = data.embeddings.values.row(static_cast<Eigen::Index>(row));
        for (std::size_t l = 0; l < dim; ++l) {
          const double t = load * factor[l] + noise * normal(eng);
          values(static_cast<Eigen::Index>(l)) = spec.marginal == Marginal::cubed_gaussian ? t * t * t : t;
        }
        const std::string utt = speaker + "-u" + pad(row, id_width);
        data.embeddings.utt_ids.push_back(utt);
        const std::int64_t e_a = errors_a(eng);
        const std::int64_t e_b = errors_b(eng);
        data.dataset.records.push_back(EvalRecord{utt, speaker, spec.words_per_utt, e_a, e_b});
        group.indices.push_back(row);
        block.push_back(row);
      }
      data.truth.blocks.push_back(std::move(block));
    }
    data.speakers.groups.push_back(std::move(group));
  }
  return data;
}

SyntheticMoments analytic_moments(const SyntheticSpec& spec) {
  validate_spec(spec);
  const double mu = spec.error_rate_mean;
  const double base = mu * (1.0 - mu);
  const double m = static_cast<double>(spec.words_per_utt);
  const double var_q = spec.speaker_rate_share * base;
  const double e_q1q = base - var_q;
  const double rho = spec.within_block_corr;
  const double var_p = var_q + (rho > 0.0 ? e_q1q / (block_concentration(spec) + 1.0) : 0.0);

  SyntheticMoments out;
  out.cov_block = var_p;
  out.cov_speaker = var_q;
  out.var_z = (base - var_p) / m + var_p;
  const double d = static_cast<double>(spec.block_size);
  const double g = static_cast<double>(spec.utts_per_speaker);
  out.sigma_sq = out.var_z + (d - 1.0) * var_p + (g - d) * var_q;
  return out;
}

double pairwise_agreement(const BlockPartition& a, const BlockPartition& b, std::size_t n) {
  if (n < 2) return 1.0;
  std::vector<std::size_t> la(n), lb(n);
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    for (const auto i : a.blocks[k]) la.at(i) = k;
  }
  for (std::size_t k = 0; k < b.blocks.size(); ++k) {
    for (const auto i : b.blocks[k]) lb.at(i) = k;
  }
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((la[i] == la[j]) == (lb[i] == lb[j])) ++agree;
    }
  }
  return static_cast<double>(agree) / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

bool same_partition(BlockPartition a, BlockPartition b) {
  canonicalize(a);
  canonicalize(b);
  return a.blocks == b.blocks;
}

std::vector<ConsistencyRow> consistency_experiment(const SyntheticSpec& spec,
                                                   const std::vector<std::size_t>& n_grid,
                                                   std::size_t reps,
                                                   const ConsistencyOptions& opts) {
  if (reps == 0) throw ValidationError("consistency experiment needs at least one repetition");
  std::vector<ConsistencyRow> rows;
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const std::size_t n = n_grid[g];
    if (n == 0 || n % spec.utts_per_speaker != 0) {
      throw ValidationError("grid size " + std::to_string(n) +
                            " is not a multiple of utts_per_speaker");
    }
    if (g > 0 && n <= n_grid[g - 1]) throw ValidationError("n_grid must be increasing");
    SyntheticSpec sized = spec;
    sized.n_speakers = n / spec.utts_per_speaker;
    const double sigma_sq = analytic_moments(sized).sigma_sq;

    std::vector<double> estimates(reps);
    std::vector<std::size_t> blocks(reps);
    parallel_for(reps, opts.workers, [&](std::size_t r) {
      SyntheticSpec rep_spec = sized;
      rep_spec.rng_seed = child_seed(child_seed(spec.rng_seed, g), r);
      const SyntheticData data = generate(rep_spec);
      BlockPartition partition;
      if (opts.use_true_blocks) {
        partition = data.truth;
      } else {
        InferenceOptions inf = opts.inference;
        inf.glasso.workers = 1;
        inf.glasso.rng_seed = rep_spec.rng_seed;
        partition = infer_blocks(data.dataset, data.embeddings, data.speakers, inf).partition;
      }
      estimates[r] = block_variance(data.dataset, partition).sigma_hat_sq;
      blocks[r] = partition.size();
    });

    ConsistencyRow row;
    row.n = n;
    row.sigma_sq = sigma_sq;
    for (std::size_t r = 0; r < reps; ++r) {
      row.mean_sigma_hat_sq += estimates[r];
      row.mse += (estimates[r] - sigma_sq) * (estimates[r] - sigma_sq);
      row.mean_blocks += static_cast<double>(blocks[r]);
    }
    const auto count = static_cast<double>(reps);
    row.mean_sigma_hat_sq /= count;
    row.mse /= count;
    row.mean_blocks /= count;
    row.relative_rmse = std::sqrt(row.mse) / sigma_sq;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace wersig
