#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "wersig/covariance.hpp"
#include "wersig/eval_data.hpp"
#include "wersig/glasso.hpp"

namespace wersig {

/// Undirected simple graph over utterance indices; edges stored with i < j,
/// sorted.
struct UtteranceGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

enum class BlockProvenance { speaker, inferred, singleton, external };

const char* to_string(BlockProvenance p);

/// Disjoint blocks of global utterance indices. Canonical form: indices
/// ascending within a block, blocks ordered by smallest member.
struct BlockPartition {
  std::vector<std::vector<std::size_t>> blocks;
  BlockProvenance provenance = BlockProvenance::inferred;

  std::size_t size() const noexcept { return blocks.size(); }
};

/// Sorts into canonical form.
void canonicalize(BlockPartition& partition);

/// Throws ValidationError unless blocks are non-empty, disjoint and cover
/// exactly 0..n-1.
void validate_partition(const BlockPartition& partition, std::size_t n);

/// Edge (i, j) iff theta(i, j) != 0. Throws InternalError on an asymmetric
/// zero pattern.
UtteranceGraph graph_from_precision(const PrecisionEstimate& est);

BlockPartition connected_components(const UtteranceGraph& g);

BlockPartition singleton_partition(std::size_t n);
BlockPartition speaker_blocks(const SpeakerPartition& speakers);

struct SpeakerBlockStats {
  std::string speaker_id;
  std::size_t utterances = 0;
  std::size_t blocks = 0;
  double lambda = 0.0;
  bool converged = true;
};

struct InferenceResult {
  BlockPartition partition;
  std::vector<SpeakerBlockStats> per_speaker;
};

struct InferenceOptions {
  GlassoConfig glasso;
  NonparanormalConfig nonpara;
  /// One graph over all utterances instead of one per speaker.
  bool global_graph = false;
};

/// Per-group precision estimation and component extraction, mapped back to
/// dataset indices. Groups of one utterance become singleton blocks without a
/// solve. Groups run concurrently on `opts.glasso.workers` threads; the
/// result does not depend on the worker count.
InferenceResult infer_blocks(const EvalDataset& dataset, const EmbeddingMatrix& embeddings,
                             const SpeakerPartition& partition, const InferenceOptions& opts);

/// Median of per-speaker blocks / utterances ratios.
double median_block_ratio(const std::vector<SpeakerBlockStats>& stats);

/// `block_id<TAB>utt_id` rows in canonical order.
void write_blocks(std::ostream& out, const BlockPartition& partition, const EvalDataset& dataset);
void save_blocks(const std::filesystem::path& path, const BlockPartition& partition,
                 const EvalDataset& dataset);

/// Reads a block file against a dataset. Every dataset utterance must appear
/// exactly once; block ids are opaque labels.
BlockPartition parse_blocks(std::istream& in, const EvalDataset& dataset);
BlockPartition load_blocks(const std::filesystem::path& path, const EvalDataset& dataset);

}  // namespace wersig
