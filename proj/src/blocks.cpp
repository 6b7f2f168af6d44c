#include "wersig/blocks.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "wersig/errors.hpp"
#include "wersig/parallel.hpp"
#include "wersig/rng.hpp"
#include "wersig/union_find.hpp"

namespace wersig {

const char* to_string(BlockProvenance p) {
  switch (p) {
    case BlockProvenance::speaker: return "speaker";
    case BlockProvenance::inferred: return "inferred";
    case BlockProvenance::singleton: return "singleton";
    case BlockProvenance::external: return "external";
  }
  return "unknown";
}

void canonicalize(BlockPartition& partition) {
  for (auto& b : partition.blocks) std::sort(b.begin(), b.end());
  std::sort(partition.blocks.begin(), partition.blocks.end(),
            [](const auto& x, const auto& y) { return x.front() < y.front(); });
}

void validate_partition(const BlockPartition& partition, std::size_t n) {
  if (partition.blocks.empty()) throw ValidationError("block partition is empty");
  std::vector<bool> seen(n, false);
  std::size_t covered = 0;
  for (const auto& block : partition.blocks) {
    if (block.empty()) throw ValidationError("block partition contains an empty block");
    for (const auto i : block) {
      if (i >= n) throw ValidationError("block index " + std::to_string(i) + " out of range");
      if (seen[i]) throw ValidationError("index " + std::to_string(i) + " is in two blocks");
      seen[i] = true;
      ++covered;
    }
  }
  if (covered != n) {
    throw ValidationError("block partition covers " + std::to_string(covered) + " of " +
                          std::to_string(n) + " utterances");
  }
}

UtteranceGraph graph_from_precision(const PrecisionEstimate& est) {
  const auto n = est.theta.rows();
  UtteranceGraph g{static_cast<std::size_t>(n), {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool upper = est.theta(i, j) != 0.0;
      const bool lower = est.theta(j, i) != 0.0;
      if (upper != lower) {
        throw InternalError("precision zero pattern is asymmetric at (" + std::to_string(i) + ", " +
                            std::to_string(j) + ")");
      }
      if (upper) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

BlockPartition connected_components(const UtteranceGraph& g) {
  UnionFind uf(g.n);
  for (const auto& [i, j] : g.edges) uf.unite(i, j);
  return BlockPartition{uf.components(), BlockProvenance::inferred};
}

BlockPartition singleton_partition(std::size_t n) {
  BlockPartition p{{}, BlockProvenance::singleton};
  p.blocks.reserve(n);
  for (std::size_t i = 0; i < n; ++i) p.blocks.push_back({i});
  return p;
}

BlockPartition speaker_blocks(const SpeakerPartition& speakers) {
  BlockPartition p{{}, BlockProvenance::speaker};
  for (const auto& g : speakers.groups) p.blocks.push_back(g.indices);
  canonicalize(p);
  return p;
}

InferenceResult infer_blocks(const EvalDataset& dataset, const EmbeddingMatrix& embeddings,
                             const SpeakerPartition& partition, const InferenceOptions& opts) {
  SpeakerPartition groups;
  if (opts.global_graph) {
    SpeakerGroup all{"*", std::vector<std::size_t>(dataset.size())};
    std::iota(all.indices.begin(), all.indices.end(), std::size_t{0});
    groups.groups.push_back(std::move(all));
  } else {
    groups = partition;
  }

  const std::size_t count = groups.groups.size();
  std::vector<std::vector<std::vector<std::size_t>>> local_blocks(count);
  std::vector<SpeakerBlockStats> stats(count);

  parallel_for(count, opts.glasso.workers, [&](std::size_t g) {
    const auto& group = groups.groups[g];
    auto& st = stats[g];
    st.speaker_id = group.speaker_id;
    st.utterances = group.indices.size();
    std::vector<std::string> ids;
    ids.reserve(group.indices.size());
    for (const auto i : group.indices) ids.push_back(dataset.records.at(i).utt_id);
    const EmbeddingMatrix rows = select_rows(embeddings, ids);

    if (group.indices.size() == 1) {
      local_blocks[g] = {{0}};
    } else {
      GlassoConfig cfg = opts.glasso;
      cfg.workers = 1;
      cfg.rng_seed = child_seed(opts.glasso.rng_seed, g);
      const PrecisionEstimate est = estimate_precision(rows, cfg, opts.nonpara);
      st.lambda = est.lambda_used;
      st.converged = est.converged;
      local_blocks[g] = connected_components(graph_from_precision(est)).blocks;
    }
    st.blocks = local_blocks[g].size();
  });

  InferenceResult result;
  result.partition.provenance = BlockProvenance::inferred;
  for (std::size_t g = 0; g < count; ++g) {
    for (const auto& local : local_blocks[g]) {
      std::vector<std::size_t> global;
      global.reserve(local.size());
      for (const auto i : local) global.push_back(groups.groups[g].indices[i]);
      result.partition.blocks.push_back(std::move(global));
    }
  }
  canonicalize(result.partition);
  validate_partition(result.partition, dataset.size());
  result.per_speaker = std::move(stats);
  return result;
}

double median_block_ratio(const std::vector<SpeakerBlockStats>& stats) {
  if (stats.empty()) return 0.0;
  std::vector<double> ratios;
  ratios.reserve(stats.size());
  for (const auto& s : stats) {
    ratios.push_back(static_cast<double>(s.blocks) / static_cast<double>(s.utterances));
  }
  std::sort(ratios.begin(), ratios.end());
  const std::size_t mid = ratios.size() / 2;
  return ratios.size() % 2 == 1 ? ratios[mid] : 0.5 * (ratios[mid - 1] + ratios[mid]);
}

void write_blocks(std::ostream& out, const BlockPartition& partition, const EvalDataset& dataset) {
  out << "#block_id\tutt_id\n";
  for (std::size_t k = 0; k < partition.blocks.size(); ++k) {
    for (const auto i : partition.blocks[k]) out << k << '\t' << dataset.records.at(i).utt_id << '\n';
  }
}

void save_blocks(const std::filesystem::path& path, const BlockPartition& partition,
                 const EvalDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_blocks(out, partition, dataset);
}

BlockPartition parse_blocks(std::istream& in, const EvalDataset& dataset) {
  std::unordered_map<std::string, std::size_t> index_of;
  index_of.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) index_of.emplace(dataset.records[i].utt_id, i);

  std::map<std::string, std::size_t> slot_of;
  BlockPartition partition{{}, BlockProvenance::external};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("blocks file line " + std::to_string(line_no) +
                       ": expected block_id<TAB>utt_id");
    }
    const auto utt = line.substr(tab + 1);
    const auto it = index_of.find(utt);
    if (it == index_of.end()) {
      throw ValidationError("blocks file line " + std::to_string(line_no) +
                            ": unknown utterance " + utt);
    }
    auto [slot, inserted] = slot_of.try_emplace(line.substr(0, tab), partition.blocks.size());
    if (inserted) partition.blocks.emplace_back();
    partition.blocks[slot->second].push_back(it->second);
  }
  canonicalize(partition);
  validate_partition(partition, dataset.size());
  return partition;
}

BlockPartition load_blocks(const std::filesystem::path& path, const EvalDataset& dataset) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_blocks(in, dataset);
}

}  // namespace wersig
