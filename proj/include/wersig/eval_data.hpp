#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wersig {

/// One utterance's scoring tuple. Error counts may exceed `m` because of
/// insertions.
struct EvalRecord {
  std::string utt_id;
  std::string speaker_id;
  std::int64_t m = 0;
  std::int64_t e_a = 0;
  std::int64_t e_b = 0;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

/// Ordered scoring records; position in `records` is the utterance index.
struct EvalDataset {
  std::string name;
  std::vector<EvalRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  friend bool operator==(const EvalDataset&, const EvalDataset&) = default;
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Utterance embeddings, one row per utterance, `dim()` columns.
struct EmbeddingMatrix {
  std::vector<std::string> utt_ids;
  RowMatrix values;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

struct SpeakerGroup {
  std::string speaker_id;
  std::vector<std::size_t> indices;

  friend bool operator==(const SpeakerGroup&, const SpeakerGroup&) = default;
};

/// Disjoint cover of dataset indices by speaker, groups in order of first
/// appearance.
struct SpeakerPartition {
  std::vector<SpeakerGroup> groups;
};

enum class EmbeddingFormat { automatic, tsv, raw_binary };

/// Checks non-emptiness, non-negative counts and utt_id uniqueness.
void validate_dataset(const EvalDataset& dataset);

EvalDataset parse_eval_records(std::istream& in, std::string name = {});
EvalDataset load_eval_records(const std::filesystem::path& path);
void write_eval_records(std::ostream& out, const EvalDataset& dataset);
void save_eval_records(const std::filesystem::path& path, const EvalDataset& dataset);

/// Checks shape, id alignment, finiteness and L >= 2.
void validate_embeddings(const EmbeddingMatrix& emb);

EmbeddingMatrix parse_embeddings_tsv(std::istream& in);
EmbeddingMatrix parse_embeddings_binary(std::istream& in);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                EmbeddingFormat format = EmbeddingFormat::automatic);
void write_embeddings_tsv(std::ostream& out, const EmbeddingMatrix& emb);
void write_embeddings_binary(std::ostream& out, const EmbeddingMatrix& emb);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb,
                     EmbeddingFormat format);

SpeakerPartition group_by_speaker(const EvalDataset& dataset);

/// Rows of `emb` reordered to follow `utt_ids`. Throws ValidationError naming
/// the first id without an embedding row.
EmbeddingMatrix select_rows(const EmbeddingMatrix& emb, const std::vector<std::string>& utt_ids);

}  // namespace wersig
