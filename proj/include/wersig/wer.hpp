#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wersig/eval_data.hpp"

namespace wersig {

struct AlignmentCounts {
  std::int64_t substitutions = 0;
  std::int64_t insertions = 0;
  std::int64_t deletions = 0;
  std::int64_t reference_len = 0;

  std::int64_t total_errors() const noexcept { return substitutions + insertions + deletions; }
  friend bool operator==(const AlignmentCounts&, const AlignmentCounts&) = default;
};

/// Splits already-normalized text on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view text);

/// Minimum edit-distance alignment with unit costs. Among equal-cost
/// backtraces, substitution (or match) is preferred over insertion over
/// deletion.
AlignmentCounts align_and_count(const std::vector<std::string>& reference,
                                const std::vector<std::string>& hypothesis);

enum class System { A, B };

/// Sum of errors over sum of reference words for one system.
double compute_wer(const EvalDataset& dataset, System system);

struct WerSummary {
  double wer_a = 0.0;
  double wer_b = 0.0;
  double delta_abs = 0.0;
  /// Empty when the dataset has no system-A errors.
  std::optional<double> delta_rel;
  std::int64_t total_ref_words = 0;
  std::int64_t total_err_a = 0;
  std::int64_t total_err_b = 0;
};

/// Throws UndefinedStatisticError when there are no reference words.
WerSummary compute_wer_summary(const EvalDataset& dataset);

/// Like compute_wer_summary but throws when delta_rel is undefined.
double compute_delta_rel(const EvalDataset& dataset);

/// `utt_id<TAB>text` transcript file, in file order.
struct Transcript {
  std::string utt_id;
  std::string text;
};
std::vector<Transcript> load_transcripts(const std::filesystem::path& path);

/// Maps an utterance id to its speaker id.
using SpeakerOf = std::function<std::string(const std::string& utt_id)>;

/// LibriSpeech-style default: the utt_id prefix before the first '-', or the
/// whole id when it has none.
std::string speaker_from_utt_id(const std::string& utt_id);

/// Scores two hypothesis sets against references. Record order follows the
/// reference file. Throws ValidationError listing up to 10 utt_ids that are
/// missing from, or extra in, a hypothesis file.
EvalDataset score_transcripts(const std::vector<Transcript>& refs,
                              const std::vector<Transcript>& hyp_a,
                              const std::vector<Transcript>& hyp_b,
                              const SpeakerOf& speaker_of = speaker_from_utt_id);

}  // namespace wersig
