#include "wersig/wer.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "wersig/errors.hpp"

namespace wersig {

std::vector<std::string> tokenize(std::string_view text) {
  constexpr std::string_view kSpace = " \t\n\r\f\v";
  std::vector<std::string> words;
  std::size_t pos = text.find_first_not_of(kSpace);
  while (pos != std::string_view::npos) {
    const auto end = text.find_first_of(kSpace, pos);
    words.emplace_back(text.substr(pos, end - pos));
    pos = text.find_first_not_of(kSpace, end);
  }
  return words;
}

AlignmentCounts align_and_count(const std::vector<std::string>& reference,
                                const std::vector<std::string>& hypothesis) {
  const std::size_t rows = reference.size() + 1;
  const std::size_t cols = hypothesis.size() + 1;
  std::vector<std::int64_t> dist(rows * cols);
  auto at = [&](std::size_t i, std::size_t j) -> std::int64_t& { return dist[i * cols + j]; };

  for (std::size_t i = 0; i < rows; ++i) at(i, 0) = static_cast<std::int64_t>(i);
  for (std::size_t j = 0; j < cols; ++j) at(0, j) = static_cast<std::int64_t>(j);
  for (std::size_t i = 1; i < rows; ++i) {
    for (std::size_t j = 1; j < cols; ++j) {
      const std::int64_t diag = at(i - 1, j - 1) + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i, j - 1) + 1, at(i - 1, j) + 1});
    }
  }

  AlignmentCounts counts;
  counts.reference_len = static_cast<std::int64_t>(reference.size());
  std::size_t i = reference.size();
  std::size_t j = hypothesis.size();
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = reference[i - 1] == hypothesis[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && at(i, j) == at(i, j - 1) + 1) {
      ++counts.insertions;
      --j;
    } else {
      ++counts.deletions;
      --i;
    }
  }
  return counts;
}

namespace {

struct Totals {
  std::int64_t m = 0;
  std::int64_t e_a = 0;
  std::int64_t e_b = 0;
};

Totals totals_of(const EvalDataset& dataset) {
  Totals t;
  for (const auto& r : dataset.records) {
    t.m += r.m;
    t.e_a += r.e_a;
    t.e_b += r.e_b;
  }
  return t;
}

}  // namespace

double compute_wer(const EvalDataset& dataset, System system) {
  const auto t = totals_of(dataset);
  if (t.m == 0) throw UndefinedStatisticError("WER undefined: dataset has no reference words");
  return static_cast<double>(system == System::A ? t.e_a : t.e_b) / static_cast<double>(t.m);
}

WerSummary compute_wer_summary(const EvalDataset& dataset) {
  const auto t = totals_of(dataset);
  if (t.m == 0) throw UndefinedStatisticError("WER undefined: dataset has no reference words");
  const auto m = static_cast<double>(t.m);
  WerSummary s;
  s.total_ref_words = t.m;
  s.total_err_a = t.e_a;
  s.total_err_b = t.e_b;
  s.wer_a = static_cast<double>(t.e_a) / m;
  s.wer_b = static_cast<double>(t.e_b) / m;
  s.delta_abs = static_cast<double>(t.e_b - t.e_a) / m;
  if (t.e_a > 0) s.delta_rel = static_cast<double>(t.e_b - t.e_a) / static_cast<double>(t.e_a);
  return s;
}

double compute_delta_rel(const EvalDataset& dataset) {
  const auto s = compute_wer_summary(dataset);
  if (!s.delta_rel) {
    throw UndefinedStatisticError("relative WER difference undefined: system A has no errors");
  }
  return *s.delta_rel;
}

std::vector<Transcript> load_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::vector<Transcript> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      // An empty hypothesis may be written without the trailing tab.
      out.push_back({line, {}});
      continue;
    }
    if (tab == 0) throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": empty utt_id");
    out.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return out;
}

std::string speaker_from_utt_id(const std::string& utt_id) {
  return utt_id.substr(0, utt_id.find('-'));
}

namespace {

std::unordered_map<std::string, const Transcript*> index_by_id(const std::vector<Transcript>& ts,
                                                               const char* label) {
  std::unordered_map<std::string, const Transcript*> map;
  map.reserve(ts.size());
  for (const auto& t : ts) {
    if (!map.emplace(t.utt_id, &t).second) {
      throw ValidationError(std::string("duplicate utt_id in ") + label + ": " + t.utt_id);
    }
  }
  return map;
}

void check_same_ids(const std::vector<Transcript>& refs,
                    const std::unordered_map<std::string, const Transcript*>& refs_by_id,
                    const std::unordered_map<std::string, const Transcript*>& hyp_by_id,
                    const std::vector<Transcript>& hyp, const char* label) {
  std::vector<std::string> offenders;
  for (const auto& r : refs) {
    if (!hyp_by_id.contains(r.utt_id)) offenders.push_back("missing " + r.utt_id);
  }
  for (const auto& h : hyp) {
    if (!refs_by_id.contains(h.utt_id)) offenders.push_back("extra " + h.utt_id);
  }
  if (offenders.empty()) return;
  std::string msg = std::string("utt_id mismatch between references and ") + label + " (" +
                    std::to_string(offenders.size()) + " offenders):";
  for (std::size_t k = 0; k < std::min<std::size_t>(10, offenders.size()); ++k) {
    msg += " " + offenders[k];
  }
  throw ValidationError(msg);
}

}  // namespace

EvalDataset score_transcripts(const std::vector<Transcript>& refs,
                              const std::vector<Transcript>& hyp_a,
                              const std::vector<Transcript>& hyp_b, const SpeakerOf& speaker_of) {
  const auto refs_by_id = index_by_id(refs, "references");
  const auto a_by_id = index_by_id(hyp_a, "hypotheses A");
  const auto b_by_id = index_by_id(hyp_b, "hypotheses B");
  check_same_ids(refs, refs_by_id, a_by_id, hyp_a, "hypotheses A");
  check_same_ids(refs, refs_by_id, b_by_id, hyp_b, "hypotheses B");

  EvalDataset dataset;
  dataset.records.reserve(refs.size());
  for (const auto& r : refs) {
    const auto ref_words = tokenize(r.text);
    const auto a = align_and_count(ref_words, tokenize(a_by_id.at(r.utt_id)->text));
    const auto b = align_and_count(ref_words, tokenize(b_by_id.at(r.utt_id)->text));
    dataset.records.push_back(EvalRecord{r.utt_id, speaker_of(r.utt_id), a.reference_len,
                                         a.total_errors(), b.total_errors()});
  }
  validate_dataset(dataset);
  return dataset;
}

}  // namespace wersig
