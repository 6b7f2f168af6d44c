#include "wersig/eval_data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

#include "wersig/errors.hpp"

namespace wersig {
namespace {

constexpr char kEmbeddingMagic[4] = {'W', 'S', 'E', 'B'};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool skip_line(std::string_view line) { return line.empty() || line.front() == '#'; }

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

std::int64_t parse_count(std::string_view field, const char* what, std::size_t line_no) {
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(at_line(line_no) + what + " is not a base-10 integer: '" +
                     std::string(field) + "'");
  }
  if (value < 0) {
    throw ParseError(at_line(line_no) + what + " is negative: " + std::string(field));
  }
  return value;
}

double parse_real(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw ParseError(at_line(line_no) + "not a real number: '" + std::string(field) + "'");
  }
  return value;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

template <typename T>
T swap_bytes(T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
T read_le(std::istream& in, const char* what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError(std::string("truncated embedding file while reading ") + what);
  if constexpr (std::endian::native == std::endian::big) value = swap_bytes(value);
  return value;
}

template <typename T>
void write_le(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) value = swap_bytes(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

void validate_dataset(const EvalDataset& dataset) {
  if (dataset.records.empty()) throw ValidationError("no records");
  std::unordered_set<std::string_view> seen;
  seen.reserve(dataset.records.size());
  for (const auto& r : dataset.records) {
    if (r.m < 0 || r.e_a < 0 || r.e_b < 0) {
      throw ValidationError("negative count for utterance " + r.utt_id);
    }
    if (!seen.insert(r.utt_id).second) {
      throw ValidationError("duplicate utt_id: " + r.utt_id);
    }
  }
}

EvalDataset parse_eval_records(std::istream& in, std::string name) {
  EvalDataset dataset{std::move(name), {}};
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (skip_line(line)) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 5) {
      throw ParseError(at_line(line_no) + "expected 5 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    dataset.records.push_back(EvalRecord{std::string(fields[0]), std::string(fields[1]),
                                         parse_count(fields[2], "m", line_no),
                                         parse_count(fields[3], "e_a", line_no),
                                         parse_count(fields[4], "e_b", line_no)});
  }
  validate_dataset(dataset);
  return dataset;
}

EvalDataset load_eval_records(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_eval_records(in, path.stem().string());
}

void write_eval_records(std::ostream& out, const EvalDataset& dataset) {
  out << "#utt_id\tspeaker_id\tm\te_a\te_b\n";
  for (const auto& r : dataset.records) {
    out << r.utt_id << '\t' << r.speaker_id << '\t' << r.m << '\t' << r.e_a << '\t' << r.e_b
        << '\n';
  }
}

void save_eval_records(const std::filesystem::path& path, const EvalDataset& dataset) {
  auto out = open_out(path);
  write_eval_records(out, dataset);
}

void validate_embeddings(const EmbeddingMatrix& emb) {
  if (emb.utt_ids.size() != emb.rows()) {
    throw ValidationError("embedding ids (" + std::to_string(emb.utt_ids.size()) +
                          ") do not align with rows (" + std::to_string(emb.rows()) + ")");
  }
  if (emb.rows() > 0 && emb.dim() < 2) {
    throw ValidationError("embedding dimension must be at least 2, got " +
                          std::to_string(emb.dim()));
  }
  for (Eigen::Index i = 0; i < emb.values.rows(); ++i) {
    for (Eigen::Index l = 0; l < emb.values.cols(); ++l) {
      if (!std::isfinite(emb.values(i, l))) {
        throw ValidationError("non-finite embedding value for " + emb.utt_ids[i] + " at column " +
                              std::to_string(l));
      }
    }
  }
}

EmbeddingMatrix parse_embeddings_tsv(std::istream& in) {
  std::vector<std::string> ids;
  std::vector<double> flat;
  std::size_t dim = 0;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = strip_cr(raw);
    if (skip_line(line)) continue;
    const auto fields = split_tabs(line);
    const std::size_t row_dim = fields.size() - 1;
    if (ids.empty()) {
      dim = row_dim;
    } else if (row_dim != dim) {
      throw ParseError(at_line(line_no) + "ragged row: expected " + std::to_string(dim) +
                       " values, got " + std::to_string(row_dim));
    }
    ids.emplace_back(fields[0]);
    for (std::size_t l = 1; l < fields.size(); ++l) flat.push_back(parse_real(fields[l], line_no));
  }
  EmbeddingMatrix emb;
  emb.utt_ids = std::move(ids);
  emb.values = Eigen::Map<RowMatrix>(flat.data(), static_cast<Eigen::Index>(emb.utt_ids.size()),
                                     static_cast<Eigen::Index>(dim));
  validate_embeddings(emb);
  return emb;
}

EmbeddingMatrix parse_embeddings_binary(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
    throw ParseError("embedding file does not start with WSEB magic");
  }
  const auto rows = read_le<std::uint32_t>(in, "row count");
  const auto dim = read_le<std::uint32_t>(in, "dimension");
  EmbeddingMatrix emb;
  emb.utt_ids.reserve(rows);
  for (std::uint32_t i = 0; i < rows; ++i) {
    const auto len = read_le<std::uint16_t>(in, "id length");
    std::string id(len, '\0');
    in.read(id.data(), len);
    if (!in) throw ParseError("truncated embedding file while reading id " + std::to_string(i));
    emb.utt_ids.push_back(std::move(id));
  }
  emb.values.resize(rows, dim);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t l = 0; l < dim; ++l) {
      emb.values(i, l) = std::bit_cast<double>(read_le<std::uint64_t>(in, "values"));
    }
  }
  validate_embeddings(emb);
  return emb;
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  if (format == EmbeddingFormat::automatic) {
    char magic[4] = {};
    in.read(magic, 4);
    const bool binary = in.gcount() == 4 && std::memcmp(magic, kEmbeddingMagic, 4) == 0;
    in.clear();
    in.seekg(0);
    format = binary ? EmbeddingFormat::raw_binary : EmbeddingFormat::tsv;
  }
  return format == EmbeddingFormat::raw_binary ? parse_embeddings_binary(in)
                                               : parse_embeddings_tsv(in);
}

void write_embeddings_tsv(std::ostream& out, const EmbeddingMatrix& emb) {
  // Shortest round-trip representation keeps TSV and binary bitwise-equivalent.
  char buf[64];
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    out << emb.utt_ids[i];
    for (std::size_t l = 0; l < emb.dim(); ++l) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), emb.values(i, l));
      out << '\t' << std::string_view(buf, ptr - buf);
    }
    out << '\n';
  }
}

void write_embeddings_binary(std::ostream& out, const EmbeddingMatrix& emb) {
  out.write(kEmbeddingMagic, 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(emb.rows()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(emb.dim()));
  for (const auto& id : emb.utt_ids) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ValidationError("utterance id too long for binary format: " + id.substr(0, 32));
    }
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    for (std::size_t l = 0; l < emb.dim(); ++l) {
      write_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(emb.values(i, l)));
    }
  }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& emb,
                     EmbeddingFormat format) {
  if (format == EmbeddingFormat::raw_binary) {
    auto out = open_out(path, std::ios::out | std::ios::binary);
    write_embeddings_binary(out, emb);
  } else {
    auto out = open_out(path);
    write_embeddings_tsv(out, emb);
  }
}

SpeakerPartition group_by_speaker(const EvalDataset& dataset) {
  SpeakerPartition partition;
  std::unordered_map<std::string_view, std::size_t> slot;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& speaker = dataset.records[i].speaker_id;
    auto [it, inserted] = slot.try_emplace(speaker, partition.groups.size());
    if (inserted) partition.groups.push_back(SpeakerGroup{speaker, {}});
    partition.groups[it->second].indices.push_back(i);
  }
  return partition;
}

EmbeddingMatrix select_rows(const EmbeddingMatrix& emb, const std::vector<std::string>& utt_ids) {
  std::unordered_map<std::string_view, Eigen::Index> row_of;
  row_of.reserve(emb.rows());
  for (std::size_t i = 0; i < emb.rows(); ++i) row_of.emplace(emb.utt_ids[i], i);
  EmbeddingMatrix out;
  out.utt_ids = utt_ids;
  out.values.resize(static_cast<Eigen::Index>(utt_ids.size()), emb.values.cols());
  for (std::size_t i = 0; i < utt_ids.size(); ++i) {
    const auto it = row_of.find(utt_ids[i]);
    if (it == row_of.end()) throw ValidationError("no embedding row for utterance " + utt_ids[i]);
    out.values.row(static_cast<Eigen::Index>(i)) = emb.values.row(it->second);
  }
  return out;
}

}  // namespace wersig
