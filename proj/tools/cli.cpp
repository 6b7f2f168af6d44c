#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "wersig/blocks.hpp"
#include "wersig/errors.hpp"
#include "wersig/eval_data.hpp"
#include "wersig/parallel.hpp"
#include "wersig/simulation.hpp"
#include "wersig/wer.hpp"

namespace wersig::cli {

const char* to_string(Method m) {
  switch (m) {
    case Method::bootstrap: return "bootstrap";
    case Method::block_bootstrap: return "block-bootstrap";
    case Method::inferred_block_bootstrap: return "inferred-block-bootstrap";
  }
  return "unknown";
}

const char* to_string(Estimator e) {
  return e == Estimator::glasso ? "glasso" : "nonparanormal";
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_report_tsv(std::ostream& out, const Report& report, bool widths) {
  out << "statistic\tpoint\tlower\tupper\tlevel\tmethod\testimator\tk_blocks\tbboot\tseed";
  if (widths) out << "\twidth";
  out << '\n';
  for (const auto& row : report.rows) {
    const auto& ci = row.ci;
    out << to_string(ci.statistic) << '\t' << fixed(100.0 * ci.point, 6) << '\t'
        << fixed(100.0 * ci.lower, 6) << '\t' << fixed(100.0 * ci.upper, 6) << '\t'
        << fixed(ci.level, 4) << '\t' << to_string(row.method) << '\t'
        << (row.estimator.empty() ? "-" : row.estimator) << '\t' << row.k_blocks << '\t'
        << report.bboot << '\t' << report.seed;
    if (widths) out << '\t' << fixed(100.0 * ci.width(), 6);
    out << '\n';
  }
}

void write_report_text(std::ostream& out, const Report& report, bool widths) {
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %10s %10s %10s %-25s %-14s %8s%s\n", "statistic", "point",
                "lower", "upper", "method", "estimator", "blocks", widths ? "      width" : "");
  out << line;
  for (const auto& row : report.rows) {
    const auto& ci = row.ci;
    std::snprintf(line, sizeof line, "%-10s %10.4f %10.4f %10.4f %-25s %-14s %8zu", to_string(ci.statistic),
                  100.0 * ci.point, 100.0 * ci.lower, 100.0 * ci.upper, to_string(row.method),
                  row.estimator.empty() ? "-" : row.estimator.c_str(), row.k_blocks);
    out << line;
    if (widths) {
      std::snprintf(line, sizeof line, " %10.4f", 100.0 * ci.width());
      out << line;
    }
    out << '\n';
  }
  for (const auto& row : report.rows) {
    if (row.ci.warning) out << "warning: " << to_string(row.ci.statistic) << ": " << *row.ci.warning << '\n';
  }
  out << "(WER values x100; " << fixed(100.0 * (report.rows.empty() ? 0.95 : report.rows.front().ci.level), 1)
      << "% percentile intervals over " << report.bboot << " replicates)\n";
}

/// Writes to `path`, or to `fallback` when the path is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw ValidationError("cannot write " + path);
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

struct InferenceArgs {
  std::string embeddings;
  std::string estimator = "glasso";
  std::optional<double> lambda;
  std::size_t cv_folds = 5;
  bool global_graph = false;
};

struct CommonArgs {
  std::uint64_t seed = 0;
  unsigned workers = kAutoWorkers;
};

struct BootstrapArgs {
  std::size_t bboot = 10'000;
  double level = 0.95;
  std::string format = "text";
};

void add_inference_options(CLI::App* app, InferenceArgs& a, bool both) {
  app->add_option("--embeddings", a.embeddings, "Embedding file (TSV or WSEB binary)");
  app->add_option("--estimator", a.estimator, "Precision estimator")
      ->check(both ? CLI::IsMember({"glasso", "nonparanormal", "both"})
                   : CLI::IsMember({"glasso", "nonparanormal"}))
      ->capture_default_str();
  app->add_option("--lambda", a.lambda, "Fixed penalty (default: cross-validation)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--cv-folds", a.cv_folds, "Cross-validation folds")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1'000'000}))
      ->capture_default_str();
  app->add_flag("--global-graph", a.global_graph, "One graph over all utterances");
}

void add_common_options(CLI::App* app, CommonArgs& a) {
  app->add_option("--seed", a.seed, "RNG seed")->capture_default_str();
  app->add_option("--workers", a.workers, "Worker threads (0: all cores)")->capture_default_str();
}

void add_bootstrap_options(CLI::App* app, BootstrapArgs& a) {
  app->add_option("--bboot", a.bboot, "Bootstrap replicates")
      ->check(CLI::Range(std::size_t{100}, std::size_t{100'000'000}))
      ->capture_default_str();
  app->add_option("--level", a.level, "Confidence level")
      ->check(CLI::Range(0.5, 0.9999))
      ->capture_default_str();
  app->add_option("--format", a.format, "Report format")
      ->check(CLI::IsMember({"text", "tsv"}))
      ->capture_default_str();
}

InferenceOptions inference_options(const InferenceArgs& a, const CommonArgs& c, Estimator est) {
  InferenceOptions opts;
  opts.glasso.lambda = a.lambda;
  opts.glasso.cv_folds = a.cv_folds;
  opts.glasso.rng_seed = c.seed;
  opts.glasso.workers = c.workers;
  opts.nonpara.enabled = est == Estimator::nonparanormal;
  opts.global_graph = a.global_graph;
  return opts;
}

void push_inference_config(std::vector<std::string>& config, const InferenceArgs& a,
                           const GlassoConfig& defaults) {
  if (a.lambda) {
    config.push_back("lambda=" + fixed(*a.lambda, 6));
  } else {
    config.push_back("lambda=cv folds=" + std::to_string(a.cv_folds) +
                     " grid=" + std::to_string(defaults.cv_grid_size) +
                     " range=[0.01,1]*lambda_max score=" +
                     (defaults.cv_score == CvScore::refit ? "refit" : "penalized") +
                     " rule=" + (defaults.cv_one_se ? "one-se" : "max"));
  }
  config.push_back(std::string("graph=") + (a.global_graph ? "global" : "per-speaker"));
}

void write_ratios(std::ostream& out, const InferenceResult& inf) {
  out << "speaker_id\tutterances\tblocks\tratio\tlambda\tconverged\n";
  for (const auto& s : inf.per_speaker) {
    out << s.speaker_id << '\t' << s.utterances << '\t' << s.blocks << '\t'
        << fixed(static_cast<double>(s.blocks) / static_cast<double>(s.utterances), 6) << '\t'
        << fixed(s.lambda, 6) << '\t' << (s.converged ? 1 : 0) << '\n';
  }
}

Estimator parse_estimator(const std::string& s) {
  return s == "nonparanormal" ? Estimator::nonparanormal : Estimator::glasso;
}

void append_rows(Report& report, const AnalysisResult& res, Method method, std::string estimator) {
  for (const auto& ci : res.intervals) {
    report.rows.push_back(ReportRow{ci, method, estimator, res.k_blocks});
  }
}

BootstrapConfig bootstrap_config(const BootstrapArgs& b, const CommonArgs& c) {
  BootstrapConfig cfg;
  cfg.n_replicates = b.bboot;
  cfg.ci_level = b.level;
  cfg.rng_seed = c.seed;
  cfg.workers = c.workers;
  return cfg;
}

void base_config(Report& report, const std::string& command, const BootstrapArgs& b,
                 const CommonArgs& c) {
  report.bboot = b.bboot;
  report.seed = c.seed;
  report.config.push_back("command=" + command);
  report.config.push_back("seed=" + std::to_string(c.seed));
  report.config.push_back("bboot=" + std::to_string(b.bboot));
  report.config.push_back("level=" + fixed(b.level, 4));
}

void write_with_header(std::ostream& out, const Report& report, Format format, bool widths) {
  for (const auto& line : report.config) out << "# " << line << '\n';
  write_report(out, report, format, widths);
}

// score -----------------------------------------------------------------

struct ScoreArgs {
  std::string refs, hyp_a, hyp_b, out;
};

void cmd_score(const ScoreArgs& a, std::ostream& out) {
  const auto dataset = score_transcripts(load_transcripts(a.refs), load_transcripts(a.hyp_a),
                                         load_transcripts(a.hyp_b), speaker_from_utt_id);
  Sink sink(a.out, out);
  write_eval_records(sink.get(), dataset);
}

// infer-blocks ----------------------------------------------------------

struct InferArgs {
  std::string eval, out, ratios;
  InferenceArgs inf;
  CommonArgs common;
};

void cmd_infer(const InferArgs& a, std::ostream& out) {
  if (a.inf.embeddings.empty()) throw ValidationError("infer-blocks needs --embeddings");
  const auto dataset = load_eval_records(a.eval);
  const auto emb = load_embeddings(a.inf.embeddings);
  const auto result = infer_blocks(dataset, emb, group_by_speaker(dataset),
                                   inference_options(a.inf, a.common, parse_estimator(a.inf.estimator)));
  Sink sink(a.out, out);
  write_blocks(sink.get(), result.partition, dataset);
  if (!a.ratios.empty()) {
    Sink r(a.ratios, out);
    write_ratios(r.get(), result);
  }
}

// analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  std::string eval, method = "inferred-block-bootstrap", blocks_file, out, blocks_out, ratios;
  InferenceArgs inf;
  CommonArgs common;
  BootstrapArgs boot;
};

Method parse_method(const std::string& s) {
  if (s == "bootstrap") return Method::bootstrap;
  if (s == "block-bootstrap") return Method::block_bootstrap;
  return Method::inferred_block_bootstrap;
}

void cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto dataset = load_eval_records(a.eval);
  const Method method = parse_method(a.method);
  const Estimator est = parse_estimator(a.inf.estimator);
  Report report;
  base_config(report, "analyze", a.boot, a.common);
  report.config.push_back(std::string("method=") + to_string(method));

  BlockPartition partition;
  std::optional<InferenceResult> inferred;
  std::string estimator;
  if (!a.blocks_file.empty()) {
    if (method == Method::bootstrap) throw ValidationError("--blocks-file does not apply to --method bootstrap");
    partition = load_blocks(a.blocks_file, dataset);
    report.config.push_back("blocks=" + a.blocks_file);
  } else if (method == Method::bootstrap) {
    partition = singleton_partition(dataset.size());
  } else if (method == Method::block_bootstrap) {
    partition = speaker_blocks(group_by_speaker(dataset));
    report.config.push_back("blocks=speaker");
  } else {
    if (a.inf.embeddings.empty()) {
      throw ValidationError("inferred-block-bootstrap needs --embeddings or --blocks-file");
    }
    const auto emb = load_embeddings(a.inf.embeddings);
    inferred = infer_blocks(dataset, emb, group_by_speaker(dataset), inference_options(a.inf, a.common, est));
    partition = inferred->partition;
    estimator = to_string(est);
    report.config.push_back("estimator=" + estimator);
    push_inference_config(report.config, a.inf, GlassoConfig{});
    report.config.push_back("median_block_ratio=" + fixed(median_block_ratio(inferred->per_speaker), 6));
  }

  const auto res = run_analysis(dataset, partition, bootstrap_config(a.boot, a.common));
  append_rows(report, res, method, estimator);
  Sink sink(a.out, out);
  write_with_header(sink.get(), report, a.boot.format == "tsv" ? Format::tsv : Format::text, false);

  if (!a.blocks_out.empty()) save_blocks(a.blocks_out, partition, dataset);
  if (!a.ratios.empty()) {
    if (!inferred) throw ValidationError("--ratios needs inferred blocks");
    Sink r(a.ratios, out);
    write_ratios(r.get(), *inferred);
  }
}

// simulate --------------------------------------------------------------

struct SimulateArgs {
  SyntheticSpec spec;
  std::string marginal = "gaussian";
  std::string prefix;
  std::string embedding_format = "tsv";
};

void cmd_simulate(SimulateArgs a, std::ostream& out) {
  a.spec.marginal = a.marginal == "cubed" ? Marginal::cubed_gaussian : Marginal::gaussian;
  const auto data = generate(a.spec);
  const bool binary = a.embedding_format == "binary";
  const std::string eval_path = a.prefix + ".eval.tsv";
  const std::string emb_path = a.prefix + (binary ? ".emb.bin" : ".emb.tsv");
  const std::string blocks_path = a.prefix + ".blocks.tsv";
  save_eval_records(eval_path, data.dataset);
  save_embeddings(emb_path, data.embeddings, binary ? EmbeddingFormat::raw_binary : EmbeddingFormat::tsv);
  save_blocks(blocks_path, data.truth, data.dataset);
  const auto m = analytic_moments(a.spec);
  out << "# eval=" << eval_path << "\n# embeddings=" << emb_path << "\n# blocks=" << blocks_path
      << "\n# utterances=" << data.dataset.size() << " true_blocks=" << data.truth.size()
      << "\n# sigma_sq=" << fixed(m.sigma_sq, 8) << '\n';
}

// compare ---------------------------------------------------------------

struct CompareArgs {
  std::string eval, out;
  InferenceArgs inf;
  CommonArgs common;
  BootstrapArgs boot;
};

void cmd_compare(const CompareArgs& a, std::ostream& out) {
  if (a.inf.embeddings.empty()) throw ValidationError("compare needs --embeddings");
  const auto dataset = load_eval_records(a.eval);
  const auto emb = load_embeddings(a.inf.embeddings);
  const auto speakers = group_by_speaker(dataset);
  const auto boot = bootstrap_config(a.boot, a.common);

  Report report;
  base_config(report, "compare", a.boot, a.common);
  push_inference_config(report.config, a.inf, GlassoConfig{});

  append_rows(report, run_analysis(dataset, singleton_partition(dataset.size()), boot), Method::bootstrap, {});
  std::vector<Estimator> estimators;
  if (a.inf.estimator == "both") {
    estimators = {Estimator::glasso, Estimator::nonparanormal};
  } else {
    estimators = {parse_estimator(a.inf.estimator)};
  }
  for (const auto est : estimators) {
    const auto inferred = infer_blocks(dataset, emb, speakers, inference_options(a.inf, a.common, est));
    report.config.push_back(std::string("median_block_ratio[") + to_string(est) +
                            "]=" + fixed(median_block_ratio(inferred.per_speaker), 6));
    append_rows(report, run_analysis(dataset, inferred.partition, boot),
                Method::inferred_block_bootstrap, to_string(est));
  }
  append_rows(report, run_analysis(dataset, speaker_blocks(speakers), boot), Method::block_bootstrap, {});

  Sink sink(a.out, out);
  write_with_header(sink.get(), report, a.boot.format == "tsv" ? Format::tsv : Format::text, true);
}

}  // namespace

void write_report(std::ostream& out, const Report& report, Format format, bool widths) {
  if (format == Format::tsv) {
    write_report_tsv(out, report, widths);
  } else {
    write_report_text(out, report, widths);
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Confidence intervals for WER with dependency-aware block bootstrap"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* s = app.add_subcommand("score", "Align transcripts and write per-utterance error counts");
  s->add_option("--refs", score.refs, "Reference transcripts (utt_id<TAB>text)")->required();
  s->add_option("--hyp-a", score.hyp_a, "System A hypotheses")->required();
  s->add_option("--hyp-b", score.hyp_b, "System B hypotheses")->required();
  s->add_option("--out", score.out, "Output eval TSV (default: stdout)");

  InferArgs infer;
  auto* i = app.add_subcommand("infer-blocks", "Infer independent utterance blocks from embeddings");
  i->add_option("--eval", infer.eval, "Eval TSV")->required();
  add_inference_options(i, infer.inf, false);
  add_common_options(i, infer.common);
  i->add_option("--out", infer.out, "Output blocks TSV (default: stdout)");
  i->add_option("--ratios", infer.ratios, "Per-speaker block/utterance ratio TSV");

  AnalyzeArgs analyze;
  auto* a = app.add_subcommand("analyze", "Bootstrap confidence intervals for WER statistics");
  a->add_option("--eval", analyze.eval, "Eval TSV")->required();
  a->add_option("--method", analyze.method, "Resampling method")
      ->check(CLI::IsMember({"bootstrap", "block-bootstrap", "inferred-block-bootstrap"}))
      ->capture_default_str();
  a->add_option("--blocks-file", analyze.blocks_file, "Externally supplied blocks TSV");
  add_inference_options(a, analyze.inf, false);
  add_common_options(a, analyze.common);
  add_bootstrap_options(a, analyze.boot);
  a->add_option("--out", analyze.out, "Report path (default: stdout)");
  a->add_option("--blocks-out", analyze.blocks_out, "Write the partition used");
  a->add_option("--ratios", analyze.ratios, "Per-speaker block/utterance ratio TSV");

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Generate a synthetic dataset with known blocks");
  m->add_option("--speakers", sim.spec.n_speakers)->capture_default_str();
  m->add_option("--utts-per-speaker", sim.spec.utts_per_speaker)->capture_default_str();
  m->add_option("--block-size", sim.spec.block_size)->capture_default_str();
  m->add_option("--corr", sim.spec.within_block_corr, "Within-block correlation")->capture_default_str();
  m->add_option("--dim", sim.spec.embedding_dim, "Embedding dimension")->capture_default_str();
  m->add_option("--error-rate", sim.spec.error_rate_mean)->capture_default_str();
  m->add_option("--words", sim.spec.words_per_utt, "Reference words per utterance")->capture_default_str();
  m->add_option("--speaker-share", sim.spec.speaker_rate_share)->capture_default_str();
  m->add_option("--b-ratio", sim.spec.b_rate_ratio)->capture_default_str();
  m->add_option("--marginal", sim.marginal)
      ->check(CLI::IsMember({"gaussian", "cubed"}))
      ->capture_default_str();
  m->add_option("--seed", sim.spec.rng_seed)->capture_default_str();
  m->add_option("--embedding-format", sim.embedding_format)
      ->check(CLI::IsMember({"tsv", "binary"}))
      ->capture_default_str();
  m->add_option("--out", sim.prefix, "Output path prefix")->required();

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Side-by-side intervals for all resampling methods");
  c->add_option("--eval", cmp.eval, "Eval TSV")->required();
  add_inference_options(c, cmp.inf, true);
  add_common_options(c, cmp.common);
  add_bootstrap_options(c, cmp.boot);
  c->add_option("--out", cmp.out, "Report path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s) cmd_score(score, out);
    if (*i) cmd_infer(infer, out);
    if (*a) cmd_analyze(analyze, out);
    if (*m) cmd_simulate(sim, out);
    if (*c) cmd_compare(cmp, out);
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace wersig::cli
