#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wersig/blocks.hpp"
#include "wersig/errors.hpp"
#include "wersig/glasso.hpp"
#include "wersig/resampling.hpp"
#include "wersig/simulation.hpp"
#include "wersig/wer.hpp"

namespace py = pybind11;
using namespace wersig;

namespace {

EmbeddingMatrix make_embeddings(std::vector<std::string> utt_ids, RowMatrix values) {
  EmbeddingMatrix e{std::move(utt_ids), std::move(values)};
  validate_embeddings(e);
  return e;
}

CovarianceMatrix as_correlation(const Eigen::MatrixXd& s) {
  CovarianceMatrix c;
  c.values = s;
  return c;
}

InferenceOptions inference_options(const GlassoConfig& glasso, bool nonparanormal, bool global_graph) {
  InferenceOptions opts;
  opts.glasso = glasso;
  opts.nonpara.enabled = nonparanormal;
  opts.global_graph = global_graph;
  return opts;
}

}  // namespace

PYBIND11_MODULE(_wersig, m) {
  m.doc() = "Blockwise bootstrap significance testing for word error rates";

  auto base = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<UndefinedStatisticError>(m, "UndefinedStatisticError", PyExc_ArithmeticError);
  py::register_exception<InternalError>(m, "InternalError", PyExc_RuntimeError);

  // Scoring.
  py::class_<AlignmentCounts>(m, "AlignmentCounts")
      .def_readonly("substitutions", &AlignmentCounts::substitutions)
      .def_readonly("insertions", &AlignmentCounts::insertions)
      .def_readonly("deletions", &AlignmentCounts::deletions)
      .def_readonly("reference_len", &AlignmentCounts::reference_len)
      .def_property_readonly("total_errors", &AlignmentCounts::total_errors)
      .def("__repr__", [](const AlignmentCounts& c) {
        return "AlignmentCounts(sub=" + std::to_string(c.substitutions) + ", ins=" + std::to_string(c.insertions) +
               ", del=" + std::to_string(c.deletions) + ", ref=" + std::to_string(c.reference_len) + ")";
      });
  m.def("tokenize", &tokenize, py::arg("text"));
  m.def("align_and_count", &align_and_count, py::arg("reference"), py::arg("hypothesis"));

  py::class_<EvalRecord>(m, "EvalRecord")
      .def(py::init([](std::string utt_id, std::string speaker_id, std::int64_t m, std::int64_t e_a,
                       std::int64_t e_b) { return EvalRecord{std::move(utt_id), std::move(speaker_id), m, e_a, e_b}; }),
           py::arg("utt_id"), py::arg("speaker_id"), py::arg("m"), py::arg("e_a"), py::arg("e_b"))
      .def_readwrite("utt_id", &EvalRecord::utt_id)
      .def_readwrite("speaker_id", &EvalRecord::speaker_id)
      .def_readwrite("m", &EvalRecord::m)
      .def_readwrite("e_a", &EvalRecord::e_a)
      .def_readwrite("e_b", &EvalRecord::e_b);

  py::class_<EvalDataset>(m, "EvalDataset")
      .def(py::init([](std::vector<EvalRecord> records, std::string name) {
             EvalDataset d{std::move(name), std::move(records)};
             validate_dataset(d);
             return d;
           }),
           py::arg("records"), py::arg("name") = "")
      .def_readonly("name", &EvalDataset::name)
      .def_readonly("records", &EvalDataset::records)
      .def("__len__", &EvalDataset::size);
  m.def("load_eval_records", &load_eval_records, py::arg("path"));
  m.def("save_eval_records", &save_eval_records, py::arg("path"), py::arg("dataset"));

  py::class_<WerSummary>(m, "WerSummary")
      .def_readonly("wer_a", &WerSummary::wer_a)
      .def_readonly("wer_b", &WerSummary::wer_b)
      .def_readonly("delta_abs", &WerSummary::delta_abs)
      .def_readonly("delta_rel", &WerSummary::delta_rel)
      .def_readonly("total_ref_words", &WerSummary::total_ref_words)
      .def_readonly("total_err_a", &WerSummary::total_err_a)
      .def_readonly("total_err_b", &WerSummary::total_err_b);
  m.def("compute_wer_summary", &compute_wer_summary, py::arg("dataset"));

  // Embeddings and precision estimation.
  py::class_<EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def(py::init(&make_embeddings), py::arg("utt_ids"), py::arg("values"))
      .def_readonly("utt_ids", &EmbeddingMatrix::utt_ids)
      .def_readonly("values", &EmbeddingMatrix::values);
  m.def(
      "load_embeddings", [](const std::filesystem::path& p) { return load_embeddings(p); }, py::arg("path"));

  py::enum_<CvScore>(m, "CvScore").value("penalized", CvScore::penalized).value("refit", CvScore::refit);

  py::class_<GlassoConfig>(m, "GlassoConfig")
      .def(py::init<>())
      .def_readwrite("lambda_", &GlassoConfig::lambda)
      .def_readwrite("max_outer_iters", &GlassoConfig::max_outer_iters)
      .def_readwrite("convergence_tol", &GlassoConfig::convergence_tol)
      .def_readwrite("inner_tol", &GlassoConfig::inner_tol)
      .def_readwrite("cv_folds", &GlassoConfig::cv_folds)
      .def_readwrite("cv_grid_size", &GlassoConfig::cv_grid_size)
      .def_readwrite("cv_score", &GlassoConfig::cv_score)
      .def_readwrite("cv_one_se", &GlassoConfig::cv_one_se)
      .def_readwrite("rng_seed", &GlassoConfig::rng_seed)
      .def_readwrite("screen", &GlassoConfig::screen)
      .def_readwrite("workers", &GlassoConfig::workers);

  py::class_<PrecisionEstimate>(m, "PrecisionEstimate")
      .def_readonly("theta", &PrecisionEstimate::theta)
      .def_readonly("w", &PrecisionEstimate::w)
      .def_readonly("lambda_used", &PrecisionEstimate::lambda_used)
      .def_readonly("converged", &PrecisionEstimate::converged)
      .def_readonly("iterations", &PrecisionEstimate::iterations)
      .def_readonly("dual_gap", &PrecisionEstimate::dual_gap);

  m.def("lambda_max", &lambda_max, py::arg("s"));
  m.def(
      "solve_glasso",
      [](const Eigen::MatrixXd& s, double lambda, const GlassoConfig& cfg) {
        return solve_glasso(as_correlation(s), lambda, cfg);
      },
      py::arg("s"), py::arg("lambda_"), py::arg("config") = GlassoConfig{});
  m.def(
      "estimate_precision",
      [](const EmbeddingMatrix& emb, const GlassoConfig& cfg, bool nonparanormal) {
        NonparanormalConfig np;
        np.enabled = nonparanormal;
        return estimate_precision(emb, cfg, np);
      },
      py::arg("embeddings"), py::arg("config") = GlassoConfig{}, py::arg("nonparanormal") = false);

  // Blocks.
  py::class_<BlockPartition>(m, "BlockPartition")
      .def(py::init([](std::vector<std::vector<std::size_t>> blocks) {
             BlockPartition p;
             p.blocks = std::move(blocks);
             p.provenance = BlockProvenance::external;
             canonicalize(p);
             return p;
           }),
           py::arg("blocks"))
      .def_readonly("blocks", &BlockPartition::blocks)
      .def_property_readonly("provenance", [](const BlockPartition& p) { return to_string(p.provenance); })
      .def("__len__", [](const BlockPartition& p) { return p.blocks.size(); });
  m.def("singleton_partition", &singleton_partition, py::arg("n"));
  m.def(
      "speaker_blocks", [](const EvalDataset& d) { return speaker_blocks(group_by_speaker(d)); },
      py::arg("dataset"));

  py::class_<SpeakerBlockStats>(m, "SpeakerBlockStats")
      .def_readonly("speaker_id", &SpeakerBlockStats::speaker_id)
      .def_readonly("utterances", &SpeakerBlockStats::utterances)
      .def_readonly("blocks", &SpeakerBlockStats::blocks)
      .def_readonly("lambda_", &SpeakerBlockStats::lambda)
      .def_readonly("converged", &SpeakerBlockStats::converged);
  py::class_<InferenceResult>(m, "InferenceResult")
      .def_readonly("partition", &InferenceResult::partition)
      .def_readonly("per_speaker", &InferenceResult::per_speaker)
      .def_property_readonly("median_block_ratio",
                             [](const InferenceResult& r) { return median_block_ratio(r.per_speaker); });
  m.def(
      "infer_blocks",
      [](const EvalDataset& d, const EmbeddingMatrix& emb, const GlassoConfig& cfg, bool nonparanormal,
         bool global_graph) {
        return infer_blocks(d, emb, group_by_speaker(d), inference_options(cfg, nonparanormal, global_graph));
      },
      py::arg("dataset"), py::arg("embeddings"), py::arg("config") = GlassoConfig{},
      py::arg("nonparanormal") = false, py::arg("global_graph") = false);

  // Resampling.
  py::class_<BootstrapConfig>(m, "BootstrapConfig")
      .def(py::init<>())
      .def_readwrite("n_replicates", &BootstrapConfig::n_replicates)
      .def_readwrite("rng_seed", &BootstrapConfig::rng_seed)
      .def_readwrite("ci_level", &BootstrapConfig::ci_level)
      .def_readwrite("workers", &BootstrapConfig::workers);

  py::class_<ConfidenceInterval>(m, "ConfidenceInterval")
      .def_property_readonly("statistic", [](const ConfidenceInterval& c) { return to_string(c.statistic); })
      .def_readonly("point", &ConfidenceInterval::point)
      .def_readonly("lower", &ConfidenceInterval::lower)
      .def_readonly("upper", &ConfidenceInterval::upper)
      .def_readonly("level", &ConfidenceInterval::level)
      .def_readonly("replicates", &ConfidenceInterval::replicates)
      .def_readonly("dropped", &ConfidenceInterval::dropped)
      .def_property_readonly("method", [](const ConfidenceInterval& c) { return to_string(c.method); })
      .def_readonly("warning", &ConfidenceInterval::warning)
      .def_property_readonly("width", &ConfidenceInterval::width);

  py::class_<AnalysisResult>(m, "AnalysisResult")
      .def_readonly("intervals", &AnalysisResult::intervals)
      .def_readonly("k_blocks", &AnalysisResult::k_blocks);

  m.def("run_analysis", &run_analysis, py::arg("dataset"), py::arg("partition"),
        py::arg("config") = BootstrapConfig{});
  m.def(
      "bootstrap_replicates",
      [](const EvalDataset& d, const BlockPartition& p, const BootstrapConfig& cfg) {
        const auto reps = bootstrap_replicates(d, p, cfg);
        Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor> out(static_cast<Eigen::Index>(reps.size()), 4);
        for (std::size_t b = 0; b < reps.size(); ++b) {
          const auto i = static_cast<Eigen::Index>(b);
          out.row(i) << reps[b].wer_a, reps[b].wer_b, reps[b].delta_abs, reps[b].delta_rel;
        }
        return out;
      },
      py::arg("dataset"), py::arg("partition"), py::arg("config") = BootstrapConfig{},
      "Replicates as rows of (wer_a, wer_b, delta_abs, delta_rel).");
  m.def(
      "block_variance",
      [](const EvalDataset& d, const BlockPartition& p) { return block_variance(d, p).sigma_hat_sq; },
      py::arg("dataset"), py::arg("partition"));

  // Simulation.
  py::enum_<Marginal>(m, "Marginal")
      .value("gaussian", Marginal::gaussian)
      .value("cubed_gaussian", Marginal::cubed_gaussian);

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<>())
      .def_readwrite("n_speakers", &SyntheticSpec::n_speakers)
      .def_readwrite("utts_per_speaker", &SyntheticSpec::utts_per_speaker)
      .def_readwrite("block_size", &SyntheticSpec::block_size)
      .def_readwrite("within_block_corr", &SyntheticSpec::within_block_corr)
      .def_readwrite("embedding_dim", &SyntheticSpec::embedding_dim)
      .def_readwrite("error_rate_mean", &SyntheticSpec::error_rate_mean)
      .def_readwrite("words_per_utt", &SyntheticSpec::words_per_utt)
      .def_readwrite("marginal", &SyntheticSpec::marginal)
      .def_readwrite("speaker_rate_share", &SyntheticSpec::speaker_rate_share)
      .def_readwrite("b_rate_ratio", &SyntheticSpec::b_rate_ratio)
      .def_readwrite("rng_seed", &SyntheticSpec::rng_seed);

  py::class_<SyntheticData>(m, "SyntheticData")
      .def_readonly("dataset", &SyntheticData::dataset)
      .def_readonly("embeddings", &SyntheticData::embeddings)
      .def_readonly("truth", &SyntheticData::truth);
  m.def("generate", &generate, py::arg("spec"));
  m.def(
      "analytic_sigma_sq", [](const SyntheticSpec& s) { return analytic_moments(s).sigma_sq; }, py::arg("spec"));
  m.def("pairwise_agreement", &pairwise_agreement, py::arg("a"), py::arg("b"), py::arg("n"));
  m.def("same_partition", &same_partition, py::arg("a"), py::arg("b"));

  py::class_<ConsistencyRow>(m, "ConsistencyRow")
      .def_readonly("n", &ConsistencyRow::n)
      .def_readonly("sigma_sq", &ConsistencyRow::sigma_sq)
      .def_readonly("mean_sigma_hat_sq", &ConsistencyRow::mean_sigma_hat_sq)
      .def_readonly("mse", &ConsistencyRow::mse)
      .def_readonly("relative_rmse", &ConsistencyRow::relative_rmse)
      .def_readonly("mean_blocks", &ConsistencyRow::mean_blocks);
  m.def(
      "consistency_experiment",
      [](const SyntheticSpec& spec, const std::vector<std::size_t>& n_grid, std::size_t reps, bool use_true_blocks,
         unsigned workers) {
        ConsistencyOptions opts;
        opts.use_true_blocks = use_true_blocks;
        opts.workers = workers;
        py::gil_scoped_release release;
        return consistency_experiment(spec, n_grid, reps, opts);
      },
      py::arg("spec"), py::arg("n_grid"), py::arg("reps"), py::arg("use_true_blocks") = false,
      py::arg("workers") = 1);
}
