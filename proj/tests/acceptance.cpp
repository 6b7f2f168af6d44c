// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: wersig_acceptance [criterion numbers...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cli.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "wersig/blocks.hpp"
#include "wersig/glasso.hpp"
#include "wersig/resampling.hpp"
#include "wersig/rng.hpp"
#include "wersig/simulation.hpp"
#include "wersig/wer.hpp"

using namespace wersig;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1 -------------------------------------------------------------------------

/// Symbols as chars; plain recursion over substitution, deletion and insertion.
int brute_distance(const char* a, int na, const char* b, int nb) {
  if (na == 0) return nb;
  if (nb == 0) return na;
  const int sub = brute_distance(a + 1, na - 1, b + 1, nb - 1) + (a[0] == b[0] ? 0 : 1);
  const int del = brute_distance(a + 1, na - 1, b, nb) + 1;
  const int ins = brute_distance(a, na, b + 1, nb - 1) + 1;
  return std::min({sub, del, ins});
}

Outcome edit_distance_oracle() {
  const auto t0 = Clock::now();
  std::vector<std::string> all;
  for (int len = 0; len <= 6; ++len) {
    int count = 1;
    for (int k = 0; k < len; ++k) count *= 3;
    for (int code = 0; code < count; ++code) {
      std::string s;
      for (int k = 0, c = code; k < len; ++k, c /= 3) s.push_back(static_cast<char>('a' + c % 3));
      all.push_back(s);
    }
  }
  std::vector<std::vector<std::string>> words;
  for (const auto& s : all) {
    std::vector<std::string> w;
    for (const char c : s) w.emplace_back(1, c);
    words.push_back(std::move(w));
  }
  std::size_t pairs = 0, mismatches = 0;
  // The distance is symmetric, so one oracle call checks both orders.
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i; j < all.size(); ++j) {
      const int want = brute_distance(all[i].data(), static_cast<int>(all[i].size()), all[j].data(),
                                      static_cast<int>(all[j].size()));
      mismatches += align_and_count(words[i], words[j]).total_errors() != want;
      ++pairs;
      if (j != i) {
        mismatches += align_and_count(words[j], words[i]).total_errors() != want;
        ++pairs;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0,
          fmt("%zu pairs, %zu mismatches, %.1f s (limit 30 s)", pairs, mismatches, secs)};
}

// 2 -------------------------------------------------------------------------

Outcome glasso_lambda_zero() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + t % 7;
    const auto s = testing_support::random_correlation(n, 4 * n + 20, 1000 + t, 0.5);
    const auto est = solve_glasso(s, 0.0, {});
    worst = std::max(worst, (est.theta - s.values.inverse()).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0, fmt("max |theta - inv(S)| = %.2e (limit 1e-6), %.2f s", worst, secs)};
}

// 3 -------------------------------------------------------------------------

Outcome glasso_kkt() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  double worst = 0.0;
  int unconverged = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 14;
    const auto s = testing_support::random_correlation(n, n + 10, 2000 + t, 0.6);
    const double lam = lambda_max(s.values) * std::uniform_real_distribution<double>(0.001, 0.999)(rng);
    const auto est = solve_glasso(s, lam, {});
    unconverged += !est.converged;
    worst = std::max(worst, testing_support::kkt_violation(s, est.theta, est.w, lam));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && unconverged == 0 && secs < 60.0,
          fmt("max KKT violation %.2e (limit 1e-6), %d unconverged, %.2f s", worst, unconverged, secs)};
}

// 4 -------------------------------------------------------------------------

Outcome glasso_vs_oracle() {
  std::mt19937_64 rng(4);
  double worst = 0.0, worst_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 4;
    const auto s = testing_support::random_correlation(n, n + 8, 3000 + t, 0.7);
    const double lam = lambda_max(s.values) * std::uniform_real_distribution<double>(0.05, 0.9)(rng);
    const auto ref = oracle::glasso_dual(s.values, lam, 1e-11);
    worst_gap = std::max(worst_gap, ref.gap);
    const auto est = solve_glasso(s, lam, {});
    worst = std::max(worst, (est.theta - ref.theta).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-5 && worst_gap <= 1e-9,
          fmt("max entrywise diff %.2e (limit 1e-5), oracle dual gap <= %.1e", worst, worst_gap)};
}

// 5, 6 ----------------------------------------------------------------------

struct Recovery {
  int exact = 0;
  double agreement = 0.0;
};

Recovery recover(Marginal marginal, bool nonparanormal) {
  Recovery r;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec spec;
    spec.n_speakers = 1;
    spec.utts_per_speaker = 24;
    spec.block_size = 3;
    spec.within_block_corr = 0.7;
    spec.embedding_dim = 2000;
    spec.marginal = marginal;
    spec.rng_seed = seed;
    const auto data = generate(spec);
    InferenceOptions opts;
    opts.glasso.rng_seed = seed;
    opts.nonpara.enabled = nonparanormal;
    const auto inf = infer_blocks(data.dataset, data.embeddings, data.speakers, opts);
    r.exact += same_partition(inf.partition, data.truth);
    r.agreement += pairwise_agreement(inf.partition, data.truth, data.dataset.size()) / 20.0;
  }
  return r;
}

Outcome block_recovery() {
  const auto t0 = Clock::now();
  const auto r = recover(Marginal::gaussian, false);
  const double secs = seconds_since(t0);
  return {r.exact >= 18 && r.agreement >= 0.97 && secs < 300.0,
          fmt("exact %d/20 (need 18), mean pairwise agreement %.4f (need 0.97), %.1f s", r.exact, r.agreement,
              secs)};
}

Outcome nonparanormal_advantage() {
  const auto g = recover(Marginal::cubed_gaussian, false);
  const auto np = recover(Marginal::cubed_gaussian, true);
  return {np.exact > g.exact, fmt("cubed marginals: nonparanormal exact %d/20 vs gaussian %d/20", np.exact, g.exact)};
}

// 7 -------------------------------------------------------------------------

Outcome consistency() {
  const auto t0 = Clock::now();
  SyntheticSpec spec;
  spec.utts_per_speaker = 24;
  spec.block_size = 4;
  spec.within_block_corr = 0.6;
  spec.embedding_dim = 2000;
  spec.rng_seed = 7;
  const auto rows = consistency_experiment(spec, {96, 384, 1536}, 200, {});
  const double secs = seconds_since(t0);
  bool decreasing = true;
  std::string mses;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0 && !(rows[k].mse < rows[k - 1].mse)) decreasing = false;
    mses += fmt("%s%zu:%.3e", k ? " " : "", rows[k].n, rows[k].mse);
  }
  const double rrmse = rows.back().relative_rmse;
  return {decreasing && rrmse <= 0.15 && secs < 600.0,
          fmt("MSE %s; final relative RMSE %.3f (limit 0.15); %.0f s", mses.c_str(), rrmse, secs)};
}

// 8, 9 ----------------------------------------------------------------------

struct Coverage {
  double blockwise = 0.0;
  double vanilla = 0.0;
};

Coverage coverage(double rho, bool blocks, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_speakers = 10;
  spec.utts_per_speaker = 24;
  spec.block_size = rho > 0.0 ? 3 : 1;
  spec.within_block_corr = rho;
  spec.embedding_dim = 2;
  const double truth = spec.error_rate_mean;
  int hit_block = 0, hit_vanilla = 0;
  for (std::size_t s = 0; s < 500; ++s) {
    spec.rng_seed = child_seed(seed, s);
    const auto data = generate(spec);
    BootstrapConfig cfg;
    cfg.n_replicates = 2000;
    cfg.rng_seed = child_seed(seed + 1, s);
    const auto vanilla = run_analysis(data.dataset, singleton_partition(data.dataset.size()), cfg).intervals[0];
    hit_vanilla += vanilla.lower <= truth && truth <= vanilla.upper;
    if (blocks) {
      const auto block = run_analysis(data.dataset, data.truth, cfg).intervals[0];
      hit_block += block.lower <= truth && truth <= block.upper;
    }
  }
  return {hit_block / 500.0, hit_vanilla / 500.0};
}

Outcome iid_coverage() {
  const auto c = coverage(0.0, false, 8);
  return {c.vanilla >= 0.92 && c.vanilla <= 0.97, fmt("coverage %.3f (need [0.92, 0.97])", c.vanilla)};
}

Outcome dependent_coverage() {
  const auto c = coverage(0.7, true, 9);
  return {c.blockwise >= 0.92 && c.blockwise <= 0.97 && c.vanilla <= 0.90,
          fmt("blockwise %.3f (need [0.92, 0.97]), vanilla %.3f (need <= 0.90)", c.blockwise, c.vanilla)};
}

// 10 ------------------------------------------------------------------------

Outcome width_ordering() {
  int ordered = 0, strict = 0;
  double finer = 0.0, mean_boot = 0.0, mean_inf = 0.0, mean_spk = 0.0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    SyntheticSpec spec;
    spec.n_speakers = 20;
    spec.utts_per_speaker = 24;
    spec.block_size = 3;
    spec.within_block_corr = 0.7;
    spec.speaker_rate_share = 0.3;
    spec.embedding_dim = 2000;
    spec.rng_seed = child_seed(10, t);
    const auto data = generate(spec);
    InferenceOptions opts;
    opts.glasso.rng_seed = spec.rng_seed;
    const auto inf = infer_blocks(data.dataset, data.embeddings, data.speakers, opts);
    finer += static_cast<double>(inf.partition.size()) / 50.0;
    BootstrapConfig cfg;
    cfg.n_replicates = 2000;
    cfg.rng_seed = spec.rng_seed;
    const double w_boot =
        run_analysis(data.dataset, singleton_partition(data.dataset.size()), cfg).intervals[0].width();
    const double w_inf = run_analysis(data.dataset, inf.partition, cfg).intervals[0].width();
    const double w_spk = run_analysis(data.dataset, speaker_blocks(data.speakers), cfg).intervals[0].width();
    ordered += w_boot <= w_inf && w_inf <= w_spk;
    strict += w_boot < w_inf && w_inf < w_spk;
    mean_boot += w_boot / 50.0;
    mean_inf += w_inf / 50.0;
    mean_spk += w_spk / 50.0;
  }
  return {ordered >= 45,
          fmt("ordering held in %d/50 trials (need 45), strictly in %d; mean W_A widths x100 %.3f / %.3f / %.3f; "
              "mean inferred blocks %.1f vs 20 speakers",
              ordered, strict, 100 * mean_boot, 100 * mean_inf, 100 * mean_spk, finer)};
}

// 11 ------------------------------------------------------------------------

Outcome two_block_enumeration() {
  EvalDataset d;
  d.records = {{"u0", "s", 1, 0, 0}, {"u1", "s", 1, 1, 1}};
  BootstrapConfig cfg;
  cfg.n_replicates = 10'000;
  cfg.rng_seed = 11;
  std::map<double, int> freq;
  for (const auto& r : bootstrap_replicates(d, singleton_partition(2), cfg)) ++freq[r.wer_a];
  const double p0 = freq[0.0] / 1e4, p1 = freq[0.5] / 1e4, p2 = freq[1.0] / 1e4;
  const double worst = std::max({std::abs(p0 - 0.25), std::abs(p1 - 0.5), std::abs(p2 - 0.25)});
  return {freq.size() == 3 && worst <= 0.02,
          fmt("P(0)=%.4f P(0.5)=%.4f P(1)=%.4f, max deviation %.4f (limit 0.02)", p0, p1, p2, worst)};
}

// 12 ------------------------------------------------------------------------

std::string run_cli(std::vector<std::string> args, int& code) {
  args.insert(args.begin(), "wersig");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return out.str();
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("wersig_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string prefix = (dir / "sim").string();
  int code = 0;
  run_cli({"simulate", "--speakers", "6", "--dim", "500", "--speaker-share", "0.2", "--seed", "12", "--out",
           prefix},
          code);
  bool ok = code == 0;
  int runs = 0;
  for (const std::string seed : {"1", "2024"}) {
    std::string first;
    for (const std::string workers : {"1", "2", "8"}) {
      const auto out = run_cli({"compare", "--eval", prefix + ".eval.tsv", "--embeddings", prefix + ".emb.tsv",
                                "--estimator", "both", "--bboot", "2000", "--seed", seed, "--workers", workers,
                                "--format", "tsv"},
                               code);
      ++runs;
      ok = ok && code == 0 && !out.empty();
      if (workers == "1") {
        first = out;
      } else {
        ok = ok && out == first;
      }
    }
  }
  std::filesystem::remove_all(dir);
  return {ok, fmt("%d compare runs over 2 seeds x {1, 2, 8} workers byte-identical: %s", runs, ok ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"edit distance matches brute-force oracle (exhaustive, len <= 6, 3 symbols)", edit_distance_oracle},
      {"glasso at lambda = 0 equals the direct inverse", glasso_lambda_zero},
      {"glasso KKT conditions on random instances", glasso_kkt},
      {"glasso matches projected-gradient dual oracle", glasso_vs_oracle},
      {"block recovery with CV-selected lambda", block_recovery},
      {"nonparanormal beats gaussian on cubed marginals", nonparanormal_advantage},
      {"block variance estimator consistency", consistency},
      {"vanilla bootstrap coverage on i.i.d. data", iid_coverage},
      {"blockwise coverage under dependence, vanilla undercovers", dependent_coverage},
      {"width ordering bootstrap <= inferred <= speaker blocks", width_ordering},
      {"two-block bootstrap distribution matches enumeration", two_block_enumeration},
      {"compare reports identical across worker counts", determinism},
  };
  std::set<int> selected;
  for (int k = 1; k < argc; ++k) selected.insert(std::stoi(argv[k]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %2d: %s -- %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
