#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wersig/resampling.hpp"

namespace wersig::cli {

enum class Method { bootstrap, block_bootstrap, inferred_block_bootstrap };
enum class Estimator { glasso, nonparanormal };
enum class Format { text, tsv };

const char* to_string(Method m);
const char* to_string(Estimator e);

/// One interval of a report with the run that produced it.
struct ReportRow {
  ConfidenceInterval ci;
  Method method = Method::bootstrap;
  /// Empty for methods that do not infer blocks.
  std::string estimator;
  std::size_t k_blocks = 0;
};

struct Report {
  /// `key=value` lines written as the '#' header.
  std::vector<std::string> config;
  std::vector<ReportRow> rows;
  std::size_t bboot = 0;
  std::uint64_t seed = 0;
};

/// WER-scale statistics are multiplied by 100 on output.
void write_report(std::ostream& out, const Report& report, Format format, bool widths);

/// Parses `argv` and runs one subcommand. Returns the process exit code:
/// 0 on success, 1 on invalid input data, 2 on usage errors, 3 on internal
/// failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wersig::cli
