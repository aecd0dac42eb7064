#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "countdiag/model.hpp"
#include "countdiag/rootogram.hpp"

namespace countdiag {

enum class Command { fit, rootogram, qq, pearson, bootstrap, compare, simulate };
enum class OutputFormat { svg, json, text };

struct RunConfig {
  Command command = Command::fit;
  std::string data_path;
  std::string schema_path;  // defaults to <data>.schema.json when present
  std::string formula;
  std::vector<std::string> families;  // one per model; compare takes several
  Style style = Style::hanging;
  Scale scale = Scale::sqrt;
  std::optional<long> max_count;  // defaults to max(y)
  bool open_tail = false;
  std::string weights;  // column name, or posterior:k for mixtures
  int K = 2;
  int restarts = 5;
  int B = 1000;
  int envelope_draws = 100;
  std::uint64_t seed = default_seed;
  std::string out;  // empty: standard output
  std::optional<OutputFormat> format;
  // simulate
  long n = 100;
  double mu = 3.0;
  std::optional<double> theta;
};

/// Parses argv (argv[0] is the program name). Throws ConfigError; returns
/// std::nullopt after printing help.
std::optional<RunConfig> parse_args(int argc, const char* const* argv, std::ostream& out);

/// Runs one command and returns the document it produces.
std::string execute(const RunConfig& config);

/// Full front end: parse, execute, write. Errors go to `err` as
/// "error[<code>]: <message>"; the return value is the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace countdiag
