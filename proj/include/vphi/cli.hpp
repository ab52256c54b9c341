// Command-line front end: analyze, check and stress.
#pragma once

#include "vphi/analysis.hpp"
#include "vphi/ir.hpp"

#include <cstddef>
#include <optional>
#include <string>

namespace vphi {

enum class Command { Analyze, Check, Stress };
enum class Format { Text, Json };
enum class Dump { Redundant, AllPoints };

struct RunConfig {
  Command command = Command::Analyze;
  std::string input_path;
  Format format = Format::Text;
  std::optional<std::string> dot_path;
  Dump dump = Dump::Redundant;
  std::optional<std::size_t> max_iters;
  std::size_t unroll = 3;
  bool random = false;
  std::size_t seeds = 500;
  bool acyclic = false;
  std::size_t diamonds = 8;
  /// Overrides the oracle path cap; VPHI_PATH_CAP is read when unset.
  std::optional<std::size_t> path_cap;
};

struct RunResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int invalid = 1;
inline constexpr int no_convergence = 2;
inline constexpr int path_cap = 3;
/// `check` found mismatches.
inline constexpr int mismatch = 4;
} // namespace exit_code

RunResult run(const RunConfig &cfg);

/// Graphviz rendering of `program` with the statements the analysis found
/// redundant suffixed `[REDUNDANT]`.
std::string render_dot(const Program &program, const AnalysisState &st);

/// Text or JSON rendering of an analysis: the redundancy report and, with
/// Dump::AllPoints, every block's in and out partition. Value numbers are
/// renumbered densely across the whole output.
std::string render_analysis(const Program &program, const AnalysisState &st,
                            Format format, Dump dump);

} // namespace vphi
