// Program generators for differential campaigns and stress runs.
#pragma once

#include "vphi/ir.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace vphi {

struct RandomProgramOptions {
  /// Including entry and exit.
  std::size_t max_blocks = 6;
  /// Including phis.
  std::size_t max_statements = 12;
  std::vector<std::string> operators{"+", "*"};
  std::vector<std::string> inputs{"x", "y"};
};

/// Random acyclic SSA program over a random DAG of blocks with at most two
/// predecessors each. Deterministic in `seed`.
Program random_acyclic_program(std::uint64_t seed,
                               const RandomProgramOptions &opts = {});

/// Random program with one natural loop whose header joins the forward
/// edge and a single back edge.
Program random_loop_program(std::uint64_t seed,
                            const RandomProgramOptions &opts = {});

/// Chain of `k` diamonds. Diamond i computes a_i and b_i differently on each
/// branch, merges them with phis and sums them after the join.
Program diamond_chain(std::size_t k);

} // namespace vphi
