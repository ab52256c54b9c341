// Helpers shared by the unit tests and the acceptance runner.
#pragma once

#include "vphi/analysis.hpp"
#include "vphi/ir.hpp"
#include "vphi/partition.hpp"

#include <functional>
#include <map>
#include <string>

namespace vphi::test {

std::string read_sample(const std::string &name);
Program load_sample(const std::string &name);

/// Parses the text notation produced by render_partition, e.g.
/// `{v1, x1, x3 | v3, p1, v1+v2 | v7, x3 : phi.B3(v1,v4)}`.
Partition parse_partition(const std::string &text);

struct IsoOptions {
  /// Value numbers that must map to themselves.
  std::map<ValueNumber, ValueNumber> fixed;
  /// Annotations at this block are compared with their slots swapped.
  std::optional<BlockId> swap_block;
};

/// True when some bijection between value numbers maps `actual` onto
/// `expected` class by class, including expressions and annotations.
bool isomorphic(const Partition &actual, const Partition &expected,
                const IsoOptions &opts = {});

/// AnalysisState for the lowered E1 whose block outs for B1 and B2 are the
/// predecessor partitions of the worked transfer example.
AnalysisState transfer_example_state(const Program &lowered_e1);
Partition transfer_example_pin();

/// The two predecessor partitions of the worked join example.
Partition join_example_p1();
Partition join_example_p2();
Partition join_example_expected();

StmtId stmt_defining(const Program &p, const std::string &target);

} // namespace vphi::test
