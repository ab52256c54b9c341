// Iterative global value numbering over SSA with value phi-functions.
#pragma once

#include "vphi/ir.hpp"
#include "vphi/partition.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace vphi {

struct JoinInfo {
  std::array<BlockId, 2> preds;
  JoinKind kind = JoinKind::Forward;
  /// Index of the predecessor reached through a forward edge.
  std::size_t forward_pred = 0;
};

struct AnalysisState {
  std::map<StmtId, Partition> pin;
  std::map<StmtId, Partition> pout;
  std::map<BlockId, Partition> block_in;
  std::map<BlockId, Partition> block_out;
  Allocator allocator;
  std::size_t iterations = 0;

  std::map<BlockId, JoinInfo> joins;
  std::map<BlockId, std::size_t> rpo_index;
  std::set<std::string> inputs;
  /// Deepest value_phi_func recursion seen so far.
  std::size_t max_vpf_depth = 0;

  /// Control-flow facts for `program` with every block out set to TOP.
  static AnalysisState for_program(const Program &program);
};

/// Class-wise intersection of the partitions flowing into join block `k`.
/// TOP on either side is the identity.
Partition join(const Partition &left, const Partition &right, const BlockId &k,
               Allocator &a, JoinKind kind = JoinKind::Forward,
               std::size_t forward_pred = 0);

/// Tries to express `ve`, evaluated at partition `p`, as a merge of values
/// already computed in the predecessors of a join block. Returns nothing when
/// no such merge exists.
///
/// The join block is taken from the value phi-function annotations of the
/// operand classes. An operand annotated phi_k(a, b) contributes a on the
/// left and b on the right; any other operand contributes its own value
/// number on both sides, provided that number is live at both predecessors.
/// Each side is then resolved in the out partition of the corresponding
/// predecessor, either directly through a class holding the expression or
/// recursively through another value phi-function.
std::optional<ValuePhiFunction>
value_phi_func(const ValueExpression &ve, const Partition &p,
               AnalysisState &st);

/// Out partition of `s` given its in partition. `s` must not be a phi.
Partition transfer(const Statement &s, const Partition &pin, AnalysisState &st);

class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct FixpointOptions {
  /// Sweep cap; defaults to the number of blocks plus two.
  std::optional<std::size_t> max_sweeps;
};

/// Runs the analysis to a fixpoint on a validated program. Phis are lowered
/// first if present. Throws ConvergenceError when the sweep cap is reached.
AnalysisState run_fixpoint(const Program &program, FixpointOptions opts = {});

struct EquivalentVariable {
  std::string name;
};
struct ValuePhiWitness {
  ValuePhiFunction vpf;
};

struct Redundancy {
  StmtId stmt;
  BlockId block;
  std::string target;
  std::string expression;
  std::variant<EquivalentVariable, ValuePhiWitness> reason;
};

struct RedundancyReport {
  std::vector<Redundancy> entries;

  const Redundancy *find(StmtId id) const;
  bool contains(StmtId id) const { return find(id) != nullptr; }
};

/// An expression is redundant when the class of its target at the
/// statement's out point holds another variable or carries a value
/// phi-function. Only binary operations are reported.
RedundancyReport detect_redundancies(const Program &program,
                                     const AnalysisState &st);

/// Value number of `name` at a point, falling back to the input number for
/// program inputs that have not been looked up there.
std::optional<ValueNumber> value_number_of(const AnalysisState &st,
                                           const Partition &p,
                                           std::string_view name);

} // namespace vphi
