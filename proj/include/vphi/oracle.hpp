// Brute-force Herbrand equivalence by path enumeration.
//
// Independent of the value-numbering analysis: every entry-to-point path is
// executed symbolically and expressions are compared as uninterpreted terms.
// Exact on acyclic programs; on loops, back edges are unrolled a bounded
// number of times.
#pragma once

#include "vphi/ir.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vphi {

class HerbrandTerm {
public:
  enum class Kind { Leaf, ConstLeaf, Node };

  static HerbrandTerm leaf(std::string input);
  static HerbrandTerm constant(std::int64_t value);
  static HerbrandTerm node(std::string op, HerbrandTerm left,
                           HerbrandTerm right);

  Kind kind() const { return rep_->kind; }
  const std::string &name() const { return rep_->text; } // input or operator
  std::int64_t value() const { return rep_->value; }
  HerbrandTerm left() const { return HerbrandTerm(rep_->left); }
  HerbrandTerm right() const { return HerbrandTerm(rep_->right); }

  std::string render() const;

  /// Structural equality; shared subterms compare in constant time.
  friend bool operator==(const HerbrandTerm &a, const HerbrandTerm &b);

private:
  struct Rep {
    Kind kind;
    std::string text;
    std::int64_t value = 0;
    std::size_t hash = 0;
    std::shared_ptr<const Rep> left, right;
  };
  explicit HerbrandTerm(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;
};

struct ComputedTerm {
  StmtId stmt;
  HerbrandTerm term;
};

struct PathEnv {
  std::vector<BlockId> path;
  std::map<std::string, HerbrandTerm> bindings;
  /// Every binary operation evaluated along the path, in order.
  std::vector<ComputedTerm> computed;
};

class PathCapExceeded : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct OracleOptions {
  std::size_t unroll = 3;
  std::size_t path_cap = 4096;
};

/// A program point: before statement `index` of `block`, or the block's out
/// point when `index` equals the statement count.
struct ProgramPoint {
  BlockId block;
  std::size_t index = 0;
};

ProgramPoint in_point(const Program &program, StmtId stmt);
ProgramPoint out_point(const Program &program, const BlockId &block);

/// All entry-to-point paths taking each back edge at most `unroll` times,
/// each evaluated up to the point. `program` must be phi-free.
std::vector<PathEnv> enumerate_paths(const Program &program,
                                     const ProgramPoint &point,
                                     const OracleOptions &opts = {});
std::vector<PathEnv> enumerate_paths(const Program &program, StmtId target,
                                     const OracleOptions &opts = {});

/// Term of a non-phi right-hand side. Unbound names are treated as inputs.
HerbrandTerm herbrand_term(const PathEnv &env, const Rhs &rhs);

/// True when `a` and `b` have equal terms on every enumerated path to the
/// point.
bool oracle_equivalent(const Program &program, const ProgramPoint &point,
                       const Rhs &a, const Rhs &b,
                       const OracleOptions &opts = {});

/// True when, on every enumerated path to `stmt`, an earlier binary operation
/// on the path produced the term `stmt` computes.
bool oracle_redundant(const Program &program, StmtId stmt,
                      const OracleOptions &opts = {});

struct Mismatch {
  enum class Kind { Redundancy, Equivalence, MissingVariable };
  Kind kind;
  BlockId block;
  std::optional<StmtId> stmt;
  std::string a; // expression or first variable
  std::string b; // second variable
  bool analysis = false;
  bool oracle = false;

  std::string to_json_line() const;
};

struct DifferentialOptions {
  OracleOptions oracle;
  /// Require oracle => analysis as well as analysis => oracle. Only sound on
  /// acyclic programs.
  bool exact = true;
  std::optional<std::size_t> max_sweeps;
};

struct DifferentialResult {
  std::vector<Mismatch> mismatches;
  std::size_t sweeps = 0;
  std::size_t blocks = 0;
  std::size_t redundancies = 0;
  std::size_t oracle_redundancies = 0;
  std::size_t pairs_checked = 0;
  /// Oracle equivalences the analysis missed in soundness-only mode.
  std::size_t missed_equivalences = 0;
  std::size_t missed_redundancies = 0;
};

/// Runs the analysis and compares its redundancy set and per-block
/// variable equivalences against the oracle.
DifferentialResult differential_check(const Program &program,
                                      const DifferentialOptions &opts = {});

} // namespace vphi
