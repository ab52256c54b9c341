// Textual SSA IR: program representation, parser, validation, phi lowering.
#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vphi {

using BlockId = std::string;

struct StmtId {
  std::uint32_t value = 0;
  friend auto operator<=>(const StmtId &, const StmtId &) = default;
};

struct Const {
  std::int64_t value = 0;
  friend auto operator<=>(const Const &, const Const &) = default;
};

struct Var {
  std::string name;
  friend auto operator<=>(const Var &, const Var &) = default;
};

/// Operand of a binary operation: a variable or an integer literal.
using Atom = std::variant<Var, Const>;

struct BinOp {
  std::string op;
  Atom left;
  Atom right;
  friend bool operator==(const BinOp &, const BinOp &) = default;
};

/// phi(left, right): `left` flows from the first predecessor, `right` from
/// the second.
struct Phi {
  std::string left;
  std::string right;
  friend bool operator==(const Phi &, const Phi &) = default;
};

using Rhs = std::variant<Const, Var, BinOp, Phi>;

struct Statement {
  StmtId id;
  std::string target;
  Rhs rhs;
  /// Join block a lowered phi copy was taken from. Empty for statements that
  /// appear in the source program.
  std::optional<BlockId> phi_origin;

  bool is_binop() const { return std::holds_alternative<BinOp>(rhs); }
  bool is_phi() const { return std::holds_alternative<Phi>(rhs); }
  friend bool operator==(const Statement &, const Statement &) = default;
};

struct Block {
  BlockId id;
  std::vector<BlockId> preds;
  std::vector<Statement> stmts;

  bool is_join() const { return preds.size() == 2; }
  friend bool operator==(const Block &, const Block &) = default;
};

struct StatementRef {
  const Block *block = nullptr;
  std::size_t index = 0;
  const Statement &stmt() const { return block->stmts[index]; }
};

struct Program {
  std::vector<Block> blocks;
  BlockId entry_id = "entry";
  BlockId exit_id = "exit";

  const Block *find(std::string_view id) const;
  Block *find(std::string_view id);
  /// Throws std::out_of_range for an unknown block.
  const Block &block(std::string_view id) const;

  /// Successors in block source order.
  std::vector<BlockId> successors(std::string_view id) const;
  std::optional<StatementRef> find_statement(StmtId id) const;
  /// Names that are read somewhere but never assigned: program inputs.
  std::set<std::string> inputs() const;
  StmtId next_stmt_id() const;
  std::size_t statement_count() const;

  friend bool operator==(const Program &, const Program &) = default;
};

class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, std::size_t column, const std::string &what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

/// Parses the block-structured IR. Statement ids are assigned in source order
/// starting at 0. Only syntax and block references are checked here; SSA
/// well-formedness is the job of validate_ssa.
Program parse_program(std::string_view text);

std::string render_atom(const Atom &atom);
std::string render_rhs(const Rhs &rhs);
std::string render_statement(const Statement &stmt);
/// Canonical text form; parse_program(render_program(p)) == p for source
/// programs.
std::string render_program(const Program &program);

enum class Violation {
  DoubleAssignment,
  UndefinedOnPath,
  PhiOutsideJoin,
  PhiNotLeading,
  TooManyPreds,
  DuplicatePred,
  NonEmptyEntryOrExit,
  EntryHasPreds,
  Unreachable,
};

std::string_view to_string(Violation v);

struct ValidationError {
  std::string where; // "s<id>" for statements, block id otherwise
  Violation kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationError> errors;

  bool ok() const { return errors.empty(); }
  bool contains(Violation kind, std::string_view where = {}) const;
  std::string render() const;
};

/// Reports every SSA violation in `program`. Names that are never assigned
/// anywhere are program inputs, not errors. Phi copies produced by
/// lower_phis may share a target as long as they come from one join block
/// and sit in distinct predecessors.
ValidationReport validate_ssa(const Program &program);

/// Replaces every `x = phi(a, b)` in a join block with `x = a` appended to
/// the first predecessor and `x = b` appended to the second.
Program lower_phis(const Program &program);

/// Reverse postorder of the blocks reachable from entry; DFS visits
/// successors in block source order.
std::vector<BlockId> reverse_postorder(const Program &program);

bool is_acyclic(const Program &program);

} // namespace vphi
