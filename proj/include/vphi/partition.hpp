// Value numbers, value expressions, value phi-functions and partitions.
//
// A partition is the set of equivalence classes that hold at one program
// point. Each class carries a value number, the variables, constants and
// value expressions known to share that value, and optionally a value
// phi-function describing the class as a merge of per-predecessor values at
// a join block.
#pragma once

#include "vphi/ir.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace vphi {

struct ValueNumber {
  std::uint32_t index = 0;
  friend auto operator<=>(const ValueNumber &, const ValueNumber &) = default;
};

/// An operator applied to two value numbers. Operand order is significant.
struct ValueExpression {
  std::string op;
  ValueNumber left;
  ValueNumber right;
  friend auto operator<=>(const ValueExpression &,
                          const ValueExpression &) = default;
};

struct ValuePhiFunction;

/// Either a value number or a nested value phi-function.
class VpfOperand {
public:
  VpfOperand(ValueNumber vn) : repr_(vn) {}
  VpfOperand(ValuePhiFunction phi);

  bool is_value_number() const {
    return std::holds_alternative<ValueNumber>(repr_);
  }
  ValueNumber value_number() const { return std::get<ValueNumber>(repr_); }
  const ValuePhiFunction &phi() const {
    return *std::get<std::shared_ptr<const ValuePhiFunction>>(repr_);
  }

  friend std::strong_ordering operator<=>(const VpfOperand &a,
                                          const VpfOperand &b);
  friend bool operator==(const VpfOperand &a, const VpfOperand &b) {
    return (a <=> b) == 0;
  }

private:
  std::variant<ValueNumber, std::shared_ptr<const ValuePhiFunction>> repr_;
};

/// phi_block(left, right): the value is `left` when control reached `block`
/// through its first predecessor and `right` through its second.
struct ValuePhiFunction {
  BlockId block;
  VpfOperand left;
  VpfOperand right;

  bool is_flat() const {
    return left.is_value_number() && right.is_value_number();
  }
  friend std::strong_ordering operator<=>(const ValuePhiFunction &a,
                                          const ValuePhiFunction &b);
  friend bool operator==(const ValuePhiFunction &a, const ValuePhiFunction &b) {
    return (a <=> b) == 0;
  }
};

struct Class {
  ValueNumber vn;
  std::set<std::string> vars;
  std::set<std::int64_t> consts;
  std::set<ValueExpression> exprs;
  std::optional<ValuePhiFunction> vpf;

  bool empty() const { return vars.empty() && consts.empty() && exprs.empty(); }
  friend bool operator==(const Class &, const Class &) = default;
};

/// A set of classes kept sorted by value number, or the special TOP element
/// that stands for "not reached yet" and is the identity of join.
class Partition {
public:
  Partition() = default;
  static Partition top();

  bool is_top() const { return top_; }
  const std::vector<Class> &classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }

  const Class *find(ValueNumber vn) const;
  Class *find(ValueNumber vn);
  const Class *class_of_var(std::string_view name) const;
  const Class *class_of_const(std::int64_t value) const;
  const Class *class_of_expr(const ValueExpression &ve) const;
  const Class *class_with_vpf(const ValuePhiFunction &vpf) const;

  /// Inserts a class; throws std::logic_error if its value number is taken.
  Class &insert(Class c);
  /// Removes `name` from its class, dropping the class if it becomes empty.
  void remove_var(std::string_view name);

  friend bool operator==(const Partition &, const Partition &) = default;

private:
  bool top_ = false;
  std::vector<Class> classes_;
};

/// Returns a description of the first broken partition invariant, if any:
/// distinct value numbers, non-empty classes, at most one constant per
/// class, and no variable, constant or value expression in two classes.
std::optional<std::string> check_invariants(const Partition &p);

// ---------------------------------------------------------------------------
// Value-number allocation
// ---------------------------------------------------------------------------

struct ConstKey {
  std::int64_t value;
  friend auto operator<=>(const ConstKey &, const ConstKey &) = default;
};
struct InputKey {
  std::string name;
  friend auto operator<=>(const InputKey &, const InputKey &) = default;
};
/// Class created at forward join `block` from classes `left` and `right`.
struct JoinKey {
  BlockId block;
  ValueNumber left;
  ValueNumber right;
  friend auto operator<=>(const JoinKey &, const JoinKey &) = default;
};
/// Class created at loop header `block`. The back-edge value number is left
/// out so that the number stays fixed while the loop body is re-analyzed.
struct LoopKey {
  BlockId block;
  ValueNumber forward;
  std::string witness;
  friend auto operator<=>(const LoopKey &, const LoopKey &) = default;
};
/// Class created by the transfer function for the statement defining
/// `target`.
struct DefKey {
  std::string target;
  friend auto operator<=>(const DefKey &, const DefKey &) = default;
};

using AllocationKey = std::variant<ConstKey, InputKey, JoinKey, LoopKey, DefKey>;

class Allocator {
public:
  /// Memoized: the same key always yields the same number.
  ValueNumber fresh(const AllocationKey &key);
  std::optional<ValueNumber> find(const AllocationKey &key) const;
  const AllocationKey *key_of(ValueNumber vn) const;
  /// Constants and inputs denote the same value at every program point.
  bool is_global(ValueNumber vn) const;
  /// Bumps the counter past `vn` so hand-built partitions do not collide
  /// with freshly allocated numbers.
  void reserve(ValueNumber vn);
  std::size_t size() const { return memo_.size(); }

private:
  std::map<AllocationKey, ValueNumber> memo_;
  std::map<ValueNumber, AllocationKey> keys_;
  std::uint32_t next_ = 1;
};

ValueNumber fresh_value_number(Allocator &a, const AllocationKey &key);

/// Thrown when the analysis reaches a state that a correct implementation
/// cannot produce.
class AnalysisError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

/// Resolves a variable or constant to its value number, adding a singleton
/// class for constants and program inputs that are not in `p` yet.
ValueNumber lookup_operand(Partition &p, const Atom &operand, Allocator &a,
                           const std::set<std::string> &inputs);

/// A copy or constant resolves to a value number; a binary operation to a
/// value expression over its operands' value numbers.
using ValueOf = std::variant<ValueNumber, ValueExpression>;

ValueOf value_expr(const Rhs &rhs, Partition &p, Allocator &a,
                   const std::set<std::string> &inputs);

enum class JoinKind { Forward, LoopHeader };

/// Member-wise intersection of a class from each predecessor of join block
/// `k`. Returns nothing when the classes have no member in common.
std::optional<Class> intersect_classes(const Class &left, const Class &right,
                                       const BlockId &k, Allocator &a,
                                       JoinKind kind = JoinKind::Forward,
                                       bool forward_is_left = true);

Partition normalize(const Partition &p);

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

using VnNamer = std::function<std::uint32_t(ValueNumber)>;

/// Identity naming.
std::uint32_t raw_vn(ValueNumber vn);

/// Assigns dense numbers starting at 1 in order of first request.
class Renumbering {
public:
  std::uint32_t operator()(ValueNumber vn);
  VnNamer namer() {
    return [this](ValueNumber vn) { return (*this)(vn); };
  }

private:
  std::map<ValueNumber, std::uint32_t> map_;
  std::uint32_t next_ = 1;
};

/// Visits value numbers in rendering order so a Renumbering can be primed.
void visit_value_numbers(const Partition &p,
                         const std::function<void(ValueNumber)> &fn);

/// Applies a value-number renaming and re-sorts the classes.
Partition rename(const Partition &p, const VnNamer &namer);

std::string render_vpf(const ValuePhiFunction &vpf,
                       const VnNamer &namer = raw_vn);
std::string render_expr(const ValueExpression &ve,
                        const VnNamer &namer = raw_vn);
std::string render_class(const Class &c, const VnNamer &namer = raw_vn);
/// `{v1, x1, x3 | v2, y1, v1+1}`; TOP renders as `TOP`.
std::string render_partition(const Partition &p,
                             const VnNamer &namer = raw_vn);

nlohmann::json vpf_to_json(const ValuePhiFunction &vpf,
                           const VnNamer &namer = raw_vn);
nlohmann::json class_to_json(const Class &c, const VnNamer &namer = raw_vn);
nlohmann::json partition_to_json(const Partition &p,
                                 const VnNamer &namer = raw_vn);
ValuePhiFunction vpf_from_json(const nlohmann::json &j);
Partition partition_from_json(const nlohmann::json &j);

} // namespace vphi
