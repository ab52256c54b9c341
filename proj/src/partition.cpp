#include "vphi/partition.hpp"

#include <algorithm>
#include <sstream>

namespace vphi {

VpfOperand::VpfOperand(ValuePhiFunction phi)
    : repr_(std::make_shared<const ValuePhiFunction>(std::move(phi))) {}

std::strong_ordering operator<=>(const VpfOperand &a, const VpfOperand &b) {
  if (a.is_value_number() != b.is_value_number())
    return a.is_value_number() ? std::strong_ordering::less
                               : std::strong_ordering::greater;
  if (a.is_value_number())
    return a.value_number() <=> b.value_number();
  return a.phi() <=> b.phi();
}

std::strong_ordering operator<=>(const ValuePhiFunction &a,
                                 const ValuePhiFunction &b) {
  if (auto c = a.block <=> b.block; c != 0)
    return c;
  if (auto c = a.left <=> b.left; c != 0)
    return c;
  return a.right <=> b.right;
}

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

Partition Partition::top() {
  Partition p;
  p.top_ = true;
  return p;
}

namespace {

template <typename Classes> auto find_vn(Classes &classes, ValueNumber vn) {
  auto it = std::lower_bound(
      classes.begin(), classes.end(), vn,
      [](const Class &c, ValueNumber v) { return c.vn < v; });
  return (it != classes.end() && it->vn == vn) ? &*it : nullptr;
}

} // namespace

const Class *Partition::find(ValueNumber vn) const {
  return find_vn(classes_, vn);
}

Class *Partition::find(ValueNumber vn) { return find_vn(classes_, vn); }

const Class *Partition::class_of_var(std::string_view name) const {
  for (const auto &c : classes_)
    if (c.vars.find(std::string(name)) != c.vars.end())
      return &c;
  return nullptr;
}

const Class *Partition::class_of_const(std::int64_t value) const {
  for (const auto &c : classes_)
    if (c.consts.count(value))
      return &c;
  return nullptr;
}

const Class *Partition::class_of_expr(const ValueExpression &ve) const {
  for (const auto &c : classes_)
    if (c.exprs.count(ve))
      return &c;
  return nullptr;
}

const Class *Partition::class_with_vpf(const ValuePhiFunction &vpf) const {
  for (const auto &c : classes_)
    if (c.vpf && *c.vpf == vpf)
      return &c;
  return nullptr;
}

Class &Partition::insert(Class c) {
  if (top_)
    throw AnalysisError("insert into TOP partition");
  auto it = std::lower_bound(
      classes_.begin(), classes_.end(), c.vn,
      [](const Class &x, ValueNumber v) { return x.vn < v; });
  if (it != classes_.end() && it->vn == c.vn)
    throw AnalysisError("value number v" + std::to_string(c.vn.index) +
                        " already has a class");
  return *classes_.insert(it, std::move(c));
}

void Partition::remove_var(std::string_view name) {
  for (auto it = classes_.begin(); it != classes_.end(); ++it) {
    auto v = it->vars.find(std::string(name));
    if (v == it->vars.end())
      continue;
    it->vars.erase(v);
    if (it->empty())
      classes_.erase(it);
    return;
  }
}

std::optional<std::string> check_invariants(const Partition &p) {
  if (p.is_top())
    return std::nullopt;
  std::set<std::string> vars;
  std::set<std::int64_t> consts;
  std::set<ValueExpression> exprs;
  std::set<ValueNumber> vns;
  for (const auto &c : p.classes()) {
    std::string where = "class v" + std::to_string(c.vn.index);
    if (!vns.insert(c.vn).second)
      return where + " appears twice";
    if (c.empty())
      return where + " is empty";
    if (c.consts.size() > 1)
      return where + " holds two constants";
    for (const auto &v : c.vars)
      if (!vars.insert(v).second)
        return "variable " + v + " is in two classes";
    for (auto k : c.consts)
      if (!consts.insert(k).second)
        return "constant " + std::to_string(k) + " is in two classes";
    for (const auto &e : c.exprs)
      if (!exprs.insert(e).second)
        return "expression " + render_expr(e) + " is in two classes";
  }
  return std::nullopt;
}

Partition normalize(const Partition &p) {
  if (p.is_top())
    return Partition::top();
  Partition out;
  std::vector<Class> sorted = p.classes();
  std::sort(sorted.begin(), sorted.end(),
            [](const Class &a, const Class &b) { return a.vn < b.vn; });
  for (auto &c : sorted)
    out.insert(std::move(c));
  return out;
}

// ---------------------------------------------------------------------------
// Allocator
// ---------------------------------------------------------------------------

ValueNumber Allocator::fresh(const AllocationKey &key) {
  if (auto it = memo_.find(key); it != memo_.end())
    return it->second;
  ValueNumber vn{next_++};
  memo_.emplace(key, vn);
  keys_.emplace(vn, key);
  return vn;
}

std::optional<ValueNumber> Allocator::find(const AllocationKey &key) const {
  if (auto it = memo_.find(key); it != memo_.end())
    return it->second;
  return std::nullopt;
}

const AllocationKey *Allocator::key_of(ValueNumber vn) const {
  auto it = keys_.find(vn);
  return it == keys_.end() ? nullptr : &it->second;
}

bool Allocator::is_global(ValueNumber vn) const {
  const auto *key = key_of(vn);
  return key && (std::holds_alternative<ConstKey>(*key) ||
                 std::holds_alternative<InputKey>(*key));
}

void Allocator::reserve(ValueNumber vn) {
  next_ = std::max(next_, vn.index + 1);
}

ValueNumber fresh_value_number(Allocator &a, const AllocationKey &key) {
  return a.fresh(key);
}

// ---------------------------------------------------------------------------
// Operand resolution
// ---------------------------------------------------------------------------

ValueNumber lookup_operand(Partition &p, const Atom &operand, Allocator &a,
                           const std::set<std::string> &inputs) {
  if (p.is_top())
    throw AnalysisError("operand lookup in TOP partition");
  if (const auto *c = std::get_if<Const>(&operand)) {
    if (const auto *cls = p.class_of_const(c->value))
      return cls->vn;
    ValueNumber vn = a.fresh(ConstKey{c->value});
    if (Class *existing = p.find(vn)) {
      existing->consts.insert(c->value);
    } else {
      Class cls;
      cls.vn = vn;
      cls.consts.insert(c->value);
      p.insert(std::move(cls));
    }
    return vn;
  }
  const auto &name = std::get<Var>(operand).name;
  if (const auto *cls = p.class_of_var(name))
    return cls->vn;
  if (!inputs.count(name))
    throw AnalysisError("variable " + name +
                        " is defined in the program but missing from the "
                        "partition");
  ValueNumber vn = a.fresh(InputKey{name});
  if (Class *existing = p.find(vn)) {
    existing->vars.insert(name);
  } else {
    Class cls;
    cls.vn = vn;
    cls.vars.insert(name);
    p.insert(std::move(cls));
  }
  return vn;
}

ValueOf value_expr(const Rhs &rhs, Partition &p, Allocator &a,
                   const std::set<std::string> &inputs) {
  if (const auto *c = std::get_if<Const>(&rhs))
    return lookup_operand(p, Atom{*c}, a, inputs);
  if (const auto *v = std::get_if<Var>(&rhs))
    return lookup_operand(p, Atom{*v}, a, inputs);
  if (const auto *b = std::get_if<BinOp>(&rhs)) {
    ValueNumber l = lookup_operand(p, b->left, a, inputs);
    ValueNumber r = lookup_operand(p, b->right, a, inputs);
    return ValueExpression{b->op, l, r};
  }
  throw AnalysisError("phi reached value_expr; lower phis first");
}

namespace {

template <typename T>
std::set<T> intersect(const std::set<T> &a, const std::set<T> &b) {
  std::set<T> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out, out.end()));
  return out;
}

// Names a loop-header class by a member that survives re-analysis of the
// loop body; members are disjoint across classes so the name is unique.
std::string loop_witness(const Class &c) {
  if (!c.vars.empty())
    return *c.vars.begin();
  if (!c.consts.empty())
    return "#" + std::to_string(*c.consts.begin());
  return "=" + render_expr(*c.exprs.begin());
}

} // namespace

std::optional<Class> intersect_classes(const Class &left, const Class &right,
                                       const BlockId &k, Allocator &a,
                                       JoinKind kind, bool forward_is_left) {
  Class out;
  out.vars = intersect(left.vars, right.vars);
  out.consts = intersect(left.consts, right.consts);
  out.exprs = intersect(left.exprs, right.exprs);
  if (out.empty())
    return std::nullopt;
  if (left.vn == right.vn) {
    out.vn = left.vn;
    if (left.vpf && right.vpf && *left.vpf == *right.vpf)
      out.vpf = left.vpf;
    return out;
  }
  if (kind == JoinKind::LoopHeader) {
    ValueNumber forward = forward_is_left ? left.vn : right.vn;
    out.vn = a.fresh(LoopKey{k, forward, loop_witness(out)});
  } else {
    out.vn = a.fresh(JoinKey{k, left.vn, right.vn});
  }
  out.vpf = ValuePhiFunction{k, left.vn, right.vn};
  return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::uint32_t raw_vn(ValueNumber vn) { return vn.index; }

std::uint32_t Renumbering::operator()(ValueNumber vn) {
  auto [it, inserted] = map_.emplace(vn, next_);
  if (inserted)
    ++next_;
  return it->second;
}

namespace {

void visit_operand(const VpfOperand &op,
                   const std::function<void(ValueNumber)> &fn);

void visit_vpf(const ValuePhiFunction &vpf,
               const std::function<void(ValueNumber)> &fn) {
  visit_operand(vpf.left, fn);
  visit_operand(vpf.right, fn);
}

void visit_operand(const VpfOperand &op,
                   const std::function<void(ValueNumber)> &fn) {
  if (op.is_value_number())
    fn(op.value_number());
  else
    visit_vpf(op.phi(), fn);
}

VpfOperand rename_operand(const VpfOperand &op, const VnNamer &namer);

ValuePhiFunction rename_vpf(const ValuePhiFunction &vpf, const VnNamer &namer) {
  return ValuePhiFunction{vpf.block, rename_operand(vpf.left, namer),
                          rename_operand(vpf.right, namer)};
}

VpfOperand rename_operand(const VpfOperand &op, const VnNamer &namer) {
  if (op.is_value_number())
    return ValueNumber{namer(op.value_number())};
  return rename_vpf(op.phi(), namer);
}

std::string render_operand(const VpfOperand &op, const VnNamer &namer) {
  if (op.is_value_number())
    return "v" + std::to_string(namer(op.value_number()));
  return render_vpf(op.phi(), namer);
}

} // namespace

void visit_value_numbers(const Partition &p,
                         const std::function<void(ValueNumber)> &fn) {
  for (const auto &c : p.classes()) {
    fn(c.vn);
    for (const auto &e : c.exprs) {
      fn(e.left);
      fn(e.right);
    }
    if (c.vpf)
      visit_vpf(*c.vpf, fn);
  }
}

Partition rename(const Partition &p, const VnNamer &namer) {
  if (p.is_top())
    return Partition::top();
  std::vector<Class> classes;
  for (const auto &c : p.classes()) {
    Class r;
    r.vn = ValueNumber{namer(c.vn)};
    r.vars = c.vars;
    r.consts = c.consts;
    for (const auto &e : c.exprs)
      r.exprs.insert(ValueExpression{e.op, ValueNumber{namer(e.left)},
                                     ValueNumber{namer(e.right)}});
    if (c.vpf)
      r.vpf = rename_vpf(*c.vpf, namer);
    classes.push_back(std::move(r));
  }
  std::sort(classes.begin(), classes.end(),
            [](const Class &a, const Class &b) { return a.vn < b.vn; });
  Partition out;
  for (auto &c : classes)
    out.insert(std::move(c));
  return out;
}

std::string render_vpf(const ValuePhiFunction &vpf, const VnNamer &namer) {
  return "phi." + vpf.block + "(" + render_operand(vpf.left, namer) + "," +
         render_operand(vpf.right, namer) + ")";
}

std::string render_expr(const ValueExpression &ve, const VnNamer &namer) {
  return "v" + std::to_string(namer(ve.left)) + ve.op + "v" +
         std::to_string(namer(ve.right));
}

std::string render_class(const Class &c, const VnNamer &namer) {
  std::string out = "v" + std::to_string(namer(c.vn));
  for (const auto &v : c.vars)
    out += ", " + v;
  for (auto k : c.consts)
    out += ", " + std::to_string(k);
  for (const auto &e : c.exprs)
    out += ", " + render_expr(e, namer);
  if (c.vpf)
    out += " : " + render_vpf(*c.vpf, namer);
  return out;
}

std::string render_partition(const Partition &p, const VnNamer &namer) {
  if (p.is_top())
    return "TOP";
  std::string out = "{";
  for (std::size_t i = 0; i < p.classes().size(); ++i) {
    if (i)
      out += " | ";
    out += render_class(p.classes()[i], namer);
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json operand_to_json(const VpfOperand &op, const VnNamer &namer) {
  if (op.is_value_number())
    return namer(op.value_number());
  return vpf_to_json(op.phi(), namer);
}

VpfOperand operand_from_json(const nlohmann::json &j) {
  if (j.is_object())
    return vpf_from_json(j);
  return ValueNumber{j.get<std::uint32_t>()};
}

} // namespace

nlohmann::json vpf_to_json(const ValuePhiFunction &vpf, const VnNamer &namer) {
  return {{"block", vpf.block},
          {"l", operand_to_json(vpf.left, namer)},
          {"r", operand_to_json(vpf.right, namer)}};
}

ValuePhiFunction vpf_from_json(const nlohmann::json &j) {
  return ValuePhiFunction{j.at("block").get<std::string>(),
                          operand_from_json(j.at("l")),
                          operand_from_json(j.at("r"))};
}

nlohmann::json class_to_json(const Class &c, const VnNamer &namer) {
  nlohmann::json exprs = nlohmann::json::array();
  for (const auto &e : c.exprs)
    exprs.push_back(
        {{"op", e.op}, {"l", namer(e.left)}, {"r", namer(e.right)}});
  return {{"vn", namer(c.vn)},
          {"vars", c.vars},
          {"consts", c.consts},
          {"exprs", std::move(exprs)},
          {"vpf", c.vpf ? vpf_to_json(*c.vpf, namer) : nlohmann::json()}};
}

nlohmann::json partition_to_json(const Partition &p, const VnNamer &namer) {
  if (p.is_top())
    return "TOP";
  nlohmann::json out = nlohmann::json::array();
  for (const auto &c : p.classes())
    out.push_back(class_to_json(c, namer));
  return out;
}

Partition partition_from_json(const nlohmann::json &j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "TOP")
      throw std::invalid_argument("partition must be an array or \"TOP\"");
    return Partition::top();
  }
  Partition p;
  for (const auto &jc : j) {
    Class c;
    c.vn = ValueNumber{jc.at("vn").get<std::uint32_t>()};
    for (const auto &v : jc.at("vars"))
      c.vars.insert(v.get<std::string>());
    for (const auto &k : jc.at("consts"))
      c.consts.insert(k.get<std::int64_t>());
    for (const auto &e : jc.at("exprs"))
      c.exprs.insert(ValueExpression{e.at("op").get<std::string>(),
                                     ValueNumber{e.at("l").get<std::uint32_t>()},
                                     ValueNumber{e.at("r").get<std::uint32_t>()}});
    if (jc.contains("vpf") && !jc.at("vpf").is_null())
      c.vpf = vpf_from_json(jc.at("vpf"));
    p.insert(std::move(c));
  }
  return p;
}

} // namespace vphi
