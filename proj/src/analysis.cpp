#include "vphi/analysis.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace vphi {

AnalysisState AnalysisState::for_program(const Program &program) {
  AnalysisState st;
  auto rpo = reverse_postorder(program);
  for (std::size_t i = 0; i < rpo.size(); ++i)
    st.rpo_index[rpo[i]] = i;
  for (const auto &b : program.blocks) {
    st.block_in[b.id] = Partition::top();
    st.block_out[b.id] = Partition::top();
    if (!b.is_join())
      continue;
    JoinInfo info;
    info.preds = {b.preds[0], b.preds[1]};
    auto self = st.rpo_index.find(b.id);
    for (std::size_t k = 0; k < 2 && self != st.rpo_index.end(); ++k) {
      auto pred = st.rpo_index.find(b.preds[k]);
      if (pred != st.rpo_index.end() && pred->second >= self->second) {
        info.kind = JoinKind::LoopHeader;
        info.forward_pred = 1 - k;
      }
    }
    st.joins.emplace(b.id, std::move(info));
  }
  st.inputs = program.inputs();
  return st;
}

// ---------------------------------------------------------------------------
// Join
// ---------------------------------------------------------------------------

Partition join(const Partition &left, const Partition &right, const BlockId &k,
               Allocator &a, JoinKind kind, std::size_t forward_pred) {
  if (left.is_top())
    return right;
  if (right.is_top())
    return left;

  // Only class pairs sharing at least one member can intersect non-trivially.
  std::map<std::string, std::size_t> by_var;
  std::map<std::int64_t, std::size_t> by_const;
  std::map<ValueExpression, std::size_t> by_expr;
  const auto &rc = right.classes();
  for (std::size_t j = 0; j < rc.size(); ++j) {
    for (const auto &v : rc[j].vars)
      by_var.emplace(v, j);
    for (auto c : rc[j].consts)
      by_const.emplace(c, j);
    for (const auto &e : rc[j].exprs)
      by_expr.emplace(e, j);
  }

  Partition out;
  for (const auto &lc : left.classes()) {
    std::set<std::size_t> partners;
    for (const auto &v : lc.vars)
      if (auto it = by_var.find(v); it != by_var.end())
        partners.insert(it->second);
    for (auto c : lc.consts)
      if (auto it = by_const.find(c); it != by_const.end())
        partners.insert(it->second);
    for (const auto &e : lc.exprs)
      if (auto it = by_expr.find(e); it != by_expr.end())
        partners.insert(it->second);
    for (auto j : partners)
      if (auto c = intersect_classes(lc, rc[j], k, a, kind, forward_pred == 0))
        out.insert(std::move(*c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Value phi-functions
// ---------------------------------------------------------------------------

namespace {

bool is_identity(const ValuePhiFunction &vpf) {
  return vpf.is_flat() && vpf.left == vpf.right;
}

/// Whether `vpf` names a class of `p`: an identity merge phi_k(v, v) names
/// class v itself, anything else must match a class annotation.
const Class *class_for(const ValuePhiFunction &vpf, const Partition &p) {
  if (is_identity(vpf))
    return p.find(vpf.left.value_number());
  return p.class_with_vpf(vpf);
}

class VpfSearch {
public:
  explicit VpfSearch(AnalysisState &st) : st_(st) {}

  std::optional<ValuePhiFunction> best(const ValueExpression &ve,
                                       const Partition &p, std::size_t depth) {
    auto key = std::make_pair(ve, &p);
    if (auto it = memo_.find(key); it != memo_.end())
      return it->second;
    // Back edges can make annotation chains cyclic.
    if (!active_.insert(key).second)
      return std::nullopt;
    st_.max_vpf_depth = std::max(st_.max_vpf_depth, depth);

    auto cands = candidates(ve, p, depth);
    std::optional<ValuePhiFunction> result;
    for (const auto &c : cands)
      if (class_for(c, p)) {
        result = c;
        break;
      }
    if (!result && !cands.empty())
      result = cands.front();

    active_.erase(key);
    memo_.emplace(key, result);
    return result;
  }

private:
  bool live(ValueNumber vn, const Partition &p) const {
    return st_.allocator.is_global(vn) || p.find(vn) != nullptr;
  }

  using Sides = std::pair<VpfOperand, VpfOperand>;

  std::optional<Sides> split(ValueNumber vn, const Partition &p,
                             const BlockId &k, const Partition &left,
                             const Partition &right) const {
    const Class *c = p.find(vn);
    if (c && c->vpf && c->vpf->block == k)
      return Sides{c->vpf->left, c->vpf->right};
    if (live(vn, left) && live(vn, right))
      return Sides{vn, vn};
    return std::nullopt;
  }

  std::vector<ValuePhiFunction> candidates(const ValueExpression &ve,
                                           const Partition &p,
                                           std::size_t depth) {
    std::vector<BlockId> blocks;
    for (ValueNumber vn : {ve.left, ve.right})
      if (const Class *c = p.find(vn); c && c->vpf)
        if (std::find(blocks.begin(), blocks.end(), c->vpf->block) ==
            blocks.end())
          blocks.push_back(c->vpf->block);
    // Latest join first.
    std::sort(blocks.begin(), blocks.end(),
              [&](const BlockId &a, const BlockId &b) {
                return st_.rpo_index[a] > st_.rpo_index[b];
              });

    std::vector<ValuePhiFunction> out;
    for (const auto &k : blocks) {
      auto info = st_.joins.find(k);
      if (info == st_.joins.end())
        continue;
      const Partition &lp = st_.block_out.at(info->second.preds[0]);
      const Partition &rp = st_.block_out.at(info->second.preds[1]);
      if (lp.is_top() || rp.is_top())
        continue;
      auto l = split(ve.left, p, k, lp, rp);
      auto r = split(ve.right, p, k, lp, rp);
      if (!l || !r)
        continue;
      auto left = resolve(ve.op, l->first, r->first, lp, depth);
      if (!left)
        continue;
      auto right = resolve(ve.op, l->second, r->second, rp, depth);
      if (!right)
        continue;
      out.push_back(ValuePhiFunction{k, *left, *right});
    }
    return out;
  }

  std::optional<VpfOperand> resolve(const std::string &op, const VpfOperand &a,
                                    const VpfOperand &b, const Partition &p,
                                    std::size_t depth) {
    if (!a.is_value_number() || !b.is_value_number())
      return std::nullopt;
    ValueExpression e{op, a.value_number(), b.value_number()};
    if (const Class *c = p.class_of_expr(e))
      return c->vn;
    auto sub = best(e, p, depth + 1);
    if (!sub)
      return std::nullopt;
    if (is_identity(*sub))
      return sub->left;
    if (const Class *c = p.class_with_vpf(*sub))
      return c->vn;
    return VpfOperand(*sub);
  }

  AnalysisState &st_;
  std::set<std::pair<ValueExpression, const Partition *>> active_;
  std::map<std::pair<ValueExpression, const Partition *>,
           std::optional<ValuePhiFunction>>
      memo_;
};

} // namespace

std::optional<ValuePhiFunction>
value_phi_func(const ValueExpression &ve, const Partition &p,
               AnalysisState &st) {
  if (p.is_top())
    return std::nullopt;
  VpfSearch search(st);
  return search.best(ve, p, 1);
}

// ---------------------------------------------------------------------------
// Transfer
// ---------------------------------------------------------------------------

namespace {

void add_copy(Partition &pout, const std::string &target, ValueNumber vn) {
  if (const Class *c = pout.find(vn); c && c->vars.count(target))
    return;
  pout.remove_var(target);
  if (Class *c = pout.find(vn)) {
    c->vars.insert(target);
    return;
  }
  Class c;
  c.vn = vn;
  c.vars.insert(target);
  pout.insert(std::move(c));
}

} // namespace

Partition transfer(const Statement &s, const Partition &pin,
                   AnalysisState &st) {
  if (pin.is_top())
    return pin;
  Partition pout = pin;
  Allocator &alloc = st.allocator;

  if (s.is_phi())
    throw AnalysisError("phi for " + s.target +
                        " reached the transfer function; lower phis first");

  const auto *bin = std::get_if<BinOp>(&s.rhs);
  if (!bin) {
    auto value = value_expr(s.rhs, pout, alloc, st.inputs);
    add_copy(pout, s.target, std::get<ValueNumber>(value));
    return pout;
  }

  ValueExpression ve{bin->op, lookup_operand(pout, bin->left, alloc, st.inputs),
                     lookup_operand(pout, bin->right, alloc, st.inputs)};
  auto vpf = value_phi_func(ve, pout, st);
  pout.remove_var(s.target);

  Class *hit = nullptr;
  if (const Class *c = pout.class_of_expr(ve))
    hit = pout.find(c->vn);
  else if (vpf)
    if (const Class *c = class_for(*vpf, pout))
      hit = pout.find(c->vn);

  if (hit) {
    hit->vars.insert(s.target);
    hit->exprs.insert(ve);
    return pout;
  }

  Class c;
  c.vn = (vpf && is_identity(*vpf)) ? vpf->left.value_number()
                                    : alloc.fresh(DefKey{s.target});
  c.vars.insert(s.target);
  c.exprs.insert(ve);
  c.vpf = vpf;
  pout.insert(std::move(c));
  return pout;
}

// ---------------------------------------------------------------------------
// Fixpoint driver
// ---------------------------------------------------------------------------

AnalysisState run_fixpoint(const Program &source, FixpointOptions opts) {
  bool has_phi = false;
  for (const auto &b : source.blocks)
    for (const auto &s : b.stmts)
      has_phi = has_phi || s.is_phi();
  const Program program = has_phi ? lower_phis(source) : source;

  AnalysisState st = AnalysisState::for_program(program);
  const auto rpo = reverse_postorder(program);
  const std::size_t cap =
      opts.max_sweeps.value_or(program.blocks.size() + 2);

  for (std::size_t sweep = 1;; ++sweep) {
    if (sweep > cap)
      throw ConvergenceError("no fixpoint after " + std::to_string(cap) +
                             " sweeps");
    bool changed = false;
    for (const auto &id : rpo) {
      const Block &b = program.block(id);
      Partition in;
      if (id == program.entry_id) {
        in = Partition();
      } else if (b.preds.size() == 1) {
        in = st.block_out.at(b.preds[0]);
      } else {
        const JoinInfo &info = st.joins.at(id);
        in = join(st.block_out.at(info.preds[0]), st.block_out.at(info.preds[1]),
                  id, st.allocator, info.kind, info.forward_pred);
      }
      Partition cur = in;
      for (const auto &s : b.stmts) {
        st.pin[s.id] = cur;
        cur = transfer(s, cur, st);
        st.pout[s.id] = cur;
      }
      if (st.block_in[id] != in) {
        st.block_in[id] = std::move(in);
        changed = true;
      }
      if (st.block_out[id] != cur) {
        st.block_out[id] = std::move(cur);
        changed = true;
      }
    }
    st.iterations = sweep;
    if (!changed)
      break;
  }
  return st;
}

// ---------------------------------------------------------------------------
// Redundancy detection
// ---------------------------------------------------------------------------

const Redundancy *RedundancyReport::find(StmtId id) const {
  for (const auto &e : entries)
    if (e.stmt == id)
      return &e;
  return nullptr;
}

RedundancyReport detect_redundancies(const Program &program,
                                     const AnalysisState &st) {
  RedundancyReport report;
  for (const auto &b : program.blocks)
    for (const auto &s : b.stmts) {
      if (!s.is_binop())
        continue;
      auto it = st.pout.find(s.id);
      if (it == st.pout.end() || it->second.is_top())
        continue;
      const Class *c = it->second.class_of_var(s.target);
      if (!c)
        continue;
      Redundancy r{s.id, b.id, s.target, render_rhs(s.rhs),
                   EquivalentVariable{}};
      auto other = std::find_if(c->vars.begin(), c->vars.end(),
                                [&](const auto &v) { return v != s.target; });
      if (other != c->vars.end()) {
        r.reason = EquivalentVariable{*other};
      } else if (c->vpf) {
        r.reason = ValuePhiWitness{*c->vpf};
      } else {
        continue;
      }
      report.entries.push_back(std::move(r));
    }
  return report;
}

std::optional<ValueNumber> value_number_of(const AnalysisState &st,
                                           const Partition &p,
                                           std::string_view name) {
  if (p.is_top())
    return std::nullopt;
  if (const Class *c = p.class_of_var(name))
    return c->vn;
  if (st.inputs.count(std::string(name)))
    return st.allocator.find(InputKey{std::string(name)});
  return std::nullopt;
}

} // namespace vphi
