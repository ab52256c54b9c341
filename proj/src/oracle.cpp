#include "vphi/oracle.hpp"

#include "vphi/analysis.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace vphi {

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

} // namespace

HerbrandTerm HerbrandTerm::leaf(std::string input) {
  auto rep = std::make_shared<Rep>();
  rep->kind = Kind::Leaf;
  rep->hash = mix(1, std::hash<std::string>{}(input));
  rep->text = std::move(input);
  return HerbrandTerm(std::move(rep));
}

HerbrandTerm HerbrandTerm::constant(std::int64_t value) {
  auto rep = std::make_shared<Rep>();
  rep->kind = Kind::ConstLeaf;
  rep->value = value;
  rep->hash = mix(2, std::hash<std::int64_t>{}(value));
  return HerbrandTerm(std::move(rep));
}

HerbrandTerm HerbrandTerm::node(std::string op, HerbrandTerm left,
                                HerbrandTerm right) {
  auto rep = std::make_shared<Rep>();
  rep->kind = Kind::Node;
  rep->hash = mix(mix(mix(3, std::hash<std::string>{}(op)), left.rep_->hash),
                  right.rep_->hash);
  rep->text = std::move(op);
  rep->left = std::move(left.rep_);
  rep->right = std::move(right.rep_);
  return HerbrandTerm(std::move(rep));
}

bool operator==(const HerbrandTerm &a, const HerbrandTerm &b) {
  const HerbrandTerm::Rep *x = a.rep_.get();
  const HerbrandTerm::Rep *y = b.rep_.get();
  if (x == y)
    return true;
  if (x->hash != y->hash || x->kind != y->kind)
    return false;
  switch (x->kind) {
  case HerbrandTerm::Kind::Leaf:
    return x->text == y->text;
  case HerbrandTerm::Kind::ConstLeaf:
    return x->value == y->value;
  case HerbrandTerm::Kind::Node:
    return x->text == y->text && a.left() == b.left() &&
           a.right() == b.right();
  }
  return false;
}

std::string HerbrandTerm::render() const {
  switch (kind()) {
  case Kind::Leaf:
    return name();
  case Kind::ConstLeaf:
    return std::to_string(value());
  case Kind::Node:
    return "(" + left().render() + " " + name() + " " + right().render() + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

HerbrandTerm atom_term(const PathEnv &env, const Atom &atom) {
  if (const auto *c = std::get_if<Const>(&atom))
    return HerbrandTerm::constant(c->value);
  const auto &name = std::get<Var>(atom).name;
  if (auto it = env.bindings.find(name); it != env.bindings.end())
    return it->second;
  return HerbrandTerm::leaf(name);
}

void execute(PathEnv &env, const Statement &s) {
  HerbrandTerm t = herbrand_term(env, s.rhs);
  if (s.is_binop())
    env.computed.push_back({s.id, t});
  env.bindings.insert_or_assign(s.target, std::move(t));
}

} // namespace

HerbrandTerm herbrand_term(const PathEnv &env, const Rhs &rhs) {
  if (const auto *c = std::get_if<Const>(&rhs))
    return HerbrandTerm::constant(c->value);
  if (const auto *v = std::get_if<Var>(&rhs))
    return atom_term(env, Atom{*v});
  if (const auto *b = std::get_if<BinOp>(&rhs))
    return HerbrandTerm::node(b->op, atom_term(env, b->left),
                              atom_term(env, b->right));
  throw std::invalid_argument("phi has no term; lower phis first");
}

ProgramPoint in_point(const Program &program, StmtId stmt) {
  auto ref = program.find_statement(stmt);
  if (!ref)
    throw std::invalid_argument("unknown statement s" +
                                std::to_string(stmt.value));
  return ProgramPoint{ref->block->id, ref->index};
}

ProgramPoint out_point(const Program &program, const BlockId &block) {
  return ProgramPoint{block, program.block(block).stmts.size()};
}

std::vector<PathEnv> enumerate_paths(const Program &program,
                                     const ProgramPoint &point,
                                     const OracleOptions &opts) {
  const auto rpo = reverse_postorder(program);
  std::unordered_map<std::string, std::size_t> order;
  for (std::size_t i = 0; i < rpo.size(); ++i)
    order[rpo[i]] = i;
  std::unordered_map<std::string, std::vector<BlockId>> succs;
  for (const auto &id : rpo)
    succs[id] = program.successors(id);

  // Blocks from which the target can still be reached.
  std::set<std::string> useful{point.block};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto &id : rpo)
      if (!useful.count(id))
        for (const auto &s : succs[id])
          if (useful.count(s)) {
            useful.insert(id);
            grew = true;
            break;
          }
  }

  std::vector<PathEnv> out;
  if (!order.count(point.block))
    return out;
  std::map<std::pair<std::string, std::string>, std::size_t> taken;

  std::function<void(const BlockId &, PathEnv)> walk =
      [&](const BlockId &id, PathEnv env) {
        const Block &b = program.block(id);
        env.path.push_back(id);
        if (id == point.block) {
          PathEnv done = env;
          for (std::size_t i = 0; i < point.index && i < b.stmts.size(); ++i)
            execute(done, b.stmts[i]);
          out.push_back(std::move(done));
          if (out.size() > opts.path_cap)
            throw PathCapExceeded("more than " + std::to_string(opts.path_cap) +
                                  " paths to " + point.block);
        }
        for (const auto &s : b.stmts)
          execute(env, s);
        for (const auto &s : succs[id]) {
          if (!useful.count(s))
            continue;
          bool back = order.at(s) <= order.at(id);
          if (!back) {
            walk(s, env);
            continue;
          }
          auto &count = taken[{id, s}];
          if (count >= opts.unroll)
            continue;
          ++count;
          walk(s, env);
          --count;
        }
      };
  walk(program.entry_id, PathEnv{});
  return out;
}

std::vector<PathEnv> enumerate_paths(const Program &program, StmtId target,
                                     const OracleOptions &opts) {
  return enumerate_paths(program, in_point(program, target), opts);
}

bool oracle_equivalent(const Program &program, const ProgramPoint &point,
                       const Rhs &a, const Rhs &b, const OracleOptions &opts) {
  for (const auto &env : enumerate_paths(program, point, opts))
    if (!(herbrand_term(env, a) == herbrand_term(env, b)))
      return false;
  return true;
}

namespace {

bool redundant_on(const std::vector<PathEnv> &paths, const Rhs &rhs) {
  for (const auto &env : paths) {
    HerbrandTerm t = herbrand_term(env, rhs);
    bool seen = std::any_of(env.computed.begin(), env.computed.end(),
                            [&](const ComputedTerm &c) { return c.term == t; });
    if (!seen)
      return false;
  }
  return true;
}

} // namespace

bool oracle_redundant(const Program &program, StmtId stmt,
                      const OracleOptions &opts) {
  auto ref = program.find_statement(stmt);
  if (!ref)
    throw std::invalid_argument("unknown statement s" +
                                std::to_string(stmt.value));
  if (!ref->stmt().is_binop())
    return false;
  return redundant_on(enumerate_paths(program, stmt, opts), ref->stmt().rhs);
}

// ---------------------------------------------------------------------------
// Differential check
// ---------------------------------------------------------------------------

std::string Mismatch::to_json_line() const {
  nlohmann::json j;
  switch (kind) {
  case Kind::Redundancy:
    j["kind"] = "redundancy-mismatch";
    j["stmt"] = stmt ? stmt->value : 0;
    j["block"] = block;
    j["expr"] = a;
    break;
  case Kind::Equivalence:
    j["kind"] = "equivalence-mismatch";
    j["block"] = block;
    j["a"] = a;
    j["b"] = b;
    break;
  case Kind::MissingVariable:
    j["kind"] = "missing-variable";
    j["block"] = block;
    j["a"] = a;
    break;
  }
  j["analysis"] = analysis;
  j["oracle"] = oracle;
  return j.dump();
}

DifferentialResult differential_check(const Program &source,
                                      const DifferentialOptions &opts) {
  const Program program = lower_phis(source);
  FixpointOptions fo;
  fo.max_sweeps = opts.max_sweeps;
  AnalysisState st = run_fixpoint(program, fo);
  RedundancyReport report = detect_redundancies(program, st);

  DifferentialResult result;
  result.sweeps = st.iterations;
  result.blocks = program.blocks.size();
  result.redundancies = report.entries.size();
  const auto rpo = reverse_postorder(program);
  const auto inputs = program.inputs();

  for (const auto &id : rpo) {
    const Block &b = program.block(id);
    for (const auto &s : b.stmts) {
      if (!s.is_binop())
        continue;
      bool oracle = oracle_redundant(program, s.id, opts.oracle);
      bool analysis = report.contains(s.id);
      result.oracle_redundancies += oracle;
      if (oracle && !analysis)
        ++result.missed_redundancies;
      if (analysis != oracle && (opts.exact || analysis))
        result.mismatches.push_back({Mismatch::Kind::Redundancy, id, s.id,
                                     render_rhs(s.rhs), {}, analysis, oracle});
    }
  }

  for (const auto &id : rpo) {
    auto paths = enumerate_paths(program, out_point(program, id), opts.oracle);
    if (paths.empty())
      continue;
    std::set<std::string> names(inputs.begin(), inputs.end());
    std::set<std::string> bound;
    for (const auto &[name, term] : paths.front().bindings)
      bound.insert(name);
    for (const auto &env : paths)
      for (auto it = bound.begin(); it != bound.end();)
        it = env.bindings.count(*it) ? std::next(it) : bound.erase(it);
    names.insert(bound.begin(), bound.end());

    const Partition &out = st.block_out.at(id);
    std::map<std::string, std::optional<ValueNumber>> vn;
    for (const auto &n : names) {
      vn[n] = value_number_of(st, out, n);
      if (!vn[n] && !inputs.count(n) && opts.exact)
        result.mismatches.push_back({Mismatch::Kind::MissingVariable, id,
                                     std::nullopt, n, {}, false, true});
    }

    std::vector<std::string> list(names.begin(), names.end());
    for (std::size_t i = 0; i < list.size(); ++i)
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        const auto &x = list[i];
        const auto &y = list[j];
        bool analysis = vn[x] && vn[y] && *vn[x] == *vn[y];
        bool oracle = true;
        for (const auto &env : paths)
          if (!(herbrand_term(env, Var{x}) == herbrand_term(env, Var{y}))) {
            oracle = false;
            break;
          }
        ++result.pairs_checked;
        if (oracle && !analysis)
          ++result.missed_equivalences;
        if (analysis != oracle && (opts.exact || analysis))
          result.mismatches.push_back(
              {Mismatch::Kind::Equivalence, id, std::nullopt, x, y, analysis,
               oracle});
      }
  }
  return result;
}

} // namespace vphi
