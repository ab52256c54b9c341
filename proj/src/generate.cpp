#include "vphi/generate.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>

namespace vphi {

namespace {

class Builder {
public:
  Builder(std::uint64_t seed, const RandomProgramOptions &opts)
      : rng_(seed), opts_(opts) {}

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  template <typename T> const T &pick(const std::vector<T> &v) {
    return v[uniform(0, v.size() - 1)];
  }

  std::string fresh_name() { return "t" + std::to_string(counter_++); }

  Statement stmt(std::string target, Rhs rhs) {
    Statement s;
    s.id = StmtId{next_id_++};
    s.target = std::move(target);
    s.rhs = std::move(rhs);
    return s;
  }

  /// Operand pool at a point: variables defined on every path, recent
  /// definitions weighted up, plus inputs.
  Atom operand(const std::vector<std::string> &avail) {
    if (chance(0.08))
      return Const{static_cast<std::int64_t>(uniform(1, 2))};
    if (!avail.empty() && chance(0.7)) {
      // Bias toward the most recent definitions.
      std::size_t n = avail.size();
      std::size_t lo = n > 4 ? n - 4 : 0;
      if (chance(0.6))
        return Var{avail[uniform(lo, n - 1)]};
      return Var{pick(avail)};
    }
    return Var{pick(opts_.inputs)};
  }

  std::optional<Atom> mirror(const Atom &a, const std::vector<std::string> &avail,
                             bool through_phi) {
    const auto *v = std::get_if<Var>(&a);
    if (!v)
      return a;
    bool is_input = std::find(opts_.inputs.begin(), opts_.inputs.end(),
                              v->name) != opts_.inputs.end();
    bool here = is_input ||
                std::find(avail.begin(), avail.end(), v->name) != avail.end();
    if (through_phi || !here) {
      std::vector<std::string> via;
      for (const auto &[target, ops] : phis_)
        if ((ops.first == v->name || ops.second == v->name) &&
            std::find(avail.begin(), avail.end(), target) != avail.end())
          via.push_back(target);
      if (!via.empty())
        return Var{pick(via)};
    }
    if (here)
      return a;
    return std::nullopt;
  }

  Rhs binop(const std::vector<std::string> &avail) {
    if (!templates_.empty() && chance(0.4)) {
      const BinOp &t = pick(templates_);
      bool through = chance(0.6);
      auto l = mirror(t.left, avail, through);
      auto r = mirror(t.right, avail, through);
      if (l && r)
        return BinOp{t.op, *l, *r};
    }
    return BinOp{pick(opts_.operators), operand(avail), operand(avail)};
  }

  /// Appends `count` non-phi statements to `b`, extending `avail`.
  void fill(Block &b, std::size_t count, std::vector<std::string> &avail) {
    for (std::size_t i = 0; i < count; ++i) {
      Rhs rhs;
      double roll = std::uniform_real_distribution<double>(0, 1)(rng_);
      if (roll < 0.68) {
        rhs = binop(avail);
        templates_.push_back(std::get<BinOp>(rhs));
      } else if (roll < 0.86) {
        Atom a = operand(avail);
        rhs = std::visit([](const auto &x) -> Rhs { return x; }, a);
      } else {
        rhs = Const{static_cast<std::int64_t>(uniform(1, 2))};
      }
      auto name = fresh_name();
      b.stmts.push_back(stmt(name, std::move(rhs)));
      avail.push_back(name);
    }
  }

  std::string phi_operand(const std::vector<std::string> &avail) {
    if (!avail.empty() && chance(0.8)) {
      std::size_t n = avail.size();
      std::size_t lo = n > 3 ? n - 3 : 0;
      return chance(0.6) ? avail[uniform(lo, n - 1)] : pick(avail);
    }
    return pick(opts_.inputs);
  }

  Statement phi(const std::string &l, const std::string &r) {
    auto name = fresh_name();
    phis_[name] = {l, r};
    return stmt(name, Phi{l, r});
  }

  std::mt19937_64 &rng() { return rng_; }
  const RandomProgramOptions &opts() const { return opts_; }

private:
  std::mt19937_64 rng_;
  const RandomProgramOptions &opts_;
  std::uint32_t next_id_ = 0;
  std::size_t counter_ = 0;
  std::vector<BinOp> templates_;
  std::map<std::string, std::pair<std::string, std::string>> phis_;
};

std::vector<std::string> intersect(const std::vector<std::string> &a,
                                   const std::vector<std::string> &b) {
  std::vector<std::string> out;
  for (const auto &x : a)
    if (std::find(b.begin(), b.end(), x) != b.end())
      out.push_back(x);
  return out;
}

/// Randomly spreads `total` statements over `slots` buckets.
std::vector<std::size_t> spread(Builder &g, std::size_t total,
                                std::size_t slots) {
  std::vector<std::size_t> counts(slots, 0);
  for (std::size_t i = 0; i < total; ++i)
    ++counts[g.uniform(0, slots - 1)];
  return counts;
}

} // namespace

Program random_acyclic_program(std::uint64_t seed,
                               const RandomProgramOptions &opts) {
  Builder g(seed, opts);
  const std::size_t max_interior = std::max<std::size_t>(opts.max_blocks, 3) - 2;

  // Shape: a DAG in creation order with <= 2 preds and <= 2 succs per block.
  std::vector<Block> interior;
  std::map<std::string, std::size_t> outdeg;
  for (;;) {
    interior.clear();
    outdeg.clear();
    std::size_t n = g.uniform(1, max_interior);
    for (std::size_t i = 0; i < n; ++i) {
      Block b;
      b.id = "B" + std::to_string(i + 1);
      std::vector<std::string> cands;
      if (outdeg["entry"] < 2)
        cands.push_back("entry");
      for (std::size_t j = 0; j < i; ++j)
        if (outdeg[interior[j].id] < 2)
          cands.push_back(interior[j].id);
      if (cands.empty())
        break;
      if (i == 0) {
        b.preds = {"entry"};
      } else {
        std::string first = g.chance(0.6) ? cands.back() : g.pick(cands);
        b.preds = {first};
        if (cands.size() >= 2 && g.chance(0.5)) {
          std::vector<std::string> rest;
          for (const auto &c : cands)
            if (c != first)
              rest.push_back(c);
          b.preds.push_back(g.pick(rest));
          if (g.chance(0.5))
            std::swap(b.preds[0], b.preds[1]);
        }
      }
      for (const auto &p : b.preds)
        ++outdeg[p];
      interior.push_back(std::move(b));
    }
    std::vector<std::string> sinks;
    for (const auto &b : interior)
      if (outdeg[b.id] == 0)
        sinks.push_back(b.id);
    if (interior.size() == n && !sinks.empty() && sinks.size() <= 2) {
      Block exit;
      exit.id = "exit";
      exit.preds = sinks;
      Program p;
      p.blocks.push_back(Block{"entry", {}, {}});
      for (auto &b : interior)
        p.blocks.push_back(std::move(b));
      p.blocks.push_back(std::move(exit));

      std::size_t total = g.uniform(1, opts.max_statements);
      auto counts = spread(g, total, n);
      std::map<std::string, std::vector<std::string>> avail_out;
      avail_out["entry"] = {};
      for (std::size_t i = 1; i <= n; ++i) {
        Block &b = p.blocks[i];
        std::vector<std::string> avail = avail_out.at(b.preds[0]);
        if (b.is_join())
          avail = intersect(avail, avail_out.at(b.preds[1]));
        std::size_t count = counts[i - 1];
        if (b.is_join() && count > 0) {
          std::size_t phis = std::min<std::size_t>(count, g.uniform(0, 2));
          for (std::size_t k = 0; k < phis; ++k) {
            auto l = g.phi_operand(avail_out.at(b.preds[0]));
            auto r = g.phi_operand(avail_out.at(b.preds[1]));
            b.stmts.push_back(g.phi(l, r));
            avail.push_back(b.stmts.back().target);
          }
          count -= phis;
        }
        g.fill(b, count, avail);
        avail_out[b.id] = std::move(avail);
      }
      return p;
    }
  }
}

Program random_loop_program(std::uint64_t seed,
                            const RandomProgramOptions &opts) {
  Builder g(seed, opts);
  Program p;
  p.blocks.push_back(Block{"entry", {}, {}});

  const std::size_t shape = g.uniform(0, 3);
  const bool pre = g.chance(0.5);
  std::string fwd = "entry";
  if (pre) {
    p.blocks.push_back(Block{"P", {"entry"}, {}});
    fwd = "P";
  }
  // Header preds are patched once the latch is known.
  p.blocks.push_back(Block{"H", {fwd, ""}, {}});
  std::vector<std::string> body;
  std::string latch;
  std::string exit_pred = "H";
  switch (shape) {
  case 0:
    p.blocks.push_back(Block{"L", {"H"}, {}});
    latch = "L";
    body = {"L"};
    break;
  case 1:
    p.blocks.push_back(Block{"L1", {"H"}, {}});
    p.blocks.push_back(Block{"L2", {"L1"}, {}});
    latch = "L2";
    body = {"L1", "L2"};
    break;
  case 2:
    p.blocks.push_back(Block{"T", {"H"}, {}});
    p.blocks.push_back(Block{"F", {"H"}, {}});
    p.blocks.push_back(Block{"J", {"T", "F"}, {}});
    latch = "J";
    body = {"T", "F", "J"};
    exit_pred = "J";
    break;
  default:
    p.blocks.push_back(Block{"L", {"H"}, {}});
    latch = "L";
    body = {"L"};
    exit_pred = "L";
    break;
  }
  p.find("H")->preds[1] = latch;
  p.blocks.push_back(Block{"exit", {exit_pred}, {}});

  std::size_t total = g.uniform(3, std::max<std::size_t>(opts.max_statements, 3));
  std::size_t loop_phis = g.uniform(1, 2);
  std::size_t rest = total - loop_phis;
  std::vector<std::string> slots;
  if (pre)
    slots.push_back("P");
  slots.push_back("H");
  for (const auto &b : body)
    slots.push_back(b);
  auto counts = spread(g, rest, slots.size());
  std::map<std::string, std::size_t> count;
  for (std::size_t i = 0; i < slots.size(); ++i)
    count[slots[i]] = counts[i];

  std::map<std::string, std::vector<std::string>> avail_out;
  avail_out["entry"] = {};
  if (pre) {
    std::vector<std::string> avail;
    g.fill(*p.find("P"), count["P"], avail);
    avail_out["P"] = avail;
  }

  // Loop phis; back-edge operands are chosen after the body exists.
  Block &header = *p.find("H");
  std::vector<std::string> avail = avail_out.at(fwd);
  for (std::size_t k = 0; k < loop_phis; ++k) {
    header.stmts.push_back(g.phi(g.phi_operand(avail_out.at(fwd)), ""));
    avail.push_back(header.stmts.back().target);
  }
  g.fill(header, count["H"], avail);
  avail_out["H"] = avail;

  for (const auto &id : body) {
    Block &b = *p.find(id);
    std::vector<std::string> cur = avail_out.at(b.preds[0]);
    if (b.is_join()) {
      cur = intersect(cur, avail_out.at(b.preds[1]));
      std::size_t phis = std::min<std::size_t>(count[id], g.uniform(0, 2));
      for (std::size_t k = 0; k < phis; ++k) {
        auto l = g.phi_operand(avail_out.at(b.preds[0]));
        auto r = g.phi_operand(avail_out.at(b.preds[1]));
        b.stmts.push_back(g.phi(l, r));
        cur.push_back(b.stmts.back().target);
      }
      count[id] -= phis;
    }
    g.fill(b, count[id], cur);
    avail_out[id] = std::move(cur);
  }

  for (std::size_t k = 0; k < loop_phis; ++k) {
    auto &phi = std::get<Phi>(header.stmts[k].rhs);
    phi.right = g.phi_operand(avail_out.at(latch));
  }
  return p;
}

Program diamond_chain(std::size_t k) {
  Program p;
  std::uint32_t id = 0;
  auto stmt = [&](std::string target, Rhs rhs) {
    Statement s;
    s.id = StmtId{id++};
    s.target = std::move(target);
    s.rhs = std::move(rhs);
    return s;
  };
  auto var = [](const std::string &n) { return Atom{Var{n}}; };

  p.blocks.push_back(Block{"entry", {}, {}});
  Block start{"D0", {"entry"}, {}};
  start.stmts.push_back(stmt("p0", BinOp{"+", var("x"), var("y")}));
  p.blocks.push_back(std::move(start));

  std::string prev_block = "D0";
  for (std::size_t i = 1; i <= k; ++i) {
    auto n = std::to_string(i);
    auto prev = "p" + std::to_string(i - 1);
    Block left{"L" + n, {prev_block}, {}};
    left.stmts.push_back(stmt("al" + n, BinOp{"+", var(prev), var("x")}));
    left.stmts.push_back(stmt("bl" + n, BinOp{"*", var(prev), var("y")}));
    left.stmts.push_back(
        stmt("sl" + n, BinOp{"+", var("al" + n), var("bl" + n)}));
    Block right{"R" + n, {prev_block}, {}};
    right.stmts.push_back(stmt("ar" + n, BinOp{"*", var(prev), var("x")}));
    right.stmts.push_back(stmt("br" + n, BinOp{"+", var(prev), var("y")}));
    right.stmts.push_back(
        stmt("sr" + n, BinOp{"+", var("ar" + n), var("br" + n)}));
    Block join{"J" + n, {"L" + n, "R" + n}, {}};
    join.stmts.push_back(stmt("a" + n, Phi{"al" + n, "ar" + n}));
    join.stmts.push_back(stmt("b" + n, Phi{"bl" + n, "br" + n}));
    join.stmts.push_back(stmt("s" + n, BinOp{"+", var("a" + n), var("b" + n)}));
    join.stmts.push_back(stmt("p" + n, Var{"s" + n}));
    p.blocks.push_back(std::move(left));
    p.blocks.push_back(std::move(right));
    p.blocks.push_back(std::move(join));
    prev_block = "J" + n;
  }
  p.blocks.push_back(Block{"exit", {prev_block}, {}});
  return p;
}

} // namespace vphi
