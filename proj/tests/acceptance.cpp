// Acceptance runner: one [PASS]/[FAIL] line per criterion.
#include "support.hpp"

#include "vphi/analysis.hpp"
#include "vphi/cli.hpp"
#include "vphi/generate.hpp"
#include "vphi/oracle.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

using namespace vphi;
using namespace vphi::test;

namespace {

// Pinned thresholds.
constexpr double kJoinBudgetSeconds = 1.0;
constexpr std::size_t kAcyclicSeeds = 500;
constexpr std::size_t kLoopSeeds = 100;
constexpr std::size_t kLoopUnroll = 3;
constexpr double kCampaignBudgetSeconds = 60.0;
constexpr std::size_t kSweepSlack = 2; // sweeps <= |blocks| + 2
constexpr double kLinearSlopeFactor = 1.5;
constexpr double kStressBudgetSeconds = 5.0;
constexpr std::size_t kStressSizes[] = {4, 8, 16, 32};
constexpr std::size_t kPropertySeeds = 200;
constexpr std::size_t kTriplesPerPoint = 20;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string &why) {
    if (pass)
      detail = why;
    pass = false;
  }
};

int failures = 0;

void report(int n, const std::string &name, const Outcome &o) {
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << n << ". " << name;
  if (!o.detail.empty())
    std::cout << ": " << o.detail;
  std::cout << std::endl;
  if (!o.pass)
    ++failures;
}

std::map<ValueNumber, ValueNumber> identity(std::uint32_t from,
                                            std::uint32_t to) {
  std::map<ValueNumber, ValueNumber> m;
  for (std::uint32_t i = from; i <= to; ++i)
    m[{i}] = {i};
  return m;
}

Outcome join_golden() {
  Outcome o;
  auto start = Clock::now();
  Allocator a;
  a.reserve({10});
  Partition got = join(join_example_p1(), join_example_p2(), "B", a);
  double secs = seconds_since(start);
  IsoOptions iso;
  iso.fixed = identity(1, 6);
  if (!isomorphic(got, join_example_expected(), iso))
    o.fail("got " + render_partition(got));
  if (secs >= kJoinBudgetSeconds)
    o.fail("took " + std::to_string(secs) + " s");
  if (o.pass)
    o.detail = render_partition(got);
  return o;
}

Outcome transfer_golden() {
  Outcome o;
  Program lowered = lower_phis(load_sample("e1.ir"));
  AnalysisState st = transfer_example_state(lowered);
  Partition pin = transfer_example_pin();
  auto ref = lowered.find_statement(stmt_defining(lowered, "w3"));
  auto vpf = value_phi_func({"+", {7}, {8}}, pin, st);
  auto expected_vpf = parse_partition("{v9, w3 : phi.B3(v3,v6)}").classes()[0].vpf;
  if (!vpf || *vpf != *expected_vpf)
    o.fail("value phi-function " + (vpf ? render_vpf(*vpf) : "none"));
  Partition out = transfer(ref->stmt(), pin, st);
  IsoOptions iso;
  iso.fixed = identity(1, 8);
  Partition expected = parse_partition(
      "{v7, x3 : phi.B3(v1,v4) | v8, y3 : phi.B3(v2,v5) | "
      "v9, w3, v7+v8 : phi.B3(v3,v6)}");
  if (!isomorphic(out, expected, iso))
    o.fail("POUT " + render_partition(out));
  if (o.pass)
    o.detail = render_partition(out);
  return o;
}

Outcome detection_golden() {
  Outcome o;
  for (auto [sample, want] : {std::pair{"e1.ir", true}, {"e1_mul.ir", false}}) {
    Program p = load_sample(sample);
    AnalysisState st = run_fixpoint(p);
    auto report = detect_redundancies(p, st);
    const Redundancy *r = report.find(stmt_defining(p, "w3"));
    bool phi_witness = r && std::holds_alternative<ValuePhiWitness>(r->reason);
    if (want && !phi_witness)
      o.fail(std::string(sample) + ": w3 not reported via a value phi-function");
    if (!want && r)
      o.fail(std::string(sample) + ": w3 reported");
    if (!want && oracle_redundant(lower_phis(p), stmt_defining(p, "w3")))
      o.fail(std::string(sample) + ": oracle disagrees with the mutation");
  }
  if (o.pass)
    o.detail = "E1 reported, mutated E1 not reported";
  return o;
}

struct Campaign {
  std::size_t programs = 0, mismatches = 0, pairs = 0, redundancies = 0,
              missed_eq = 0, missed_red = 0;
  double seconds = 0;
  std::string first;
};

Campaign campaign(bool acyclic, std::size_t seeds, std::size_t unroll) {
  Campaign c;
  auto start = Clock::now();
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    Program p = acyclic ? random_acyclic_program(seed) : random_loop_program(seed);
    DifferentialOptions opts;
    opts.exact = acyclic;
    opts.oracle.unroll = unroll;
    auto r = differential_check(p, opts);
    ++c.programs;
    c.pairs += r.pairs_checked;
    c.redundancies += r.oracle_redundancies;
    c.missed_eq += r.missed_equivalences;
    c.missed_red += r.missed_redundancies;
    if (!r.mismatches.empty() && c.first.empty())
      c.first = "seed " + std::to_string(seed) + " " +
                r.mismatches.front().to_json_line();
    c.mismatches += r.mismatches.size();
  }
  c.seconds = seconds_since(start);
  return c;
}

Outcome differential() {
  Outcome o;
  Campaign acyclic = campaign(true, kAcyclicSeeds, kLoopUnroll);
  Campaign loops = campaign(false, kLoopSeeds, kLoopUnroll);
  if (acyclic.mismatches)
    o.fail(std::to_string(acyclic.mismatches) + " acyclic mismatches, " +
           acyclic.first);
  if (acyclic.seconds >= kCampaignBudgetSeconds)
    o.fail("acyclic campaign took " + std::to_string(acyclic.seconds) + " s");
  if (loops.mismatches)
    o.fail(std::to_string(loops.mismatches) + " loop soundness violations, " +
           loops.first);
  std::ostringstream os;
  os << acyclic.programs << " acyclic programs, " << acyclic.pairs
     << " pairs, " << acyclic.redundancies << " redundancies, "
     << acyclic.mismatches << " mismatches in " << acyclic.seconds << " s; "
     << loops.programs << " loop programs, " << loops.mismatches
     << " soundness violations, completeness gaps: " << loops.missed_eq
     << " equivalences, " << loops.missed_red << " redundancies";
  if (o.pass)
    o.detail = os.str();
  else
    o.detail += " (" + os.str() + ")";
  return o;
}

std::vector<Program> corpus() {
  std::vector<Program> programs;
  for (const char *s : {"e1.ir", "e1_mul.ir", "e2.ir", "straight.ir", "empty.ir"})
    programs.push_back(load_sample(s));
  for (std::uint64_t seed = 0; seed < kAcyclicSeeds; ++seed)
    programs.push_back(random_acyclic_program(seed));
  for (std::uint64_t seed = 0; seed < kLoopSeeds; ++seed)
    programs.push_back(random_loop_program(seed));
  for (std::size_t k : kStressSizes)
    programs.push_back(diamond_chain(k));
  return programs;
}

Outcome termination(const std::vector<Program> &programs) {
  Outcome o;
  std::size_t worst_slack = SIZE_MAX, max_sweeps = 0;
  for (std::size_t i = 0; i < programs.size(); ++i) {
    const Program &p = programs[i];
    std::size_t cap = p.blocks.size() + kSweepSlack;
    try {
      FixpointOptions opts;
      opts.max_sweeps = cap;
      AnalysisState st = run_fixpoint(p, opts);
      max_sweeps = std::max(max_sweeps, st.iterations);
      worst_slack = std::min(worst_slack, cap - st.iterations);
      if (st.iterations > cap)
        o.fail("corpus program " + std::to_string(i) + " took " +
               std::to_string(st.iterations) + " sweeps");
    } catch (const ConvergenceError &e) {
      o.fail("corpus program " + std::to_string(i) + ": " + e.what());
    }
  }
  if (o.pass)
    o.detail = std::to_string(programs.size()) + " programs, max sweeps " +
               std::to_string(max_sweeps) + ", least headroom " +
               std::to_string(worst_slack);
  return o;
}

Outcome stress() {
  Outcome o;
  std::vector<double> xs, ys;
  std::ostringstream os;
  double k32_seconds = 0;
  for (std::size_t k : kStressSizes) {
    Program p = diamond_chain(k);
    auto start = Clock::now();
    AnalysisState st = run_fixpoint(p);
    detect_redundancies(p, st);
    double secs = seconds_since(start);
    if (k == 32)
      k32_seconds = secs;
    std::size_t max_classes = 0;
    for (const auto &[id, part] : st.pout)
      max_classes = std::max(max_classes, part.size());
    for (const auto &[id, part] : st.block_out)
      max_classes = std::max(max_classes, part.size());
    xs.push_back(std::log(static_cast<double>(p.statement_count())));
    ys.push_back(std::log(static_cast<double>(max_classes)));
    os << "k=" << k << ":" << max_classes << " ";
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  double slope = num / den;
  if (slope > kLinearSlopeFactor || slope < 1.0 / kLinearSlopeFactor)
    o.fail("log-log slope " + std::to_string(slope));
  if (k32_seconds >= kStressBudgetSeconds)
    o.fail("k=32 took " + std::to_string(k32_seconds) + " s");
  os << "slope " << slope << ", k=32 in " << k32_seconds << " s";
  if (o.pass)
    o.detail = os.str();
  else
    o.detail += " (" + os.str() + ")";
  return o;
}

std::vector<Rhs> candidate_rhs(const Program &p, std::size_t count,
                               std::mt19937_64 &rng) {
  std::vector<Atom> atoms;
  for (const auto &name : p.inputs())
    atoms.push_back(Var{name});
  for (const auto &b : p.blocks)
    for (const auto &s : b.stmts)
      atoms.push_back(Var{s.target});
  atoms.push_back(Const{1});
  std::vector<Rhs> out;
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    if (rng() % 2)
      out.push_back(BinOp{rng() % 2 ? "+" : "*", atoms[pick(rng)], atoms[pick(rng)]});
    else if (auto *v = std::get_if<Var>(&atoms[pick(rng)]))
      out.push_back(*v);
    else
      out.push_back(Const{1});
  }
  return out;
}

/// Only names bound on every path can be compared at a point.
bool defined_everywhere(const std::vector<PathEnv> &paths, const Rhs &rhs,
                        const std::set<std::string> &inputs) {
  auto ok = [&](const Atom &a) {
    const auto *v = std::get_if<Var>(&a);
    if (!v || inputs.count(v->name))
      return true;
    for (const auto &env : paths)
      if (!env.bindings.count(v->name))
        return false;
    return true;
  };
  if (const auto *v = std::get_if<Var>(&rhs))
    return ok(Atom{*v});
  if (const auto *b = std::get_if<BinOp>(&rhs))
    return ok(b->left) && ok(b->right);
  return true;
}

Outcome invariants() {
  Outcome o;
  std::size_t partitions = 0, joins = 0, triples = 0;
  std::mt19937_64 rng(20261016);
  for (std::uint64_t seed = 0; seed < kPropertySeeds && o.pass; ++seed) {
    for (bool acyclic : {true, false}) {
      Program p = acyclic ? random_acyclic_program(seed) : random_loop_program(seed);
      Program lowered = lower_phis(p);
      AnalysisState st = run_fixpoint(p);

      // Disjointness at every point.
      auto check = [&](const Partition &part, const std::string &where) {
        ++partitions;
        if (auto err = check_invariants(part))
          o.fail("seed " + std::to_string(seed) + " " + where + ": " + *err);
      };
      for (const auto &[id, part] : st.pout)
        check(part, "s" + std::to_string(id.value));
      for (const auto &[id, part] : st.block_in)
        check(part, id + " in");

      // Join idempotence and commutativity on the real predecessor outs.
      for (const auto &[k, info] : st.joins) {
        if (info.kind != JoinKind::Forward)
          continue;
        const Partition &l = st.block_out.at(info.preds[0]);
        const Partition &r = st.block_out.at(info.preds[1]);
        // A fresh allocator keeps numbers minted by the fixpoint (which
        // annotations inside the loop may mention) out of the comparison.
        Allocator a;
        std::uint32_t top = 0;
        for (const Partition *part : {&l, &r})
          visit_value_numbers(*part, [&](ValueNumber vn) {
            top = std::max(top, vn.index);
          });
        a.reserve({top});
        ++joins;
        if (normalize(join(l, l, k, a)) != normalize(l))
          o.fail("seed " + std::to_string(seed) + ": join not idempotent at " + k);
        IsoOptions iso;
        iso.swap_block = k;
        if (!isomorphic(join(r, l, k, a), join(l, r, k, a), iso))
          o.fail("seed " + std::to_string(seed) + ": join not commutative at " + k);
      }

      // Allocator determinism: reruns render byte-identically.
      std::string first = render_analysis(p, st, Format::Json, Dump::AllPoints);
      std::string second =
          render_analysis(p, run_fixpoint(p), Format::Json, Dump::AllPoints);
      if (first != second)
        o.fail("seed " + std::to_string(seed) + ": reruns differ");

      // Oracle equivalence is an equivalence relation.
      for (const auto &b : lowered.blocks) {
        ProgramPoint pt = out_point(lowered, b.id);
        auto paths = enumerate_paths(lowered, pt, {kLoopUnroll, 4096});
        if (paths.empty())
          continue;
        auto inputs = lowered.inputs();
        std::vector<Rhs> rhs;
        for (auto &r : candidate_rhs(lowered, 3 * kTriplesPerPoint, rng))
          if (defined_everywhere(paths, r, inputs))
            rhs.push_back(r);
        auto eq = [&](const Rhs &x, const Rhs &y) {
          for (const auto &env : paths)
            if (!(herbrand_term(env, x) == herbrand_term(env, y)))
              return false;
          return true;
        };
        for (std::size_t i = 0; i + 2 < rhs.size(); i += 3) {
          const Rhs &x = rhs[i], &y = rhs[i + 1], &z = rhs[i + 2];
          ++triples;
          bool ok = oracle_equivalent(lowered, pt, x, x, {kLoopUnroll, 4096}) &&
                    eq(x, y) == eq(y, x) && (!(eq(x, y) && eq(y, z)) || eq(x, z)) &&
                    oracle_equivalent(lowered, pt, x, y, {kLoopUnroll, 4096}) ==
                        eq(x, y);
          if (!ok)
            o.fail("seed " + std::to_string(seed) + ": relation broken at " + b.id);
        }
      }
    }
  }
  if (o.pass)
    o.detail = std::to_string(partitions) + " partitions, " +
               std::to_string(joins) + " joins, " + std::to_string(triples) +
               " oracle triples";
  return o;
}

template <class F> Outcome guarded(F f) {
  try {
    return f();
  } catch (const std::exception &e) {
    Outcome o;
    o.fail(std::string("exception: ") + e.what());
    return o;
  }
}

} // namespace

int main() {
  report(1, "join golden", guarded(join_golden));
  report(2, "transfer golden", guarded(transfer_golden));
  report(3, "detection golden", guarded(detection_golden));
  report(4, "differential campaign", guarded(differential));
  report(5, "termination bound", guarded([] { return termination(corpus()); }));
  report(6, "diamond stress", guarded(stress));
  report(7, "invariant properties", guarded(invariants));
  std::cout << (failures ? std::to_string(failures) + " criteria failed"
                         : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
