#include "vphi/cli.hpp"

#include "vphi/generate.hpp"
#include "vphi/oracle.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace vphi {

namespace {

std::string escape_dot(const std::string &s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\')
      out += '\\';
    out += c;
  }
  return out;
}

nlohmann::json reason_to_json(const Redundancy &r, const VnNamer &namer) {
  if (const auto *v = std::get_if<EquivalentVariable>(&r.reason))
    return {{"kind", "variable"}, {"var", v->name}};
  return {{"kind", "value-phi"},
          {"vpf", vpf_to_json(std::get<ValuePhiWitness>(r.reason).vpf, namer)}};
}

std::string reason_to_text(const Redundancy &r, const VnNamer &namer) {
  if (const auto *v = std::get_if<EquivalentVariable>(&r.reason))
    return "same value as " + v->name;
  return "merge " + render_vpf(std::get<ValuePhiWitness>(r.reason).vpf, namer);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t path_cap(const RunConfig &cfg) {
  if (cfg.path_cap)
    return *cfg.path_cap;
  if (const char *env = std::getenv("VPHI_PATH_CAP"))
    return static_cast<std::size_t>(std::stoull(env));
  return OracleOptions{}.path_cap;
}

/// Parses and validates; fills `err` and returns nothing on failure.
std::optional<Program> load(const std::string &path, RunResult &res) {
  Program program;
  try {
    program = parse_program(read_file(path));
  } catch (const ParseError &e) {
    res.err = path + ":" + e.what() + "\n";
    return std::nullopt;
  } catch (const std::runtime_error &e) {
    res.err = std::string(e.what()) + "\n";
    return std::nullopt;
  }
  auto report = validate_ssa(program);
  if (!report.ok()) {
    res.err = report.render();
    return std::nullopt;
  }
  return program;
}

RunResult analyze(const RunConfig &cfg) {
  RunResult res;
  auto program = load(cfg.input_path, res);
  if (!program) {
    res.exit_code = exit_code::invalid;
    return res;
  }
  FixpointOptions fo;
  fo.max_sweeps = cfg.max_iters;
  AnalysisState st = run_fixpoint(*program, fo);
  res.out = render_analysis(*program, st, cfg.format, cfg.dump);
  if (cfg.dot_path) {
    std::ofstream dot(*cfg.dot_path, std::ios::binary);
    if (!dot) {
      res.err = "cannot write " + *cfg.dot_path + "\n";
      res.exit_code = exit_code::invalid;
      return res;
    }
    dot << render_dot(*program, st);
  }
  return res;
}

RunResult check(const RunConfig &cfg) {
  RunResult res;
  DifferentialOptions opts;
  opts.oracle.unroll = cfg.unroll;
  opts.oracle.path_cap = path_cap(cfg);
  opts.max_sweeps = cfg.max_iters;

  std::ostringstream out;
  std::size_t mismatches = 0;
  std::size_t programs = 0;
  std::size_t missed_eq = 0, missed_red = 0, pairs = 0, oracle_red = 0;

  auto one = [&](const Program &p, std::optional<std::uint64_t> seed) {
    opts.exact = is_acyclic(p);
    auto result = differential_check(p, opts);
    ++programs;
    pairs += result.pairs_checked;
    oracle_red += result.oracle_redundancies;
    missed_eq += result.missed_equivalences;
    missed_red += result.missed_redundancies;
    for (const auto &m : result.mismatches) {
      std::string line = m.to_json_line();
      if (seed) {
        auto j = nlohmann::json::parse(line);
        j["seed"] = *seed;
        line = j.dump();
      }
      out << line << "\n";
      ++mismatches;
    }
  };

  if (!cfg.random && !cfg.input_path.empty()) {
    auto program = load(cfg.input_path, res);
    if (!program) {
      res.exit_code = exit_code::invalid;
      return res;
    }
    one(*program, std::nullopt);
  } else {
    for (std::uint64_t seed = 0; seed < cfg.seeds; ++seed)
      one(cfg.acyclic ? random_acyclic_program(seed)
                      : random_loop_program(seed),
          seed);
  }
  out << "programs: " << programs << ", pairs: " << pairs
      << ", oracle redundancies: " << oracle_red
      << ", missed equivalences: " << missed_eq
      << ", missed redundancies: " << missed_red << "\n";
  out << mismatches << " mismatches\n";
  res.out = out.str();
  res.exit_code = mismatches == 0 ? exit_code::ok : exit_code::mismatch;
  return res;
}

RunResult stress(const RunConfig &cfg) {
  RunResult res;
  Program program = diamond_chain(cfg.diamonds);
  FixpointOptions fo;
  fo.max_sweeps = cfg.max_iters;
  auto start = std::chrono::steady_clock::now();
  AnalysisState st = run_fixpoint(program, fo);
  auto report = detect_redundancies(program, st);
  double ms = std::chrono::duration<double, std::milli>(
                  std::chrono::steady_clock::now() - start)
                  .count();
  std::size_t max_classes = 0, total = 0;
  for (const auto &[id, p] : st.pout) {
    max_classes = std::max(max_classes, p.size());
    total += p.size();
  }
  for (const auto &[id, p] : st.block_out) {
    max_classes = std::max(max_classes, p.size());
    total += p.size();
  }
  if (cfg.format == Format::Json) {
    nlohmann::json j{{"diamonds", cfg.diamonds},
                     {"blocks", program.blocks.size()},
                     {"statements", program.statement_count()},
                     {"max_classes", max_classes},
                     {"total_classes", total},
                     {"sweeps", st.iterations},
                     {"redundant", report.entries.size()},
                     {"wall_ms", ms}};
    res.out = j.dump() + "\n";
  } else {
    std::ostringstream os;
    os << "diamonds: " << cfg.diamonds << "\n"
       << "blocks: " << program.blocks.size() << "\n"
       << "statements: " << program.statement_count() << "\n"
       << "max classes: " << max_classes << "\n"
       << "total classes: " << total << "\n"
       << "sweeps: " << st.iterations << "\n"
       << "redundant: " << report.entries.size() << "\n"
       << "wall ms: " << std::fixed << std::setprecision(3) << ms << "\n";
    res.out = os.str();
  }
  return res;
}

} // namespace

std::string render_dot(const Program &program, const AnalysisState &st) {
  auto report = detect_redundancies(program, st);
  std::ostringstream os;
  os << "digraph cfg {\n  node [shape=box, fontname=\"monospace\"];\n";
  for (const auto &b : program.blocks) {
    std::string label = b.id + "\\l";
    for (const auto &s : b.stmts) {
      label += escape_dot(render_statement(s));
      if (report.contains(s.id))
        label += " [REDUNDANT]";
      label += "\\l";
    }
    os << "  \"" << escape_dot(b.id) << "\" [label=\"" << label << "\"];\n";
  }
  for (const auto &b : program.blocks)
    for (const auto &p : b.preds)
      os << "  \"" << escape_dot(p) << "\" -> \"" << escape_dot(b.id)
         << "\";\n";
  os << "}\n";
  return os.str();
}

std::string render_analysis(const Program &program, const AnalysisState &st,
                            Format format, Dump dump) {
  Renumbering renumber;
  VnNamer namer = renumber.namer();
  auto report = detect_redundancies(program, st);
  auto partition_at = [&](const std::map<BlockId, Partition> &m,
                          const BlockId &id) {
    auto it = m.find(id);
    return it == m.end() ? Partition::top() : it->second;
  };

  if (format == Format::Json) {
    nlohmann::json j;
    if (dump == Dump::AllPoints) {
      nlohmann::json points = nlohmann::json::array();
      for (const auto &b : program.blocks)
        points.push_back(
            {{"block", b.id},
             {"in", partition_to_json(partition_at(st.block_in, b.id), namer)},
             {"out",
              partition_to_json(partition_at(st.block_out, b.id), namer)}});
      j["points"] = std::move(points);
    }
    nlohmann::json entries = nlohmann::json::array();
    for (const auto &r : report.entries)
      entries.push_back({{"stmt", r.stmt.value},
                         {"block", r.block},
                         {"target", r.target},
                         {"expr", r.expression},
                         {"reason", reason_to_json(r, namer)}});
    j["redundancies"] = std::move(entries);
    j["sweeps"] = st.iterations;
    return j.dump(2) + "\n";
  }

  std::ostringstream os;
  if (dump == Dump::AllPoints) {
    for (const auto &b : program.blocks) {
      os << "block " << b.id << ":\n";
      os << "  in:  " << render_partition(partition_at(st.block_in, b.id), namer)
         << "\n";
      os << "  out: "
         << render_partition(partition_at(st.block_out, b.id), namer) << "\n";
    }
  }
  os << "redundant: " << report.entries.size() << "\n";
  for (const auto &r : report.entries)
    os << "  s" << r.stmt.value << " " << r.block << ": " << r.target << " = "
       << r.expression << "  (" << reason_to_text(r, namer) << ")\n";
  os << "sweeps: " << st.iterations << "\n";
  return os.str();
}

RunResult run(const RunConfig &cfg) {
  try {
    switch (cfg.command) {
    case Command::Analyze:
      return analyze(cfg);
    case Command::Check:
      return check(cfg);
    case Command::Stress:
      return stress(cfg);
    }
  } catch (const ConvergenceError &e) {
    return {exit_code::no_convergence, {}, std::string(e.what()) + "\n"};
  } catch (const PathCapExceeded &e) {
    return {exit_code::path_cap, {}, std::string(e.what()) + "\n"};
  }
  return {exit_code::invalid, {}, "unknown command\n"};
}

} // namespace vphi
