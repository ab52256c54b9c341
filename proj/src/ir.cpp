#include "vphi/ir.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <unordered_map>

namespace vphi {

// ---------------------------------------------------------------------------
// Program queries
// ---------------------------------------------------------------------------

const Block *Program::find(std::string_view id) const {
  for (const auto &b : blocks)
    if (b.id == id)
      return &b;
  return nullptr;
}

Block *Program::find(std::string_view id) {
  for (auto &b : blocks)
    if (b.id == id)
      return &b;
  return nullptr;
}

const Block &Program::block(std::string_view id) const {
  if (const auto *b = find(id))
    return *b;
  throw std::out_of_range("unknown block " + std::string(id));
}

std::vector<BlockId> Program::successors(std::string_view id) const {
  std::vector<BlockId> out;
  for (const auto &b : blocks)
    for (const auto &p : b.preds)
      if (p == id) {
        out.push_back(b.id);
        break;
      }
  return out;
}

std::optional<StatementRef> Program::find_statement(StmtId id) const {
  for (const auto &b : blocks)
    for (std::size_t i = 0; i < b.stmts.size(); ++i)
      if (b.stmts[i].id == id)
        return StatementRef{&b, i};
  return std::nullopt;
}

namespace {

void collect_uses(const Rhs &rhs, std::vector<std::string> &out) {
  std::visit(
      [&](const auto &r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Var>) {
          out.push_back(r.name);
        } else if constexpr (std::is_same_v<T, BinOp>) {
          for (const Atom *a : {&r.left, &r.right})
            if (const auto *v = std::get_if<Var>(a))
              out.push_back(v->name);
        } else if constexpr (std::is_same_v<T, Phi>) {
          out.push_back(r.left);
          out.push_back(r.right);
        }
      },
      rhs);
}

} // namespace

std::set<std::string> Program::inputs() const {
  std::set<std::string> defined;
  std::set<std::string> used;
  for (const auto &b : blocks)
    for (const auto &s : b.stmts) {
      defined.insert(s.target);
      std::vector<std::string> uses;
      collect_uses(s.rhs, uses);
      used.insert(uses.begin(), uses.end());
    }
  std::set<std::string> out;
  std::set_difference(used.begin(), used.end(), defined.begin(), defined.end(),
                      std::inserter(out, out.end()));
  return out;
}

StmtId Program::next_stmt_id() const {
  std::uint32_t next = 0;
  for (const auto &b : blocks)
    for (const auto &s : b.stmts)
      next = std::max(next, s.id.value + 1);
  return StmtId{next};
}

std::size_t Program::statement_count() const {
  std::size_t n = 0;
  for (const auto &b : blocks)
    n += b.stmts.size();
  return n;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

ParseError::ParseError(std::size_t line, std::size_t column,
                       const std::string &what)
    : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) +
                         ": " + what),
      line_(line), column_(column) {}

namespace {

enum class Tok { Name, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t column = 0;
};

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<Token> tokenize(std::string_view line, std::size_t lineno) {
  std::vector<Token> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (c == '#')
      break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.column = i + 1;
    if (is_name_start(c)) {
      std::size_t j = i;
      while (j < line.size() && is_name_char(line[j]))
        ++j;
      t.kind = Tok::Name;
      t.text = std::string(line.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j])))
        ++j;
      t.kind = Tok::Int;
      t.text = std::string(line.substr(i, j - i));
      i = j;
    } else if (std::ispunct(static_cast<unsigned char>(c))) {
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      ++i;
    } else {
      throw ParseError(lineno, i + 1,
                       "unexpected character '" + std::string(1, c) + "'");
    }
    toks.push_back(std::move(t));
  }
  Token end;
  end.column = line.size() + 1;
  toks.push_back(end);
  return toks;
}

class LineParser {
public:
  LineParser(std::vector<Token> toks, std::size_t lineno)
      : toks_(std::move(toks)), lineno_(lineno) {}

  const Token &peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token &next() {
    const Token &t = peek();
    if (pos_ < toks_.size() - 1)
      ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::End; }

  [[noreturn]] void fail(const std::string &msg) const {
    throw ParseError(lineno_, peek().column, msg);
  }

  std::string expect_name(const char *what) {
    if (peek().kind != Tok::Name)
      fail(std::string("expected ") + what);
    return next().text;
  }
  void expect_punct(char c) {
    if (peek().kind != Tok::Punct || peek().text[0] != c)
      fail(std::string("expected '") + c + "'");
    next();
  }
  bool accept_punct(char c) {
    if (peek().kind == Tok::Punct && peek().text[0] == c) {
      next();
      return true;
    }
    return false;
  }
  void expect_end() {
    if (!at_end())
      fail("unexpected '" + peek().text + "'");
  }

  std::int64_t parse_int(bool negative) {
    const Token &t = next();
    try {
      std::int64_t v = std::stoll(t.text);
      return negative ? -v : v;
    } catch (const std::out_of_range &) {
      throw ParseError(lineno_, t.column, "integer literal out of range");
    }
  }

  std::optional<Atom> try_atom() {
    if (peek().kind == Tok::Name)
      return Atom{Var{next().text}};
    if (peek().kind == Tok::Int)
      return Atom{Const{parse_int(false)}};
    if (peek().kind == Tok::Punct && peek().text == "-" &&
        peek(1).kind == Tok::Int) {
      next();
      return Atom{Const{parse_int(true)}};
    }
    return std::nullopt;
  }

  Atom expect_atom() {
    if (auto a = try_atom())
      return *a;
    fail("expected variable or integer");
  }

  std::vector<std::string> parse_preds() {
    std::vector<std::string> preds;
    preds.push_back(expect_name("predecessor block name"));
    while (accept_punct(','))
      preds.push_back(expect_name("predecessor block name"));
    return preds;
  }

  Rhs parse_rhs() {
    if (peek().kind == Tok::Name && peek().text == "phi" &&
        peek(1).kind == Tok::Punct && peek(1).text == "(") {
      next();
      next();
      Phi phi;
      phi.left = expect_name("phi operand");
      expect_punct(',');
      phi.right = expect_name("phi operand");
      expect_punct(')');
      return phi;
    }
    Atom left = expect_atom();
    if (at_end())
      return std::visit([](const auto &a) -> Rhs { return a; }, left);
    if (peek().kind != Tok::Punct)
      fail("expected operator");
    std::string op = peek().text;
    if (op == "," || op == "(" || op == ")" || op == "=" || op == ":")
      fail("'" + op + "' is not an operator");
    next();
    Atom right = expect_atom();
    return BinOp{std::move(op), std::move(left), std::move(right)};
  }

private:
  std::vector<Token> toks_;
  std::size_t lineno_;
  std::size_t pos_ = 0;
};

struct PendingPreds {
  std::size_t line;
  std::size_t column;
};

} // namespace

Program parse_program(std::string_view text) {
  Program program;
  program.blocks.clear();
  std::map<std::string, PendingPreds> where;
  std::uint32_t next_id = 0;
  bool preds_allowed = false;

  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;

    LineParser lp(tokenize(line, lineno), lineno);
    if (lp.at_end()) {
      if (end == text.size())
        break;
      continue;
    }

    if (lp.peek().kind == Tok::Name && lp.peek().text == "block" &&
        lp.peek(1).kind == Tok::Name) {
      lp.next();
      std::size_t col = lp.peek().column;
      Block b;
      b.id = lp.next().text;
      lp.expect_punct(':');
      if (where.count(b.id))
        throw ParseError(lineno, col, "duplicate block " + b.id);
      where[b.id] = {lineno, col};
      if (lp.peek().kind == Tok::Name && lp.peek().text == "preds") {
        lp.next();
        lp.expect_punct(':');
        b.preds = lp.parse_preds();
        preds_allowed = false;
      } else {
        preds_allowed = true;
      }
      lp.expect_end();
      program.blocks.push_back(std::move(b));
    } else if (lp.peek().kind == Tok::Name && lp.peek().text == "preds" &&
               lp.peek(1).kind == Tok::Punct && lp.peek(1).text == ":") {
      if (!preds_allowed)
        lp.fail("preds clause must directly follow the block header");
      lp.next();
      lp.next();
      program.blocks.back().preds = lp.parse_preds();
      lp.expect_end();
      preds_allowed = false;
    } else {
      if (program.blocks.empty())
        lp.fail("statement outside of a block");
      Statement s;
      s.target = lp.expect_name("assignment target");
      lp.expect_punct('=');
      s.rhs = lp.parse_rhs();
      lp.expect_end();
      s.id = StmtId{next_id++};
      program.blocks.back().stmts.push_back(std::move(s));
      preds_allowed = false;
    }
    if (end == text.size())
      break;
  }

  for (const auto &b : program.blocks)
    for (const auto &p : b.preds)
      if (!where.count(p)) {
        const auto &loc = where.at(b.id);
        throw ParseError(loc.line, loc.column,
                         "unknown block " + p + " in preds of " + b.id);
      }
  if (!where.count(program.entry_id))
    throw ParseError(1, 1, "missing block entry");
  if (!where.count(program.exit_id))
    throw ParseError(1, 1, "missing block exit");
  return program;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string render_atom(const Atom &atom) {
  if (const auto *v = std::get_if<Var>(&atom))
    return v->name;
  return std::to_string(std::get<Const>(atom).value);
}

std::string render_rhs(const Rhs &rhs) {
  return std::visit(
      [](const auto &r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Const>)
          return std::to_string(r.value);
        else if constexpr (std::is_same_v<T, Var>)
          return r.name;
        else if constexpr (std::is_same_v<T, BinOp>)
          return render_atom(r.left) + " " + r.op + " " + render_atom(r.right);
        else
          return "phi(" + r.left + ", " + r.right + ")";
      },
      rhs);
}

std::string render_statement(const Statement &stmt) {
  return stmt.target + " = " + render_rhs(stmt.rhs);
}

std::string render_program(const Program &program) {
  std::ostringstream os;
  for (const auto &b : program.blocks) {
    os << "block " << b.id << ":\n";
    if (!b.preds.empty()) {
      os << "  preds: ";
      for (std::size_t i = 0; i < b.preds.size(); ++i)
        os << (i ? ", " : "") << b.preds[i];
      os << "\n";
    }
    for (const auto &s : b.stmts) {
      os << "  " << render_statement(s);
      if (s.phi_origin)
        os << "  # phi " << *s.phi_origin;
      os << "\n";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Control flow helpers
// ---------------------------------------------------------------------------

std::vector<BlockId> reverse_postorder(const Program &program) {
  std::unordered_map<std::string, std::vector<BlockId>> succs;
  for (const auto &b : program.blocks)
    succs[b.id];
  for (const auto &b : program.blocks)
    for (const auto &p : b.preds) {
      auto &list = succs[p];
      if (std::find(list.begin(), list.end(), b.id) == list.end())
        list.push_back(b.id);
    }

  std::vector<BlockId> post;
  std::set<std::string> seen;
  if (!program.find(program.entry_id))
    return post;
  // Iterative DFS; each frame remembers the next successor to visit.
  std::vector<std::pair<BlockId, std::size_t>> stack;
  stack.emplace_back(program.entry_id, 0);
  seen.insert(program.entry_id);
  while (!stack.empty()) {
    auto &[id, next] = stack.back();
    const auto &list = succs[id];
    if (next < list.size()) {
      const BlockId &s = list[next++];
      if (seen.insert(s).second)
        stack.emplace_back(s, 0);
      continue;
    }
    post.push_back(id);
    stack.pop_back();
  }
  std::reverse(post.begin(), post.end());
  return post;
}

bool is_acyclic(const Program &program) {
  auto rpo = reverse_postorder(program);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < rpo.size(); ++i)
    index[rpo[i]] = i;
  for (const auto &b : program.blocks) {
    auto bi = index.find(b.id);
    if (bi == index.end())
      continue;
    for (const auto &p : b.preds) {
      auto pi = index.find(p);
      if (pi != index.end() && pi->second >= bi->second)
        return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string_view to_string(Violation v) {
  switch (v) {
  case Violation::DoubleAssignment:
    return "double-assignment";
  case Violation::UndefinedOnPath:
    return "undefined-on-path";
  case Violation::PhiOutsideJoin:
    return "phi-outside-join";
  case Violation::PhiNotLeading:
    return "phi-not-leading";
  case Violation::TooManyPreds:
    return "too-many-preds";
  case Violation::DuplicatePred:
    return "duplicate-pred";
  case Violation::NonEmptyEntryOrExit:
    return "non-empty-entry-or-exit";
  case Violation::EntryHasPreds:
    return "entry-has-preds";
  case Violation::Unreachable:
    return "unreachable";
  }
  return "unknown";
}

bool ValidationReport::contains(Violation kind, std::string_view where) const {
  return std::any_of(errors.begin(), errors.end(), [&](const auto &e) {
    return e.kind == kind && (where.empty() || e.where == where);
  });
}

std::string ValidationReport::render() const {
  std::ostringstream os;
  for (const auto &e : errors)
    os << e.where << ": " << to_string(e.kind) << ": " << e.message << "\n";
  return os.str();
}

namespace {

std::string stmt_where(const Statement &s) {
  return "s" + std::to_string(s.id.value);
}

} // namespace

ValidationReport validate_ssa(const Program &program) {
  ValidationReport report;
  auto add = [&](std::string where, Violation kind, std::string msg) {
    report.errors.push_back({std::move(where), kind, std::move(msg)});
  };

  // Block shape.
  for (const auto &b : program.blocks) {
    if (b.preds.size() > 2)
      add(b.id, Violation::TooManyPreds,
          b.id + " has " + std::to_string(b.preds.size()) + " predecessors");
    if (b.preds.size() == 2 && b.preds[0] == b.preds[1])
      add(b.id, Violation::DuplicatePred,
          b.id + " lists " + b.preds[0] + " twice");
    if (b.id == program.entry_id && !b.preds.empty())
      add(b.id, Violation::EntryHasPreds, "entry block has predecessors");
    if (b.id == program.entry_id || b.id == program.exit_id) {
      bool source_stmt = std::any_of(b.stmts.begin(), b.stmts.end(),
                                     [](const auto &s) { return !s.phi_origin; });
      if (source_stmt)
        add(b.id, Violation::NonEmptyEntryOrExit, b.id + " must be empty");
    }
    bool leading = true;
    for (const auto &s : b.stmts) {
      if (s.is_phi()) {
        if (!b.is_join())
          add(stmt_where(s), Violation::PhiOutsideJoin,
              "phi for " + s.target + " in " + b.id +
                  ", which is not a join block");
        if (!leading)
          add(stmt_where(s), Violation::PhiNotLeading,
              "phi for " + s.target + " follows a non-phi statement");
      } else {
        leading = false;
      }
    }
  }

  auto rpo = reverse_postorder(program);
  std::set<std::string> reachable(rpo.begin(), rpo.end());
  for (const auto &b : program.blocks)
    if (!reachable.count(b.id))
      add(b.id, Violation::Unreachable, b.id + " is unreachable from entry");

  // Single assignment. Lowered phi copies of one join may share a target.
  std::map<std::string, std::vector<std::pair<const Block *, const Statement *>>>
      defs;
  for (const auto &b : program.blocks)
    for (const auto &s : b.stmts)
      defs[s.target].emplace_back(&b, &s);
  for (const auto &[name, list] : defs) {
    if (list.size() < 2)
      continue;
    bool copies = std::all_of(list.begin(), list.end(), [&](const auto &d) {
      return d.second->phi_origin &&
             *d.second->phi_origin == *list.front().second->phi_origin;
    });
    std::set<std::string> blocks;
    for (const auto &d : list)
      blocks.insert(d.first->id);
    if (copies && blocks.size() == list.size() && list.size() <= 2)
      continue;
    for (std::size_t i = 1; i < list.size(); ++i)
      add(stmt_where(*list[i].second), Violation::DoubleAssignment,
          name + " is assigned more than once");
  }

  // Definite definition on every path: intersect over predecessors.
  const auto inputs = program.inputs();
  std::set<std::string> universe;
  for (const auto &[name, list] : defs)
    universe.insert(name);
  std::map<std::string, std::set<std::string>> out;
  for (const auto &id : rpo)
    out[id] = id == program.entry_id ? std::set<std::string>{} : universe;

  auto block_in = [&](const Block &b) {
    std::set<std::string> in;
    bool first = true;
    for (const auto &p : b.preds) {
      auto it = out.find(p);
      if (it == out.end())
        continue;
      if (first) {
        in = it->second;
        first = false;
      } else {
        std::set<std::string> tmp;
        std::set_intersection(in.begin(), in.end(), it->second.begin(),
                              it->second.end(), std::inserter(tmp, tmp.end()));
        in = std::move(tmp);
      }
    }
    return in;
  };

  for (bool changed = true; changed;) {
    changed = false;
    for (const auto &id : rpo) {
      const Block &b = program.block(id);
      auto cur = id == program.entry_id ? std::set<std::string>{} : block_in(b);
      for (const auto &s : b.stmts)
        cur.insert(s.target);
      if (cur != out[id]) {
        out[id] = std::move(cur);
        changed = true;
      }
    }
  }

  for (const auto &id : rpo) {
    const Block &b = program.block(id);
    auto cur = id == program.entry_id ? std::set<std::string>{} : block_in(b);
    auto check = [&](const Statement &s, const std::string &use,
                     const std::set<std::string> &avail,
                     const std::string &where_defined) {
      if (inputs.count(use) || avail.count(use))
        return;
      add(stmt_where(s), Violation::UndefinedOnPath,
          use + " is not defined on every path to " + where_defined);
    };
    for (const auto &s : b.stmts) {
      if (const auto *phi = std::get_if<Phi>(&s.rhs)) {
        if (b.is_join()) {
          const std::string *ops[2] = {&phi->left, &phi->right};
          for (std::size_t k = 0; k < 2; ++k) {
            auto it = out.find(b.preds[k]);
            if (it != out.end())
              check(s, *ops[k], it->second, "the end of " + b.preds[k]);
          }
        }
      } else {
        std::vector<std::string> uses;
        collect_uses(s.rhs, uses);
        for (const auto &u : uses)
          check(s, u, cur, s.target);
      }
      cur.insert(s.target);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Phi lowering
// ---------------------------------------------------------------------------

Program lower_phis(const Program &program) {
  Program out = program;
  std::uint32_t next = program.next_stmt_id().value;
  for (const auto &b : program.blocks) {
    if (!b.is_join())
      continue;
    std::vector<Statement> kept;
    std::vector<Statement> copies[2];
    for (const auto &s : out.find(b.id)->stmts) {
      const auto *phi = std::get_if<Phi>(&s.rhs);
      if (!phi) {
        kept.push_back(s);
        continue;
      }
      const std::string *ops[2] = {&phi->left, &phi->right};
      for (std::size_t k = 0; k < 2; ++k) {
        Statement copy;
        copy.id = StmtId{next++};
        copy.target = s.target;
        copy.rhs = Var{*ops[k]};
        copy.phi_origin = b.id;
        copies[k].push_back(std::move(copy));
      }
    }
    // A self-loop join appends copies to itself, so replace first.
    out.find(b.id)->stmts = std::move(kept);
    for (std::size_t k = 0; k < 2; ++k) {
      auto &dst = out.find(b.preds[k])->stmts;
      dst.insert(dst.end(), copies[k].begin(), copies[k].end());
    }
  }
  return out;
}

} // namespace vphi
