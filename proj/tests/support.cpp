#include "support.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef VPHI_SAMPLES
#define VPHI_SAMPLES "samples"
#endif

namespace vphi::test {

std::string read_sample(const std::string &name) {
  std::ifstream in(std::string(VPHI_SAMPLES) + "/" + name, std::ios::binary);
  if (!in)
    throw std::runtime_error("missing sample " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program load_sample(const std::string &name) {
  return parse_program(read_sample(name));
}

namespace {

class PartitionReader {
public:
  explicit PartitionReader(const std::string &text) : s_(text) {}

  Partition read() {
    skip();
    if (s_.compare(pos_, 3, "TOP") == 0)
      return Partition::top();
    expect('{');
    Partition p;
    skip();
    if (peek() == '}')
      return p;
    for (;;) {
      p.insert(read_class());
      skip();
      if (peek() == '}')
        break;
      expect('|');
    }
    return p;
  }

private:
  Class read_class() {
    Class c;
    c.vn = read_vn();
    skip();
    while (peek() == ',') {
      ++pos_;
      skip();
      if (peek() == 'v' && pos_ + 1 < s_.size() &&
          std::isdigit(static_cast<unsigned char>(s_[pos_ + 1]))) {
        ValueNumber l = read_vn();
        std::string op(1, s_[pos_++]);
        c.exprs.insert({op, l, read_vn()});
      } else if (std::isdigit(static_cast<unsigned char>(peek())) ||
                 peek() == '-') {
        std::size_t used = 0;
        c.consts.insert(std::stoll(s_.substr(pos_), &used));
        pos_ += used;
      } else {
        c.vars.insert(read_name());
      }
      skip();
    }
    if (peek() == ':') {
      ++pos_;
      skip();
      c.vpf = read_vpf();
    }
    return c;
  }

  ValuePhiFunction read_vpf() {
    if (s_.compare(pos_, 4, "phi.") != 0)
      throw std::invalid_argument("expected phi at " + std::to_string(pos_));
    pos_ += 4;
    BlockId block = read_name();
    expect('(');
    VpfOperand l = read_operand();
    expect(',');
    VpfOperand r = read_operand();
    expect(')');
    return {block, l, r};
  }

  VpfOperand read_operand() {
    skip();
    if (peek() == 'p')
      return read_vpf();
    return read_vn();
  }

  ValueNumber read_vn() {
    skip();
    expect('v');
    std::size_t used = 0;
    auto n = std::stoul(s_.substr(pos_), &used);
    pos_ += used;
    return {static_cast<std::uint32_t>(n)};
  }

  std::string read_name() {
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '_'))
      ++pos_;
    if (start == pos_)
      throw std::invalid_argument("expected name at " + std::to_string(pos_));
    return s_.substr(start, pos_ - start);
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  void expect(char c) {
    skip();
    if (peek() != c)
      throw std::invalid_argument(std::string("expected '") + c + "' at " +
                                  std::to_string(pos_) + " in " + s_);
    ++pos_;
    skip();
  }

  std::string s_;
  std::size_t pos_ = 0;
};

using VnMap = std::map<ValueNumber, ValueNumber>;

struct Matcher {
  const IsoOptions &opts;
  VnMap fwd, back;

  bool bind(ValueNumber a, ValueNumber e) {
    auto f = fwd.find(a);
    auto b = back.find(e);
    if (f != fwd.end() || b != back.end())
      return f != fwd.end() && b != back.end() && f->second == e &&
             b->second == a;
    fwd[a] = e;
    back[e] = a;
    return true;
  }

  bool operand(const VpfOperand &a, const VpfOperand &e) {
    if (a.is_value_number() != e.is_value_number())
      return false;
    if (a.is_value_number())
      return bind(a.value_number(), e.value_number());
    return vpf(a.phi(), e.phi());
  }

  bool vpf(const ValuePhiFunction &a, const ValuePhiFunction &e) {
    if (a.block != e.block)
      return false;
    if (opts.swap_block && a.block == *opts.swap_block)
      return operand(a.left, e.right) && operand(a.right, e.left);
    return operand(a.left, e.left) && operand(a.right, e.right);
  }

  bool cls(const Class &a, const Class &e) {
    if (a.vars != e.vars || a.consts != e.consts ||
        a.exprs.size() != e.exprs.size() || a.vpf.has_value() != e.vpf.has_value())
      return false;
    if (!bind(a.vn, e.vn))
      return false;
    if (a.vpf && !vpf(*a.vpf, *e.vpf))
      return false;
    return true;
  }

  /// Expressions are matched once every class is bound, since they may
  /// mention value numbers of classes matched later.
  bool exprs(const Partition &actual, const Partition &expected,
             const std::vector<std::size_t> &assign) {
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const Class &e = expected.classes()[i];
      const Class &a = actual.classes()[assign[i]];
      std::set<ValueExpression> mapped;
      for (const auto &ve : a.exprs) {
        ValueExpression m{ve.op, ve.left, ve.right};
        for (ValueNumber *vn : {&m.left, &m.right}) {
          auto it = fwd.find(*vn);
          if (it != fwd.end())
            *vn = it->second;
          else if (!bind(*vn, *vn))
            return false;
        }
        mapped.insert(m);
      }
      if (mapped != e.exprs)
        return false;
    }
    return true;
  }
};

bool search(Matcher m, const Partition &actual, const Partition &expected,
            std::vector<std::size_t> &assign, std::vector<bool> &used) {
  std::size_t i = assign.size();
  if (i == expected.size())
    return m.exprs(actual, expected, assign);
  for (std::size_t j = 0; j < actual.size(); ++j) {
    if (used[j])
      continue;
    Matcher next = m;
    if (!next.cls(actual.classes()[j], expected.classes()[i]))
      continue;
    used[j] = true;
    assign.push_back(j);
    if (search(next, actual, expected, assign, used))
      return true;
    assign.pop_back();
    used[j] = false;
  }
  return false;
}

Class make(std::uint32_t vn, std::set<std::string> vars,
           std::set<ValueExpression> exprs = {}) {
  Class c;
  c.vn = {vn};
  c.vars = std::move(vars);
  c.exprs = std::move(exprs);
  return c;
}

} // namespace

Partition parse_partition(const std::string &text) {
  return PartitionReader(text).read();
}

bool isomorphic(const Partition &actual, const Partition &expected,
                const IsoOptions &opts) {
  if (actual.is_top() || expected.is_top())
    return actual.is_top() == expected.is_top();
  if (actual.size() != expected.size())
    return false;
  Matcher m{opts, {}, {}};
  for (auto [a, e] : opts.fixed)
    if (!m.bind(a, e))
      return false;
  std::vector<std::size_t> assign;
  std::vector<bool> used(actual.size(), false);
  return search(m, actual, expected, assign, used);
}

Partition transfer_example_pin() {
  return parse_partition("{v7, x3 : phi.B3(v1,v4) | v8, y3 : phi.B3(v2,v5)}");
}

AnalysisState transfer_example_state(const Program &lowered_e1) {
  AnalysisState st = AnalysisState::for_program(lowered_e1);
  st.block_out["B1"] = parse_partition("{v1, x1, x3 | v2, y1, y3 | v3, p1, v1+v2}");
  st.block_out["B2"] = parse_partition("{v4, x2, x3 | v5, y2, y3 | v6, q2, v4+v5}");
  st.allocator.reserve({8});
  return st;
}

// `v1+1` from the worked example is written over v10, the number of the
// constant 1.
Partition join_example_p1() {
  Partition p;
  p.insert(make(1, {"x1", "x3"}));
  p.insert(make(2, {"y1", "y3"}, {{"+", {1}, {10}}}));
  p.insert(make(3, {"z1", "z3"}));
  return p;
}

Partition join_example_p2() {
  Partition p;
  p.insert(make(4, {"x2", "x3"}));
  p.insert(make(5, {"y2", "y3"}));
  p.insert(make(6, {"z2", "z3"}, {{"+", {4}, {10}}}));
  return p;
}

Partition join_example_expected() {
  return parse_partition(
      "{v7, x3 : phi.B(v1,v4) | v8, y3 : phi.B(v2,v5) | v9, z3 : phi.B(v3,v6)}");
}

StmtId stmt_defining(const Program &p, const std::string &target) {
  for (const auto &b : p.blocks)
    for (const auto &s : b.stmts)
      if (s.target == target && !s.phi_origin)
        return s.id;
  throw std::invalid_argument("no statement defines " + target);
}

} // namespace vphi::test
