#include "txpredict/solver.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>
#include <sstream>

#include "txpredict/error.hpp"

namespace txpredict::smt {

namespace {

constexpr std::int64_t kMinInt = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kMaxInt = std::numeric_limits<std::int64_t>::max();

}  // namespace

std::size_t ConstraintProgram::NodeHash::operator()(const TermNode& n) const noexcept {
  std::size_t h = static_cast<std::size_t>(n.op) * 0x9e3779b97f4a7c15ULL;
  h ^= std::hash<std::int64_t>{}(n.payload) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  for (auto a : n.args) h ^= a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

ConstraintProgram::ConstraintProgram() {
  true_ = intern(TermNode{TermOp::True, 0, {}, true});
  false_ = intern(TermNode{TermOp::False, 0, {}, true});
}

Term ConstraintProgram::intern(TermNode node) {
  auto it = table_.find(node);
  if (it != table_.end()) return Term{it->second};
  auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(node);
  table_.emplace(std::move(node), id);
  return Term{id};
}

Term ConstraintProgram::declare(const std::string& name, Sort sort) {
  if (by_name_.contains(name)) throw Error("symbol declared twice: " + name);
  auto index = static_cast<std::uint32_t>(symbols_.size());
  const bool is_bool = sort.kind == SortKind::Bool;
  symbols_.push_back(Symbol{name, std::move(sort)});
  Term t = intern(TermNode{TermOp::Var, index, {}, is_bool});
  vars_.push_back(t);
  by_name_.emplace(name, index);
  return t;
}

Term ConstraintProgram::declare_bool(const std::string& name) { return declare(name, Sort{SortKind::Bool, 0, 1, {}}); }

Term ConstraintProgram::declare_int(const std::string& name, std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw Error("empty integer range for " + name);
  return declare(name, Sort{SortKind::Int, lo, hi, {}});
}

Term ConstraintProgram::declare_enum(const std::string& name, std::vector<std::int64_t> domain) {
  std::sort(domain.begin(), domain.end());
  domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
  if (domain.empty()) throw Error("empty enum domain for " + name);
  Sort s{SortKind::Enum, domain.front(), domain.back(), domain};
  return declare(name, std::move(s));
}

const Symbol& ConstraintProgram::symbol_of(Term var) const {
  const TermNode& n = nodes_[var.id];
  if (n.op != TermOp::Var) throw Error("term is not a variable");
  return symbols_[static_cast<std::size_t>(n.payload)];
}

std::optional<Term> ConstraintProgram::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return vars_[it->second];
}

Term ConstraintProgram::int_lit(std::int64_t v) { return intern(TermNode{TermOp::IntLit, v, {}, false}); }

std::pair<std::int64_t, std::int64_t> ConstraintProgram::bounds(Term t) const {
  const TermNode& n = nodes_[t.id];
  if (n.op == TermOp::IntLit) return {n.payload, n.payload};
  if (n.op == TermOp::Var && !n.is_bool) {
    const Sort& s = symbols_[static_cast<std::size_t>(n.payload)].sort;
    return {s.lo, s.hi};
  }
  return {kMinInt, kMaxInt};
}

Term ConstraintProgram::mk_not(Term a) {
  const TermNode& n = nodes_[a.id];
  if (n.op == TermOp::True) return false_;
  if (n.op == TermOp::False) return true_;
  if (n.op == TermOp::Not) return Term{n.args[0]};
  return intern(TermNode{TermOp::Not, 0, {a.id}, true});
}

Term ConstraintProgram::mk_and(std::vector<Term> args) {
  std::vector<std::uint32_t> flat;
  for (Term a : args) {
    const TermNode& n = nodes_[a.id];
    if (n.op == TermOp::False) return false_;
    if (n.op == TermOp::True) continue;
    if (n.op == TermOp::And) {
      flat.insert(flat.end(), n.args.begin(), n.args.end());
    } else {
      flat.push_back(a.id);
    }
  }
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  if (flat.empty()) return true_;
  if (flat.size() == 1) return Term{flat[0]};
  return intern(TermNode{TermOp::And, 0, std::move(flat), true});
}

Term ConstraintProgram::mk_or(std::vector<Term> args) {
  std::vector<std::uint32_t> flat;
  for (Term a : args) {
    const TermNode& n = nodes_[a.id];
    if (n.op == TermOp::True) return true_;
    if (n.op == TermOp::False) continue;
    if (n.op == TermOp::Or) {
      flat.insert(flat.end(), n.args.begin(), n.args.end());
    } else {
      flat.push_back(a.id);
    }
  }
  std::sort(flat.begin(), flat.end());
  flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
  if (flat.empty()) return false_;
  if (flat.size() == 1) return Term{flat[0]};
  return intern(TermNode{TermOp::Or, 0, std::move(flat), true});
}

Term ConstraintProgram::mk_implies(Term a, Term b) {
  if (a == false_ || b == true_ || a == b) return true_;
  if (a == true_) return b;
  if (b == false_) return mk_not(a);
  return intern(TermNode{TermOp::Implies, 0, {a.id, b.id}, true});
}

Term ConstraintProgram::mk_eq(Term a, Term b) {
  if (a == b) return true_;
  const bool ba = is_bool(a);
  if (ba != is_bool(b)) throw Error("ill-sorted equality");
  if (ba) {
    if (a == true_) return b;
    if (b == true_) return a;
    if (a == false_) return mk_not(b);
    if (b == false_) return mk_not(a);
  } else {
    auto [alo, ahi] = bounds(a);
    auto [blo, bhi] = bounds(b);
    if (ahi < blo || bhi < alo) return false_;
    const TermNode& na = nodes_[a.id];
    const TermNode& nb = nodes_[b.id];
    if (na.op == TermOp::IntLit && nb.op == TermOp::IntLit) return lit(na.payload == nb.payload);
    auto outside_domain = [&](const TermNode& var, const TermNode& literal) {
      if (var.op != TermOp::Var || literal.op != TermOp::IntLit) return false;
      const Sort& s = symbols_[static_cast<std::size_t>(var.payload)].sort;
      return s.kind == SortKind::Enum && !std::binary_search(s.domain.begin(), s.domain.end(), literal.payload);
    };
    if (outside_domain(na, nb) || outside_domain(nb, na)) return false_;
  }
  if (b.id < a.id) std::swap(a, b);
  return intern(TermNode{TermOp::Eq, 0, {a.id, b.id}, true});
}

Term ConstraintProgram::mk_lt(Term a, Term b) {
  if (a == b) return false_;
  auto [alo, ahi] = bounds(a);
  auto [blo, bhi] = bounds(b);
  if (ahi != kMaxInt && blo != kMinInt && ahi < blo) return true_;
  if (alo != kMinInt && bhi != kMaxInt && alo >= bhi) return false_;
  return intern(TermNode{TermOp::Lt, 0, {a.id, b.id}, true});
}

Term ConstraintProgram::mk_le(Term a, Term b) {
  if (a == b) return true_;
  auto [alo, ahi] = bounds(a);
  auto [blo, bhi] = bounds(b);
  if (ahi != kMaxInt && blo != kMinInt && ahi <= blo) return true_;
  if (alo != kMinInt && bhi != kMaxInt && alo > bhi) return false_;
  return intern(TermNode{TermOp::Le, 0, {a.id, b.id}, true});
}

Term ConstraintProgram::mk_distinct(std::vector<Term> args) {
  if (args.size() < 2) return true_;
  std::vector<std::uint32_t> ids;
  for (Term a : args) ids.push_back(a.id);
  return intern(TermNode{TermOp::Distinct, 0, std::move(ids), true});
}

void ConstraintProgram::add(Term formula) {
  if (!is_bool(formula)) throw Error("asserted term is not Boolean");
  if (formula == true_) return;
  assertions_.push_back(formula);
}

std::size_t ConstraintProgram::literal_count() const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::uint32_t> stack;
  for (Term a : assertions_) stack.push_back(a.id);
  std::size_t count = 0;
  while (!stack.empty()) {
    auto id = stack.back();
    stack.pop_back();
    if (seen[id]) continue;
    seen[id] = true;
    const TermNode& n = nodes_[id];
    switch (n.op) {
      case TermOp::Var:
        if (n.is_bool) ++count;
        break;
      case TermOp::Eq:
      case TermOp::Lt:
      case TermOp::Le:
      case TermOp::Distinct:
        ++count;
        break;
      default:
        break;
    }
    if (n.op != TermOp::Eq && n.op != TermOp::Lt && n.op != TermOp::Le && n.op != TermOp::Distinct) {
      for (auto a : n.args) stack.push_back(a);
    }
  }
  return count;
}

std::int64_t Model::value(const ConstraintProgram& p, Term var) const {
  const TermNode& n = p.node(var);
  if (n.op == TermOp::True) return 1;
  if (n.op == TermOp::False) return 0;
  if (n.op == TermOp::IntLit) return n.payload;
  if (n.op != TermOp::Var) throw Error("Model::value expects a variable");
  return values_.at(static_cast<std::size_t>(n.payload));
}

Evaluator::Evaluator(const ConstraintProgram& program, const Model& model)
    : program_(program), model_(model), cache_(program.nodes().size(), 0), done_(program.nodes().size(), false) {}

std::int64_t Evaluator::eval(Term t) {
  if (t.id >= done_.size()) {
    cache_.resize(program_.nodes().size(), 0);
    done_.resize(program_.nodes().size(), false);
  }
  if (done_[t.id]) return cache_[t.id];
  const TermNode& n = program_.node(t);
  std::int64_t v = 0;
  auto arg = [&](std::size_t i) { return eval(Term{n.args[i]}); };
  switch (n.op) {
    case TermOp::True: v = 1; break;
    case TermOp::False: v = 0; break;
    case TermOp::IntLit: v = n.payload; break;
    case TermOp::Var: v = model_.values().at(static_cast<std::size_t>(n.payload)); break;
    case TermOp::Not: v = arg(0) == 0; break;
    case TermOp::And:
      v = 1;
      for (std::size_t i = 0; i < n.args.size() && v; ++i) v = arg(i) != 0;
      break;
    case TermOp::Or:
      v = 0;
      for (std::size_t i = 0; i < n.args.size() && !v; ++i) v = arg(i) != 0;
      break;
    case TermOp::Implies: v = arg(0) == 0 || arg(1) != 0; break;
    case TermOp::Eq: v = arg(0) == arg(1); break;
    case TermOp::Lt: v = arg(0) < arg(1); break;
    case TermOp::Le: v = arg(0) <= arg(1); break;
    case TermOp::Distinct: {
      std::set<std::int64_t> vals;
      for (std::size_t i = 0; i < n.args.size(); ++i) vals.insert(arg(i));
      v = vals.size() == n.args.size();
      break;
    }
  }
  cache_[t.id] = v;
  done_[t.id] = true;
  return v;
}

bool satisfies(const ConstraintProgram& program, const Model& model) {
  const auto& syms = program.symbols();
  if (model.values().size() != syms.size()) return false;
  for (std::size_t i = 0; i < syms.size(); ++i) {
    std::int64_t v = model.values()[i];
    const Sort& s = syms[i].sort;
    if (v < s.lo || v > s.hi) return false;
    if (s.kind == SortKind::Enum && !std::binary_search(s.domain.begin(), s.domain.end(), v)) return false;
  }
  Evaluator ev(program, model);
  for (Term a : program.assertions()) {
    if (!ev.holds(a)) return false;
  }
  return true;
}

Term blocking_clause(ConstraintProgram& program, const std::vector<Term>& symbols, const Model& model) {
  std::vector<Term> diffs;
  for (Term s : symbols) {
    if (program.is_bool(s)) {
      diffs.push_back(model.truth(program, s) ? program.mk_not(s) : s);
    } else {
      diffs.push_back(program.mk_not(program.mk_eq(s, program.int_lit(model.value(program, s)))));
    }
  }
  return program.mk_or(std::move(diffs));
}

ConstraintProgram block_assignment(ConstraintProgram program, const std::vector<Term>& symbols, const Model& model) {
  program.add(blocking_clause(program, symbols, model));
  return program;
}

namespace {

std::string smt_name(const std::string& name) {
  bool simple = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
  for (char c : name) simple = simple && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
  return simple ? name : "|" + name + "|";
}

std::string smt_int(std::int64_t v) { return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v); }

}  // namespace

std::string to_smtlib2(const ConstraintProgram& program) {
  std::ostringstream os;
  os << "(set-logic QF_LIA)\n";
  for (const auto& s : program.symbols()) {
    const std::string name = smt_name(s.name);
    os << "(declare-fun " << name << " () " << (s.sort.kind == SortKind::Bool ? "Bool" : "Int") << ")\n";
    if (s.sort.kind == SortKind::Int) {
      os << "(assert (and (<= " << smt_int(s.sort.lo) << ' ' << name << ") (<= " << name << ' ' << smt_int(s.sort.hi)
         << ")))\n";
    } else if (s.sort.kind == SortKind::Enum) {
      os << "(assert (or";
      for (auto d : s.sort.domain) os << " (= " << name << ' ' << smt_int(d) << ')';
      os << "))\n";
    }
  }

  const auto& nodes = program.nodes();
  std::vector<bool> needed(nodes.size(), false);
  for (Term a : program.assertions()) needed[a.id] = true;
  for (std::size_t id = nodes.size(); id-- > 0;) {
    if (!needed[id]) continue;
    for (auto a : nodes[id].args) needed[a] = true;
  }

  auto ref = [&](std::uint32_t id) -> std::string {
    const TermNode& n = nodes[id];
    switch (n.op) {
      case TermOp::True: return "true";
      case TermOp::False: return "false";
      case TermOp::IntLit: return smt_int(n.payload);
      case TermOp::Var: return smt_name(program.symbols()[static_cast<std::size_t>(n.payload)].name);
      default: return "_n" + std::to_string(id);
    }
  };
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (!needed[id]) continue;
    const TermNode& n = nodes[id];
    const char* op = nullptr;
    switch (n.op) {
      case TermOp::Not: op = "not"; break;
      case TermOp::And: op = "and"; break;
      case TermOp::Or: op = "or"; break;
      case TermOp::Implies: op = "=>"; break;
      case TermOp::Eq: op = "="; break;
      case TermOp::Lt: op = "<"; break;
      case TermOp::Le: op = "<="; break;
      case TermOp::Distinct: op = "distinct"; break;
      default: continue;
    }
    os << "(define-fun _n" << id << " () Bool (" << op;
    for (auto a : n.args) os << ' ' << ref(a);
    os << "))\n";
  }
  for (Term a : program.assertions()) os << "(assert " << ref(a.id) << ")\n";
  os << "(check-sat)\n";
  return os.str();
}

}  // namespace txpredict::smt
