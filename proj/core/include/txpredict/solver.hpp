#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace txpredict::smt {

enum class SortKind { Bool, Int, Enum };

/// Int symbols carry a closed range [lo, hi]; Enum symbols a finite,
/// non-empty list of admissible integer values (transaction or session ids).
struct Sort {
  SortKind kind = SortKind::Bool;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::vector<std::int64_t> domain;
};

struct Symbol {
  std::string name;
  Sort sort;
};

enum class TermOp : std::uint8_t { True, False, IntLit, Var, Not, And, Or, Implies, Eq, Lt, Le, Distinct };

/// Handle into a ConstraintProgram's hash-consed term table.
struct Term {
  std::uint32_t id = 0;

  bool operator==(const Term&) const = default;
};

struct TermNode {
  TermOp op = TermOp::True;
  std::int64_t payload = 0;  // literal value or symbol index
  std::vector<std::uint32_t> args;
  bool is_bool = true;

  bool operator==(const TermNode&) const = default;
};

/// Declarations, hash-consed terms and asserted formulas.
///
/// Constructors fold constants and trivially decided comparisons, so a
/// Term may come back as True/False even when built from variables.
class ConstraintProgram {
 public:
  ConstraintProgram();

  Term declare_bool(const std::string& name);
  Term declare_int(const std::string& name, std::int64_t lo, std::int64_t hi);
  Term declare_enum(const std::string& name, std::vector<std::int64_t> domain);

  Term lit(bool b) const { return b ? true_ : false_; }
  Term int_lit(std::int64_t v);

  Term mk_not(Term a);
  Term mk_and(std::vector<Term> args);
  Term mk_and(Term a, Term b) { return mk_and(std::vector<Term>{a, b}); }
  Term mk_or(std::vector<Term> args);
  Term mk_or(Term a, Term b) { return mk_or(std::vector<Term>{a, b}); }
  Term mk_implies(Term a, Term b);
  Term mk_eq(Term a, Term b);
  Term mk_lt(Term a, Term b);
  Term mk_le(Term a, Term b);
  Term mk_gt(Term a, Term b) { return mk_lt(b, a); }
  Term mk_distinct(std::vector<Term> args);

  void add(Term formula);

  const std::vector<Term>& assertions() const { return assertions_; }
  const std::vector<Symbol>& symbols() const { return symbols_; }
  const std::vector<TermNode>& nodes() const { return nodes_; }
  const TermNode& node(Term t) const { return nodes_[t.id]; }
  const Symbol& symbol_of(Term var) const;
  std::optional<Term> find(const std::string& name) const;
  Term var(std::size_t symbol_index) const { return vars_[symbol_index]; }

  bool is_true(Term t) const { return t == true_; }
  bool is_false(Term t) const { return t == false_; }
  bool is_bool(Term t) const { return nodes_[t.id].is_bool; }

  /// Number of distinct atoms (Boolean variables and comparisons) reachable
  /// from the assertions.
  std::size_t literal_count() const;

 private:
  struct NodeHash {
    std::size_t operator()(const TermNode& n) const noexcept;
  };

  Term intern(TermNode node);
  Term declare(const std::string& name, Sort sort);
  std::pair<std::int64_t, std::int64_t> bounds(Term t) const;

  std::vector<TermNode> nodes_;
  std::unordered_map<TermNode, std::uint32_t, NodeHash> table_;
  std::vector<Symbol> symbols_;
  std::vector<Term> vars_;
  std::unordered_map<std::string, std::uint32_t> by_name_;
  std::vector<Term> assertions_;
  Term true_{};
  Term false_{};
};

/// Total assignment: one integer per declared symbol (Bool as 0/1).
class Model {
 public:
  Model() = default;
  explicit Model(std::vector<std::int64_t> values) : values_(std::move(values)) {}

  std::int64_t value(const ConstraintProgram& p, Term var) const;
  bool truth(const ConstraintProgram& p, Term var) const { return value(p, var) != 0; }
  const std::vector<std::int64_t>& values() const { return values_; }

 private:
  std::vector<std::int64_t> values_;
};

/// Independent in-process evaluator, memoized over the term DAG.
class Evaluator {
 public:
  Evaluator(const ConstraintProgram& program, const Model& model);

  std::int64_t eval(Term t);
  bool holds(Term t) { return eval(t) != 0; }

 private:
  const ConstraintProgram& program_;
  const Model& model_;
  std::vector<std::int64_t> cache_;
  std::vector<bool> done_;
};

/// True when the model respects every declared domain and every assertion.
bool satisfies(const ConstraintProgram& program, const Model& model);

struct SolverOptions {
  std::string backend = "z3";
  double timeout_seconds = 0.0;  // 0 = no limit
  std::uint64_t seed = 0;
};

enum class SatStatus { Sat, Unsat, Unknown };

struct SolveResult {
  SatStatus status = SatStatus::Unknown;
  std::optional<Model> model;
  std::string reason;
  double solve_ms = 0.0;
};

bool backend_available(const std::string& name = "z3");

/// One-shot solve. Every Sat model is re-checked by Evaluator; a model that
/// fails the check raises InconsistentModel.
SolveResult check_sat(const ConstraintProgram& program, const SolverOptions& options = {});

/// Clause forbidding the listed symbols from jointly taking their model values.
Term blocking_clause(ConstraintProgram& program, const std::vector<Term>& symbols, const Model& model);

ConstraintProgram block_assignment(ConstraintProgram program, const std::vector<Term>& symbols, const Model& model);

/// Keeps backend state across checks; assertions added later are pushed to
/// both the program and the backend.
class IncrementalSolver {
 public:
  IncrementalSolver(ConstraintProgram& program, const SolverOptions& options = {});
  ~IncrementalSolver();
  IncrementalSolver(const IncrementalSolver&) = delete;
  IncrementalSolver& operator=(const IncrementalSolver&) = delete;

  SolveResult check();
  void add(Term formula);

 private:
  struct Impl;
  ConstraintProgram* program_;
  std::unique_ptr<Impl> impl_;
};

std::string to_smtlib2(const ConstraintProgram& program);

}  // namespace txpredict::smt
