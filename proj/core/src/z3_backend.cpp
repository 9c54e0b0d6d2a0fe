#include <chrono>

#include "txpredict/error.hpp"
#include "txpredict/solver.hpp"

#ifdef TXPREDICT_HAVE_Z3
#include <z3++.h>
#endif

namespace txpredict::smt {

#ifdef TXPREDICT_HAVE_Z3

namespace {

/// Lazily translates program terms into Z3 expressions, memoized by term id.
class Translator {
 public:
  Translator(z3::context& ctx, const ConstraintProgram& program) : ctx_(ctx), program_(program) {}

  z3::expr var(std::size_t symbol) {
    grow();
    return get(program_.var(symbol).id);
  }

  z3::expr get(std::uint32_t root) {
    grow();
    if (done_[root]) return exprs_[root];
    // Children always have smaller ids than their parents, so an explicit
    // stack with post-order emission avoids deep recursion.
    std::vector<std::pair<std::uint32_t, bool>> stack{{root, false}};
    while (!stack.empty()) {
      auto [id, expanded] = stack.back();
      stack.pop_back();
      if (done_[id]) continue;
      const TermNode& n = program_.nodes()[id];
      if (!expanded) {
        stack.emplace_back(id, true);
        for (auto a : n.args) {
          if (!done_[a]) stack.emplace_back(a, false);
        }
        continue;
      }
      exprs_[id] = build(n);
      done_[id] = true;
    }
    return exprs_[root];
  }

  std::vector<z3::expr> domain_constraints(std::size_t first_symbol) {
    std::vector<z3::expr> out;
    const auto& syms = program_.symbols();
    for (std::size_t i = first_symbol; i < syms.size(); ++i) {
      const Sort& s = syms[i].sort;
      if (s.kind == SortKind::Bool) continue;
      z3::expr x = var(i);
      if (s.kind == SortKind::Int) {
        out.push_back(x >= ctx_.int_val(s.lo) && x <= ctx_.int_val(s.hi));
      } else {
        z3::expr_vector opts(ctx_);
        for (auto d : s.domain) opts.push_back(x == ctx_.int_val(d));
        out.push_back(z3::mk_or(opts));
      }
    }
    return out;
  }

 private:
  void grow() {
    std::size_t n = program_.nodes().size();
    while (exprs_.size() < n) exprs_.push_back(ctx_.bool_val(true));
    done_.resize(n, false);
  }

  z3::expr build(const TermNode& n) {
    auto arg = [&](std::size_t i) { return exprs_[n.args[i]]; };
    switch (n.op) {
      case TermOp::True: return ctx_.bool_val(true);
      case TermOp::False: return ctx_.bool_val(false);
      case TermOp::IntLit: return ctx_.int_val(n.payload);
      case TermOp::Var: {
        const Symbol& s = program_.symbols()[static_cast<std::size_t>(n.payload)];
        return s.sort.kind == SortKind::Bool ? ctx_.bool_const(s.name.c_str()) : ctx_.int_const(s.name.c_str());
      }
      case TermOp::Not: return !arg(0);
      case TermOp::And:
      case TermOp::Or: {
        z3::expr_vector v(ctx_);
        for (std::size_t i = 0; i < n.args.size(); ++i) v.push_back(arg(i));
        return n.op == TermOp::And ? z3::mk_and(v) : z3::mk_or(v);
      }
      case TermOp::Implies: return z3::implies(arg(0), arg(1));
      case TermOp::Eq: return arg(0) == arg(1);
      case TermOp::Lt: return arg(0) < arg(1);
      case TermOp::Le: return arg(0) <= arg(1);
      case TermOp::Distinct: {
        z3::expr_vector v(ctx_);
        for (std::size_t i = 0; i < n.args.size(); ++i) v.push_back(arg(i));
        return z3::distinct(v);
      }
    }
    throw Error("unhandled term");
  }

  z3::context& ctx_;
  const ConstraintProgram& program_;
  std::vector<z3::expr> exprs_;
  std::vector<bool> done_;
};

}  // namespace

struct IncrementalSolver::Impl {
  Impl(ConstraintProgram& p, const SolverOptions& o)
      : program(p), options(o), solver(ctx, z3::solver::simple()), tr(ctx, p) {
    // The plain SMT core: the default solver front-loads tactics that cost ~1 s
    // per query on these small Boolean-heavy programs.
    z3::params params(ctx);
    params.set("random_seed", static_cast<unsigned>(options.seed & 0xffffffffU));
    if (options.timeout_seconds > 0) {
      params.set("timeout", static_cast<unsigned>(options.timeout_seconds * 1000.0));
    }
    solver.set(params);
    sync();
  }

  void sync() {
    for (auto& c : tr.domain_constraints(symbols_sent)) solver.add(c);
    symbols_sent = program.symbols().size();
    const auto& as = program.assertions();
    for (; assertions_sent < as.size(); ++assertions_sent) solver.add(tr.get(as[assertions_sent].id));
  }

  SolveResult check() {
    sync();
    SolveResult r;
    auto start = std::chrono::steady_clock::now();
    z3::check_result cr = solver.check();
    r.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (cr == z3::unsat) {
      r.status = SatStatus::Unsat;
      return r;
    }
    if (cr == z3::unknown) {
      r.status = SatStatus::Unknown;
      r.reason = solver.reason_unknown();
      return r;
    }
    r.status = SatStatus::Sat;
    z3::model m = solver.get_model();
    std::vector<std::int64_t> values;
    const auto& syms = program.symbols();
    values.reserve(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) {
      z3::expr v = m.eval(tr.var(i), true);
      if (syms[i].sort.kind == SortKind::Bool) {
        values.push_back(v.is_true() ? 1 : 0);
      } else {
        std::int64_t x = 0;
        if (!v.is_numeral_i64(x)) throw InconsistentModel("non-numeral value for " + syms[i].name);
        values.push_back(x);
      }
    }
    Model model(std::move(values));
    if (!satisfies(program, model)) throw InconsistentModel("backend model fails independent evaluation");
    r.model = std::move(model);
    return r;
  }

  ConstraintProgram& program;
  // A fresh context per solver: a shared one would make models depend on
  // earlier queries in the same process.
  SolverOptions options;
  z3::context ctx;
  z3::solver solver;
  Translator tr;
  std::size_t symbols_sent = 0;
  std::size_t assertions_sent = 0;
};

bool backend_available(const std::string& name) { return name == "z3"; }

#else

struct IncrementalSolver::Impl {
  Impl(ConstraintProgram&, const SolverOptions&) { throw BackendUnavailable("z3 backend not compiled in"); }
  SolveResult check() { return {}; }
  void sync() {}
};

bool backend_available(const std::string&) { return false; }

#endif

IncrementalSolver::IncrementalSolver(ConstraintProgram& program, const SolverOptions& options) : program_(&program) {
  if (!backend_available(options.backend)) throw BackendUnavailable("solver backend unavailable: " + options.backend);
  impl_ = std::make_unique<Impl>(program, options);
}

IncrementalSolver::~IncrementalSolver() = default;

SolveResult IncrementalSolver::check() {
  try {
    return impl_->check();
  }
#ifdef TXPREDICT_HAVE_Z3
  catch (const z3::exception& e) {
    SolveResult r;
    r.status = SatStatus::Unknown;
    r.reason = e.msg();
    return r;
  }
#else
  catch (const BackendUnavailable&) {
    throw;
  }
#endif
}

void IncrementalSolver::add(Term formula) { program_->add(formula); }

SolveResult check_sat(const ConstraintProgram& program, const SolverOptions& options) {
  ConstraintProgram copy = program;
  IncrementalSolver s(copy, options);
  return s.check();
}

}  // namespace txpredict::smt
