#include "txpredict/predictor.hpp"

#include <chrono>
#include <map>

#include "txpredict/error.hpp"

namespace txpredict {

using smt::Term;

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::ExactStrict: return "exact-strict";
    case Strategy::ApproxStrict: return "approx-strict";
    case Strategy::ApproxRelaxed: return "approx-relaxed";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(const std::string& name) {
  for (Strategy s : {Strategy::ExactStrict, Strategy::ApproxStrict, Strategy::ApproxRelaxed}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

std::optional<IsolationLevel> parse_isolation(const std::string& name) {
  if (name == "causal") return IsolationLevel::Causal;
  if (name == "rc") return IsolationLevel::ReadCommitted;
  return std::nullopt;
}

BoundaryMode boundary_mode(Strategy s) {
  return s == Strategy::ApproxRelaxed ? BoundaryMode::Relaxed : BoundaryMode::Strict;
}

std::string to_string(PcoEncoding e) {
  switch (e) {
    case PcoEncoding::Layered: return "layered";
    case PcoEncoding::Ranked: return "ranked";
    case PcoEncoding::Unranked: return "unranked";
  }
  return "?";
}

std::optional<PcoEncoding> parse_pco_encoding(const std::string& name) {
  for (PcoEncoding e : {PcoEncoding::Layered, PcoEncoding::Ranked, PcoEncoding::Unranked}) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

std::string to_string(PredictResult::Status s) {
  switch (s) {
    case PredictResult::Status::Prediction: return "sat";
    case PredictResult::Status::None: return "unsat";
    case PredictResult::Status::Unknown: return "unknown";
  }
  return "?";
}

std::vector<DotEdge> to_dot_edges(const std::vector<CycleEdge>& cycle) {
  std::vector<DotEdge> out;
  for (const auto& e : cycle) {
    std::string label = edge_label(e.kind);
    if (e.kind == EdgeKind::WriteRead) label += "_" + e.key;
    out.push_back(DotEdge{e.from, e.to, label});
  }
  return out;
}

PredictedHistory extract_predicted_history(const smt::Model& model, Encoder& enc, IsolationLevel level,
                                           bool with_cycle) {
  const ExecutionHistory& h = enc.observed();
  smt::ConstraintProgram& p = enc.program();
  smt::Evaluator ev(p, model);
  const auto& sessions = h.sessions();
  const BoundaryMode mode = enc.options().mode;

  std::vector<Position> bound(sessions.size());
  for (std::size_t si = 0; si < sessions.size(); ++si) {
    bound[si] = static_cast<Position>(model.value(p, enc.boundary(si)));
  }
  std::map<std::pair<TxnIndex, Position>, TxnIndex> chosen;
  PredictedHistory out;

  for (std::size_t i = 0; i < enc.sites().size(); ++i) {
    const ReadSite& s = enc.sites()[i];
    auto tid = TxnId{static_cast<std::uint32_t>(model.value(p, enc.choice(i)))};
    auto w = h.index_of(tid);
    if (!w || !h.writes(*w, s.key) || *w == s.reader) throw InconsistentModel("choice names an illegal writer");
    chosen[{s.reader, s.pos}] = *w;
    const Position b = bound[s.session];
    if (s.pos > b) continue;
    const bool fixed = mode == BoundaryMode::Strict ? s.pos < b : h.txn(s.reader).last_pos() < b;
    if (fixed && *w != s.observed) throw InconsistentModel("read before the boundary changed its writer");
    if (!ev.holds(enc.write_readable(*w, s.key))) throw InconsistentModel("read observes a write outside the boundary");
    if (*w != s.observed) {
      out.changed.push_back(ChangedRead{sessions[s.session].sid, s.pos, h.tid(s.reader), h.key_name(s.key),
                                        h.tid(s.observed), tid});
    }
  }

  for (std::size_t si = 0; si < sessions.size(); ++si) {
    SessionRecord rec{sessions[si].sid, {}};
    for (TxnIndex t : sessions[si].txns) {
      TxnRecord tr;
      tr.tid = h.tid(t);
      for (const auto& e : h.txn(t).events) {
        if (e.pos > bound[si]) break;
        if (e.kind == OpKind::Write) {
          tr.ops.push_back(TraceOp{OpKind::Write, h.key_name(e.key), e.pos, TxnId{}, e.value});
        } else {
          TxnIndex w = chosen.at({t, e.pos});
          tr.ops.push_back(
              TraceOp{OpKind::Read, h.key_name(e.key), e.pos, h.tid(w), h.written_value(w, e.key).value_or(0)});
        }
      }
      if (!tr.ops.empty()) rec.txns.push_back(std::move(tr));
    }
    out.trace.sessions.push_back(std::move(rec));
    out.trace.boundaries[sessions[si].sid] = bound[si] == enc.infinity() ? kPositionInfinity : bound[si];
  }

  out.history = build_history(out.trace);
  if (!check_isolation(out.history, level).ok()) {
    throw InconsistentModel("predicted prefix violates " + to_string(level));
  }

  if (with_cycle) {
    out.cycle = PcoFixpoint(out.history).cycle();
    if (out.cycle.empty()) throw InconsistentModel("model claims a pco cycle the predicted history does not have");
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kFirstRounds = 2;
constexpr std::size_t kSearchBudget = 20000;

double ms_since(Clock::time_point t) { return std::chrono::duration<double, std::milli>(Clock::now() - t).count(); }

void encode(Encoder& enc, const PredictOptions& options, bool observed_serializable) {
  enc.gen_feasibility();
  enc.gen_isolation(options.level);
  if (options.strategy == Strategy::ExactStrict) {
    if (observed_serializable) enc.program().add(enc.some_read_changed());
  } else {
    enc.gen_unser_approx();
  }
}

}  // namespace

smt::ConstraintProgram build_program(const ExecutionHistory& observed, const PredictOptions& options) {
  smt::ConstraintProgram p;
  Encoder enc(observed, p, EncoderOptions{boundary_mode(options.strategy), options.pco, kFirstRounds, false});
  encode(enc, options, true);
  return p;
}

PredictResult predict(const ExecutionHistory& observed, const PredictOptions& options) {
  PredictResult result;
  if (observed.size() < 2) {
    result.status = PredictResult::Status::None;
    result.reason = "fewer than two transactions";
    return result;
  }

  bool serializable = true;
  try {
    serializable = check_serializable(observed, options.solver).kind == Verdict::Kind::Serializable;
    if (!serializable) result.warnings.push_back("observed history is not serializable");
  } catch (const SolverUnknown& e) {
    result.warnings.push_back(std::string("could not check observed history: ") + e.what());
  }

  if (options.strategy != Strategy::ExactStrict) {
    // Layered encodings start shallow and deepen only when a model shows the
    // unrolling stopped before the fixpoint.
    for (std::size_t rounds = kFirstRounds;; rounds *= 2) {
      auto gen_start = Clock::now();
      smt::ConstraintProgram p;
      Encoder enc(observed, p, EncoderOptions{boundary_mode(options.strategy), options.pco, rounds, false});
      encode(enc, options, serializable);
      result.stats.literals = p.literal_count();
      result.stats.gen_ms += ms_since(gen_start);

      smt::SolveResult r = smt::check_sat(p, options.solver);
      result.stats.solve_ms += r.solve_ms;
      ++result.stats.iterations;
      if (r.status == smt::SatStatus::Unknown) {
        result.status = PredictResult::Status::Unknown;
        result.reason = r.reason;
        return result;
      }
      if (r.status == smt::SatStatus::Unsat) {
        result.status = PredictResult::Status::None;
        return result;
      }
      smt::Evaluator ev(p, *r.model);
      if (options.pco == PcoEncoding::Layered && !enc.rounds_exhaustive() && ev.holds(enc.unconverged())) {
        bool cyclic = false;
        for (TxnIndex a = 0; a < observed.size() && !cyclic; ++a) {
          for (TxnIndex b = a + 1; b < observed.size() && !cyclic; ++b) {
            cyclic = ev.holds(enc.pco(a, b)) && ev.holds(enc.pco(b, a));
          }
        }
        if (!cyclic) continue;
      }
      result.status = PredictResult::Status::Prediction;
      result.prediction = extract_predicted_history(*r.model, enc, options.level, true);
      return result;
    }
  }

  auto gen_start = Clock::now();
  smt::ConstraintProgram p;
  Encoder enc(observed, p, EncoderOptions{BoundaryMode::Strict, options.pco, kFirstRounds, false});
  encode(enc, options, serializable);
  result.stats.literals = p.literal_count();
  result.stats.gen_ms = ms_since(gen_start);

  smt::IncrementalSolver solver(p, options.solver);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    smt::SolveResult r = solver.check();
    result.stats.solve_ms += r.solve_ms;
    result.stats.iterations = it + 1;
    if (r.status == smt::SatStatus::Unknown) {
      result.status = PredictResult::Status::Unknown;
      result.reason = r.reason;
      return result;
    }
    if (r.status == smt::SatStatus::Unsat) {
      result.status = PredictResult::Status::None;
      return result;
    }
    PredictedHistory candidate = extract_predicted_history(*r.model, enc, options.level, false);
    // Cheap answers first: a pco cycle refutes every order, and a bounded
    // search settles most small candidates without a solver call.
    Verdict v;
    if (PcoFixpoint(candidate.history).cyclic()) {
      v.kind = Verdict::Kind::Unserializable;
    } else if (auto quick = search_serializable(candidate.history, kSearchBudget)) {
      v = *quick;
    } else {
      try {
        v = check_serializable(candidate.history, options.solver);
      } catch (const SolverUnknown& e) {
        result.status = PredictResult::Status::Unknown;
        result.reason = e.what();
        return result;
      }
    }
    if (v.kind == Verdict::Kind::Unserializable) {
      result.status = PredictResult::Status::Prediction;
      result.prediction = std::move(candidate);
      return result;
    }
    // Block this in-boundary assignment; choices past a boundary do not
    // affect the candidate, so they stay free.
    std::vector<Term> same;
    for (std::size_t si = 0; si < observed.sessions().size(); ++si) {
      same.push_back(p.mk_eq(enc.boundary(si), p.int_lit(r.model->value(p, enc.boundary(si)))));
    }
    for (std::size_t i = 0; i < enc.sites().size(); ++i) {
      const ReadSite& s = enc.sites()[i];
      if (s.pos > r.model->value(p, enc.boundary(s.session))) continue;
      same.push_back(p.mk_eq(enc.choice(i), p.int_lit(r.model->value(p, enc.choice(i)))));
    }
    solver.add(p.mk_not(p.mk_and(same)));
  }
  result.status = PredictResult::Status::Unknown;
  result.reason = "iteration cap of " + std::to_string(options.max_iterations) + " reached";
  return result;
}

}  // namespace txpredict

namespace txpredict {

PcoFixpoint::PcoFixpoint(const ExecutionHistory& h)
    : h_(h), pco_(h.size()), why_(h.size(), std::vector<std::optional<Reason>>(h.size())) {
  const std::size_t n = h.size();
  bool changed = false;
  for (TxnIndex a = 0; a < n; ++a) {
    for (TxnIndex b = 0; b < n; ++b) {
      if (h.so().test(a, b)) add(a, b, Reason{EdgeKind::SessionOrder, std::nullopt, std::nullopt}, changed);
    }
  }
  for (KeyIndex k = 0; k < h.key_count(); ++k) {
    for (auto [a, b] : h.wr(k).pairs()) add(a, b, Reason{EdgeKind::WriteRead, k, std::nullopt}, changed);
  }
  auto close = [&] {
    for (bool grew = true; grew;) {
      grew = false;
      for (TxnIndex a = 0; a < n; ++a) {
        for (TxnIndex t = 0; t < n; ++t) {
          if (t == a || !pco_.test(a, t)) continue;
          for (TxnIndex b = 0; b < n; ++b) {
            if (b != a && b != t && pco_.test(t, b)) add(a, b, Reason{EdgeKind::SessionOrder, std::nullopt, t}, grew);
          }
        }
      }
    }
  };
  close();
  for (;;) {
    changed = false;
    for (KeyIndex k = 0; k < h.key_count(); ++k) {
      const auto writers = h.writers(k);
      for (auto [t2, t3] : h.wr(k).pairs()) {
        // ww: t1 precedes a reader of t2, so it precedes t2.
        for (TxnIndex t1 : writers) {
          if (t1 != t2 && t1 != t3 && pco_.test(t1, t3)) add(t1, t2, Reason{EdgeKind::WwSerial, k, std::nullopt}, changed);
        }
        // rw: t3 reads from t2, so it precedes every writer that follows t2.
        for (TxnIndex w : writers) {
          if (w != t2 && w != t3 && pco_.test(t2, w)) add(t3, w, Reason{EdgeKind::ReadWrite, k, std::nullopt}, changed);
        }
      }
    }
    if (!changed) break;
    ++rounds_;
    close();
  }
}

void PcoFixpoint::add(TxnIndex a, TxnIndex b, Reason r, bool& changed) {
  if (a == b || pco_.test(a, b)) return;
  pco_.set(a, b);
  why_[a][b] = r;
  changed = true;
}

bool PcoFixpoint::cyclic() const {
  for (TxnIndex a = 0; a < h_.size(); ++a) {
    for (TxnIndex b = a + 1; b < h_.size(); ++b) {
      if (pco_.test(a, b) && pco_.test(b, a)) return true;
    }
  }
  return false;
}

void PcoFixpoint::expand(TxnIndex a, TxnIndex b, std::vector<CycleEdge>& out) const {
  const Reason& r = *why_[a][b];
  if (r.via) {
    expand(a, *r.via, out);
    expand(*r.via, b, out);
    return;
  }
  out.push_back(CycleEdge{h_.tid(a), h_.tid(b), r.kind, r.key ? h_.key_name(*r.key) : std::string()});
}

std::vector<CycleEdge> PcoFixpoint::cycle() const {
  std::vector<CycleEdge> out;
  // Pairs through t0 are valid witnesses too, but read worse; try them last.
  for (TxnIndex first : {TxnIndex{1}, TxnIndex{0}}) {
    for (TxnIndex a = first; a < h_.size(); ++a) {
      for (TxnIndex b = a + 1; b < h_.size(); ++b) {
        if (pco_.test(a, b) && pco_.test(b, a)) {
          expand(a, b, out);
          expand(b, a, out);
          return out;
        }
      }
    }
  }
  return out;
}

}  // namespace txpredict
