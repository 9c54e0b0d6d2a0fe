#include "txpredict/store.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <random>

#include "txpredict/error.hpp"

namespace txpredict {

void KVStore::commit(TxnId tid, const std::vector<std::pair<std::string, Value>>& writes) {
  committed_.insert(tid.value);
  for (const auto& [k, v] : writes) versions_[k].push_back(Version{tid, v});
}

const std::vector<KVStore::Version>& KVStore::versions(const std::string& key) const {
  static const std::vector<Version> kEmpty;
  auto it = versions_.find(key);
  return it == versions_.end() ? kEmpty : it->second;
}

std::optional<Value> KVStore::value_by(TxnId writer, const std::string& key) const {
  if (writer.is_initial()) return 0;
  for (const auto& v : versions(key)) {
    if (v.writer == writer) return v.value;
  }
  return std::nullopt;
}

TxnId KVStore::latest_writer(const std::string& key) const {
  const auto& vs = versions(key);
  return vs.empty() ? kInitialTxn : vs.back().writer;
}

std::map<std::string, Value> KVStore::snapshot() const {
  std::map<std::string, Value> out;
  for (const auto& [k, vs] : versions_) {
    if (!vs.empty()) out[k] = vs.back().value;
  }
  return out;
}

namespace {

Value eval(const Expr& e, const std::map<std::string, Value>& vars) {
  Value sum = 0;
  for (const auto& p : e.parts) {
    Value v = p.literal;
    if (!p.var.empty()) {
      auto it = vars.find(p.var);
      if (it == vars.end()) throw WorkloadError("variable '" + p.var + "' used before assignment");
      v = it->second;
    }
    sum += p.negate ? -v : v;
  }
  return sum;
}

bool holds(const Condition& c, const std::map<std::string, Value>& vars) {
  const Value l = eval(c.lhs, vars);
  const Value r = eval(c.rhs, vars);
  switch (c.op) {
    case CmpOp::Lt: return l < r;
    case CmpOp::Le: return l <= r;
    case CmpOp::Gt: return l > r;
    case CmpOp::Ge: return l >= r;
    case CmpOp::Eq: return l == r;
    case CmpOp::Ne: return l != r;
  }
  return false;
}

struct TxnRun {
  TxnRecord rec;
  std::vector<std::pair<std::string, Value>> writes;  // final value per key, first-write order
};

// Picks the writer of a non-self read. Arguments: key, event index, the
// in-flight record so far (the new read is not yet appended).
using Resolver = std::function<TxnId(const std::string&, std::size_t, const TxnRecord&)>;
using Placer = std::function<Position(std::size_t)>;

TxnRun execute(const TxnScript& script, TxnId tid, const KVStore& store, const Placer& place,
               const Resolver& resolve) {
  TxnRun run;
  run.rec.tid = tid;
  std::map<std::string, Value> vars;
  std::map<std::string, Value> own;
  for (const auto& op : script.ops) {
    const std::size_t ev = run.rec.ops.size();
    switch (op.kind) {
      case ScriptOp::Kind::Get: {
        if (auto it = own.find(op.key); it != own.end()) {
          vars[op.var] = it->second;
          run.rec.ops.push_back(TraceOp{OpKind::Read, op.key, place(ev), tid, it->second});
          break;
        }
        const TxnId w = resolve(op.key, ev, run.rec);
        auto v = store.value_by(w, op.key);
        if (!v) throw Error("resolver picked a transaction that did not write " + op.key);
        vars[op.var] = *v;
        run.rec.ops.push_back(TraceOp{OpKind::Read, op.key, place(ev), w, *v});
        break;
      }
      case ScriptOp::Kind::Put: {
        const Value v = eval(op.value, vars);
        auto it = std::find_if(run.writes.begin(), run.writes.end(), [&](const auto& p) { return p.first == op.key; });
        if (it == run.writes.end()) {
          run.writes.emplace_back(op.key, v);
        } else {
          it->second = v;
        }
        own[op.key] = v;
        run.rec.ops.push_back(TraceOp{OpKind::Write, op.key, place(ev), TxnId{}, v});
        break;
      }
      case ScriptOp::Kind::AbortIf:
        if (holds(op.cond, vars)) {
          run.rec.status = TxnStatus::Aborted;
          run.writes.clear();
          return run;
        }
        break;
      case ScriptOp::Kind::CommitIf:
        if (holds(op.cond, vars)) return run;
        break;
    }
  }
  return run;
}

std::vector<SessionScript> sorted_scripts(const Workload& workload, std::size_t sessions, std::size_t txns,
                                          std::uint64_t seed) {
  if (!workload.is_scripted() && sessions == 0) throw WorkloadError("sessions must be at least 1");
  auto scripts = workload.instantiate(sessions, txns, seed);
  std::sort(scripts.begin(), scripts.end(), [](const auto& a, const auto& b) { return a.sid < b.sid; });
  return scripts;
}

Position last_position(const SessionRecord& s) {
  for (auto it = s.txns.rbegin(); it != s.txns.rend(); ++it) {
    if (!it->ops.empty()) return it->ops.back().pos;
  }
  return 0;
}

}  // namespace

RunResult run_workload(const Workload& workload, std::size_t sessions, std::size_t txns, std::uint64_t seed,
                       const ReadPolicy& policy) {
  const auto scripts = sorted_scripts(workload, sessions, txns, seed);
  std::mt19937_64 sched(seed);
  std::optional<std::mt19937_64> pick;
  if (const auto* rw = std::get_if<RandomWeak>(&policy)) pick.emplace(rw->seed);

  KVStore store;
  Trace trace;
  trace.schedule.emplace();
  for (const auto& s : scripts) trace.sessions.push_back(SessionRecord{s.sid, {}});
  std::vector<std::size_t> next(scripts.size(), 0);
  std::vector<Position> last(scripts.size(), 0);
  std::uint32_t next_tid = 1;

  for (;;) {
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < scripts.size(); ++i) {
      if (next[i] < scripts[i].txns.size()) ready.push_back(i);
    }
    if (ready.empty()) break;
    const std::size_t si = ready[sched() % ready.size()];
    const TxnId tid{next_tid++};
    const SessionId sid = scripts[si].sid;

    Resolver resolve = [&](const std::string& key, std::size_t, const TxnRecord& inflight) {
      if (!pick) return store.latest_writer(key);
      auto legal = legal_writers(trace, sid, inflight, key, std::get<RandomWeak>(policy).level);
      if (legal.empty()) return store.latest_writer(key);
      return legal[(*pick)() % legal.size()];
    };
    const Position base = last[si];
    TxnRun run = execute(scripts[si].txns[next[si]++], tid, store, [&](std::size_t ev) {
      return static_cast<Position>(base + ev + 1);
    }, resolve);
    if (!run.rec.ops.empty()) last[si] = run.rec.ops.back().pos;
    if (run.rec.status == TxnStatus::Committed) store.commit(tid, run.writes);
    trace.sessions[si].txns.push_back(std::move(run.rec));
    trace.schedule->push_back(tid);
  }

  RunResult out;
  out.history = build_history(trace);
  out.trace = std::move(trace);
  out.final_values = store.snapshot();
  return out;
}

std::vector<TxnId> legal_writers(const Trace& committed, SessionId session, const TxnRecord& inflight,
                                 const std::string& key, IsolationLevel level) {
  Trace base;
  std::vector<TxnId> candidates{kInitialTxn};
  Position pos = 0;
  bool placed = false;
  for (const auto& s : committed.sessions) {
    SessionRecord rec{s.sid, {}};
    for (const auto& t : s.txns) {
      if (t.status != TxnStatus::Committed) continue;
      rec.txns.push_back(t);
      if (std::any_of(t.ops.begin(), t.ops.end(), [&](const TraceOp& o) { return o.kind == OpKind::Write && o.key == key; })) {
        candidates.push_back(t.tid);
      }
    }
    base.sessions.push_back(std::move(rec));
    if (s.sid == session) pos = last_position(s);
  }
  std::sort(candidates.begin(), candidates.end());

  TxnRecord probe{inflight.tid, {}, TxnStatus::Committed};
  for (const auto& o : inflight.ops) {
    if (o.kind == OpKind::Read && o.writer != inflight.tid) probe.ops.push_back(o);
    pos = std::max(pos, o.pos);
  }
  probe.ops.push_back(TraceOp{OpKind::Read, key, pos + 1, kInitialTxn, 0});

  for (auto& s : base.sessions) {
    if (s.sid == session) {
      s.txns.push_back(probe);
      placed = true;
    }
  }
  if (!placed) base.sessions.push_back(SessionRecord{session, {probe}});
  TraceOp& read = (placed ? std::find_if(base.sessions.begin(), base.sessions.end(),
                                         [&](const auto& s) { return s.sid == session; })
                          : std::prev(base.sessions.end()))
                      ->txns.back()
                      .ops.back();

  std::vector<TxnId> out;
  for (TxnId c : candidates) {
    read.writer = c;
    if (check_isolation(build_history(base), level).ok()) out.push_back(c);
  }
  return out;
}

std::string to_string(ValidationOutcome o) {
  switch (o) {
    case ValidationOutcome::ValidatedUnserializable: return "validated-unserializable";
    case ValidationOutcome::Serializable: return "serializable";
    case ValidationOutcome::Unknown: return "unknown";
  }
  return "?";
}

namespace {

struct Slot {
  std::size_t session = 0;      // index into scripts / observed sessions
  std::size_t index = 0;        // transaction index within the session
  const TxnRecord* observed = nullptr;
  const TxnRecord* predicted = nullptr;  // null for observed-aborted transactions
  std::size_t order = 0;        // position in the observed schedule
};

const TraceOp* op_at(const TxnRecord* rec, Position pos) {
  if (!rec) return nullptr;
  for (const auto& o : rec->ops) {
    if (o.pos == pos) return &o;
  }
  return nullptr;
}

}  // namespace

ValidationReport validate(const Trace& predicted, const Workload& workload, std::size_t sessions, std::size_t txns,
                          std::uint64_t seed, IsolationLevel level, const smt::SolverOptions& solver) {
  const auto scripts = sorted_scripts(workload, sessions, txns, seed);
  const RunResult skeleton = run_workload(workload, sessions, txns, seed, LatestWriter{});
  const Trace& obs = skeleton.trace;

  std::map<std::uint32_t, std::size_t> sched_at;
  for (std::size_t i = 0; i < obs.schedule->size(); ++i) sched_at[(*obs.schedule)[i].value] = i;

  // Match the prediction against the observed skeleton.
  std::vector<Slot> slots;
  std::map<std::uint32_t, std::size_t> slot_of;
  std::vector<Position> bound(obs.sessions.size(), kPositionInfinity);
  for (const auto& ps : predicted.sessions) {
    auto it = std::find_if(obs.sessions.begin(), obs.sessions.end(), [&](const auto& s) { return s.sid == ps.sid; });
    if (it == obs.sessions.end()) throw ReplayMismatch("workload has no session " + std::to_string(ps.sid.value));
    const std::size_t si = static_cast<std::size_t>(it - obs.sessions.begin());
    if (auto b = predicted.boundaries.find(ps.sid); b != predicted.boundaries.end()) bound[si] = b->second;

    std::size_t cut = 0;  // one past the last predicted transaction in session order
    for (const auto& pt : ps.txns) {
      auto ot = std::find_if(it->txns.begin(), it->txns.end(), [&](const auto& t) { return t.tid == pt.tid; });
      if (ot == it->txns.end()) {
        throw ReplayMismatch("transaction t" + std::to_string(pt.tid.value) + " is not part of session " +
                             std::to_string(ps.sid.value) + " in the replayed workload");
      }
      if (ot->status != TxnStatus::Committed) {
        throw ReplayMismatch("predicted transaction t" + std::to_string(pt.tid.value) + " aborted in the observed run");
      }
      cut = std::max(cut, static_cast<std::size_t>(ot - it->txns.begin()) + 1);
    }
    for (std::size_t j = 0; j < cut; ++j) {
      const TxnRecord& ot = it->txns[j];
      auto pt = std::find_if(ps.txns.begin(), ps.txns.end(), [&](const auto& t) { return t.tid == ot.tid; });
      if (pt == ps.txns.end() && ot.status == TxnStatus::Committed) {
        throw ReplayMismatch("committed transaction t" + std::to_string(ot.tid.value) +
                             " is missing from the prediction but precedes its boundary");
      }
      slot_of[ot.tid.value] = slots.size();
      slots.push_back(Slot{si, j, &ot, pt == ps.txns.end() ? nullptr : &*pt, sched_at.at(ot.tid.value)});
    }
  }

  // Replay order: so plus predicted wr, ties broken by the observed schedule.
  const std::size_t n = slots.size();
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::size_t> indeg(n, 0);
  auto edge = [&](std::size_t a, std::size_t b) {
    succ[a].push_back(b);
    ++indeg[b];
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (slots[i].session == slots[j].session && slots[j].index == slots[i].index + 1) edge(i, j);
    }
    if (!slots[i].predicted) continue;
    for (const auto& o : slots[i].predicted->ops) {
      if (o.kind != OpKind::Read || o.writer.is_initial() || o.writer == slots[i].predicted->tid) continue;
      auto w = slot_of.find(o.writer.value);
      if (w == slot_of.end()) throw ReplayMismatch("predicted read from unknown transaction t" + std::to_string(o.writer.value));
      edge(w->second, i);
    }
  }
  using Entry = std::pair<std::size_t, std::size_t>;  // (schedule order, slot)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.emplace(slots[i].order, i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t i = ready.top().second;
    ready.pop();
    order.push_back(i);
    for (std::size_t j : succ[i]) {
      if (--indeg[j] == 0) ready.emplace(slots[j].order, j);
    }
  }
  if (order.size() != n) throw ReplayMismatch("predicted history has a cycle in so and wr");

  ValidationReport report;
  Trace& vt = report.validating_trace;
  vt.schedule.emplace();
  for (const auto& s : obs.sessions) vt.sessions.push_back(SessionRecord{s.sid, {}});
  std::vector<Position> last(obs.sessions.size(), 0);
  KVStore store;

  auto diverge = [&](const Slot& s, Position pos, const char* reason) {
    report.divergences.push_back(Divergence{obs.sessions[s.session].sid, s.observed->tid, pos, reason});
  };

  for (std::size_t i : order) {
    const Slot& s = slots[i];
    const SessionId sid = obs.sessions[s.session].sid;
    const TxnId tid = s.observed->tid;
    const Position b = bound[s.session];
    const Position start = s.observed->ops.empty() ? last[s.session] + 1 : s.observed->ops.front().pos;
    std::vector<Position> placed;
    auto place = [&](std::size_t ev) {
      Position p = std::max<Position>(static_cast<Position>(start + ev), last[s.session] + 1);
      if (!placed.empty()) p = std::max<Position>(p, placed.back() + 1);
      placed.push_back(p);
      return p;
    };

    Resolver resolve = [&](const std::string& key, std::size_t ev, const TxnRecord& inflight) {
      Position pos = std::max<Position>(static_cast<Position>(start + ev), last[s.session] + 1);
      if (!inflight.ops.empty()) pos = std::max<Position>(pos, inflight.ops.back().pos + 1);
      const auto legal = legal_writers(vt, sid, inflight, key, level);
      if (legal.empty()) throw Error("no legal writer for " + key);
      const TxnId fallback = legal.front();
      auto is_legal = [&](TxnId w) { return std::binary_search(legal.begin(), legal.end(), w); };

      if (s.predicted && pos <= b) {
        const TraceOp* pe = op_at(s.predicted, pos);
        if (!pe || pe->kind != OpKind::Read || pe->key != key) {
          diverge(s, pos, "key-mismatch");
          return fallback;
        }
        if (!pe->writer.is_initial() &&
            (!store.is_committed(pe->writer) || !store.value_by(pe->writer, key).has_value())) {
          diverge(s, pos, "writer-missing");
          return fallback;
        }
        if (!is_legal(pe->writer)) {
          diverge(s, pos, "isolation-illegal");
          return fallback;
        }
        return pe->writer;
      }
      if (ev < s.observed->ops.size()) {
        const TraceOp& oe = s.observed->ops[ev];
        if (oe.kind == OpKind::Read && oe.key == key && is_legal(oe.writer)) return oe.writer;
      }
      return fallback;
    };

    TxnRun run = execute(scripts[s.session].txns[s.index], tid, store, place, resolve);

    if (s.predicted) {
      if (run.rec.status == TxnStatus::Aborted) {
        diverge(s, 0, "abort-rewind");
      } else {
        // Predicted writes must be reproduced and nothing in the boundary may be skipped.
        for (const auto& pe : s.predicted->ops) {
          if (pe.pos > b) continue;
          auto got = std::find_if(run.rec.ops.begin(), run.rec.ops.end(), [&](const auto& o) { return o.pos == pe.pos; });
          if (got == run.rec.ops.end()) {
            diverge(s, pe.pos, "key-mismatch");
          } else if ((got->kind == OpKind::Write || got->writer == tid) && (got->kind != pe.kind || got->key != pe.key)) {
            // non-self reads were already checked when they ran
            diverge(s, pe.pos, "key-mismatch");
          }
        }
      }
    } else if (run.rec.status == TxnStatus::Committed) {
      diverge(s, 0, "commit-flip");
    }

    if (!run.rec.ops.empty()) last[s.session] = run.rec.ops.back().pos;
    if (run.rec.status == TxnStatus::Committed) store.commit(tid, run.writes);
    vt.sessions[s.session].txns.push_back(std::move(run.rec));
    vt.schedule->push_back(tid);
  }

  std::erase_if(vt.sessions, [](const SessionRecord& s) { return s.txns.empty(); });

  report.diverged = !report.divergences.empty();
  report.validating_history = build_history(vt);
  report.final_values = store.snapshot();
  try {
    const Verdict v = check_serializable(report.validating_history, solver);
    report.outcome = v.kind == Verdict::Kind::Unserializable ? ValidationOutcome::ValidatedUnserializable
                                                             : ValidationOutcome::Serializable;
  } catch (const SolverUnknown&) {
    report.outcome = ValidationOutcome::Unknown;
  }
  return report;
}

}  // namespace txpredict
