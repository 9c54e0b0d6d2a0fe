#include "txpredict/history.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "txpredict/error.hpp"

namespace txpredict {

const TxnRecord* Trace::find_txn(TxnId tid) const {
  for (const auto& s : sessions) {
    for (const auto& t : s.txns) {
      if (t.tid == tid) return &t;
    }
  }
  return nullptr;
}

const SessionRecord* Trace::find_session(SessionId sid) const {
  for (const auto& s : sessions) {
    if (s.sid == sid) return &s;
  }
  return nullptr;
}

std::optional<TxnIndex> ExecutionHistory::index_of(TxnId tid) const {
  auto it = tid_index_.find(tid.value);
  if (it == tid_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<KeyIndex> ExecutionHistory::key_index(const std::string& name) const {
  auto it = key_ids_.find(name);
  if (it == key_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<Position> ExecutionHistory::wrpos(TxnIndex t, KeyIndex k) const {
  for (const auto& e : txns_[t].events) {
    if (e.kind == OpKind::Write && e.key == k) return e.pos;
  }
  return std::nullopt;
}

std::optional<Value> ExecutionHistory::written_value(TxnIndex t, KeyIndex k) const {
  for (const auto& e : txns_[t].events) {
    if (e.kind == OpKind::Write && e.key == k) return e.value;
  }
  return std::nullopt;
}

std::vector<TxnIndex> ExecutionHistory::writers(KeyIndex k) const {
  std::vector<TxnIndex> out;
  for (TxnIndex t = 0; t < txns_.size(); ++t) {
    if (writes(t, k)) out.push_back(t);
  }
  return out;
}

std::vector<Position> ExecutionHistory::rdpos(TxnIndex t, KeyIndex k) const {
  std::vector<Position> out;
  for (const auto& e : txns_[t].events) {
    if (e.kind == OpKind::Read && e.key == k) out.push_back(e.pos);
  }
  return out;
}

std::vector<Position> ExecutionHistory::rdpos_all(TxnIndex t) const {
  std::vector<Position> out;
  for (const auto& e : txns_[t].events) {
    if (e.kind == OpKind::Read) out.push_back(e.pos);
  }
  return out;
}

Position ExecutionHistory::max_position() const {
  Position m = 0;
  for (const auto& t : txns_) m = std::max(m, t.last_pos());
  return m;
}

namespace {

[[noreturn]] void malformed(const std::string& msg) { throw MalformedTrace(msg); }

std::string describe(TxnId t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

}  // namespace

ExecutionHistory build_history(const Trace& trace) {
  // Structural checks over the whole trace, aborted transactions included.
  std::set<std::uint32_t> sids;
  std::map<std::uint32_t, const TxnRecord*> all_txns;
  std::set<std::string> key_names;
  for (const auto& s : trace.sessions) {
    if (s.sid.value == 0) malformed("session id 0 is reserved");
    if (!sids.insert(s.sid.value).second) malformed("duplicate session s" + std::to_string(s.sid.value));
    Position last = 0;
    for (const auto& t : s.txns) {
      if (t.tid.is_initial()) malformed("transaction id 0 is reserved for the initial state");
      if (!all_txns.emplace(t.tid.value, &t).second) malformed("duplicate transaction " + describe(t.tid));
      for (const auto& op : t.ops) {
        if (op.key.empty()) malformed("empty key in " + describe(t.tid));
        if (op.pos <= last) {
          malformed("position regression in session s" + std::to_string(s.sid.value) + " at " +
                    describe(t.tid));
        }
        last = op.pos;
        key_names.insert(op.key);
      }
    }
  }

  auto wrote_before = [](const TxnRecord& t, const std::string& key, Position before) {
    for (const auto& op : t.ops) {
      if (op.pos >= before) break;
      if (op.kind == OpKind::Write && op.key == key) return true;
    }
    return false;
  };

  for (const auto& s : trace.sessions) {
    for (const auto& t : s.txns) {
      if (t.status != TxnStatus::Committed) continue;
      for (const auto& op : t.ops) {
        if (op.kind != OpKind::Read || op.writer.is_initial()) continue;
        if (op.writer == t.tid) {
          if (!wrote_before(t, op.key, op.pos)) {
            malformed(describe(t.tid) + " reads " + op.key + " from itself before writing it");
          }
          continue;
        }
        auto it = all_txns.find(op.writer.value);
        if (it == all_txns.end()) malformed(describe(t.tid) + " reads from unknown " + describe(op.writer));
        const TxnRecord& w = *it->second;
        if (w.status != TxnStatus::Committed) {
          malformed(describe(t.tid) + " reads from aborted " + describe(op.writer));
        }
        bool wrote = false;
        for (const auto& wop : w.ops) wrote = wrote || (wop.kind == OpKind::Write && wop.key == op.key);
        if (!wrote) malformed(describe(t.tid) + " reads " + op.key + " from " + describe(op.writer) + ", which never wrote it");
      }
    }
  }

  ExecutionHistory h;
  h.keys_.assign(key_names.begin(), key_names.end());
  for (KeyIndex k = 0; k < h.keys_.size(); ++k) h.key_ids_.emplace(h.keys_[k], k);

  Transaction t0;
  t0.tid = kInitialTxn;
  for (KeyIndex k = 0; k < h.keys_.size(); ++k) t0.events.push_back(Event{OpKind::Write, k, 0, 0, 0});
  h.txns_.push_back(std::move(t0));

  std::vector<std::pair<const SessionRecord*, const TxnRecord*>> committed;
  for (const auto& s : trace.sessions) {
    for (const auto& t : s.txns) {
      if (t.status == TxnStatus::Committed) committed.emplace_back(&s, &t);
    }
  }
  std::sort(committed.begin(), committed.end(),
            [](const auto& a, const auto& b) { return a.second->tid < b.second->tid; });
  for (const auto& [s, t] : committed) {
    h.tid_index_.emplace(t->tid.value, static_cast<TxnIndex>(h.txns_.size()));
    Transaction txn;
    txn.tid = t->tid;
    txn.sid = s->sid;
    h.txns_.push_back(std::move(txn));
  }
  h.tid_index_.emplace(0, 0);

  // Normalize: keep the last write per key, drop reads satisfied by the
  // transaction's own writes.
  for (const auto& [s, t] : committed) {
    Transaction& txn = h.txns_[h.tid_index_.at(t->tid.value)];
    std::map<std::string, Position> last_write;
    for (const auto& op : t->ops) {
      if (op.kind == OpKind::Write) last_write[op.key] = op.pos;
    }
    for (const auto& op : t->ops) {
      KeyIndex k = h.key_ids_.at(op.key);
      if (op.kind == OpKind::Write) {
        if (last_write.at(op.key) == op.pos) txn.events.push_back(Event{OpKind::Write, k, op.pos, 0, op.value});
      } else if (op.writer != t->tid) {
        txn.events.push_back(Event{OpKind::Read, k, op.pos, h.tid_index_.at(op.writer.value), op.value});
      }
    }
  }

  std::vector<SessionInfo> sessions;
  for (const auto& s : trace.sessions) {
    SessionInfo info{s.sid, {}};
    for (const auto& t : s.txns) {
      if (t.status == TxnStatus::Committed) info.txns.push_back(h.tid_index_.at(t.tid.value));
    }
    sessions.push_back(std::move(info));
  }
  std::sort(sessions.begin(), sessions.end(), [](const auto& a, const auto& b) { return a.sid < b.sid; });
  h.sessions_ = std::move(sessions);

  const std::size_t n = h.txns_.size();
  h.session_of_.assign(n, ExecutionHistory::kNoSession);
  h.so_ = Relation(n);
  for (std::size_t si = 0; si < h.sessions_.size(); ++si) {
    const auto& ts = h.sessions_[si].txns;
    for (std::size_t a = 0; a < ts.size(); ++a) {
      h.session_of_[ts[a]] = si;
      h.so_.set(0, ts[a]);
      for (std::size_t b = a + 1; b < ts.size(); ++b) h.so_.set(ts[a], ts[b]);
    }
  }

  h.wr_k_.assign(h.keys_.size(), Relation(n));
  h.wr_ = Relation(n);
  for (TxnIndex t = 0; t < n; ++t) {
    for (const auto& e : h.txns_[t].events) {
      if (e.kind != OpKind::Read) continue;
      h.wr_k_[e.key].set(e.writer, t);
      h.wr_.set(e.writer, t);
    }
  }

  h.hb_ = h.so_;
  h.hb_ |= h.wr_;
  h.hb_.close_transitively();
  return h;
}

Relation hb(const ExecutionHistory& history) { return history.hb(); }

PositionIndexes position_indexes(const ExecutionHistory& history) {
  PositionIndexes idx;
  const std::size_t n = history.size();
  const std::size_t m = history.key_count();
  idx.rdpos_k.assign(n, std::vector<std::vector<Position>>(m));
  idx.rdpos_all.assign(n, {});
  idx.wrpos_k.assign(n, std::vector<std::optional<Position>>(m));
  for (TxnIndex t = 0; t < n; ++t) {
    for (const auto& e : history.txn(t).events) {
      if (e.kind == OpKind::Read) {
        idx.rdpos_k[t][e.key].push_back(e.pos);
        idx.rdpos_all[t].push_back(e.pos);
      } else {
        idx.wrpos_k[t][e.key] = e.pos;
      }
    }
  }
  return idx;
}

Trace to_trace(const ExecutionHistory& history) {
  Trace out;
  for (const auto& s : history.sessions()) {
    SessionRecord rec{s.sid, {}};
    for (TxnIndex t : s.txns) {
      TxnRecord tr;
      tr.tid = history.tid(t);
      for (const auto& e : history.txn(t).events) {
        tr.ops.push_back(TraceOp{e.kind, history.key_name(e.key), e.pos,
                                 e.kind == OpKind::Read ? history.tid(e.writer) : TxnId{}, e.value});
      }
      rec.txns.push_back(std::move(tr));
    }
    out.sessions.push_back(std::move(rec));
  }
  return out;
}

}  // namespace txpredict
