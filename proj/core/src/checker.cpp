#include "txpredict/checker.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <tuple>

#include "txpredict/error.hpp"

namespace txpredict {

std::string edge_label(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::SessionOrder: return "so";
    case EdgeKind::WriteRead: return "wr";
    case EdgeKind::WwCausal:
    case EdgeKind::WwRc:
    case EdgeKind::WwSerial: return "ww";
    case EdgeKind::ReadWrite: return "rw";
  }
  return "?";
}

std::string to_string(IsolationLevel level) { return level == IsolationLevel::Causal ? "causal" : "rc"; }

bool is_serial_order(const ExecutionHistory& h, const std::vector<TxnIndex>& order) {
  const std::size_t n = h.size();
  if (order.size() != n || n == 0 || order[0] != 0) return false;
  std::vector<std::size_t> at(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (order[i] >= n || at[order[i]] != n) return false;
    at[order[i]] = i;
  }
  for (auto [a, b] : h.so().pairs()) {
    if (at[a] >= at[b]) return false;
  }
  for (TxnIndex t = 0; t < n; ++t) {
    for (const auto& e : h.txn(t).events) {
      if (e.kind != OpKind::Read) continue;
      if (at[e.writer] >= at[t]) return false;
      for (std::size_t i = at[e.writer] + 1; i < at[t]; ++i) {
        if (h.writes(order[i], e.key)) return false;
      }
    }
  }
  return true;
}

Verdict check_serializable(const ExecutionHistory& h, const smt::SolverOptions& options) {
  const std::size_t n = h.size();
  smt::ConstraintProgram p;
  std::vector<smt::Term> co;
  for (std::size_t t = 0; t < n; ++t) {
    co.push_back(p.declare_int("co[t" + std::to_string(h.tid(static_cast<TxnIndex>(t)).value) + "]", 0,
                               static_cast<std::int64_t>(n) - 1));
  }
  p.add(p.mk_distinct(co));
  Relation base = h.so();
  base |= h.wr();
  for (auto [a, b] : base.pairs()) p.add(p.mk_lt(co[a], co[b]));
  for (KeyIndex k = 0; k < h.key_count(); ++k) {
    auto writers = h.writers(k);
    for (auto [t2, t3] : h.wr(k).pairs()) {
      for (TxnIndex t1 : writers) {
        if (t1 == t2 || t1 == t3) continue;
        p.add(p.mk_implies(p.mk_lt(co[t1], co[t3]), p.mk_lt(co[t1], co[t2])));
      }
    }
  }

  smt::SolveResult r = smt::check_sat(p, options);
  Verdict v;
  if (r.status == smt::SatStatus::Unknown) throw SolverUnknown("serializability check: " + r.reason);
  if (r.status == smt::SatStatus::Unsat) {
    v.kind = Verdict::Kind::Unserializable;
    return v;
  }
  std::vector<std::pair<std::int64_t, TxnIndex>> ranked;
  for (TxnIndex t = 0; t < n; ++t) ranked.emplace_back(r.model->value(p, co[t]), t);
  std::sort(ranked.begin(), ranked.end());
  v.kind = Verdict::Kind::Serializable;
  for (auto [_, t] : ranked) v.commit_order.push_back(t);
  if (!is_serial_order(h, v.commit_order)) throw InconsistentModel("extracted commit order is not a serial witness");
  return v;
}

namespace {

class SerialSearch {
 public:
  explicit SerialSearch(const ExecutionHistory& h) : h_(h), n_(h.size()), placed_(n_, false) {
    reads_from_.resize(n_);
    pending_by_key_.resize(h.key_count());
    for (TxnIndex t = 0; t < n_; ++t) {
      for (const auto& e : h.txn(t).events) {
        if (e.kind == OpKind::Read) {
          reads_from_[t].push_back(e.writer);
          pending_by_key_[e.key].emplace_back(e.writer, t);
        }
      }
    }
  }

  /// nullopt when the node budget (0 = unlimited) runs out.
  std::optional<bool> run(std::size_t budget = 0) {
    budget_ = budget;
    order_.push_back(0);
    placed_[0] = true;
    const bool found = dfs();
    if (!found && exhausted_) return std::nullopt;
    return found;
  }

  const std::vector<TxnIndex>& order() const { return order_; }

 private:
  bool can_place(TxnIndex t) const {
    for (TxnIndex u = 0; u < n_; ++u) {
      if (h_.so().test(u, t) && !placed_[u]) return false;
    }
    for (TxnIndex w : reads_from_[t]) {
      if (!placed_[w]) return false;
    }
    // t may not land strictly between a placed writer and its unplaced reader.
    for (const auto& e : h_.txn(t).events) {
      if (e.kind != OpKind::Write) continue;
      for (auto [w, r] : pending_by_key_[e.key]) {
        if (placed_[w] && !placed_[r] && r != t) return false;
      }
    }
    return true;
  }

  bool dfs() {
    if (order_.size() == n_) return true;
    if (budget_ != 0 && ++nodes_ > budget_) {
      exhausted_ = true;
      return false;
    }
    for (TxnIndex t = 1; t < n_; ++t) {
      if (placed_[t] || !can_place(t)) continue;
      placed_[t] = true;
      order_.push_back(t);
      if (dfs()) return true;
      order_.pop_back();
      placed_[t] = false;
    }
    return false;
  }

  const ExecutionHistory& h_;
  std::size_t n_;
  std::vector<bool> placed_;
  std::vector<std::vector<TxnIndex>> reads_from_;
  std::vector<std::vector<std::pair<TxnIndex, TxnIndex>>> pending_by_key_;
  std::vector<TxnIndex> order_;
  std::size_t budget_ = 0;
  std::size_t nodes_ = 0;
  bool exhausted_ = false;
};

}  // namespace

std::optional<Verdict> search_serializable(const ExecutionHistory& h, std::size_t max_nodes) {
  SerialSearch search(h);
  const auto found = search.run(max_nodes);
  if (!found) return std::nullopt;
  Verdict v;
  v.kind = *found ? Verdict::Kind::Serializable : Verdict::Kind::Unserializable;
  if (*found) v.commit_order = search.order();
  return v;
}

Verdict oracle_serializable(const ExecutionHistory& h, std::size_t max_txns) {
  if (h.size() - 1 > max_txns) {
    throw TooLarge("oracle limited to " + std::to_string(max_txns) + " transactions, got " +
                   std::to_string(h.size() - 1));
  }
  SerialSearch search(h);
  Verdict v;
  if (*search.run()) {
    v.kind = Verdict::Kind::Serializable;
    v.commit_order = search.order();
  } else {
    v.kind = Verdict::Kind::Unserializable;
  }
  return v;
}

namespace {

void add_unique(std::map<std::pair<TxnIndex, TxnIndex>, DepEdge>& out, DepEdge e) {
  auto key = std::make_pair(e.from, e.to);
  auto it = out.find(key);
  if (it == out.end() || e.key < it->second.key) out[key] = e;
}

std::vector<DepEdge> flatten(const std::map<std::pair<TxnIndex, TxnIndex>, DepEdge>& m) {
  std::vector<DepEdge> out;
  for (const auto& [_, e] : m) out.push_back(e);
  return out;
}

}  // namespace

std::vector<DepEdge> ww_causal_edges(const ExecutionHistory& h) {
  std::map<std::pair<TxnIndex, TxnIndex>, DepEdge> out;
  for (KeyIndex k = 0; k < h.key_count(); ++k) {
    auto writers = h.writers(k);
    for (auto [t2, t3] : h.wr(k).pairs()) {
      for (TxnIndex t1 : writers) {
        if (t1 == t2 || t1 == t3) continue;
        if (h.hb().test(t1, t3)) {
          add_unique(out, DepEdge{t1, static_cast<TxnIndex>(t2), EdgeKind::WwCausal, k});
        }
      }
    }
  }
  return flatten(out);
}

std::vector<DepEdge> ww_rc_edges(const ExecutionHistory& h) {
  std::map<std::pair<TxnIndex, TxnIndex>, DepEdge> out;
  for (TxnIndex t3 = 0; t3 < h.size(); ++t3) {
    const auto& ev = h.txn(t3).events;
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (ev[j].kind != OpKind::Read) continue;
      const TxnIndex t2 = ev[j].writer;
      const KeyIndex k = ev[j].key;
      for (std::size_t i = 0; i < j; ++i) {
        if (ev[i].kind != OpKind::Read) continue;
        const TxnIndex t1 = ev[i].writer;
        if (t1 == t2 || !h.writes(t1, k)) continue;
        add_unique(out, DepEdge{t1, t2, EdgeKind::WwRc, k});
      }
    }
  }
  return flatten(out);
}

std::optional<std::vector<DepEdge>> shortest_cycle(std::size_t n, const std::vector<DepEdge>& edges) {
  // One representative edge per ordered pair: so before wr before ww/rw,
  // then the smallest key.
  std::map<std::pair<TxnIndex, TxnIndex>, DepEdge> best;
  auto rank = [](const DepEdge& e) { return std::make_tuple(static_cast<int>(e.kind), e.key); };
  for (const auto& e : edges) {
    auto key = std::make_pair(e.from, e.to);
    auto it = best.find(key);
    if (it == best.end() || rank(e) < rank(it->second)) best[key] = e;
  }
  std::vector<std::vector<const DepEdge*>> adj(n);
  for (const auto& [_, e] : best) adj[e.from].push_back(&e);  // map order keeps targets ascending

  std::optional<std::vector<DepEdge>> result;
  for (TxnIndex s = 0; s < n; ++s) {
    std::vector<int> dist(n, -1);
    std::vector<const DepEdge*> parent(n, nullptr);
    std::deque<TxnIndex> queue{s};
    dist[s] = 0;
    const DepEdge* closing = nullptr;
    TxnIndex closing_from = 0;
    while (!queue.empty() && closing == nullptr) {
      TxnIndex u = queue.front();
      queue.pop_front();
      if (result && static_cast<std::size_t>(dist[u]) + 1 >= result->size()) break;
      for (const DepEdge* e : adj[u]) {
        if (e->to == s) {
          closing = e;
          closing_from = u;
          break;
        }
        if (e->to < s || dist[e->to] >= 0) continue;
        dist[e->to] = dist[u] + 1;
        parent[e->to] = e;
        queue.push_back(e->to);
      }
    }
    if (closing == nullptr) continue;
    std::vector<DepEdge> cyc{*closing};
    for (TxnIndex v = closing_from; v != s; v = parent[v]->from) cyc.push_back(*parent[v]);
    std::reverse(cyc.begin(), cyc.end());
    if (!result || cyc.size() < result->size()) result = std::move(cyc);
  }
  return result;
}

namespace {

std::vector<DepEdge> base_edges(const ExecutionHistory& h) {
  std::vector<DepEdge> edges;
  for (const auto& s : h.sessions()) {
    if (!s.txns.empty()) edges.push_back(DepEdge{0, s.txns.front(), EdgeKind::SessionOrder, std::nullopt});
    for (std::size_t i = 1; i < s.txns.size(); ++i) {
      edges.push_back(DepEdge{s.txns[i - 1], s.txns[i], EdgeKind::SessionOrder, std::nullopt});
    }
  }
  for (KeyIndex k = 0; k < h.key_count(); ++k) {
    for (auto [w, r] : h.wr(k).pairs()) {
      edges.push_back(DepEdge{static_cast<TxnIndex>(w), static_cast<TxnIndex>(r), EdgeKind::WriteRead, k});
    }
  }
  return edges;
}

Verdict conformance(const ExecutionHistory& h, const std::vector<DepEdge>& ww) {
  std::vector<DepEdge> edges = base_edges(h);
  edges.insert(edges.end(), ww.begin(), ww.end());
  Relation r(h.size());
  for (const auto& e : edges) r.set(e.from, e.to);
  Verdict v;
  if (is_acyclic(r)) {
    v.kind = Verdict::Kind::Conforms;
    return v;
  }
  v.kind = Verdict::Kind::Violates;
  v.cycle = *shortest_cycle(h.size(), edges);
  return v;
}

}  // namespace

Verdict check_causal(const ExecutionHistory& h) { return conformance(h, ww_causal_edges(h)); }

Verdict check_rc(const ExecutionHistory& h) { return conformance(h, ww_rc_edges(h)); }

Verdict check_isolation(const ExecutionHistory& h, IsolationLevel level) {
  return level == IsolationLevel::Causal ? check_causal(h) : check_rc(h);
}

std::vector<DepEdge> co_derived_rw_edges(const ExecutionHistory& h, const std::vector<TxnIndex>& order) {
  std::vector<std::size_t> at(h.size());
  for (std::size_t i = 0; i < order.size(); ++i) at[order[i]] = i;
  std::map<std::pair<TxnIndex, TxnIndex>, DepEdge> out;
  for (TxnIndex t1 = 0; t1 < h.size(); ++t1) {
    for (const auto& e : h.txn(t1).events) {
      if (e.kind != OpKind::Read) continue;
      for (TxnIndex t2 : h.writers(e.key)) {
        if (t2 == t1 || t2 == e.writer) continue;
        if (at[e.writer] < at[t2]) add_unique(out, DepEdge{t1, t2, EdgeKind::ReadWrite, e.key});
      }
    }
  }
  return flatten(out);
}

}  // namespace txpredict
