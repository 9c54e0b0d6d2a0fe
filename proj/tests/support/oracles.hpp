#pragma once

// Brute-force reference implementations over explicit commit orders. Slow,
// but written directly from the definitions and independent of the library's
// graph-based checkers.

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "txpredict/checker.hpp"
#include "txpredict/history.hpp"

namespace txpredict::testing {

/// Calls `visit` on every total order with t0 first that contains so and wr.
/// Stops early when `visit` returns true; returns whether it did.
inline bool for_each_order(const ExecutionHistory& h, const std::function<bool(const std::vector<TxnIndex>&)>& visit) {
  std::vector<TxnIndex> rest(h.size() - 1);
  std::iota(rest.begin(), rest.end(), 1);
  do {
    std::vector<TxnIndex> order{0};
    order.insert(order.end(), rest.begin(), rest.end());
    std::vector<std::size_t> at(h.size());
    for (std::size_t i = 0; i < order.size(); ++i) at[order[i]] = i;
    bool ok = true;
    for (auto [a, b] : h.so().pairs()) ok = ok && at[a] < at[b];
    for (auto [a, b] : h.wr().pairs()) ok = ok && at[a] < at[b];
    if (ok && visit(order)) return true;
  } while (std::next_permutation(rest.begin(), rest.end()));
  return false;
}

inline std::vector<std::size_t> positions_in(const std::vector<TxnIndex>& order) {
  std::vector<std::size_t> at(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) at[order[i]] = i;
  return at;
}

/// Every read observes the latest writer of its key that precedes the reader.
inline bool serial_witness(const ExecutionHistory& h, const std::vector<TxnIndex>& order) {
  const auto at = positions_in(order);
  for (TxnIndex t = 1; t < h.size(); ++t) {
    for (const auto& e : h.txn(t).events) {
      if (e.kind != OpKind::Read) continue;
      for (TxnIndex w : h.writers(e.key)) {
        if (w != e.writer && w != t && at[e.writer] < at[w] && at[w] < at[t]) return false;
      }
    }
  }
  return true;
}

/// A writer of k that happens before a reader of k must be ordered before the
/// writer the reader observed.
inline bool causal_witness(const ExecutionHistory& h, const std::vector<TxnIndex>& order) {
  const auto at = positions_in(order);
  for (TxnIndex t3 = 1; t3 < h.size(); ++t3) {
    for (const auto& e : h.txn(t3).events) {
      if (e.kind != OpKind::Read) continue;
      for (TxnIndex t1 : h.writers(e.key)) {
        if (t1 == e.writer || t1 == t3) continue;
        if (h.hb().test(t1, t3) && at[t1] > at[e.writer]) return false;
      }
    }
  }
  return true;
}

/// A read of k that follows (in the same transaction) a read from a writer of
/// k must not observe an older write of k.
inline bool rc_witness(const ExecutionHistory& h, const std::vector<TxnIndex>& order) {
  const auto at = positions_in(order);
  for (TxnIndex t = 1; t < h.size(); ++t) {
    const auto& ev = h.txn(t).events;
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (ev[j].kind != OpKind::Read) continue;
      for (std::size_t i = 0; i < j; ++i) {
        if (ev[i].kind != OpKind::Read) continue;
        const TxnIndex t1 = ev[i].writer;
        if (t1 != ev[j].writer && h.writes(t1, ev[j].key) && at[t1] > at[ev[j].writer]) return false;
      }
    }
  }
  return true;
}

inline bool brute_serializable(const ExecutionHistory& h) {
  return for_each_order(h, [&](const auto& o) { return serial_witness(h, o); });
}

inline bool brute_causal(const ExecutionHistory& h) {
  return for_each_order(h, [&](const auto& o) { return causal_witness(h, o); });
}

inline bool brute_rc(const ExecutionHistory& h) {
  return for_each_order(h, [&](const auto& o) { return rc_witness(h, o); });
}

inline bool brute_conforms(const ExecutionHistory& h, IsolationLevel level) {
  return level == IsolationLevel::Causal ? brute_causal(h) : brute_rc(h);
}

}  // namespace txpredict::testing
