#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "txpredict/history.hpp"
#include "txpredict/solver.hpp"

namespace txpredict {

enum class EdgeKind { SessionOrder, WriteRead, WwCausal, WwRc, WwSerial, ReadWrite };

std::string edge_label(EdgeKind kind);

/// A labeled dependency edge between transactions (dense indexes).
struct DepEdge {
  TxnIndex from = 0;
  TxnIndex to = 0;
  EdgeKind kind = EdgeKind::SessionOrder;
  std::optional<KeyIndex> key;

  bool operator==(const DepEdge&) const = default;
};

struct Verdict {
  enum class Kind { Serializable, Unserializable, Conforms, Violates };

  Kind kind = Kind::Conforms;
  std::vector<TxnIndex> commit_order;  // Serializable only, t0 first
  std::vector<DepEdge> cycle;          // Violates only, closed walk

  bool ok() const { return kind == Kind::Serializable || kind == Kind::Conforms; }
};

enum class IsolationLevel { Causal, ReadCommitted };

std::string to_string(IsolationLevel level);

/// True when `order` (t0 first) is a serial witness: respects so and every
/// read observes the last preceding writer of its key.
bool is_serial_order(const ExecutionHistory& h, const std::vector<TxnIndex>& order);

/// Solver-based check. Throws SolverUnknown when the backend gives up.
Verdict check_serializable(const ExecutionHistory& h, const smt::SolverOptions& options = {});

/// Brute-force DFS over commit orders. Throws TooLarge above `max_txns`
/// non-initial transactions.
Verdict oracle_serializable(const ExecutionHistory& h, std::size_t max_txns = 9);

/// Same search as the oracle with a node budget instead of a size guard;
/// nullopt when the budget runs out.
std::optional<Verdict> search_serializable(const ExecutionHistory& h, std::size_t max_nodes);

/// ww edges forced by causal arbitration for a fixed history.
std::vector<DepEdge> ww_causal_edges(const ExecutionHistory& h);
/// ww edges forced by read-committed arbitration for a fixed history.
std::vector<DepEdge> ww_rc_edges(const ExecutionHistory& h);

Verdict check_causal(const ExecutionHistory& h);
Verdict check_rc(const ExecutionHistory& h);
Verdict check_isolation(const ExecutionHistory& h, IsolationLevel level);

/// Anti-dependency edges implied by a total commit order:
/// wr_k(tw, t1), t2 writes k, co(tw) < co(t2), t1 != t2  =>  rw(t1, t2).
std::vector<DepEdge> co_derived_rw_edges(const ExecutionHistory& h, const std::vector<TxnIndex>& order);

/// Shortest cycle over labeled edges, lexicographically smallest among ties.
std::optional<std::vector<DepEdge>> shortest_cycle(std::size_t n, const std::vector<DepEdge>& edges);

}  // namespace txpredict
