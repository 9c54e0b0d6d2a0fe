#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "txpredict/ids.hpp"
#include "txpredict/relation.hpp"
#include "txpredict/trace.hpp"

namespace txpredict {

struct Event {
  OpKind kind = OpKind::Read;
  KeyIndex key = 0;
  Position pos = 0;
  TxnIndex writer = 0;  // reads only
  Value value = 0;
};

struct Transaction {
  TxnId tid{};
  SessionId sid{};
  std::vector<Event> events;

  Position first_pos() const { return events.empty() ? 0 : events.front().pos; }
  Position last_pos() const { return events.empty() ? 0 : events.back().pos; }
};

struct SessionInfo {
  SessionId sid{};
  std::vector<TxnIndex> txns;  // session order
};

/// Committed transactions of a run plus so and wr.
///
/// Transactions are stored densely: index 0 is t0, the remaining indexes
/// follow ascending TxnId. Sessions are sorted by SessionId. Immutable once
/// built.
class ExecutionHistory {
 public:
  static constexpr std::size_t kNoSession = static_cast<std::size_t>(-1);

  std::size_t size() const { return txns_.size(); }
  const Transaction& txn(TxnIndex t) const { return txns_[t]; }
  const std::vector<Transaction>& txns() const { return txns_; }
  std::optional<TxnIndex> index_of(TxnId tid) const;
  TxnId tid(TxnIndex t) const { return txns_[t].tid; }

  std::size_t key_count() const { return keys_.size(); }
  const std::string& key_name(KeyIndex k) const { return keys_[k]; }
  std::optional<KeyIndex> key_index(const std::string& name) const;

  const std::vector<SessionInfo>& sessions() const { return sessions_; }
  /// Session index of a transaction, kNoSession for t0.
  std::size_t session_of(TxnIndex t) const { return session_of_[t]; }

  /// Session order: t0 before everything, then per-session order.
  const Relation& so() const { return so_; }
  const Relation& wr(KeyIndex k) const { return wr_k_[k]; }
  const Relation& wr() const { return wr_; }
  /// (so ∪ wr)+
  const Relation& hb() const { return hb_; }

  /// Position of t's (single, normalized) write to k.
  std::optional<Position> wrpos(TxnIndex t, KeyIndex k) const;
  std::optional<Value> written_value(TxnIndex t, KeyIndex k) const;
  bool writes(TxnIndex t, KeyIndex k) const { return wrpos(t, k).has_value(); }
  std::vector<TxnIndex> writers(KeyIndex k) const;

  /// Positions of t's reads of k, ascending.
  std::vector<Position> rdpos(TxnIndex t, KeyIndex k) const;
  /// Positions of all of t's reads, ascending.
  std::vector<Position> rdpos_all(TxnIndex t) const;

  /// Largest event position across all sessions (0 if none).
  Position max_position() const;

 private:
  friend ExecutionHistory build_history(const Trace& trace);

  std::vector<Transaction> txns_;
  std::vector<std::string> keys_;
  std::unordered_map<std::string, KeyIndex> key_ids_;
  std::unordered_map<std::uint32_t, TxnIndex> tid_index_;
  std::vector<SessionInfo> sessions_;
  std::vector<std::size_t> session_of_;
  Relation so_;
  std::vector<Relation> wr_k_;
  Relation wr_;
  Relation hb_;
};

/// Drops aborted transactions, normalizes the rest and synthesizes t0.
/// Throws MalformedTrace on structural violations.
ExecutionHistory build_history(const Trace& trace);

/// (so ∪ wr)+ of a history.
Relation hb(const ExecutionHistory& history);

struct PositionIndexes {
  // Indexed [txn][key]; empty vector / nullopt when absent.
  std::vector<std::vector<std::vector<Position>>> rdpos_k;
  std::vector<std::vector<Position>> rdpos_all;
  std::vector<std::vector<std::optional<Position>>> wrpos_k;
};

PositionIndexes position_indexes(const ExecutionHistory& history);

/// Converts a history back to trace form (committed transactions only, t0 omitted).
Trace to_trace(const ExecutionHistory& history);

}  // namespace txpredict
