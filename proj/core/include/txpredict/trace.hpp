#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txpredict/ids.hpp"

namespace txpredict {

enum class OpKind { Read, Write };

enum class TxnStatus { Committed, Aborted };

/// One recorded operation. For reads `writer` names the transaction whose
/// write was observed (possibly the enclosing transaction itself).
struct TraceOp {
  OpKind kind = OpKind::Read;
  std::string key;
  Position pos = 0;
  TxnId writer{};
  Value value = 0;

  bool operator==(const TraceOp&) const = default;
};

struct TxnRecord {
  TxnId tid{};
  std::vector<TraceOp> ops;
  TxnStatus status = TxnStatus::Committed;

  bool operator==(const TxnRecord&) const = default;
};

struct SessionRecord {
  SessionId sid{};
  std::vector<TxnRecord> txns;

  bool operator==(const SessionRecord&) const = default;
};

/// Recorded event stream of one run, or the body of a predicted-history file.
///
/// `boundaries` is only populated for predicted histories; kPositionInfinity
/// encodes the "inf" boundary.
struct Trace {
  std::vector<SessionRecord> sessions;
  std::optional<std::vector<TxnId>> schedule;
  std::map<SessionId, Position> boundaries;

  bool operator==(const Trace&) const = default;

  const TxnRecord* find_txn(TxnId tid) const;
  const SessionRecord* find_session(SessionId sid) const;
};

}  // namespace txpredict
