#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "txpredict/checker.hpp"
#include "txpredict/history.hpp"
#include "txpredict/solver.hpp"
#include "txpredict/trace.hpp"
#include "txpredict/workload.hpp"

namespace txpredict {

/// Versioned key-value state. Every key implicitly starts with t0's value 0.
class KVStore {
 public:
  struct Version {
    TxnId writer{};
    Value value = 0;
  };

  /// Appends the final value of each written key, in first-write order.
  void commit(TxnId tid, const std::vector<std::pair<std::string, Value>>& writes);

  const std::vector<Version>& versions(const std::string& key) const;
  std::optional<Value> value_by(TxnId writer, const std::string& key) const;
  TxnId latest_writer(const std::string& key) const;
  bool is_committed(TxnId tid) const { return tid.is_initial() || committed_.contains(tid.value); }

  /// Latest committed value of every key that has been written.
  std::map<std::string, Value> snapshot() const;

 private:
  std::map<std::string, std::vector<Version>> versions_;
  std::set<std::uint32_t> committed_;
};

struct LatestWriter {};

struct RandomWeak {
  IsolationLevel level = IsolationLevel::Causal;
  std::uint64_t seed = 0;
};

using ReadPolicy = std::variant<LatestWriter, RandomWeak>;

struct RunResult {
  Trace trace;  // includes aborted transactions and the schedule
  ExecutionHistory history;
  std::map<std::string, Value> final_values;
};

/// Executes whole transactions serially, picking the next session with a
/// seeded generator. Transaction ids follow execution order.
RunResult run_workload(const Workload& workload, std::size_t sessions, std::size_t txns_per_session,
                       std::uint64_t seed, const ReadPolicy& policy);

/// Writers of `key` that `inflight` may read from without breaking `level`,
/// ascending by id. `committed` holds the transactions finished so far (aborted
/// ones are ignored); only the reads of `inflight` are taken into account.
std::vector<TxnId> legal_writers(const Trace& committed, SessionId session, const TxnRecord& inflight,
                                 const std::string& key, IsolationLevel level);

enum class ValidationOutcome { ValidatedUnserializable, Serializable, Unknown };

std::string to_string(ValidationOutcome o);

struct Divergence {
  SessionId sid{};
  TxnId tid{};
  Position pos = 0;  // 0 for transaction-level reasons
  std::string reason;  // key-mismatch | writer-missing | isolation-illegal | abort-rewind | commit-flip
};

struct ValidationReport {
  ValidationOutcome outcome = ValidationOutcome::Unknown;
  bool diverged = false;
  std::vector<Divergence> divergences;
  Trace validating_trace;
  ExecutionHistory validating_history;
  std::map<std::string, Value> final_values;
};

/// Directed replay of a predicted history. Throws ReplayMismatch when the
/// prediction does not fit the workload's transaction skeleton.
ValidationReport validate(const Trace& predicted, const Workload& workload, std::size_t sessions,
                          std::size_t txns_per_session, std::uint64_t seed, IsolationLevel level,
                          const smt::SolverOptions& solver = {});

}  // namespace txpredict
