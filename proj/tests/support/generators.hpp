#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "txpredict/history.hpp"
#include "txpredict/store.hpp"
#include "txpredict/trace.hpp"
#include "txpredict/workload.hpp"

namespace txpredict::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }
inline bool coin(Rng& rng, unsigned percent) { return rng() % 100 < percent; }

struct TraceShape {
  std::size_t max_sessions = 3;
  std::size_t max_txns = 6;         // committed + aborted, across all sessions
  std::size_t max_ops = 4;
  std::size_t keys = 3;
  unsigned abort_percent = 10;
  unsigned self_read_percent = 10;
};

/// Arbitrary well-formed trace: reads observe t0, any earlier committed
/// writer of the key, or the transaction's own write. Nothing about isolation
/// is guaranteed.
Trace random_trace(Rng& rng, const TraceShape& shape = {});

/// Random scripted workload over a small key set, with abort_if / commit_if.
std::vector<SessionScript> random_script(Rng& rng, std::size_t sessions, std::size_t txns, std::size_t keys = 2);

struct ObservedCase {
  std::string label;
  Workload workload;
  std::size_t sessions = 0;
  std::size_t txns = 0;
  std::uint64_t seed = 0;
  RunResult run;
};

/// Observed (LatestWriter) executions: builtin workloads and random scripts,
/// 2..4 sessions, deterministic in `seed`.
std::vector<ObservedCase> observed_corpus(std::uint64_t seed, std::size_t count, std::size_t max_txns_per_session = 2);

}  // namespace txpredict::testing
