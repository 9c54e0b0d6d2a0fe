#pragma once

#include <string>

#include "txpredict/history.hpp"
#include "txpredict/trace_io.hpp"

namespace txpredict::testing {

// Two deposits, the second sees the first: balance 110.
inline const char* const kDepositObserved = R"(session 1
txn 1
r acc 1 0 0
w acc 2 50
commit
session 2
txn 2
r acc 1 1 50
w acc 2 110
commit
)";

// Both deposits read the initial balance: lost update.
inline const char* const kDepositLostUpdate = R"(session 1
txn 1
r acc 1 0 0
w acc 2 50
commit
session 2
txn 2
r acc 1 0 0
w acc 2 60
commit
)";

// t3 sees t1's y through t2's session but misses t1's x.
inline const char* const kCausalViolation = R"(session 1
txn 1
w x 1 1
w y 2 1
commit
session 2
txn 2
r y 1 1 1
commit
txn 3
r x 2 0 0
commit
)";

// Two blind writers and one reader of the second.
inline const char* const kBlindWriters = R"(session 1
txn 1
w k 1 1
commit
session 2
txn 2
w k 1 2
commit
session 3
txn 3
r k 1 2 2
commit
)";

// deposit-withdraw, 2 sessions x 2 txns, seed 0.
inline const char* const kDepositWithdraw = R"(session 1
txn 1
r acc 1 0 0
w acc 2 50
commit
txn 3
r acc 3 2 20
w acc 4 70
commit
session 2
txn 2
r acc 1 1 50
w acc 2 20
commit
schedule 1 2 3
)";

inline ExecutionHistory history_of(const std::string& text) { return build_history(parse_trace(text)); }

}  // namespace txpredict::testing
