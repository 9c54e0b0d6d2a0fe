#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>

namespace txpredict {

/// Transaction identifier. Id 0 is reserved for the initial-state transaction.
struct TxnId {
  std::uint32_t value = 0;

  constexpr bool is_initial() const { return value == 0; }
  auto operator<=>(const TxnId&) const = default;
};

inline constexpr TxnId kInitialTxn{0};

/// Session (client connection) identifier; always positive in a trace.
/// SessionId{0} is used only as the pseudo-session of the initial transaction.
struct SessionId {
  std::uint32_t value = 0;

  auto operator<=>(const SessionId&) const = default;
};

/// Per-session event position. Position 0 belongs to the initial transaction.
using Position = std::uint32_t;

/// Sentinel meaning "past the last event of the session".
inline constexpr Position kPositionInfinity = std::numeric_limits<Position>::max();

using Value = std::int64_t;

/// Dense index of a transaction inside an ExecutionHistory (0 is t0).
using TxnIndex = std::uint32_t;

/// Dense index of a key inside an ExecutionHistory.
using KeyIndex = std::uint32_t;

inline std::ostream& operator<<(std::ostream& os, TxnId t) { return os << 't' << t.value; }
inline std::ostream& operator<<(std::ostream& os, SessionId s) { return os << 's' << s.value; }

}  // namespace txpredict

template <>
struct std::hash<txpredict::TxnId> {
  std::size_t operator()(txpredict::TxnId t) const noexcept { return std::hash<std::uint32_t>{}(t.value); }
};

template <>
struct std::hash<txpredict::SessionId> {
  std::size_t operator()(txpredict::SessionId s) const noexcept {
    return std::hash<std::uint32_t>{}(s.value);
  }
};
