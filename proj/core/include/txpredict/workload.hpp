#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "txpredict/ids.hpp"

namespace txpredict {

/// Sum of signed terms; a term is either a variable name or an integer.
struct Expr {
  struct Part {
    bool negate = false;
    std::string var;  // empty when the part is a literal
    Value literal = 0;
  };
  std::vector<Part> parts;
};

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

struct Condition {
  Expr lhs;
  CmpOp op = CmpOp::Lt;
  Expr rhs;
};

struct ScriptOp {
  enum class Kind { Get, Put, AbortIf, CommitIf };

  Kind kind = Kind::Get;
  std::string key;  // Get / Put
  std::string var;  // Get target
  Expr value;       // Put
  Condition cond;   // AbortIf / CommitIf
};

/// One transaction body; reaching the end commits.
struct TxnScript {
  std::vector<ScriptOp> ops;
};

struct SessionScript {
  SessionId sid{};
  std::vector<TxnScript> txns;
};

/// Parses the scripted workload format:
///
///   session <sid>
///   txn
///   get <key> -> <var>
///   put <key> <expr>
///   abort_if <expr> <cmp> <expr>
///   commit_if <expr> <cmp> <expr>
///   commit
///
/// Throws WorkloadError with the offending line number.
std::vector<SessionScript> parse_script(std::string_view text);

enum class BuiltinWorkload { DepositDeposit, DepositWithdraw, Voter, SmallbankLite };

class Workload {
 public:
  static Workload builtin(BuiltinWorkload kind);
  static Workload scripted(std::string name, std::vector<SessionScript> sessions);
  /// Builtin name (deposit-deposit, deposit-withdraw, voter, smallbank-lite)
  /// or a path to a script file.
  static Workload from_spec(const std::string& name_or_path);

  const std::string& name() const { return name_; }
  bool is_scripted() const { return !builtin_.has_value(); }

  /// Session programs for one configuration. Scripted workloads ignore
  /// `sessions` and `txns_per_session`.
  std::vector<SessionScript> instantiate(std::size_t sessions, std::size_t txns_per_session, std::uint64_t seed) const;

 private:
  std::string name_;
  std::optional<BuiltinWorkload> builtin_;
  std::vector<SessionScript> script_;
};

std::vector<std::string> builtin_workload_names();

}  // namespace txpredict
