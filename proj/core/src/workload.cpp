#include "txpredict/workload.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "txpredict/error.hpp"

namespace txpredict {

namespace {

struct Lexer {
  std::string_view s;
  std::size_t i = 0;
  std::size_t line;

  [[noreturn]] void fail(const std::string& what) const {
    throw WorkloadError("script line " + std::to_string(line) + ": " + what);
  }

  void skip() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
  }
  bool done() {
    skip();
    return i >= s.size() || s[i] == '#';
  }
  bool peek_is(std::string_view tok) {
    skip();
    return s.substr(i, tok.size()) == tok;
  }
  bool accept(std::string_view tok) {
    if (!peek_is(tok)) return false;
    i += tok.size();
    return true;
  }
  std::string word() {
    skip();
    std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '#') ++i;
    if (b == i) fail("expected a key");
    return std::string(s.substr(b, i - b));
  }
  std::string ident() {
    skip();
    std::size_t b = i;
    if (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_')) {
      ++i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
    }
    if (b == i) fail("expected a variable name");
    return std::string(s.substr(b, i - b));
  }

  Expr::Part operand(bool negate) {
    skip();
    Expr::Part p;
    p.negate = negate;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), p.literal);
      if (ec != std::errc()) fail("bad integer");
      i = static_cast<std::size_t>(ptr - s.data());
    } else {
      p.var = ident();
    }
    return p;
  }

  Expr expr() {
    Expr e;
    bool neg = accept("-");
    e.parts.push_back(operand(neg));
    for (;;) {
      if (accept("+")) {
        e.parts.push_back(operand(false));
      } else if (peek_is("-") && !peek_is("->")) {
        ++i;
        e.parts.push_back(operand(true));
      } else {
        return e;
      }
    }
  }

  CmpOp cmp() {
    if (accept("<=")) return CmpOp::Le;
    if (accept(">=")) return CmpOp::Ge;
    if (accept("==")) return CmpOp::Eq;
    if (accept("!=")) return CmpOp::Ne;
    if (accept("<")) return CmpOp::Lt;
    if (accept(">")) return CmpOp::Gt;
    fail("expected a comparison operator");
  }
};

}  // namespace

std::vector<SessionScript> parse_script(std::string_view text) {
  std::vector<SessionScript> out;
  std::set<std::uint32_t> sids;
  TxnScript* txn = nullptr;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    Lexer lx{line, 0, line_no};
    if (lx.done()) continue;
    std::string head = lx.ident();
    if (head == "session") {
      if (txn) lx.fail("transaction not committed before new session");
      lx.skip();
      std::uint32_t sid = 0;
      auto [ptr, ec] = std::from_chars(line.data() + lx.i, line.data() + line.size(), sid);
      if (ec != std::errc() || sid == 0) lx.fail("expected a positive session id");
      lx.i = static_cast<std::size_t>(ptr - line.data());
      if (!sids.insert(sid).second) lx.fail("duplicate session " + std::to_string(sid));
      out.push_back(SessionScript{SessionId{sid}, {}});
    } else if (head == "txn") {
      if (out.empty()) lx.fail("'txn' before any session");
      if (txn) lx.fail("previous transaction not committed");
      out.back().txns.emplace_back();
      txn = &out.back().txns.back();
    } else if (head == "commit") {
      if (!txn) lx.fail("'commit' outside a transaction");
      txn = nullptr;
    } else {
      if (!txn) lx.fail("'" + head + "' outside a transaction");
      ScriptOp op;
      if (head == "get") {
        op.kind = ScriptOp::Kind::Get;
        op.key = lx.word();
        if (!lx.accept("->")) lx.fail("expected '->'");
        op.var = lx.ident();
      } else if (head == "put") {
        op.kind = ScriptOp::Kind::Put;
        op.key = lx.word();
        op.value = lx.expr();
      } else if (head == "abort_if" || head == "commit_if") {
        op.kind = head == "abort_if" ? ScriptOp::Kind::AbortIf : ScriptOp::Kind::CommitIf;
        op.cond.lhs = lx.expr();
        op.cond.op = lx.cmp();
        op.cond.rhs = lx.expr();
      } else {
        lx.fail("unknown operation '" + head + "'");
      }
      txn->ops.push_back(std::move(op));
    }
    if (!lx.done()) lx.fail("unexpected trailing text");
  }
  if (txn) throw WorkloadError("script ends inside a transaction");
  return out;
}

namespace {

Expr var_plus(const std::string& var, Value delta) {
  Expr e;
  e.parts.push_back(Expr::Part{false, var, 0});
  e.parts.push_back(Expr::Part{delta < 0, "", delta < 0 ? -delta : delta});
  return e;
}

Expr lit(Value v) {
  Expr e;
  e.parts.push_back(Expr::Part{false, "", v});
  return e;
}

Expr var(const std::string& v) {
  Expr e;
  e.parts.push_back(Expr::Part{false, v, 0});
  return e;
}

ScriptOp get(const std::string& key, const std::string& v) { return ScriptOp{ScriptOp::Kind::Get, key, v, {}, {}}; }
ScriptOp put(const std::string& key, Expr e) { return ScriptOp{ScriptOp::Kind::Put, key, "", std::move(e), {}}; }
ScriptOp abort_if(Expr l, CmpOp op, Expr r) {
  return ScriptOp{ScriptOp::Kind::AbortIf, "", "", {}, Condition{std::move(l), op, std::move(r)}};
}
ScriptOp commit_if(Expr l, CmpOp op, Expr r) {
  return ScriptOp{ScriptOp::Kind::CommitIf, "", "", {}, Condition{std::move(l), op, std::move(r)}};
}

TxnScript deposit(const std::string& key, Value amount) {
  return TxnScript{{get(key, "b"), put(key, var_plus("b", amount))}};
}

TxnScript withdraw(const std::string& key, Value amount) {
  return TxnScript{{get(key, "b"), abort_if(var("b"), CmpOp::Lt, lit(amount)), put(key, var_plus("b", -amount))}};
}

TxnScript vote() { return TxnScript{{get("votes", "v"), commit_if(var("v"), CmpOp::Ge, lit(1)), put("votes", lit(1))}}; }

std::string account_key(const char* kind, std::uint64_t acct) { return std::string(kind) + std::to_string(acct); }

TxnScript smallbank_txn(std::mt19937_64& rng) {
  const std::uint64_t kind = rng() % 5;
  const std::uint64_t a = rng() % 2;
  const std::string chk = account_key("chk", a);
  const std::string sav = account_key("sav", a);
  switch (kind) {
    case 0:  // deposit into checking
      return TxnScript{{get(chk, "c"), put(chk, var_plus("c", 20))}};
    case 1:  // transact savings
      return TxnScript{{get(sav, "s"), put(sav, var_plus("s", 30))}};
    case 2: {  // amalgamate: move a's savings and checking into the other account's checking
      const std::string dst = account_key("chk", 1 - a);
      Expr total = var("s");
      total.parts.push_back(Expr::Part{false, "c", 0});
      total.parts.push_back(Expr::Part{false, "d", 0});
      return TxnScript{{get(sav, "s"), get(chk, "c"), get(dst, "d"), put(sav, lit(0)), put(chk, lit(0)), put(dst, total)}};
    }
    case 3:  // balance
      return TxnScript{{get(chk, "c"), get(sav, "s")}};
    default: {  // write check
      Expr total = var("c");
      total.parts.push_back(Expr::Part{false, "s", 0});
      return TxnScript{{get(chk, "c"), get(sav, "s"), abort_if(total, CmpOp::Lt, lit(15)), put(chk, var_plus("c", -15))}};
    }
  }
}

}  // namespace

Workload Workload::builtin(BuiltinWorkload kind) {
  Workload w;
  w.builtin_ = kind;
  switch (kind) {
    case BuiltinWorkload::DepositDeposit: w.name_ = "deposit-deposit"; break;
    case BuiltinWorkload::DepositWithdraw: w.name_ = "deposit-withdraw"; break;
    case BuiltinWorkload::Voter: w.name_ = "voter"; break;
    case BuiltinWorkload::SmallbankLite: w.name_ = "smallbank-lite"; break;
  }
  return w;
}

Workload Workload::scripted(std::string name, std::vector<SessionScript> sessions) {
  Workload w;
  w.name_ = std::move(name);
  w.script_ = std::move(sessions);
  return w;
}

std::vector<std::string> builtin_workload_names() {
  return {"deposit-deposit", "deposit-withdraw", "voter", "smallbank-lite"};
}

Workload Workload::from_spec(const std::string& spec) {
  for (auto k : {BuiltinWorkload::DepositDeposit, BuiltinWorkload::DepositWithdraw, BuiltinWorkload::Voter,
                 BuiltinWorkload::SmallbankLite}) {
    if (builtin(k).name() == spec) return builtin(k);
  }
  std::ifstream in(spec, std::ios::binary);
  if (!in) throw WorkloadError("unknown workload '" + spec + "' (not a builtin name or readable script)");
  std::ostringstream ss;
  ss << in.rdbuf();
  return scripted(spec, parse_script(ss.str()));
}

std::vector<SessionScript> Workload::instantiate(std::size_t sessions, std::size_t txns, std::uint64_t seed) const {
  if (!builtin_) return script_;
  std::vector<SessionScript> out;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t s = 1; s <= sessions; ++s) {
    SessionScript ss{SessionId{static_cast<std::uint32_t>(s)}, {}};
    switch (*builtin_) {
      case BuiltinWorkload::DepositDeposit:
        for (std::size_t j = 0; j < txns; ++j) ss.txns.push_back(deposit("acc", 40 + 10 * static_cast<Value>(s)));
        break;
      case BuiltinWorkload::DepositWithdraw:
        if (s == 1) {
          for (std::size_t j = 0; j < txns; ++j) ss.txns.push_back(deposit("acc", 50));
        } else {
          for (std::size_t j = 0; j < std::max<std::size_t>(1, txns / 2); ++j) ss.txns.push_back(withdraw("acc", 30));
        }
        break;
      case BuiltinWorkload::Voter:
        for (std::size_t j = 0; j < txns; ++j) ss.txns.push_back(vote());
        break;
      case BuiltinWorkload::SmallbankLite:
        for (std::size_t j = 0; j < txns; ++j) ss.txns.push_back(smallbank_txn(rng));
        break;
    }
    out.push_back(std::move(ss));
  }
  return out;
}

}  // namespace txpredict
