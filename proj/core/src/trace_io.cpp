#include "txpredict/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "txpredict/error.hpp"

namespace txpredict {

namespace {

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size() || line[i] == '#') break;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') ++i;
    out.push_back(Token{line.substr(start, i - start), start + 1});
  }
  return out;
}

class LineParser {
 public:
  LineParser(std::size_t line, const std::vector<Token>& toks) : line_(line), toks_(toks) {}

  void expect_count(std::size_t n) const {
    if (toks_.size() < n) {
      std::size_t col = toks_.empty() ? 1 : toks_.back().column + toks_.back().text.size();
      throw ParseError(line_, col, "expected " + std::to_string(n - 1) + " operand(s) after '" +
                                       std::string(toks_[0].text) + "'");
    }
    if (toks_.size() > n) throw ParseError(line_, toks_[n].column, "unexpected token '" + std::string(toks_[n].text) + "'");
  }

  template <typename Int>
  Int integer(std::size_t i, const char* what) const {
    const Token& t = toks_.at(i);
    Int v{};
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
      throw ParseError(line_, t.column, std::string("expected ") + what + ", got '" + std::string(t.text) + "'");
    }
    return v;
  }

  std::string word(std::size_t i) const { return std::string(toks_.at(i).text); }
  std::size_t column(std::size_t i) const { return toks_.at(i).column; }

 private:
  std::size_t line_;
  const std::vector<Token>& toks_;
};

}  // namespace

Trace parse_trace(std::string_view text) {
  Trace trace;
  SessionRecord* session = nullptr;
  TxnRecord* txn = nullptr;  // open (unterminated) transaction
  std::set<std::uint32_t> tids;
  std::set<std::uint32_t> sids;
  Position last_pos = 0;
  std::size_t open_line = 0;

  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;

    auto toks = tokenize(line);
    if (toks.empty()) {
      if (end == text.size()) break;
      continue;
    }
    LineParser p(line_no, toks);
    const std::string_view head = toks[0].text;

    auto require_open_txn = [&] {
      if (txn == nullptr) throw SemanticError(line_no, "'" + std::string(head) + "' outside of a transaction");
    };
    auto require_closed_txn = [&] {
      if (txn != nullptr) {
        throw SemanticError(line_no, "transaction t" + std::to_string(txn->tid.value) + " opened on line " +
                                         std::to_string(open_line) + " is not terminated");
      }
    };

    if (head == "session") {
      p.expect_count(2);
      require_closed_txn();
      auto sid = p.integer<std::uint32_t>(1, "session id");
      if (sid == 0) throw SemanticError(line_no, "session id must be positive");
      if (!sids.insert(sid).second) throw SemanticError(line_no, "duplicate session " + std::to_string(sid));
      trace.sessions.push_back(SessionRecord{SessionId{sid}, {}});
      session = &trace.sessions.back();
      last_pos = 0;
    } else if (head == "txn") {
      p.expect_count(2);
      require_closed_txn();
      if (session == nullptr) throw SemanticError(line_no, "'txn' before any 'session'");
      auto tid = p.integer<std::uint32_t>(1, "transaction id");
      if (tid == 0) throw SemanticError(line_no, "transaction id 0 is reserved");
      if (!tids.insert(tid).second) throw SemanticError(line_no, "duplicate transaction " + std::to_string(tid));
      session->txns.push_back(TxnRecord{TxnId{tid}, {}, TxnStatus::Committed});
      txn = &session->txns.back();
      open_line = line_no;
    } else if (head == "r" || head == "w") {
      const bool read = head == "r";
      p.expect_count(read ? 5 : 4);
      require_open_txn();
      TraceOp op;
      op.kind = read ? OpKind::Read : OpKind::Write;
      op.key = p.word(1);
      op.pos = p.integer<Position>(2, "position");
      if (op.pos == 0 || op.pos == kPositionInfinity) throw SemanticError(line_no, "position out of range");
      if (read) {
        op.writer = TxnId{p.integer<std::uint32_t>(3, "writer id")};
        op.value = p.integer<Value>(4, "value");
      } else {
        op.value = p.integer<Value>(3, "value");
      }
      if (op.pos <= last_pos) {
        throw SemanticError(line_no, "position " + std::to_string(op.pos) + " does not exceed previous position " +
                                         std::to_string(last_pos));
      }
      last_pos = op.pos;
      txn->ops.push_back(std::move(op));
    } else if (head == "commit" || head == "abort") {
      p.expect_count(1);
      require_open_txn();
      txn->status = head == "commit" ? TxnStatus::Committed : TxnStatus::Aborted;
      txn = nullptr;
    } else if (head == "boundary") {
      p.expect_count(3);
      require_closed_txn();
      auto sid = p.integer<std::uint32_t>(1, "session id");
      Position b = kPositionInfinity;
      if (p.word(2) != "inf") {
        b = p.integer<Position>(2, "position or 'inf'");
        if (b == 0 || b == kPositionInfinity) throw SemanticError(line_no, "boundary position out of range");
      }
      if (!sids.contains(sid)) throw SemanticError(line_no, "boundary for unknown session " + std::to_string(sid));
      if (!trace.boundaries.emplace(SessionId{sid}, b).second) {
        throw SemanticError(line_no, "duplicate boundary for session " + std::to_string(sid));
      }
      session = nullptr;
    } else if (head == "schedule") {
      require_closed_txn();
      if (trace.schedule) throw SemanticError(line_no, "duplicate schedule line");
      std::vector<TxnId> sched;
      std::set<std::uint32_t> seen;
      for (std::size_t i = 1; i < toks.size(); ++i) {
        auto tid = p.integer<std::uint32_t>(i, "transaction id");
        if (!tids.contains(tid)) throw SemanticError(line_no, "schedule names unknown transaction " + std::to_string(tid));
        if (!seen.insert(tid).second) throw SemanticError(line_no, "schedule repeats transaction " + std::to_string(tid));
        sched.push_back(TxnId{tid});
      }
      if (sched.size() != tids.size()) throw SemanticError(line_no, "schedule is not a permutation of all transactions");
      trace.schedule = std::move(sched);
      session = nullptr;
    } else {
      throw ParseError(line_no, toks[0].column, "unknown directive '" + std::string(head) + "'");
    }
    if (end == text.size()) break;
  }
  if (txn != nullptr) {
    throw SemanticError(open_line, "transaction t" + std::to_string(txn->tid.value) + " is not terminated");
  }
  return trace;
}

std::string emit_trace(const Trace& trace) {
  std::ostringstream os;
  for (const auto& s : trace.sessions) {
    os << "session " << s.sid.value << '\n';
    for (const auto& t : s.txns) {
      os << "txn " << t.tid.value << '\n';
      for (const auto& op : t.ops) {
        if (op.kind == OpKind::Read) {
          os << "r " << op.key << ' ' << op.pos << ' ' << op.writer.value << ' ' << op.value << '\n';
        } else {
          os << "w " << op.key << ' ' << op.pos << ' ' << op.value << '\n';
        }
      }
      os << (t.status == TxnStatus::Committed ? "commit" : "abort") << '\n';
    }
  }
  for (const auto& [sid, b] : trace.boundaries) {
    os << "boundary " << sid.value << ' ';
    if (b == kPositionInfinity) {
      os << "inf";
    } else {
      os << b;
    }
    os << '\n';
  }
  if (trace.schedule) {
    os << "schedule";
    for (TxnId t : *trace.schedule) os << ' ' << t.value;
    os << '\n';
  }
  return os.str();
}

Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string node_label(const ExecutionHistory& h, TxnIndex t, bool values) {
  std::string label = "t" + std::to_string(h.tid(t).value);
  if (t == 0) return label;
  for (const auto& e : h.txn(t).events) {
    label += "\\n";
    label += e.kind == OpKind::Read ? "r(" : "w(";
    label += dot_escape(h.key_name(e.key));
    label += ")@" + std::to_string(e.pos);
    if (values) label += "=" + std::to_string(e.value);
  }
  return label;
}

}  // namespace

std::string emit_dot(const ExecutionHistory& h, const DotOptions& options) {
  std::ostringstream os;
  os << "digraph history {\n";
  os << "  node [shape=box, fontname=\"monospace\"];\n";
  os << "  t0 [label=\"" << node_label(h, 0, options.show_values) << "\"];\n";
  for (const auto& s : h.sessions()) {
    os << "  subgraph cluster_s" << s.sid.value << " {\n";
    os << "    label=\"s" << s.sid.value << "\";\n";
    for (TxnIndex t : s.txns) {
      os << "    t" << h.tid(t).value << " [label=\"" << node_label(h, t, options.show_values) << "\"];\n";
    }
    os << "  }\n";
  }
  for (const auto& s : h.sessions()) {
    for (std::size_t i = 1; i < s.txns.size(); ++i) {
      os << "  t" << h.tid(s.txns[i - 1]).value << " -> t" << h.tid(s.txns[i]).value << " [label=\"so\"];\n";
    }
  }
  for (KeyIndex k = 0; k < h.key_count(); ++k) {
    for (auto [w, r] : h.wr(k).pairs()) {
      os << "  t" << h.tid(static_cast<TxnIndex>(w)).value << " -> t" << h.tid(static_cast<TxnIndex>(r)).value
         << " [label=\"wr_" << dot_escape(h.key_name(k)) << "\"];\n";
    }
  }
  for (const auto& e : options.highlight) {
    os << "  t" << e.from.value << " -> t" << e.to.value << " [label=\"" << dot_escape(e.label)
       << "\", color=red, fontcolor=red, penwidth=2];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace txpredict
