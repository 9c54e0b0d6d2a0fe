#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "txpredict/error.hpp"
#include "txpredict/trace_io.hpp"

using namespace txpredict;
using namespace txpredict::testing;

TEST(TraceIo, RoundTripRandomTraces) {
  Rng rng(2024);
  for (int round = 0; round < 1000; ++round) {
    Trace t = random_trace(rng);
    if (coin(rng, 30)) {
      std::vector<TxnId> sched;
      for (const auto& s : t.sessions)
        for (const auto& x : s.txns) sched.push_back(x.tid);
      std::sort(sched.begin(), sched.end());
      t.schedule = sched;
    }
    if (coin(rng, 30)) {
      for (const auto& s : t.sessions) t.boundaries[s.sid] = coin(rng, 50) ? kPositionInfinity : 1;
    }
    const std::string text = emit_trace(t);
    const Trace back = parse_trace(text);
    ASSERT_EQ(back, t) << text;
    EXPECT_EQ(emit_trace(back), text);
  }
}

TEST(TraceIo, CommentsAndBlankLines) {
  const Trace t = parse_trace("# observed\n\nsession 1\ntxn 1\n  w a 1 3\ncommit\n");
  ASSERT_EQ(t.sessions.size(), 1u);
  EXPECT_EQ(t.sessions[0].txns[0].ops[0].value, 3);
}

TEST(TraceIo, BoundaryLines) {
  const Trace t = parse_trace("session 1\ntxn 1\nr a 1 0 0\ncommit\nsession 2\ntxn 2\nw a 1 1\ncommit\nboundary 1 1\nboundary 2 inf\n");
  EXPECT_EQ(t.boundaries.at(SessionId{1}), Position{1});
  EXPECT_EQ(t.boundaries.at(SessionId{2}), kPositionInfinity);
}

TEST(TraceIo, ParseErrorsCarryLocation) {
  try {
    parse_trace("session 1\ntxn 1\nq a 1\ncommit\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 1u);
  }
  EXPECT_THROW(parse_trace("session 1\ntxn 1\nr a 1 0\ncommit\n"), ParseError);
  EXPECT_THROW(parse_trace("session 1\ntxn 1\nw a x 1\ncommit\n"), ParseError);
}

TEST(TraceIo, SemanticErrors) {
  EXPECT_THROW(parse_trace("session 1\ntxn 1\nw a 2 1\nw b 2 1\ncommit\n"), SemanticError);
  EXPECT_THROW(parse_trace("session 1\ntxn 1\nw a 1 1\n"), SemanticError);
  EXPECT_THROW(parse_trace("session 1\ntxn 1\nw a 1 1\ncommit\nsession 1\n"), SemanticError);
  EXPECT_THROW(parse_trace("session 1\ntxn 0\ncommit\n"), SemanticError);
  EXPECT_THROW(parse_trace("session 1\ntxn 1\nw a 1 1\ncommit\nschedule 1 1\n"), SemanticError);
  EXPECT_THROW(parse_trace("session 1\ntxn 1\nw a 1 1\ncommit\nboundary 2 inf\n"), SemanticError);
  try {
    parse_trace("session 1\ntxn 1\nw a 1 1\ncommit\ntxn 1\ncommit\n");
    FAIL();
  } catch (const SemanticError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
}

TEST(TraceIo, DotOutput) {
  const auto h = history_of(kDepositObserved);
  const std::string dot = emit_dot(h, DotOptions{true, {DotEdge{TxnId{2}, TxnId{1}, "rw"}}});
  EXPECT_EQ(dot.rfind("digraph", 0), 0u);
  EXPECT_NE(dot.find("t1"), std::string::npos);
  EXPECT_NE(dot.find("rw"), std::string::npos);
  EXPECT_EQ(dot, emit_dot(h, DotOptions{true, {DotEdge{TxnId{2}, TxnId{1}, "rw"}}}));
}
