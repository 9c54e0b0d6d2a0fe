#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "txpredict/predictor.hpp"

using namespace txpredict;
using namespace txpredict::testing;

namespace {

// Every strict-boundary prefix: each session stops at one of its reads (that
// read may switch writer) or runs to the end. Returns true when some prefix
// conforms to `level` and is unserializable (and differs from the observed
// history when the latter is serializable).
bool brute_exact_strict(const ExecutionHistory& h, IsolationLevel level) {
  const auto& sessions = h.sessions();
  std::vector<std::vector<Position>> options(sessions.size());
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (TxnIndex t : sessions[s].txns)
      for (const auto& e : h.txn(t).events)
        if (e.kind == OpKind::Read) options[s].push_back(e.pos);
    options[s].push_back(kPositionInfinity);
  }
  const bool observed_serial = brute_serializable(h);

  std::vector<std::size_t> pick_idx(sessions.size(), 0);
  for (;;) {
    std::vector<Position> b(sessions.size());
    for (std::size_t s = 0; s < sessions.size(); ++s) b[s] = options[s][pick_idx[s]];
    auto readable = [&](TxnIndex w, KeyIndex k) {
      if (w == 0) return true;
      const auto p = h.wrpos(w, k);
      return p && *p < b[h.session_of(w)];
    };

    // Free reads: the read sitting exactly on a boundary.
    struct Free {
      TxnIndex reader;
      std::size_t event;
      std::vector<TxnIndex> writers;
    };
    std::vector<Free> free;
    bool feasible = true;
    for (TxnIndex t = 1; t < h.size() && feasible; ++t) {
      const Position bound = b[h.session_of(t)];
      const auto& ev = h.txn(t).events;
      for (std::size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].kind != OpKind::Read || ev[i].pos > bound) continue;
        if (ev[i].pos < bound) {
          feasible = feasible && readable(ev[i].writer, ev[i].key);
          continue;
        }
        Free f{t, i, {}};
        for (TxnIndex w : h.writers(ev[i].key))
          if (w != t && readable(w, ev[i].key)) f.writers.push_back(w);
        free.push_back(std::move(f));
      }
    }

    if (feasible) {
      std::vector<std::size_t> c(free.size(), 0);
      bool any_empty = false;
      for (const auto& f : free) any_empty = any_empty || f.writers.empty();
      while (!any_empty) {
        bool changed = false;
        Trace tr;
        for (std::size_t s = 0; s < sessions.size(); ++s) {
          SessionRecord rec{sessions[s].sid, {}};
          for (TxnIndex t : sessions[s].txns) {
            TxnRecord x{h.tid(t), {}, TxnStatus::Committed};
            const auto& ev = h.txn(t).events;
            for (std::size_t i = 0; i < ev.size(); ++i) {
              if (ev[i].pos > b[s]) break;
              const auto& e = ev[i];
              if (e.kind == OpKind::Write) {
                x.ops.push_back(TraceOp{OpKind::Write, h.key_name(e.key), e.pos, {}, e.value});
                continue;
              }
              TxnIndex w = e.writer;
              for (std::size_t f = 0; f < free.size(); ++f)
                if (free[f].reader == t && free[f].event == i) w = free[f].writers[c[f]];
              changed = changed || w != e.writer;
              x.ops.push_back(TraceOp{OpKind::Read, h.key_name(e.key), e.pos, h.tid(w), *h.written_value(w, e.key)});
            }
            if (!x.ops.empty()) rec.txns.push_back(std::move(x));
          }
          if (!rec.txns.empty()) tr.sessions.push_back(std::move(rec));
        }
        if (changed || !observed_serial) {
          const auto p = build_history(tr);
          if (p.size() >= 2 && brute_conforms(p, level) && !brute_serializable(p)) return true;
        }
        std::size_t f = 0;
        for (; f < free.size(); ++f) {
          if (++c[f] < free[f].writers.size()) break;
          c[f] = 0;
        }
        if (f == free.size()) break;
      }
    }

    std::size_t s = 0;
    for (; s < sessions.size(); ++s) {
      if (++pick_idx[s] < options[s].size()) break;
      pick_idx[s] = 0;
    }
    if (s == sessions.size()) return false;
  }
}

PredictResult run(const ExecutionHistory& h, Strategy s, IsolationLevel level) {
  PredictOptions o;
  o.strategy = s;
  o.level = level;
  return predict(h, o);
}

bool sat(const PredictResult& r) { return r.status == PredictResult::Status::Prediction; }

class SolverProperty : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!smt::backend_available()) GTEST_SKIP() << "no solver backend";
  }
};

}  // namespace

TEST(Property, IsolationMonotonicity) {
  Rng rng(1);
  for (int round = 0; round < 1500; ++round) {
    const auto h = build_history(random_trace(rng));
    const bool ser = oracle_serializable(h).ok();
    const bool causal = check_causal(h).ok();
    const bool rc = check_rc(h).ok();
    EXPECT_TRUE(!ser || causal) << emit_trace(to_trace(h));
    EXPECT_TRUE(!causal || rc) << emit_trace(to_trace(h));
  }
}

TEST(Property, CommitOrderRespectsAntiDependencies) {
  Rng rng(2);
  for (int round = 0; round < 1500; ++round) {
    const auto h = build_history(random_trace(rng));
    const auto v = oracle_serializable(h);
    if (!v.ok()) continue;
    const auto at = positions_in(v.commit_order);
    for (const auto& e : co_derived_rw_edges(h, v.commit_order)) EXPECT_LT(at[e.from], at[e.to]);
  }
}

TEST(Property, FixpointIsContainedInEverySerialOrder) {
  Rng rng(3);
  TraceShape shape;
  shape.max_txns = 5;
  for (int round = 0; round < 800; ++round) {
    const auto h = build_history(random_trace(rng, shape));
    if (!check_causal(h).ok()) continue;
    const PcoFixpoint f(h);
    bool serial = false;
    for_each_order(h, [&](const std::vector<TxnIndex>& order) {
      if (!serial_witness(h, order)) return false;
      serial = true;
      const auto at = positions_in(order);
      for (auto [a, b] : f.relation().pairs()) EXPECT_LT(at[a], at[b]) << emit_trace(to_trace(h));
      return false;
    });
    if (f.cyclic()) EXPECT_FALSE(serial);
  }
}

TEST(Property, GeneratorsProduceValidTraces) {
  Rng rng(4);
  for (int round = 0; round < 500; ++round) EXPECT_NO_THROW(build_history(random_trace(rng)));
  for (const auto& c : observed_corpus(4, 60)) {
    EXPECT_GE(c.run.history.size(), 2u) << c.label;
    EXPECT_EQ(c.run.history.sessions().size() <= c.sessions, true) << c.label;
  }
}

TEST_F(SolverProperty, ApproxPredictionsAreSound) {
  for (const auto& c : observed_corpus(11, 120)) {
    for (auto level : {IsolationLevel::Causal, IsolationLevel::ReadCommitted}) {
      for (auto s : {Strategy::ApproxStrict, Strategy::ApproxRelaxed}) {
        const auto r = run(c.run.history, s, level);
        ASSERT_NE(r.status, PredictResult::Status::Unknown) << c.label;
        if (!sat(r)) continue;
        const auto& p = r.prediction->history;
        EXPECT_FALSE(brute_serializable(p)) << c.label << " " << to_string(s);
        EXPECT_TRUE(brute_conforms(p, level)) << c.label << " " << to_string(s);
        EXPECT_FALSE(r.prediction->cycle.empty());
      }
    }
  }
}

TEST_F(SolverProperty, ExactMatchesBruteForceSearch) {
  std::size_t compared = 0;
  for (const auto& c : observed_corpus(12, 80)) {
    if (c.run.history.size() > 7) continue;
    for (auto level : {IsolationLevel::Causal, IsolationLevel::ReadCommitted}) {
      const auto r = run(c.run.history, Strategy::ExactStrict, level);
      ASSERT_NE(r.status, PredictResult::Status::Unknown) << c.label;
      EXPECT_EQ(sat(r), brute_exact_strict(c.run.history, level)) << c.label << " " << to_string(level);
      ++compared;
    }
  }
  EXPECT_GT(compared, 60u);
}

TEST_F(SolverProperty, StrategyOrdering) {
  for (const auto& c : observed_corpus(13, 60)) {
    for (auto level : {IsolationLevel::Causal, IsolationLevel::ReadCommitted}) {
      const bool approx = sat(run(c.run.history, Strategy::ApproxStrict, level));
      if (!approx) continue;
      EXPECT_TRUE(sat(run(c.run.history, Strategy::ExactStrict, level))) << c.label;
      EXPECT_TRUE(sat(run(c.run.history, Strategy::ApproxRelaxed, level))) << c.label;
    }
  }
}

TEST_F(SolverProperty, PredictionsAreDeterministic) {
  for (const auto& c : observed_corpus(14, 15)) {
    const auto a = run(c.run.history, Strategy::ApproxRelaxed, IsolationLevel::ReadCommitted);
    const auto b = run(c.run.history, Strategy::ApproxRelaxed, IsolationLevel::ReadCommitted);
    ASSERT_EQ(a.status, b.status);
    if (sat(a)) EXPECT_EQ(emit_trace(a.prediction->trace), emit_trace(b.prediction->trace));
  }
}
