// Desk-scale acceptance run. One PASS/FAIL line per criterion; exit status is
// the number of failures.

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"
#include "txpredict/error.hpp"
#include "txpredict/predictor.hpp"
#include "txpredict/store.hpp"

using namespace txpredict;
using namespace txpredict::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_s > 0 && secs > limit_s) o.require(false, "runtime " + std::to_string(secs) + " s over limit");
  if (!o.pass) ++failures;
  std::printf("%s criterion %d (%s) %.2fs%s%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
              o.detail.empty() ? "" : ": ", o.detail.c_str());
  std::fflush(stdout);
}

PredictResult run_predict(const ExecutionHistory& h, Strategy s, IsolationLevel level) {
  PredictOptions o;
  o.strategy = s;
  o.level = level;
  return predict(h, o);
}

bool sat(const PredictResult& r) { return r.status == PredictResult::Status::Prediction; }

const char* name(Strategy s) {
  switch (s) {
    case Strategy::ExactStrict: return "exact-strict";
    case Strategy::ApproxStrict: return "approx-strict";
    case Strategy::ApproxRelaxed: return "approx-relaxed";
  }
  return "?";
}

// Histories seen anywhere in the run, for the monotonicity and rw checks.
std::vector<ExecutionHistory> seen;

void remember(const ExecutionHistory& h) { seen.push_back(h); }

Outcome motivating_example() {
  Outcome o;
  const auto w = Workload::builtin(BuiltinWorkload::DepositDeposit);
  const std::uint64_t seed = 7;
  const auto obs = run_workload(w, 2, 1, seed, LatestWriter{});
  remember(obs.history);
  o.require(oracle_serializable(obs.history).ok(), "observed run is not serializable");
  std::optional<Trace> relaxed;
  for (auto s : {Strategy::ExactStrict, Strategy::ApproxStrict, Strategy::ApproxRelaxed}) {
    const auto r = run_predict(obs.history, s, IsolationLevel::Causal);
    bool lost_update = false;
    if (sat(r)) {
      remember(r.prediction->history);
      for (const auto& c : r.prediction->changed)
        lost_update = lost_update || (c.key == "acc" && c.predicted == kInitialTxn && c.reader.value == 2);
      if (s == Strategy::ApproxRelaxed) relaxed = r.prediction->trace;
    }
    o.require(lost_update, std::string(name(s)) + " returned " + to_string(r.status) + " instead of the lost update");
  }
  if (!relaxed) return o;
  const auto rep = validate(*relaxed, w, 2, 1, seed, IsolationLevel::Causal);
  remember(rep.validating_history);
  o.require(rep.outcome == ValidationOutcome::ValidatedUnserializable, "validate: " + to_string(rep.outcome));
  o.require(!rep.diverged, "validate diverged");
  const Value acc = rep.final_values.count("acc") ? rep.final_values.at("acc") : -1;
  o.require(acc == 50 || acc == 60, "final balance " + std::to_string(acc));
  return o;
}

Outcome boundary_semantics() {
  Outcome o;
  const auto w = Workload::builtin(BuiltinWorkload::DepositWithdraw);
  const auto obs = run_workload(w, 2, 2, 0, LatestWriter{});
  remember(obs.history);
  o.require(emit_trace(obs.trace) == kDepositWithdraw, "observed run differs from the deposit/withdraw/deposit shape");
  const auto strict = run_predict(obs.history, Strategy::ApproxStrict, IsolationLevel::Causal);
  o.require(strict.status == PredictResult::Status::None, "approx-strict returned " + to_string(strict.status));
  const auto relaxed = run_predict(obs.history, Strategy::ApproxRelaxed, IsolationLevel::Causal);
  o.require(sat(relaxed), "approx-relaxed returned " + to_string(relaxed.status));
  if (!sat(relaxed)) return o;
  remember(relaxed.prediction->history);
  const auto rep = validate(relaxed.prediction->trace, w, 2, 2, 0, IsolationLevel::Causal);
  remember(rep.validating_history);
  bool rewind = false;
  for (const auto& d : rep.divergences) rewind = rewind || d.reason == "abort-rewind";
  o.require(rep.diverged && rewind, "no abort-rewind divergence");
  o.require(rep.outcome == ValidationOutcome::Serializable, "validate: " + to_string(rep.outcome));
  return o;
}

Outcome voter_asymmetry() {
  Outcome o;
  const auto w = Workload::builtin(BuiltinWorkload::Voter);
  int causal_sat = 0, rc_sat = 0, validated = 0, diverged = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto obs = run_workload(w, 3, 4, seed, LatestWriter{});
    remember(obs.history);
    causal_sat += sat(run_predict(obs.history, Strategy::ApproxStrict, IsolationLevel::Causal));
    const auto rc = run_predict(obs.history, Strategy::ApproxStrict, IsolationLevel::ReadCommitted);
    if (!sat(rc)) continue;
    ++rc_sat;
    remember(rc.prediction->history);
    const auto rep = validate(rc.prediction->trace, w, 3, 4, seed, IsolationLevel::ReadCommitted);
    validated += rep.outcome == ValidationOutcome::ValidatedUnserializable;
    diverged += rep.diverged;
  }
  o.require(causal_sat == 0, "causal sat " + std::to_string(causal_sat) + "/10");
  o.require(rc_sat == 10, "rc sat " + std::to_string(rc_sat) + "/10");
  o.require(validated >= 9, "validated " + std::to_string(validated) + "/10");
  if (o.pass) o.detail = "causal 0/10, rc 10/10, validated " + std::to_string(validated) + ", diverged " + std::to_string(diverged);
  return o;
}

Outcome oracle_equivalence() {
  Outcome o;
  Rng rng(404);
  TraceShape shape;
  shape.max_txns = 6;
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    const auto h = build_history(random_trace(rng, shape));
    remember(h);
    const auto a = check_serializable(h);
    const auto b = oracle_serializable(h);
    if (a.kind != b.kind || (a.ok() && !is_serial_order(h, a.commit_order))) ++mismatches;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " mismatches");
  return o;
}

const std::vector<ObservedCase>& corpus() {
  static const auto c = observed_corpus(2024, 500);
  return c;
}

// [case][level][strategy], filled per strategy on first use.
std::vector<std::array<std::array<PredictResult, 3>, 2>> corpus_results;

double solve_corpus(std::initializer_list<Strategy> strategies) {
  const auto start = Clock::now();
  corpus_results.resize(corpus().size());
  for (std::size_t i = 0; i < corpus().size(); ++i) {
    const auto& c = corpus()[i];
    remember(c.run.history);
    for (int l = 0; l < 2; ++l) {
      const auto level = l == 0 ? IsolationLevel::Causal : IsolationLevel::ReadCommitted;
      for (Strategy s : strategies) corpus_results[i][l][static_cast<int>(s)] = run_predict(c.run.history, s, level);
    }
  }
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Outcome approx_soundness() {
  Outcome o;
  const double secs = solve_corpus({Strategy::ApproxStrict, Strategy::ApproxRelaxed});
  int violations = 0, predictions = 0, unknown = 0;
  for (std::size_t i = 0; i < corpus_results.size(); ++i) {
    for (int l = 0; l < 2; ++l) {
      const auto level = l == 0 ? IsolationLevel::Causal : IsolationLevel::ReadCommitted;
      for (int s = 1; s < 3; ++s) {
        const auto& r = corpus_results[i][l][s];
        unknown += r.status == PredictResult::Status::Unknown;
        if (!sat(r)) continue;
        ++predictions;
        const auto& h = r.prediction->history;
        remember(h);
        if (oracle_serializable(h).ok() || !check_isolation(h, level).ok()) {
          ++violations;
          std::printf("  unsound: %s %s %s\n", corpus()[i].label.c_str(), to_string(level).c_str(),
                      name(static_cast<Strategy>(s)));
        }
      }
    }
  }
  // Fixed three-transaction history with two blind writers.
  const auto fixed = history_of(kBlindWriters);
  for (auto enc : {PcoEncoding::Layered, PcoEncoding::Ranked}) {
    for (auto level : {IsolationLevel::Causal, IsolationLevel::ReadCommitted}) {
      smt::ConstraintProgram p;
      Encoder e(fixed, p, EncoderOptions{BoundaryMode::Strict, enc, 2, true});
      e.gen_feasibility();
      e.gen_isolation(level);
      e.gen_unser_approx();
      if (smt::check_sat(p).status != smt::SatStatus::Unsat) {
        ++violations;
        std::printf("  fixed blind-writer history reported unserializable (%s)\n", to_string(enc).c_str());
      }
    }
  }
  o.require(violations == 0, std::to_string(violations) + " violations");
  o.require(unknown == 0, std::to_string(unknown) + " unknown results");
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(predictions) + " predictions over " +
              std::to_string(corpus().size()) + " executions, corpus solved in " + std::to_string(secs) + " s";
  return o;
}

Outcome strategy_ordering() {
  Outcome o;
  const double secs = solve_corpus({Strategy::ExactStrict});
  int broken = 0, exact_only = 0, unknown = 0;
  for (std::size_t i = 0; i < corpus_results.size(); ++i) {
    for (int l = 0; l < 2; ++l) {
      unknown += corpus_results[i][l][0].status == PredictResult::Status::Unknown;
      const bool exact = sat(corpus_results[i][l][0]);
      const bool strict = sat(corpus_results[i][l][1]);
      const bool relaxed = sat(corpus_results[i][l][2]);
      if (strict && (!exact || !relaxed)) {
        ++broken;
        std::printf("  ordering broken: %s level %d\n", corpus()[i].label.c_str(), l);
      }
      if (exact && !strict) {
        ++exact_only;
        std::printf("  exact-only prediction: %s level %d\n", corpus()[i].label.c_str(), l);
      }
      if (exact) remember(corpus_results[i][l][0].prediction->history);
    }
  }
  o.require(broken == 0, std::to_string(broken) + " ordering violations");
  o.require(exact_only == 0, std::to_string(exact_only) + " exact-sat/approx-unsat cases");
  o.require(unknown == 0, std::to_string(unknown) + " exact runs unknown");
  o.detail += (o.detail.empty() ? "" : "; ") + std::string("exact pass ") + std::to_string(secs) + " s";
  return o;
}

Outcome monotonicity() {
  Outcome o;
  Rng rng(707);
  for (int i = 0; i < 1000; ++i) remember(build_history(random_trace(rng)));
  int violations = 0;
  for (const auto& h : seen) {
    const bool ser = h.size() <= 10 ? oracle_serializable(h).ok() : check_serializable(h).ok();
    const bool causal = check_causal(h).ok();
    const bool rc = check_rc(h).ok();
    violations += (ser && !causal) || (causal && !rc);
  }
  o.require(violations == 0, std::to_string(violations) + " violations");
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(seen.size()) + " histories";
  return o;
}

Outcome anti_dependencies() {
  Outcome o;
  int violations = 0, serializable = 0;
  for (const auto& h : seen) {
    const auto v = check_serializable(h);
    if (!v.ok()) continue;
    ++serializable;
    const auto at = positions_in(v.commit_order);
    for (const auto& e : co_derived_rw_edges(h, v.commit_order)) violations += at[e.from] >= at[e.to];
  }
  o.require(violations == 0, std::to_string(violations) + " violations");
  o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(serializable) + " serializable histories";
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// observe -> predict -> validate through the command line, files only.
std::vector<std::string> pipeline(const std::filesystem::path& dir, const std::string& workload, const std::string& sessions,
                                  const std::string& txns, const std::string& seed, const std::string& iso,
                                  const std::string& strategy) {
  std::filesystem::create_directories(dir);
  std::ostringstream out, err;
  const auto file = [&](const char* n) { return (dir / n).string(); };
  const std::vector<std::string> wl{"-w", workload, "--sessions", sessions, "--txns", txns, "--seed", seed};
  auto call = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "txpredict");
    return cli::run(args, out, err);
  };
  std::vector<std::string> observe{"observe"};
  observe.insert(observe.end(), wl.begin(), wl.end());
  observe.insert(observe.end(), {"-o", file("trace.txt")});
  call(observe);
  const int rc = call({"predict", "-t", file("trace.txt"), "--isolation", iso, "--strategy", strategy, "-o",
                       file("prediction.txt"), "--dot", file("prediction.dot")});
  if (rc == cli::kSat) {
    std::vector<std::string> val{"validate"};
    val.insert(val.end(), wl.begin(), wl.end());
    val.insert(val.end(), {"-p", file("prediction.txt"), "--isolation", iso, "--json", file("report.json"), "--trace-out",
                          file("replay.txt")});
    call(val);
  }
  std::vector<std::string> files;
  for (const char* n : {"trace.txt", "prediction.txt", "prediction.dot", "report.json", "replay.txt"}) {
    files.push_back(std::filesystem::exists(dir / n) ? slurp(dir / n) : std::string("<absent>"));
  }
  return files;
}

Outcome determinism() {
  Outcome o;
  const auto root = std::filesystem::temp_directory_path() / "txpredict_acceptance";
  std::filesystem::remove_all(root);
  struct Case {
    const char* workload;
    const char* sessions;
    const char* txns;
    const char* seed;
    const char* iso;
    const char* strategy;
  };
  const Case cases[] = {{"deposit-deposit", "2", "1", "7", "causal", "approx-relaxed"},
                        {"deposit-withdraw", "2", "2", "0", "causal", "approx-relaxed"},
                        {"voter", "3", "4", "3", "rc", "approx-strict"},
                        {"smallbank-lite", "3", "2", "11", "rc", "exact-strict"}};
  int present = 0;
  for (const auto& c : cases) {
    const auto a = pipeline(root / "a" / c.workload, c.workload, c.sessions, c.txns, c.seed, c.iso, c.strategy);
    const auto b = pipeline(root / "b" / c.workload, c.workload, c.sessions, c.txns, c.seed, c.iso, c.strategy);
    o.require(a == b, std::string(c.workload) + " outputs differ");
    for (const auto& f : a) present += f != "<absent>";
  }
  std::filesystem::remove_all(root);
  o.require(present >= 12, "pipelines produced only " + std::to_string(present) + " files");
  return o;
}

}  // namespace

int main() {
  if (!smt::backend_available()) {
    std::printf("FAIL all criteria: no solver backend compiled in\n");
    return 1;
  }
  report(1, "motivating example pipeline", 5, motivating_example);
  report(2, "boundary semantics", 5, boundary_semantics);
  report(3, "voter asymmetry", 120, voter_asymmetry);
  report(4, "oracle equivalence", 60, oracle_equivalence);
  report(5, "approximate encoding soundness", 300, approx_soundness);
  report(6, "strategy ordering", 0, strategy_ordering);
  report(7, "isolation monotonicity", 0, monotonicity);
  report(8, "anti-dependency ordering", 0, anti_dependencies);
  report(9, "determinism", 0, determinism);
  return failures;
}
