#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "txpredict/checker.hpp"
#include "txpredict/error.hpp"
#include "txpredict/history.hpp"
#include "txpredict/predictor.hpp"
#include "txpredict/store.hpp"
#include "txpredict/trace_io.hpp"
#include "txpredict/workload.hpp"

namespace txpredict::cli {

using json = nlohmann::ordered_json;

namespace {

struct ConfigError : Error {
  using Error::Error;
};

struct WorkloadArgs {
  std::string workload;
  std::size_t sessions = 2;
  std::size_t txns = 1;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--workload,-w", workload, "builtin name or script path")->required();
    cmd->add_option("--sessions", sessions, "number of sessions (builtin workloads)");
    cmd->add_option("--txns", txns, "transactions per session (builtin workloads)");
    cmd->add_option("--seed", seed, "scheduler seed");
  }

  Workload load() const {
    Workload w = Workload::from_spec(workload);
    if (!w.is_scripted() && sessions == 0) throw ConfigError("--sessions must be at least 1");
    return w;
  }
};

IsolationLevel level_of(const std::string& name) {
  auto l = parse_isolation(name);
  if (!l) throw ConfigError("unknown isolation level '" + name + "' (expected causal or rc)");
  return *l;
}

double default_timeout() {
  if (const char* env = std::getenv("TXPREDICT_TIMEOUT")) {
    char* end = nullptr;
    double v = std::strtod(env, &end);
    if (end != env && v >= 0) return v;
  }
  return 0.0;
}

json values_json(const std::map<std::string, Value>& values) {
  json j = json::object();
  for (const auto& [k, v] : values) j[k] = v;
  return j;
}

json edges_json(const ExecutionHistory& h, const std::vector<DepEdge>& edges) {
  json arr = json::array();
  for (const auto& e : edges) {
    json je{{"from", "t" + std::to_string(h.tid(e.from).value)},
            {"to", "t" + std::to_string(h.tid(e.to).value)},
            {"kind", edge_label(e.kind)}};
    if (e.key) je["key"] = h.key_name(*e.key);
    arr.push_back(je);
  }
  return arr;
}

std::vector<DotEdge> dot_edges(const ExecutionHistory& h, const std::vector<DepEdge>& edges) {
  std::vector<DotEdge> out;
  for (const auto& e : edges) {
    std::string label = edge_label(e.kind);
    if (e.key && e.kind == EdgeKind::WriteRead) label += "_" + h.key_name(*e.key);
    out.push_back(DotEdge{h.tid(e.from), h.tid(e.to), label});
  }
  return out;
}

void emit(std::ostream& out, const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Predict unserializable executions of transactional key-value programs"};
  app.require_subcommand(1);
  app.fallthrough();
  double timeout = default_timeout();
  app.add_option("--timeout", timeout, "solver budget in seconds per call (0 = none; env TXPREDICT_TIMEOUT)");

  // observe
  WorkloadArgs obs_w;
  std::string obs_out, obs_policy = "latest", obs_level = "causal";
  std::uint64_t obs_rng = 0;
  auto* observe = app.add_subcommand("observe", "run a workload and record its trace");
  obs_w.attach(observe);
  observe->add_option("--out,-o", obs_out, "trace file (stdout when omitted)");
  observe->add_option("--policy", obs_policy, "read policy: latest or random")->check(CLI::IsMember({"latest", "random"}));
  observe->add_option("--isolation", obs_level, "isolation level for the random policy");
  observe->add_option("--rng-seed", obs_rng, "seed of the random read policy");

  // predict
  std::string pr_trace, pr_out, pr_level = "causal", pr_strategy = "approx-strict", pr_dot, pr_smt2, pr_json;
  std::size_t pr_iters = 10000;
  std::string pr_pco = "layered";
  auto* predict_cmd = app.add_subcommand("predict", "search for an unserializable prediction");
  predict_cmd->add_option("--trace,-t", pr_trace, "observed trace")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--isolation", pr_level, "causal or rc");
  predict_cmd->add_option("--strategy", pr_strategy, "exact-strict, approx-strict or approx-relaxed");
  predict_cmd->add_option("--out,-o", pr_out, "predicted history file");
  predict_cmd->add_option("--dot", pr_dot, "write the predicted history as DOT");
  predict_cmd->add_option("--smt2", pr_smt2, "dump the constraint program as SMT-LIB2");
  predict_cmd->add_option("--json", pr_json, "summary file (stdout when omitted)");
  predict_cmd->add_option("--max-iterations", pr_iters, "refinement cap for exact-strict");
  predict_cmd->add_option("--pco", pr_pco, "approximate pco encoding: layered, ranked or unranked");

  // validate
  WorkloadArgs va_w;
  std::string va_pred, va_level = "causal", va_json, va_dot, va_trace_out;
  auto* validate_cmd = app.add_subcommand("validate", "replay a prediction against its workload");
  va_w.attach(validate_cmd);
  validate_cmd->add_option("--predicted,-p", va_pred, "predicted history file")->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--isolation", va_level, "causal or rc");
  validate_cmd->add_option("--json", va_json, "report file (stdout when omitted)");
  validate_cmd->add_option("--dot", va_dot, "write the validating history as DOT");
  validate_cmd->add_option("--trace-out", va_trace_out, "write the validating trace");

  // check
  std::string ch_trace, ch_level = "serializable", ch_dot, ch_json;
  auto* check_cmd = app.add_subcommand("check", "check a trace against serializability and weak levels");
  check_cmd->add_option("--trace,-t", ch_trace, "trace file")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--level", ch_level, "verdict that sets the exit code")
      ->check(CLI::IsMember({"serializable", "causal", "rc"}));
  check_cmd->add_option("--dot", ch_dot, "write the history as DOT, violations highlighted");
  check_cmd->add_option("--json", ch_json, "report file (stdout when omitted)");

  // fuzz
  WorkloadArgs fz_w;
  std::string fz_level = "causal", fz_json;
  std::size_t fz_runs = 100;
  auto* fuzz_cmd = app.add_subcommand("fuzz", "run random weak-isolation executions and count anomalies");
  fz_w.attach(fuzz_cmd);
  fuzz_cmd->add_option("--isolation", fz_level, "causal or rc");
  fuzz_cmd->add_option("--runs", fz_runs, "number of runs; run i uses seed + i");
  fuzz_cmd->add_option("--json", fz_json, "stats file (stdout when omitted)");

  // render
  std::string rd_trace, rd_dot;
  bool rd_values = false;
  auto* render_cmd = app.add_subcommand("render", "draw a trace as a DOT graph");
  render_cmd->add_option("--trace,-t", rd_trace, "trace file")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--dot", rd_dot, "output path (stdout when omitted)");
  render_cmd->add_flag("--values", rd_values, "show read and written values");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kConfigError;
  }

  smt::SolverOptions solver;
  solver.timeout_seconds = timeout;

  try {
    if (*observe) {
      Workload w = obs_w.load();
      ReadPolicy policy = LatestWriter{};
      if (obs_policy == "random") policy = RandomWeak{level_of(obs_level), obs_rng};
      RunResult r = run_workload(w, obs_w.sessions, obs_w.txns, obs_w.seed, policy);
      const std::string text = emit_trace(r.trace);
      if (obs_out.empty()) {
        out << text;
      } else {
        write_text_file(obs_out, text);
      }
      return kSat;
    }

    if (*predict_cmd) {
      PredictOptions opts;
      opts.level = level_of(pr_level);
      auto strat = parse_strategy(pr_strategy);
      if (!strat) throw ConfigError("unknown strategy '" + pr_strategy + "'");
      opts.strategy = *strat;
      opts.solver = solver;
      opts.max_iterations = pr_iters;
      auto pco = parse_pco_encoding(pr_pco);
      if (!pco) throw ConfigError("unknown pco encoding '" + pr_pco + "'");
      opts.pco = *pco;
      const ExecutionHistory h = build_history(read_trace_file(pr_trace));
      if (!pr_smt2.empty()) write_text_file(pr_smt2, smt::to_smtlib2(build_program(h, opts)));
      PredictResult r = predict(h, opts);

      json j{{"status", to_string(r.status)},
             {"strategy", to_string(opts.strategy)},
             {"isolation", to_string(opts.level)},
             {"literals", r.stats.literals},
             {"gen_ms", r.stats.gen_ms},
             {"solve_ms", r.stats.solve_ms},
             {"iterations", r.stats.iterations}};
      if (!r.reason.empty()) j["reason"] = r.reason;
      if (!r.warnings.empty()) j["warnings"] = r.warnings;
      if (r.prediction) {
        json changed = json::array();
        for (const auto& c : r.prediction->changed) {
          changed.push_back(json{{"session", c.sid.value},
                                 {"pos", c.pos},
                                 {"reader", "t" + std::to_string(c.reader.value)},
                                 {"key", c.key},
                                 {"observed", "t" + std::to_string(c.observed.value)},
                                 {"predicted", "t" + std::to_string(c.predicted.value)}});
        }
        j["changed"] = changed;
        json cycle = json::array();
        for (const auto& e : r.prediction->cycle) {
          json je{{"from", "t" + std::to_string(e.from.value)}, {"to", "t" + std::to_string(e.to.value)},
                  {"kind", edge_label(e.kind)}};
          if (!e.key.empty()) je["key"] = e.key;
          cycle.push_back(je);
        }
        j["cycle"] = cycle;
        if (!pr_out.empty()) write_text_file(pr_out, emit_trace(r.prediction->trace));
        if (!pr_dot.empty()) {
          write_text_file(pr_dot, emit_dot(r.prediction->history, DotOptions{true, to_dot_edges(r.prediction->cycle)}));
        }
      }
      for (const auto& w : r.warnings) err << "warning: " << w << "\n";
      emit(out, j, pr_json);
      switch (r.status) {
        case PredictResult::Status::Prediction: return kSat;
        case PredictResult::Status::None: return kUnsat;
        case PredictResult::Status::Unknown: return kUnknown;
      }
    }

    if (*validate_cmd) {
      Workload w = va_w.load();
      const Trace predicted = read_trace_file(va_pred);
      ValidationReport r = validate(predicted, w, va_w.sessions, va_w.txns, va_w.seed, level_of(va_level), solver);
      json divs = json::array();
      for (const auto& d : r.divergences) {
        divs.push_back(json{{"session", d.sid.value},
                            {"txn", "t" + std::to_string(d.tid.value)},
                            {"pos", d.pos},
                            {"reason", d.reason}});
      }
      json j{{"outcome", to_string(r.outcome)},
             {"diverged", r.diverged},
             {"divergences", divs},
             {"final_values", values_json(r.final_values)}};
      if (!va_trace_out.empty()) write_text_file(va_trace_out, emit_trace(r.validating_trace));
      if (!va_dot.empty()) write_text_file(va_dot, emit_dot(r.validating_history, DotOptions{true, {}}));
      emit(out, j, va_json);
      return r.outcome == ValidationOutcome::Unknown ? kUnknown : kSat;
    }

    if (*check_cmd) {
      const ExecutionHistory h = build_history(read_trace_file(ch_trace));
      json j = json::object();
      int code = kSat;
      std::vector<DotEdge> highlight;
      std::optional<Verdict> ser;
      try {
        ser = check_serializable(h, solver);
      } catch (const SolverUnknown& e) {
        j["serializable"] = "unknown";
        j["reason"] = e.what();
        if (ch_level == "serializable") code = kUnknown;
      }
      if (ser) {
        j["serializable"] = ser->kind == Verdict::Kind::Serializable;
        if (ser->kind == Verdict::Kind::Serializable) {
          json order = json::array();
          for (TxnIndex t : ser->commit_order) order.push_back("t" + std::to_string(h.tid(t).value));
          j["commit_order"] = order;
        } else if (ch_level == "serializable") {
          code = kUnsat;
        }
      }
      for (IsolationLevel l : {IsolationLevel::Causal, IsolationLevel::ReadCommitted}) {
        const Verdict v = check_isolation(h, l);
        json jv{{"conforms", v.ok()}};
        if (!v.ok()) {
          jv["cycle"] = edges_json(h, v.cycle);
          if (ch_level == to_string(l)) {
            code = kUnsat;
            highlight = dot_edges(h, v.cycle);
          }
        }
        j[to_string(l)] = jv;
      }
      if (!ch_dot.empty()) write_text_file(ch_dot, emit_dot(h, DotOptions{true, highlight}));
      emit(out, j, ch_json);
      return code;
    }

    if (*fuzz_cmd) {
      Workload w = fz_w.load();
      const IsolationLevel level = level_of(fz_level);
      std::size_t unser = 0, unknown = 0;
      json verdicts = json::array();
      for (std::size_t i = 0; i < fz_runs; ++i) {
        const std::uint64_t s = fz_w.seed + i;
        RunResult r = run_workload(w, fz_w.sessions, fz_w.txns, s, RandomWeak{level, s});
        std::string verdict;
        try {
          verdict = check_serializable(r.history, solver).kind == Verdict::Kind::Serializable ? "serializable"
                                                                                              : "unserializable";
        } catch (const SolverUnknown&) {
          verdict = "unknown";
        }
        unser += verdict == "unserializable";
        unknown += verdict == "unknown";
        verdicts.push_back(json{{"seed", s}, {"verdict", verdict}, {"final_values", values_json(r.final_values)}});
      }
      json j{{"workload", w.name()},
             {"isolation", to_string(level)},
             {"runs", fz_runs},
             {"unserializable", unser},
             {"unknown", unknown},
             {"unserializable_rate", fz_runs == 0 ? 0.0 : static_cast<double>(unser) / static_cast<double>(fz_runs)},
             {"verdicts", verdicts}};
      emit(out, j, fz_json);
      return kSat;
    }

    if (*render_cmd) {
      const std::string dot = emit_dot(build_history(read_trace_file(rd_trace)), DotOptions{rd_values, {}});
      if (rd_dot.empty()) {
        out << dot;
      } else {
        write_text_file(rd_dot, dot);
      }
      return kSat;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const WorkloadError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const SemanticError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const MalformedTrace& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ReplayMismatch& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const BackendUnavailable& e) {
    err << "error: " << e.what() << "\n";
    return kUnknown;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUnknown;
  }
  return kConfigError;
}

}  // namespace txpredict::cli
