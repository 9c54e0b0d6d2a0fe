#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txpredict/checker.hpp"
#include "txpredict/history.hpp"
#include "txpredict/solver.hpp"
#include "txpredict/trace.hpp"
#include "txpredict/trace_io.hpp"

namespace txpredict {

enum class Strategy { ExactStrict, ApproxStrict, ApproxRelaxed };
enum class BoundaryMode { Strict, Relaxed };

std::string to_string(Strategy s);
std::optional<Strategy> parse_strategy(const std::string& name);
std::optional<IsolationLevel> parse_isolation(const std::string& name);
BoundaryMode boundary_mode(Strategy s);

/// One read event of the observed history, addressable by (session, pos).
struct ReadSite {
  std::size_t session = 0;  // index into ExecutionHistory::sessions()
  TxnIndex reader = 0;
  Position pos = 0;
  KeyIndex key = 0;
  TxnIndex observed = 0;
};

/// How the approximate encoding keeps pco derivations well-founded.
///
/// Layered unrolls the least fixpoint in rounds (each round applies ww/rw once
/// and then closes transitively); Ranked uses integer ranks per pair;
/// Unranked drops the side condition and admits circular justifications.
enum class PcoEncoding { Layered, Ranked, Unranked };

std::string to_string(PcoEncoding e);
std::optional<PcoEncoding> parse_pco_encoding(const std::string& name);

struct EncoderOptions {
  BoundaryMode mode = BoundaryMode::Strict;
  PcoEncoding pco = PcoEncoding::Layered;
  /// Layered only: number of ww/rw rounds to unroll.
  std::size_t rounds = 2;
  /// Pin every choice to its observed writer and every boundary to infinity,
  /// turning the encoding into a check of the observed history itself.
  bool fixed = false;
};

/// Grounds the prediction constraints for one observed history into a
/// ConstraintProgram. Pair-indexed terms are constant False where the
/// corresponding relation is impossible.
class Encoder {
 public:
  Encoder(const ExecutionHistory& observed, smt::ConstraintProgram& program, EncoderOptions options = {});

  void gen_feasibility();
  void gen_isolation(IsolationLevel level);
  /// Layered: asserts "pco cycle or the unrolling has not converged"; the
  /// second disjunct is dropped once the round count cannot be exceeded.
  void gen_unser_approx();
  /// Some in-boundary read has a writer different from the observed one.
  smt::Term some_read_changed();

  const ExecutionHistory& observed() const { return h_; }
  smt::ConstraintProgram& program() { return p_; }
  const EncoderOptions& options() const { return opt_; }
  const std::vector<ReadSite>& sites() const { return sites_; }
  Position infinity() const { return inf_; }

  smt::Term choice(std::size_t site) const { return choice_[site]; }
  smt::Term boundary(std::size_t session) const { return boundary_[session]; }
  /// choice(site) = t as a term (False when t is outside the domain).
  smt::Term chooses(std::size_t site, TxnIndex t);
  smt::Term site_included(std::size_t site);
  smt::Term wr_k(KeyIndex k, TxnIndex a, TxnIndex b) const { return wr_k_[k][a][b]; }
  smt::Term wr(TxnIndex a, TxnIndex b) const { return wr_[a][b]; }
  smt::Term hb(TxnIndex a, TxnIndex b) const { return hb_[a][b]; }
  smt::Term pco(TxnIndex a, TxnIndex b) const { return pco_[a][b]; }
  smt::Term co(TxnIndex t) const { return co_[t]; }
  /// Write of k by t lies within its session's boundary.
  smt::Term write_present(TxnIndex t, KeyIndex k);
  /// Write of k by t may be observed by an in-boundary read.
  smt::Term write_readable(TxnIndex t, KeyIndex k);

  /// Layered: true when the unrolled rounds reach the least fixpoint for
  /// every assignment (the round count is at least the number of pairs ww or
  /// rw could ever relate).
  bool rounds_exhaustive() const { return rounds_exhaustive_; }
  /// Layered: some pair is added by one round past the unrolling.
  smt::Term unconverged() const { return unconverged_; }

  std::int64_t tid_value(TxnIndex t) const { return h_.tid(t).value; }

 private:
  using Matrix = std::vector<std::vector<smt::Term>>;

  Matrix matrix() const;
  std::string tname(TxnIndex t) const;
  Matrix closure(Matrix r);
  Matrix step(const Matrix& base, const Matrix& pco);
  void gen_unser_ranked();
  void gen_unser_layered();
  smt::Term pos_le_boundary(std::size_t session, Position pos);
  smt::Term pos_lt_boundary(std::size_t session, Position pos);

  const ExecutionHistory& h_;
  smt::ConstraintProgram& p_;
  EncoderOptions opt_;
  std::size_t n_;
  Position inf_;
  std::vector<ReadSite> sites_;
  std::vector<std::vector<std::size_t>> sites_of_txn_;
  std::vector<smt::Term> choice_;
  std::vector<smt::Term> boundary_;
  std::vector<Matrix> wr_k_;
  Matrix wr_;
  Matrix hb_;
  Matrix pco_;
  Matrix rank_;
  std::vector<smt::Term> co_;
  smt::Term unconverged_;
  bool rounds_exhaustive_ = false;
  bool feasibility_done_ = false;
  bool hb_done_ = false;
};

struct ChangedRead {
  SessionId sid{};
  Position pos = 0;
  TxnId reader{};
  std::string key;
  TxnId observed{};
  TxnId predicted{};
};

struct CycleEdge {
  TxnId from{};
  TxnId to{};
  EdgeKind kind = EdgeKind::SessionOrder;
  std::string key;  // empty for so
};

struct PredictedHistory {
  Trace trace;  // predicted-history file body, with boundary lines
  ExecutionHistory history;
  std::vector<ChangedRead> changed;
  std::vector<CycleEdge> cycle;  // Approx strategies only
};

std::vector<DotEdge> to_dot_edges(const std::vector<CycleEdge>& cycle);

struct PredictOptions {
  IsolationLevel level = IsolationLevel::Causal;
  Strategy strategy = Strategy::ApproxStrict;
  smt::SolverOptions solver;
  std::size_t max_iterations = 10000;
  PcoEncoding pco = PcoEncoding::Layered;
};

struct PredictStats {
  std::size_t literals = 0;
  double gen_ms = 0.0;
  double solve_ms = 0.0;
  std::size_t iterations = 0;
};

struct PredictResult {
  enum class Status { Prediction, None, Unknown };

  Status status = Status::None;
  std::optional<PredictedHistory> prediction;
  std::string reason;
  PredictStats stats;
  std::vector<std::string> warnings;
};

std::string to_string(PredictResult::Status s);

/// The program solved first by predict (for Exact, before any blocking clause).
smt::ConstraintProgram build_program(const ExecutionHistory& observed, const PredictOptions& options);

/// Reads the in-boundary history out of a model and checks its invariants.
/// Throws InconsistentModel when the model breaks one.
PredictedHistory extract_predicted_history(const smt::Model& model, Encoder& encoder, IsolationLevel level,
                                           bool with_cycle);

PredictResult predict(const ExecutionHistory& observed, const PredictOptions& options);

/// Least fixpoint of the pco rules (so, wr, ww, rw, transitivity) on a
/// concrete history. Every derived pair remembers its first justification.
class PcoFixpoint {
 public:
  explicit PcoFixpoint(const ExecutionHistory& h);

  const Relation& relation() const { return pco_; }
  bool cyclic() const;
  /// Number of ww/rw rounds needed to reach the fixpoint.
  std::size_t rounds() const { return rounds_; }
  /// Edges of one cycle (empty when acyclic), preferring pairs without t0.
  std::vector<CycleEdge> cycle() const;

 private:
  struct Reason {
    EdgeKind kind = EdgeKind::SessionOrder;
    std::optional<KeyIndex> key;
    std::optional<TxnIndex> via;
  };
  void add(TxnIndex a, TxnIndex b, Reason r, bool& changed);
  void expand(TxnIndex a, TxnIndex b, std::vector<CycleEdge>& out) const;

  const ExecutionHistory& h_;
  Relation pco_;
  std::vector<std::vector<std::optional<Reason>>> why_;
  std::size_t rounds_ = 0;
};

}  // namespace txpredict
