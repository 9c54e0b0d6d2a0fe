#include <algorithm>
#include <map>

#include "txpredict/error.hpp"
#include "txpredict/predictor.hpp"

namespace txpredict {

using smt::Term;

Encoder::Encoder(const ExecutionHistory& observed, smt::ConstraintProgram& program, EncoderOptions options)
    : h_(observed), p_(program), opt_(options), n_(observed.size()), inf_(observed.max_position() + 1) {
  sites_of_txn_.resize(n_);
  const auto& sessions = h_.sessions();
  for (std::size_t si = 0; si < sessions.size(); ++si) {
    for (TxnIndex t : sessions[si].txns) {
      for (const auto& e : h_.txn(t).events) {
        if (e.kind != OpKind::Read) continue;
        sites_of_txn_[t].push_back(sites_.size());
        sites_.push_back(ReadSite{si, t, e.pos, e.key, e.writer});
      }
    }
  }
  wr_k_.assign(h_.key_count(), matrix());
  wr_ = matrix();
  hb_ = matrix();
  pco_ = matrix();
  rank_ = matrix();
  unconverged_ = p_.lit(false);
}

Encoder::Matrix Encoder::matrix() const { return Matrix(n_, std::vector<Term>(n_, p_.lit(false))); }

std::string Encoder::tname(TxnIndex t) const { return "t" + std::to_string(h_.tid(t).value); }

Term Encoder::pos_le_boundary(std::size_t session, Position pos) {
  return p_.mk_le(p_.int_lit(pos), boundary_[session]);
}

Term Encoder::pos_lt_boundary(std::size_t session, Position pos) {
  return p_.mk_lt(p_.int_lit(pos), boundary_[session]);
}

Term Encoder::chooses(std::size_t site, TxnIndex t) { return p_.mk_eq(choice_[site], p_.int_lit(tid_value(t))); }

Term Encoder::site_included(std::size_t site) { return pos_le_boundary(sites_[site].session, sites_[site].pos); }

Term Encoder::write_present(TxnIndex t, KeyIndex k) {
  if (t == 0) return p_.lit(true);
  auto pos = h_.wrpos(t, k);
  if (!pos) return p_.lit(false);
  return pos_le_boundary(h_.session_of(t), *pos);
}

Term Encoder::write_readable(TxnIndex t, KeyIndex k) {
  if (t == 0) return p_.lit(true);
  auto pos = h_.wrpos(t, k);
  if (!pos) return p_.lit(false);
  if (opt_.mode == BoundaryMode::Strict) return pos_lt_boundary(h_.session_of(t), *pos);
  // Relaxed: nothing written by a boundary transaction may be observed, which
  // keeps every transaction that would happen after it out of the prefix.
  return pos_lt_boundary(h_.session_of(t), h_.txn(t).last_pos());
}

void Encoder::gen_feasibility() {
  if (feasibility_done_) return;
  feasibility_done_ = true;

  const auto& sessions = h_.sessions();
  for (std::size_t si = 0; si < sessions.size(); ++si) {
    std::vector<std::int64_t> domain{inf_};
    for (TxnIndex t : sessions[si].txns) {
      const auto& ev = h_.txn(t).events;
      if (opt_.mode == BoundaryMode::Strict) {
        for (const auto& e : ev) {
          if (e.kind == OpKind::Read) domain.push_back(e.pos);
        }
      } else if (!ev.empty()) {
        domain.push_back(ev.back().pos);
      }
    }
    Term b = p_.declare_enum("boundary[s" + std::to_string(sessions[si].sid.value) + "]", domain);
    boundary_.push_back(b);
    if (opt_.fixed) p_.add(p_.mk_eq(b, p_.int_lit(inf_)));
  }

  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const ReadSite& s = sites_[i];
    std::vector<std::int64_t> domain;
    for (TxnIndex w : h_.writers(s.key)) {
      if (w != s.reader) domain.push_back(tid_value(w));
    }
    choice_.push_back(p_.declare_enum(
        "choice[s" + std::to_string(sessions[s.session].sid.value) + "][" + std::to_string(s.pos) + "]", domain));
  }

  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const ReadSite& s = sites_[i];
    const Term included = site_included(i);
    Term fixed_region;
    if (opt_.mode == BoundaryMode::Strict) {
      fixed_region = pos_lt_boundary(s.session, s.pos);
    } else {
      fixed_region = pos_lt_boundary(s.session, h_.txn(s.reader).last_pos());
    }
    p_.add(p_.mk_implies(fixed_region, chooses(i, s.observed)));
    if (opt_.fixed) p_.add(chooses(i, s.observed));
    for (TxnIndex w : h_.writers(s.key)) {
      if (w == s.reader) continue;
      p_.add(p_.mk_implies(p_.mk_and(chooses(i, w), included), write_readable(w, s.key)));
    }
  }

  for (KeyIndex k = 0; k < h_.key_count(); ++k) {
    const auto writers = h_.writers(k);
    for (TxnIndex t2 = 1; t2 < n_; ++t2) {
      std::vector<std::size_t> reads;
      for (std::size_t i : sites_of_txn_[t2]) {
        if (sites_[i].key == k) reads.push_back(i);
      }
      if (reads.empty()) continue;
      for (TxnIndex t1 : writers) {
        if (t1 == t2) continue;
        std::vector<Term> any;
        for (std::size_t i : reads) any.push_back(p_.mk_and(chooses(i, t1), site_included(i)));
        Term v = p_.declare_bool("wr[" + h_.key_name(k) + "][" + tname(t1) + "][" + tname(t2) + "]");
        p_.add(p_.mk_eq(v, p_.mk_or(any)));
        wr_k_[k][t1][t2] = v;
      }
    }
  }

  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 1; b < n_; ++b) {
      if (a == b) continue;
      std::vector<Term> any;
      for (KeyIndex k = 0; k < h_.key_count(); ++k) any.push_back(wr_k_[k][a][b]);
      Term d = p_.mk_or(any);
      if (p_.is_false(d)) continue;
      Term v = p_.declare_bool("wr[" + tname(a) + "][" + tname(b) + "]");
      p_.add(p_.mk_eq(v, d));
      wr_[a][b] = v;
    }
  }
}

void Encoder::gen_isolation(IsolationLevel level) {
  gen_feasibility();
  if (!hb_done_) {
    hb_done_ = true;
    for (TxnIndex a = 0; a < n_; ++a) {
      for (TxnIndex b = 1; b < n_; ++b) {
        if (a == b) continue;
        hb_[a][b] = h_.so().test(a, b) ? p_.lit(true) : p_.declare_bool("hb[" + tname(a) + "][" + tname(b) + "]");
      }
    }
    for (TxnIndex a = 1; a < n_; ++a) {
      for (TxnIndex b = 1; b < n_; ++b) {
        if (a == b || h_.so().test(a, b)) continue;
        // Only the closure direction matters: a spurious hb edge can only add
        // co constraints, never remove one.
        p_.add(p_.mk_implies(wr_[a][b], hb_[a][b]));
        for (TxnIndex t = 1; t < n_; ++t) {
          if (t != a && t != b) p_.add(p_.mk_implies(p_.mk_and(hb_[a][t], hb_[t][b]), hb_[a][b]));
        }
      }
    }
  }

  const std::string tag = level == IsolationLevel::Causal ? "causal" : "rc";
  std::map<std::pair<TxnIndex, TxnIndex>, std::vector<Term>> premises;
  if (level == IsolationLevel::Causal) {
    for (KeyIndex k = 0; k < h_.key_count(); ++k) {
      const auto writers = h_.writers(k);
      for (TxnIndex t1 : writers) {
        for (TxnIndex t2 : writers) {
          if (t1 == t2) continue;
          for (TxnIndex t3 = 1; t3 < n_; ++t3) {
            if (t3 == t1 || t3 == t2) continue;
            Term w = wr_k_[k][t2][t3];
            if (p_.is_false(w)) continue;
            premises[{t1, t2}].push_back(p_.mk_and({w, hb_[t1][t3], write_present(t1, k)}));
          }
        }
      }
    }
  } else {
    for (TxnIndex t3 = 1; t3 < n_; ++t3) {
      const auto& ss = sites_of_txn_[t3];
      for (std::size_t jj = 0; jj < ss.size(); ++jj) {
        const std::size_t j = ss[jj];
        const KeyIndex k = sites_[j].key;
        for (std::size_t ii = 0; ii < jj; ++ii) {
          const std::size_t i = ss[ii];
          for (TxnIndex t1 : h_.writers(k)) {
            if (t1 == t3) continue;
            Term c1 = chooses(i, t1);
            if (p_.is_false(c1)) continue;
            for (TxnIndex t2 : h_.writers(k)) {
              if (t2 == t1 || t2 == t3) continue;
              premises[{t1, t2}].push_back(p_.mk_and({c1, chooses(j, t2), site_included(j)}));
            }
          }
        }
      }
    }
  }

  Matrix ww = matrix();
  for (auto& [pair, ds] : premises) {
    Term d = p_.mk_or(ds);
    if (p_.is_false(d)) continue;
    Term v = p_.declare_bool("ww_" + tag + "[" + tname(pair.first) + "][" + tname(pair.second) + "]");
    p_.add(p_.mk_implies(d, v));
    ww[pair.first][pair.second] = v;
  }

  co_.clear();
  for (TxnIndex t = 0; t < n_; ++t) {
    co_.push_back(p_.declare_int("co_" + tag + "[" + tname(t) + "]", 0, static_cast<std::int64_t>(n_) - 1));
  }
  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 0; b < n_; ++b) {
      if (a == b) continue;
      p_.add(p_.mk_implies(p_.mk_or(hb_[a][b], ww[a][b]), p_.mk_lt(co_[a], co_[b])));
    }
  }
}

void Encoder::gen_unser_approx() {
  gen_feasibility();
  if (opt_.pco == PcoEncoding::Layered) {
    gen_unser_layered();
  } else {
    gen_unser_ranked();
  }
}

Encoder::Matrix Encoder::closure(Matrix r) {
  for (TxnIndex k = 0; k < n_; ++k) {
    for (TxnIndex a = 0; a < n_; ++a) {
      if (a == k || p_.is_false(r[a][k])) continue;
      for (TxnIndex b = 0; b < n_; ++b) {
        if (b == a || b == k) continue;
        r[a][b] = p_.mk_or(r[a][b], p_.mk_and(r[a][k], r[k][b]));
      }
    }
  }
  return r;
}

// base plus one application of ww and rw on top of `pco`.
Encoder::Matrix Encoder::step(const Matrix& base, const Matrix& pco) {
  std::vector<std::vector<std::vector<Term>>> d(n_, std::vector<std::vector<Term>>(n_));
  for (KeyIndex k = 0; k < h_.key_count(); ++k) {
    const auto writers = h_.writers(k);
    for (TxnIndex t2 : writers) {
      for (TxnIndex t3 = 1; t3 < n_; ++t3) {
        Term w = wr_k_[k][t2][t3];
        if (t3 == t2 || p_.is_false(w)) continue;
        for (TxnIndex t1 : writers) {
          if (t1 == t2 || t1 == t3) continue;
          d[t1][t2].push_back(p_.mk_and({w, pco[t1][t3], write_present(t1, k)}));
        }
      }
    }
    for (TxnIndex t1 = 1; t1 < n_; ++t1) {
      for (TxnIndex t3 : writers) {
        Term w = wr_k_[k][t3][t1];
        if (t3 == t1 || p_.is_false(w)) continue;
        for (TxnIndex t2 : writers) {
          if (t2 == t1 || t2 == t3) continue;
          d[t1][t2].push_back(p_.mk_and({w, pco[t3][t2], write_present(t2, k)}));
        }
      }
    }
  }
  Matrix e = base;
  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 0; b < n_; ++b) {
      if (!d[a][b].empty()) e[a][b] = p_.mk_or(e[a][b], p_.mk_or(d[a][b]));
    }
  }
  return e;
}

void Encoder::gen_unser_layered() {
  Matrix base = matrix();
  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 0; b < n_; ++b) {
      if (a != b) base[a][b] = h_.so().test(a, b) ? p_.lit(true) : wr_[a][b];
    }
  }
  // Pairs ww or rw can ever relate bound the number of productive rounds.
  std::size_t possible = 0;
  {
    Matrix all(n_, std::vector<Term>(n_, p_.lit(true)));
    Matrix e = step(matrix(), all);
    for (TxnIndex a = 0; a < n_; ++a) {
      for (TxnIndex b = 0; b < n_; ++b) possible += !p_.is_false(e[a][b]);
    }
  }
  rounds_exhaustive_ = opt_.rounds >= possible;
  const std::size_t rounds = std::min(opt_.rounds, possible);

  Matrix cur = closure(base);
  for (std::size_t r = 0; r < rounds; ++r) cur = closure(step(base, cur));

  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 0; b < n_; ++b) {
      if (a == b) continue;
      if (p_.is_true(cur[a][b]) || p_.is_false(cur[a][b])) {
        pco_[a][b] = cur[a][b];
        continue;
      }
      pco_[a][b] = p_.declare_bool("pco[" + tname(a) + "][" + tname(b) + "]");
      p_.add(p_.mk_eq(pco_[a][b], cur[a][b]));
    }
  }

  std::vector<Term> cycles;
  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = a + 1; b < n_; ++b) cycles.push_back(p_.mk_and(pco_[a][b], pco_[b][a]));
  }
  if (rounds_exhaustive_) {
    p_.add(p_.mk_or(cycles));
    return;
  }
  // One more round; anything new means the unrolling stopped short.
  Matrix next = closure(step(base, pco_));
  std::vector<Term> grew;
  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 0; b < n_; ++b) {
      if (a != b) grew.push_back(p_.mk_and(next[a][b], p_.mk_not(pco_[a][b])));
    }
  }
  unconverged_ = p_.mk_or(grew);
  p_.add(p_.mk_or(p_.mk_or(cycles), unconverged_));
}

void Encoder::gen_unser_ranked() {
  const bool ranked = opt_.pco == PcoEncoding::Ranked;
  const auto rank_n = static_cast<std::int64_t>(n_ * n_);
  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 0; b < n_; ++b) {
      if (a == b) continue;
      if (ranked) rank_[a][b] = p_.declare_int("rank[" + tname(a) + "][" + tname(b) + "]", 0, rank_n);
      pco_[a][b] = h_.so().test(a, b) ? p_.lit(true) : p_.declare_bool("pco[" + tname(a) + "][" + tname(b) + "]");
    }
  }
  auto gt = [&](TxnIndex a, TxnIndex b, TxnIndex c, TxnIndex d) {
    return ranked ? p_.mk_gt(rank_[a][b], rank_[c][d]) : p_.lit(true);
  };

  std::vector<std::vector<std::vector<Term>>> ww_parts(n_, std::vector<std::vector<Term>>(n_));
  auto rw_parts = ww_parts;
  for (KeyIndex k = 0; k < h_.key_count(); ++k) {
    const auto writers = h_.writers(k);
    for (TxnIndex t1 : writers) {
      for (TxnIndex t2 : writers) {
        if (t1 == t2) continue;
        for (TxnIndex t3 = 1; t3 < n_; ++t3) {
          if (t3 == t1 || t3 == t2) continue;
          Term w = wr_k_[k][t2][t3];
          if (p_.is_false(w)) continue;
          ww_parts[t1][t2].push_back(p_.mk_and({w, pco_[t1][t3], gt(t1, t2, t1, t3), write_present(t1, k)}));
        }
      }
    }
    for (TxnIndex t1 = 1; t1 < n_; ++t1) {
      for (TxnIndex t3 : writers) {
        if (t3 == t1) continue;
        Term w = wr_k_[k][t3][t1];
        if (p_.is_false(w)) continue;
        for (TxnIndex t2 : writers) {
          if (t2 == t1 || t2 == t3) continue;
          rw_parts[t1][t2].push_back(p_.mk_and({w, pco_[t3][t2], gt(t1, t2, t3, t2), write_present(t2, k)}));
        }
      }
    }
  }

  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = 0; b < n_; ++b) {
      if (a == b || h_.so().test(a, b)) continue;
      std::vector<Term> body{wr_[a][b]};
      if (Term d = p_.mk_or(ww_parts[a][b]); !p_.is_false(d)) {
        Term v = p_.declare_bool("ww[" + tname(a) + "][" + tname(b) + "]");
        p_.add(p_.mk_implies(v, d));
        body.push_back(v);
      }
      if (Term d = p_.mk_or(rw_parts[a][b]); !p_.is_false(d)) {
        Term v = p_.declare_bool("rw[" + tname(a) + "][" + tname(b) + "]");
        p_.add(p_.mk_implies(v, d));
        body.push_back(v);
      }
      for (TxnIndex t = 0; t < n_; ++t) {
        if (t == a || t == b) continue;
        body.push_back(p_.mk_and({pco_[a][t], pco_[t][b], gt(a, b, a, t), gt(a, b, t, b)}));
      }
      // pco only has to be justified; deriving it whenever a body holds is
      // not needed to exhibit a cycle.
      p_.add(p_.mk_implies(pco_[a][b], p_.mk_or(body)));
    }
  }

  std::vector<Term> cycles;
  for (TxnIndex a = 0; a < n_; ++a) {
    for (TxnIndex b = a + 1; b < n_; ++b) cycles.push_back(p_.mk_and(pco_[a][b], pco_[b][a]));
  }
  p_.add(p_.mk_or(cycles));
}

Term Encoder::some_read_changed() {
  std::vector<Term> any;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    any.push_back(p_.mk_and(site_included(i), p_.mk_not(chooses(i, sites_[i].observed))));
  }
  return p_.mk_or(any);
}

}  // namespace txpredict
