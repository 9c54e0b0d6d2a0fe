#include "txpredict/relation.hpp"

#include <bit>

namespace txpredict {

Relation::Relation(std::size_t n) : n_(n), words_((n + 63) / 64), bits_(n * ((n + 63) / 64), 0) {}

Relation& Relation::operator|=(const Relation& other) {
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

void Relation::close_transitively() {
  for (std::size_t k = 0; k < n_; ++k) {
    const std::uint64_t* row_k = &bits_[k * words_];
    for (std::size_t i = 0; i < n_; ++i) {
      if (!test(i, k)) continue;
      std::uint64_t* row_i = &bits_[i * words_];
      for (std::size_t w = 0; w < words_; ++w) row_i[w] |= row_k[w];
    }
  }
}

bool Relation::has_reflexive_pair() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (test(i, i)) return true;
  }
  return false;
}

std::vector<std::pair<std::size_t, std::size_t>> Relation::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (test(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::size_t> Relation::successors(std::size_t from) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_; ++j) {
    if (test(from, j)) out.push_back(j);
  }
  return out;
}

std::size_t Relation::count() const {
  std::size_t c = 0;
  for (std::uint64_t w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

Relation transitive_closure(Relation r) {
  r.close_transitively();
  return r;
}

bool is_acyclic(const Relation& r) { return !transitive_closure(r).has_reflexive_pair(); }

}  // namespace txpredict
