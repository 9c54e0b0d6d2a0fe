#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace txpredict {

/// Binary relation over {0, ..., n-1}, stored as a dense bit matrix.
///
/// Rows are packed 64 bits per word, so transitive closure runs as
/// row-or operations (Warshall) in O(n^3 / 64).
class Relation {
 public:
  Relation() = default;
  explicit Relation(std::size_t n);

  std::size_t size() const { return n_; }

  bool test(std::size_t from, std::size_t to) const {
    return (bits_[from * words_ + to / 64] >> (to % 64)) & 1U;
  }
  void set(std::size_t from, std::size_t to) { bits_[from * words_ + to / 64] |= std::uint64_t{1} << (to % 64); }
  void reset(std::size_t from, std::size_t to) {
    bits_[from * words_ + to / 64] &= ~(std::uint64_t{1} << (to % 64));
  }

  Relation& operator|=(const Relation& other);
  bool operator==(const Relation& other) const = default;

  /// Replaces the relation with its transitive closure.
  void close_transitively();

  /// True when some element reaches itself. Only meaningful after closure.
  bool has_reflexive_pair() const;

  /// All pairs in (from, to) lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;

  /// Successors of `from` in ascending order.
  std::vector<std::size_t> successors(std::size_t from) const;

  std::size_t count() const;

 private:
  std::size_t n_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

Relation transitive_closure(Relation r);

/// True if the relation, viewed as a directed graph, has no cycle.
bool is_acyclic(const Relation& r);

}  // namespace txpredict
