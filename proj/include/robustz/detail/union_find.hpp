#pragma once

#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

namespace robustz::detail {

// Disjoint-set forest with union by size and path halving.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

  [[nodiscard]] std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Tracks which positions of a fixed-length sequence are still alive and finds
// the nearest alive position in either direction in amortized near-constant
// time. Erasing is permanent.
class AliveIndex {
 public:
  explicit AliveIndex(std::size_t n) : next_(n + 1), prev_(n + 1) {
    std::iota(next_.begin(), next_.end(), std::size_t{0});
    std::iota(prev_.begin(), prev_.end(), std::size_t{0});
  }

  [[nodiscard]] std::size_t end() const { return next_.size() - 1; }

  // First alive position >= pos, or end().
  std::size_t next(std::size_t pos) {
    std::size_t root = pos;
    while (next_[root] != root) root = next_[root];
    while (next_[pos] != root) {
      const std::size_t up = next_[pos];
      next_[pos] = root;
      pos = up;
    }
    return root;
  }

  // Last alive position <= pos, or end() when there is none.
  std::size_t prev(std::size_t pos) {
    // prev_ is shifted by one so that slot 0 is the "none" sentinel.
    std::size_t slot = pos + 1;
    std::size_t root = slot;
    while (prev_[root] != root) root = prev_[root];
    while (prev_[slot] != root) {
      const std::size_t up = prev_[slot];
      prev_[slot] = root;
      slot = up;
    }
    return root == 0 ? end() : root - 1;
  }

  [[nodiscard]] bool alive(std::size_t pos) const { return next_[pos] == pos; }

  void erase(std::size_t pos) {
    if (!alive(pos)) return;
    next_[pos] = pos + 1;
    prev_[pos + 1] = pos;
  }

 private:
  std::vector<std::size_t> next_;
  std::vector<std::size_t> prev_;
};

}  // namespace robustz::detail
