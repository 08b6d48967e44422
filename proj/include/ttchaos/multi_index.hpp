#pragma once

// Multi-index sets for polynomial chaos: full tensor grids with per-mode
// order limits, and total-degree (sparse) sets in lexicographic order.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttchaos {

// All alpha with 0 <= alpha_m <= limits[m]; enumeration is row-major with
// the last mode fastest, matching dense tensor flattening.
class FullIndexSet {
public:
  explicit FullIndexSet(std::vector<int> limits) : limits_(std::move(limits)) {
    size_ = 1;
    for (int l : limits_) {
      if (l < 0) throw std::invalid_argument("FullIndexSet: negative order limit");
      size_ *= static_cast<std::size_t>(l) + 1;
    }
  }

  FullIndexSet(int dims, int order) : FullIndexSet(std::vector<int>(dims, order)) {}

  int dims() const { return static_cast<int>(limits_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<int>& limits() const { return limits_; }

  std::vector<int> at(std::size_t i) const {
    if (i >= size_) throw std::out_of_range("FullIndexSet: index out of range");
    std::vector<int> alpha(limits_.size());
    for (int m = dims() - 1; m >= 0; --m) {
      const std::size_t base = static_cast<std::size_t>(limits_[m]) + 1;
      alpha[m] = static_cast<int>(i % base);
      i /= base;
    }
    return alpha;
  }

  std::size_t index_of(const std::vector<int>& alpha) const {
    if (static_cast<int>(alpha.size()) != dims())
      throw std::invalid_argument("FullIndexSet: dimension mismatch");
    std::size_t i = 0;
    for (int m = 0; m < dims(); ++m) {
      if (alpha[m] < 0 || alpha[m] > limits_[m])
        throw std::out_of_range("FullIndexSet: component out of range");
      i = i * (static_cast<std::size_t>(limits_[m]) + 1) + alpha[m];
    }
    return i;
  }

  bool contains(const std::vector<int>& alpha) const {
    if (static_cast<int>(alpha.size()) != dims()) return false;
    for (int m = 0; m < dims(); ++m)
      if (alpha[m] < 0 || alpha[m] > limits_[m]) return false;
    return true;
  }

private:
  std::vector<int> limits_;
  std::size_t size_ = 1;
};

// All alpha with |alpha| = sum alpha_m <= order, enumerated in ascending
// lexicographic order of (alpha_1, .., alpha_M).
class SparseIndexSet {
public:
  SparseIndexSet(int dims, int order) : dims_(dims), order_(order) {
    if (dims < 1) throw std::invalid_argument("SparseIndexSet: need at least one dimension");
    if (order < 0) throw std::invalid_argument("SparseIndexSet: negative order");
    std::vector<int> alpha(dims, 0);
    build(alpha, 0, order);
  }

  int dims() const { return dims_; }
  int order() const { return order_; }
  std::size_t size() const { return elems_.size(); }
  const std::vector<int>& at(std::size_t i) const { return elems_[i]; }
  const std::vector<std::vector<int>>& all() const { return elems_; }

  bool contains(const std::vector<int>& alpha) const {
    if (static_cast<int>(alpha.size()) != dims_) return false;
    int total = 0;
    for (int a : alpha) {
      if (a < 0) return false;
      total += a;
    }
    return total <= order_;
  }

  // Position in the lexicographic enumeration; throws if absent.
  std::size_t index_of(const std::vector<int>& alpha) const {
    std::size_t lo = 0, hi = elems_.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (elems_[mid] < alpha)
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo == elems_.size() || elems_[lo] != alpha)
      throw std::out_of_range("SparseIndexSet: index not in set");
    return lo;
  }

private:
  void build(std::vector<int>& alpha, int m, int left) {
    if (m == dims_) {
      elems_.push_back(alpha);
      return;
    }
    for (int a = 0; a <= left; ++a) {
      alpha[m] = a;
      build(alpha, m + 1, left - a);
    }
    alpha[m] = 0;
  }

  int dims_, order_;
  std::vector<std::vector<int>> elems_;
};

}  // namespace ttchaos
