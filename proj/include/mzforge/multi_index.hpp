#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mzforge/errors.hpp"

namespace mzforge {

using Index = std::vector<std::int64_t>;

// Finite set of distinct integer frequency vectors in Z^d.
class MultiIndexSet {
 public:
  MultiIndexSet(int d, std::vector<Index> rows) : d_(d), rows_(std::move(rows)) {
    if (d_ < 1) throw InvalidInput("MultiIndexSet: dimension must be >= 1");
    if (rows_.empty()) throw InvalidInput("MultiIndexSet: empty set");
    std::set<Index> seen;
    for (const Index& r : rows_) {
      if (static_cast<int>(r.size()) != d_)
        throw InvalidInput("MultiIndexSet: row dimension mismatch");
      if (!seen.insert(r).second)
        throw InvalidInput("MultiIndexSet: duplicate frequency vector");
    }
  }

  int dim() const { return d_; }
  int size() const { return static_cast<int>(rows_.size()); }
  const Index& row(int i) const { return rows_[i]; }
  const std::vector<Index>& rows() const { return rows_; }

  bool contains(const Index& k) const {
    return std::find(rows_.begin(), rows_.end(), k) != rows_.end();
  }

  bool contains_zero() const { return contains(Index(d_, 0)); }

  std::int64_t max_abs(int j) const {
    std::int64_t m = 0;
    for (const Index& r : rows_) m = std::max(m, std::abs(r[j]));
    return m;
  }

 private:
  int d_;
  std::vector<Index> rows_;
};

// D(I) = {k - l : k, l in I}, deduplicated, lexicographic order.
inline MultiIndexSet difference_set(const MultiIndexSet& I) {
  std::set<Index> diffs;
  for (int a = 0; a < I.size(); ++a)
    for (int b = 0; b < I.size(); ++b) {
      Index v(I.dim());
      for (int j = 0; j < I.dim(); ++j) v[j] = I.row(a)[j] - I.row(b)[j];
      diffs.insert(std::move(v));
    }
  MultiIndexSet out(I.dim(), {diffs.begin(), diffs.end()});
  std::int64_t n = I.size();
  if (out.size() > n * n - n + 1)
    throw InvalidInput("difference_set: cardinality bound violated");
  return out;
}

// {a + b : a in A, b in B}, deduplicated, lexicographic order.
inline MultiIndexSet sumset(const MultiIndexSet& A, const MultiIndexSet& B) {
  if (A.dim() != B.dim()) throw InvalidInput("sumset: dimension mismatch");
  std::set<Index> sums;
  for (int a = 0; a < A.size(); ++a)
    for (int b = 0; b < B.size(); ++b) {
      Index v(A.dim());
      for (int j = 0; j < A.dim(); ++j) v[j] = A.row(a)[j] + B.row(b)[j];
      sums.insert(std::move(v));
    }
  return MultiIndexSet(A.dim(), {sums.begin(), sums.end()});
}

// fold-fold sumset I + I + ... + I (fold >= 1 copies).
inline MultiIndexSet self_sumset(const MultiIndexSet& I, int fold) {
  if (fold < 1) throw InvalidInput("self_sumset: fold must be >= 1");
  MultiIndexSet acc = I;
  for (int t = 1; t < fold; ++t) acc = sumset(acc, I);
  return acc;
}

inline MultiIndexSet union_with_zero(const MultiIndexSet& I) {
  if (I.contains_zero()) return I;
  std::vector<Index> rows = I.rows();
  rows.push_back(Index(I.dim(), 0));
  std::sort(rows.begin(), rows.end());
  return MultiIndexSet(I.dim(), rows);
}

namespace detail {
inline void enumerate_rec(int d, std::int64_t lo, std::int64_t hi,
                          const std::function<bool(const Index&)>& keep,
                          Index& cur, std::vector<Index>& out) {
  if (static_cast<int>(cur.size()) == d) {
    if (keep(cur)) out.push_back(cur);
    return;
  }
  for (std::int64_t v = lo; v <= hi; ++v) {
    cur.push_back(v);
    enumerate_rec(d, lo, hi, keep, cur, out);
    cur.pop_back();
  }
}
}  // namespace detail

// {k : |k|_1 <= r}
inline MultiIndexSet l1ball(int d, std::int64_t r) {
  if (d < 1 || r < 0) throw InvalidInput("l1ball: need d >= 1, r >= 0");
  std::vector<Index> rows;
  Index cur;
  detail::enumerate_rec(
      d, -r, r,
      [&](const Index& k) {
        std::int64_t s = 0;
        for (auto v : k) s += std::abs(v);
        return s <= r;
      },
      cur, rows);
  return MultiIndexSet(d, std::move(rows));
}

// {k : prod_j (|k_j| + 1) <= T}
inline MultiIndexSet hyperbolic(int d, std::int64_t T) {
  if (d < 1 || T < 1) throw InvalidInput("hyperbolic: need d >= 1, T >= 1");
  std::vector<Index> rows;
  Index cur;
  detail::enumerate_rec(
      d, -(T - 1), T - 1,
      [&](const Index& k) {
        std::int64_t p = 1;
        for (auto v : k) {
          p *= std::abs(v) + 1;
          if (p > T) return false;
        }
        return p <= T;
      },
      cur, rows);
  return MultiIndexSet(d, std::move(rows));
}

// {k : |k|_inf <= r}
inline MultiIndexSet cube(int d, std::int64_t r) {
  if (d < 1 || r < 0) throw InvalidInput("cube: need d >= 1, r >= 0");
  std::vector<Index> rows;
  Index cur;
  detail::enumerate_rec(d, -r, r, [](const Index&) { return true; }, cur, rows);
  return MultiIndexSet(d, std::move(rows));
}

// {-ceil(n/2), ..., floor(n/2) - 1}^d: the n-per-axis centered grid of
// frequencies reconstructed by the equidistant n-grid.
inline MultiIndexSet centered_grid(int d, std::int64_t n) {
  if (d < 1 || n < 1) throw InvalidInput("centered_grid: need d >= 1, n >= 1");
  std::vector<Index> rows;
  Index cur;
  detail::enumerate_rec(d, -(n / 2), (n - 1) / 2,
                        [](const Index&) { return true; }, cur, rows);
  return MultiIndexSet(d, std::move(rows));
}

inline nlohmann::json index_set_to_json(const MultiIndexSet& I) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Index& r : I.rows()) arr.push_back(r);
  return arr;
}

inline MultiIndexSet index_set_from_json(const nlohmann::json& arr) {
  if (!arr.is_array() || arr.empty())
    throw InvalidInput("index set JSON: expected non-empty array of vectors");
  std::vector<Index> rows;
  int d = -1;
  for (const auto& item : arr) {
    if (!item.is_array())
      throw InvalidInput("index set JSON: expected array rows");
    Index r;
    for (const auto& v : item) {
      if (!v.is_number_integer())
        throw InvalidInput("index set JSON: expected integer entries");
      r.push_back(v.get<std::int64_t>());
    }
    if (d < 0) d = static_cast<int>(r.size());
    rows.push_back(std::move(r));
  }
  return MultiIndexSet(d, std::move(rows));
}

inline MultiIndexSet index_set_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open index set file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("index set file parse error: ") + e.what());
  }
  return index_set_from_json(j);
}

// Embedded benchmark frequency sets with known lattice behavior.
inline MultiIndexSet benchmark_set_2d() {
  return MultiIndexSet(
      2, {{0, 0},
          {2671704, 2671704},
          {-3111990, 3111990},
          {-4145974, -4145974},
          {4520742, -4520742},
          {-5553600, -5553600},
          {-6867835, 6867835},
          {18119640, 18119640},
          {39011940, -39011940},
          {-39021892, 39021892}});
}

inline MultiIndexSet benchmark_set_1d() {
  return MultiIndexSet(1, {{0},
                           {107062},
                           {124928},
                           {1033760},
                           {1414818},
                           {2142995},
                           {2820145},
                           {4210229},
                           {4645143},
                           {5264579}});
}

}  // namespace mzforge
