#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"
#include "mzforge/linalg.hpp"
#include "mzforge/measure.hpp"
#include "mzforge/multi_index.hpp"

namespace mzforge {

// Nodes {(j z mod M 1)/M : j = 0..M-1} on the torus.
struct Rank1Lattice {
  std::int64_t size = 0;  // M
  Index generator;        // z
};

namespace detail {

inline std::int64_t mod_positive(__int128 v, std::int64_t m) {
  __int128 r = v % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

}  // namespace detail

inline void validate_lattice(const Rank1Lattice& lat) {
  if (lat.size < 1) throw InvalidInput("Rank1Lattice: size must be >= 1");
  if (lat.generator.empty())
    throw InvalidInput("Rank1Lattice: empty generator");
}

inline DiscreteMeasure lattice_measure(const Rank1Lattice& lat) {
  validate_lattice(lat);
  const int d = static_cast<int>(lat.generator.size());
  const std::int64_t m = lat.size;
  DiscreteMeasure mu;
  mu.points.resize(m, d);
  for (std::int64_t j = 0; j < m; ++j)
    for (int i = 0; i < d; ++i) {
      std::int64_t num =
          detail::mod_positive(static_cast<__int128>(j) * lat.generator[i], m);
      mu.points(j, i) = static_cast<double>(num) / static_cast<double>(m);
    }
  mu.weights = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  mu.mode = WeightMode::Probability;
  return mu;
}

// The lattice rule reconstructs the span of I exactly when the residues
// <k, z> mod M are pairwise distinct over k in I; equivalently no nonzero
// difference frequency is aliased to zero.
inline bool reconstructs(const MultiIndexSet& I, const Rank1Lattice& lat) {
  validate_lattice(lat);
  if (static_cast<int>(lat.generator.size()) != I.dim())
    throw InvalidInput("reconstructs: generator dimension mismatch");
  if (I.size() > lat.size) return false;  // pigeonhole
  std::vector<std::int64_t> residues;
  residues.reserve(I.size());
  for (int k = 0; k < I.size(); ++k) {
    __int128 dot = 0;
    for (int j = 0; j < I.dim(); ++j)
      dot += static_cast<__int128>(I.row(k)[j]) * lat.generator[j];
    residues.push_back(detail::mod_positive(dot, lat.size));
  }
  std::sort(residues.begin(), residues.end());
  return std::adjacent_find(residues.begin(), residues.end()) ==
         residues.end();
}

// Gram deviation of the equal-weight lattice rule, with every phase reduced
// to an exact rational <k, j z>/M in integer arithmetic first. This stays
// accurate for frequencies far beyond where naive floating-point node
// coordinates lose the phase.
inline double lattice_mz_constant(const MultiIndexSet& I,
                                  const Rank1Lattice& lat) {
  validate_lattice(lat);
  if (static_cast<int>(lat.generator.size()) != I.dim())
    throw InvalidInput("lattice_mz_constant: generator dimension mismatch");
  const std::int64_t m = lat.size;
  Eigen::MatrixXcd phi(I.size(), m);
  for (int k = 0; k < I.size(); ++k) {
    __int128 dot = 0;
    for (int j = 0; j < I.dim(); ++j)
      dot += static_cast<__int128>(I.row(k)[j]) * lat.generator[j];
    std::int64_t step = detail::mod_positive(dot, m);
    for (std::int64_t j = 0; j < m; ++j) {
      std::int64_t num = detail::mod_positive(
          static_cast<__int128>(step) * j, m);
      double frac = static_cast<double>(num) / static_cast<double>(m);
      phi(k, j) = std::polar(1.0, kTwoPi * frac);
    }
  }
  Eigen::MatrixXcd a = (phi * phi.adjoint()) / static_cast<double>(m);
  HermitianMatrix h(0.5 * (a + a.adjoint()));
  return spectral_distance_to_identity(hermitian_eigh(h).eigenvalues);
}

struct LatticeSearchResult {
  bool found = false;
  bool budget_exhausted = false;  // stopped before covering the range
  Rank1Lattice lattice;           // valid when found
  long long candidates_tried = 0;
};

// Smallest M <= max_size admitting a reconstructing generator, scanning M
// upward and z in lexicographic order over {0..M-1}^d. The optional budget
// caps the number of (M, z) candidates; exceeding it yields a partial
// result rather than a wrong minimum.
inline LatticeSearchResult minimal_lattice_size(const MultiIndexSet& I,
                                                std::int64_t max_size,
                                                long long candidate_budget = -1) {
  if (max_size < 1)
    throw InvalidInput("minimal_lattice_size: max_size must be >= 1");
  LatticeSearchResult out;
  const int d = I.dim();
  for (std::int64_t m = std::max<std::int64_t>(I.size(), 1); m <= max_size;
       ++m) {
    Rank1Lattice cand;
    cand.size = m;
    cand.generator.assign(d, 0);
    while (true) {
      if (candidate_budget >= 0 && out.candidates_tried >= candidate_budget) {
        out.budget_exhausted = true;
        return out;
      }
      ++out.candidates_tried;
      if (reconstructs(I, cand)) {
        out.found = true;
        out.lattice = cand;
        return out;
      }
      int pos = d - 1;
      while (pos >= 0 && cand.generator[pos] == m - 1) {
        cand.generator[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++cand.generator[pos];
    }
  }
  return out;
}

inline std::int64_t exact_factorial(int m) {
  if (m < 0) throw InvalidInput("exact_factorial: negative argument");
  if (m > 20)
    throw BigIntRequired(
        "exact_factorial: " + std::to_string(m) +
        "! exceeds 64-bit range; arbitrary-precision integers are required");
  std::int64_t f = 1;
  for (int t = 2; t <= m; ++t) f *= t;
  return f;
}

// The pair {a, a + M! b}. For every modulus M' <= M the difference M! b has
// <M! b, z> divisible by M', so every rank-1 lattice rule with at most M
// nodes aliases the two frequencies and cannot reconstruct their span.
inline MultiIndexSet fooling_index_set(const Index& a, const Index& b,
                                       int lattice_cap) {
  if (a.empty() || a.size() != b.size())
    throw InvalidInput("fooling_index_set: offset/direction size mismatch");
  if (std::all_of(b.begin(), b.end(), [](std::int64_t v) { return v == 0; }))
    throw InvalidInput("fooling_index_set: direction must be nonzero");
  if (lattice_cap < 1)
    throw InvalidInput("fooling_index_set: lattice cap must be >= 1");
  std::int64_t fact = exact_factorial(lattice_cap);
  Index second(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    __int128 v = static_cast<__int128>(fact) * b[j] + a[j];
    if (v > std::numeric_limits<std::int64_t>::max() ||
        v < std::numeric_limits<std::int64_t>::min())
      throw BigIntRequired("fooling_index_set: frequency exceeds 64 bits");
    second[j] = static_cast<std::int64_t>(v);
  }
  std::vector<Index> rows{a, second};
  std::sort(rows.begin(), rows.end());
  return MultiIndexSet(static_cast<int>(a.size()), std::move(rows));
}

struct FoolingCertificate {
  long long lattices_checked = 0;
  long long nodes_checked = 0;
  double max_abs_on_nodes = 0.0;  // sup |f| over all checked rational nodes
  double l2_norm_sq = 2.0;        // exact: two orthonormal terms, unit coeffs
};

namespace detail {

// frac(<k, x>) for rational x with per-coordinate reduced denominators,
// carried out entirely in integers over the common denominator.
inline double rational_phase_fraction(const Index& k,
                                      const std::vector<std::int64_t>& num,
                                      const std::vector<std::int64_t>& den) {
  std::int64_t l = 1;
  for (std::int64_t q : den) l = std::lcm(l, q);
  __int128 total = 0;
  for (std::size_t j = 0; j < k.size(); ++j)
    total += static_cast<__int128>(k[j]) * num[j] * (l / den[j]);
  return static_cast<double>(mod_positive(total, l)) /
         static_cast<double>(l);
}

template <typename Visit>
inline void for_each_rational_grid_point(int d, int max_den, Visit&& visit) {
  // distinct reduced fractions p/q in [0,1) with q <= max_den
  std::vector<std::pair<std::int64_t, std::int64_t>> fracs;
  for (std::int64_t q = 1; q <= max_den; ++q)
    for (std::int64_t p = 0; p < q; ++p)
      if (std::gcd(p, q) == 1) fracs.emplace_back(p, q);
  std::vector<std::size_t> pick(d, 0);
  std::vector<std::int64_t> num(d), den(d);
  while (true) {
    for (int j = 0; j < d; ++j) {
      num[j] = fracs[pick[j]].first;
      den[j] = fracs[pick[j]].second;
    }
    visit(num, den);
    int pos = d - 1;
    while (pos >= 0 && pick[pos] + 1 == fracs.size()) {
      pick[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++pick[pos];
  }
}

}  // namespace detail

// Exhaustive confirmation that the two-frequency set is aliased by every
// rational node configuration with denominators up to the cap: the witness
// f = e(k2 . x) - e(k1 . x) has unit L2 mass on each term yet vanishes on
// every such node, and in particular no rank-1 lattice with at most cap
// nodes separates the pair.
inline FoolingCertificate verify_fooling(const MultiIndexSet& pair,
                                         int lattice_cap) {
  if (pair.size() != 2)
    throw InvalidInput("verify_fooling: expected exactly two frequencies");
  if (lattice_cap < 1)
    throw InvalidInput("verify_fooling: lattice cap must be >= 1");
  const int d = pair.dim();
  FoolingCertificate cert;

  for (std::int64_t m = 1; m <= lattice_cap; ++m) {
    Rank1Lattice lat;
    lat.size = m;
    lat.generator.assign(d, 0);
    while (true) {
      ++cert.lattices_checked;
      if (reconstructs(pair, lat))
        throw MzError("verify_fooling: a lattice of size " +
                      std::to_string(m) + " separates the pair");
      int pos = d - 1;
      while (pos >= 0 && lat.generator[pos] == m - 1) {
        lat.generator[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
      ++lat.generator[pos];
    }
  }

  detail::for_each_rational_grid_point(
      d, lattice_cap,
      [&](const std::vector<std::int64_t>& num,
          const std::vector<std::int64_t>& den) {
        double f1 = detail::rational_phase_fraction(pair.row(0), num, den);
        double f2 = detail::rational_phase_fraction(pair.row(1), num, den);
        Cplx diff = std::polar(1.0, kTwoPi * f2) - std::polar(1.0, kTwoPi * f1);
        cert.max_abs_on_nodes = std::max(cert.max_abs_on_nodes, std::abs(diff));
        ++cert.nodes_checked;
      });
  return cert;
}

}  // namespace mzforge
