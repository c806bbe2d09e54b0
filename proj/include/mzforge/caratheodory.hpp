#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"
#include "mzforge/multi_index.hpp"

namespace mzforge {

enum class ReductionMode { Conic, Convex };

struct ReductionResult {
  std::vector<int> kept;       // indices into the input atoms, ascending
  Eigen::VectorXd weights;     // new weights, aligned with kept
  double moment_deviation = 0.0;
  bool pivot_ambiguous = false;
};

namespace detail {

inline Eigen::VectorXd moment_of(const Eigen::MatrixXd& atoms,
                                 const std::vector<int>& active,
                                 const Eigen::VectorXd& w) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(atoms.cols());
  for (size_t s = 0; s < active.size(); ++s)
    m += w(static_cast<int>(s)) * atoms.row(active[s]).transpose();
  return m;
}

}  // namespace detail

// Carathéodory pruning: given atoms v_i (rows) and weights w_i >= 0, returns
// a subset of at most D = span-dimension atoms with new nonnegative weights
// and the same weighted moment sum w_i v_i. Atoms beyond the span dimension
// are removed one at a time along null directions of the active set; exact
// dependencies below the span dimension are pruned too when doing so keeps
// the moment within tolerance. Throws MzError if the moment drifts past
// tol * (1 + |moment|).
inline ReductionResult reduce_conic(const Eigen::MatrixXd& atoms,
                                    const Eigen::VectorXd& weights,
                                    double tol = 1e-10) {
  const int count = static_cast<int>(atoms.rows());
  const int dim = static_cast<int>(atoms.cols());
  if (weights.size() != count)
    throw InvalidInput("reduce_conic: atoms/weights size mismatch");
  if (!atoms.allFinite() || !weights.allFinite())
    throw InvalidInput("reduce_conic: non-finite input");
  for (int i = 0; i < count; ++i)
    if (weights(i) < 0.0)
      throw InvalidInput("reduce_conic: negative weight");
  if (dim == 0) throw InvalidInput("reduce_conic: zero-dimensional atoms");

  Eigen::VectorXd target = atoms.transpose() * weights;
  double target_scale = 1.0 + target.norm();

  std::vector<int> active;
  for (int i = 0; i < count; ++i)
    if (weights(i) > 0.0) active.push_back(i);
  Eigen::VectorXd w(active.size());
  for (size_t s = 0; s < active.size(); ++s)
    w(static_cast<int>(s)) = weights(active[s]);

  while (static_cast<int>(active.size()) > 1) {
    const int c = static_cast<int>(active.size());
    Eigen::MatrixXd b(dim, c);
    for (int s = 0; s < c; ++s) b.col(s) = atoms.row(active[s]).transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    double smax = sv(0);
    double smin = sv(std::min<int>(dim, c) - 1);
    bool forced = c > dim;  // more atoms than coordinates: exact null space
    if (!forced && smin > 1e-12 * std::max(1.0, smax)) break;

    Eigen::VectorXd null = svd.matrixV().col(c - 1);
    double biggest = null.cwiseAbs().maxCoeff();
    double tiny = 1e-14 * biggest;
    // pick the sign that has a positive entry to drive a weight to zero
    double t = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (int pass = 0; pass < 2 && arg < 0; ++pass) {
      if (pass == 1) null = -null;
      for (int s = 0; s < c; ++s)
        if (null(s) > tiny && w(s) / null(s) < t) {
          t = w(s) / null(s);
          arg = s;
        }
    }
    if (arg < 0) throw MzError("reduce_conic: degenerate null direction");

    std::vector<int> prev_active = active;
    Eigen::VectorXd prev_w = w;
    double wmax = w.maxCoeff();
    w -= t * null;
    w(arg) = 0.0;
    bool clean = true;
    for (int s = 0; s < c; ++s) {
      if (w(s) < 0.0) {
        if (w(s) < -1e-10 * wmax) clean = false;
        w(s) = 0.0;
      }
    }
    if (!clean) throw MzError("reduce_conic: elimination produced a negative weight");

    std::vector<int> next;
    Eigen::VectorXd nw(c);
    int kept_n = 0;
    for (int s = 0; s < c; ++s)
      if (w(s) > 0.0) {
        next.push_back(active[s]);
        nw(kept_n++) = w(s);
      }
    active = std::move(next);
    w = nw.head(kept_n).eval();

    if (!forced) {
      // opportunistic pruning of a near-dependence: keep only if harmless
      double dev = (detail::moment_of(atoms, active, w) - target).norm();
      if (dev > 0.5 * tol * target_scale) {
        active = std::move(prev_active);
        w = std::move(prev_w);
        break;
      }
    }
  }

  ReductionResult res;
  res.kept = active;
  res.weights = w;
  res.moment_deviation =
      (detail::moment_of(atoms, active, w) - target).norm();
  if (res.moment_deviation > tol * target_scale)
    throw MzError("reduce_conic: moment drifted beyond tolerance");
  return res;
}

// Convex variant: also preserves the total weight by appending an all-ones
// coordinate, so at most D + 1 atoms remain.
inline ReductionResult reduce_convex(const Eigen::MatrixXd& atoms,
                                     const Eigen::VectorXd& weights,
                                     double tol = 1e-10) {
  Eigen::MatrixXd aug(atoms.rows(), atoms.cols() + 1);
  aug.leftCols(atoms.cols()) = atoms;
  aug.col(atoms.cols()).setOnes();
  return reduce_conic(aug, weights, tol);
}

// Entry point used by the quadrature builders: coordinates that vanish on
// every atom are discarded first (they constrain nothing), then the mode
// picks whether the total weight is pinned.
inline ReductionResult reduce_moment_vector(const Eigen::MatrixXd& atoms,
                                            const Eigen::VectorXd& weights,
                                            ReductionMode mode,
                                            double tol = 1e-10) {
  if (atoms.rows() == 0) throw InvalidInput("reduce_moment_vector: no atoms");
  double scale = atoms.cwiseAbs().maxCoeff();
  std::vector<int> cols;
  for (int j = 0; j < atoms.cols(); ++j)
    if (atoms.col(j).cwiseAbs().maxCoeff() > 1e-14 * scale) cols.push_back(j);
  Eigen::MatrixXd filtered(atoms.rows(), cols.size());
  for (size_t j = 0; j < cols.size(); ++j) filtered.col(j) = atoms.col(cols[j]);
  return mode == ReductionMode::Conic ? reduce_conic(filtered, weights, tol)
                                      : reduce_convex(filtered, weights, tol);
}

struct GramianAtoms {
  Eigen::MatrixXd rows;       // one real moment vector per atom
  int span_dimension = 0;     // dimension of the moment span
  bool exact_bookkeeping = false;  // integer frequency accounting was used
  bool pivot_ambiguous = false;    // numerical rank decision was borderline
};

// Maps each point to the real coordinates that determine its rank-one Gram
// contribution phi(x) phi(x)^*. Trigonometric systems get exact bookkeeping
// over the frequency difference set (the zero frequency contributes the
// constant 1, every symmetric pair contributes a cosine and a sine). Other
// systems go through the entrywise real embedding of Hermitian matrices,
// cut down to its numerical rank.
inline GramianAtoms atomize_gramian(const FunctionSystem& system,
                                    const Eigen::MatrixXd& points) {
  const int np = static_cast<int>(points.rows());
  if (np == 0) throw InvalidInput("atomize_gramian: no points");
  if (points.cols() != system.domain_dim())
    throw InvalidInput("atomize_gramian: point dimension mismatch");

  GramianAtoms out;
  if (const auto* trig = dynamic_cast<const TrigSystem*>(&system)) {
    MultiIndexSet diff = difference_set(trig->index_set());
    std::vector<Index> reps;  // one representative per {v, -v} pair
    for (int r = 0; r < diff.size(); ++r) {
      const Index& v = diff.row(r);
      bool zero = true, positive_rep = false;
      for (auto t : v)
        if (t != 0) {
          zero = false;
          positive_rep = t > 0;
          break;
        }
      if (!zero && positive_rep) reps.push_back(v);
    }
    out.span_dimension = diff.size();
    out.exact_bookkeeping = true;
    out.rows.resize(np, diff.size());
    for (int i = 0; i < np; ++i) {
      Eigen::VectorXd x = points.row(i).transpose();
      out.rows(i, 0) = 1.0;  // zero frequency
      for (size_t p = 0; p < reps.size(); ++p) {
        double ang = kTwoPi * detail::torus_phase_fraction(reps[p], x);
        out.rows(i, 1 + 2 * p) = std::cos(ang);
        out.rows(i, 2 + 2 * p) = std::sin(ang);
      }
    }
    return out;
  }

  const int n = system.dim();
  Eigen::MatrixXd raw(np, n * n);
  Eigen::VectorXcd phi;
  for (int i = 0; i < np; ++i) {
    system.eval(points.row(i).transpose(), phi);
    int c = 0;
    for (int j = 0; j < n; ++j) raw(i, c++) = std::norm(phi(j));
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Cplx e = phi(j) * std::conj(phi(k));
        raw(i, c++) = e.real();
        raw(i, c++) = e.imag();
      }
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(raw.transpose());
  Eigen::VectorXd diag = qr.matrixR()
                             .diagonal()
                             .head(std::min<int>(n * n, np))
                             .cwiseAbs();
  double top = diag.size() ? diag(0) : 0.0;
  if (!(top > 0.0)) throw InvalidInput("atomize_gramian: all atoms vanish");
  const double rank_tol = 1e-10;
  int rank = 0;
  for (int k = 0; k < diag.size(); ++k) {
    double rel = diag(k) / top;
    if (rel > rank_tol) ++rank;
    if (rel > 0.1 * rank_tol && rel < 10.0 * rank_tol)
      out.pivot_ambiguous = true;  // the rank cut sits inside the noise band
  }
  Eigen::MatrixXd basis =
      qr.householderQ() * Eigen::MatrixXd::Identity(n * n, rank);
  out.rows = raw * basis;
  out.span_dimension = rank;
  return out;
}

}  // namespace mzforge
