#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "mzforge/errors.hpp"
#include "mzforge/function_system.hpp"

namespace mzforge {

enum class WeightMode { Probability, Conic };

// Finitely supported measure: row i of points carries weight weights[i].
struct DiscreteMeasure {
  Eigen::MatrixXd points;   // N x domain_dim
  Eigen::VectorXd weights;  // N, nonnegative
  WeightMode mode = WeightMode::Probability;

  int size() const { return static_cast<int>(weights.size()); }

  void validate() const {
    if (points.rows() != weights.size())
      throw InvalidInput("DiscreteMeasure: points/weights size mismatch");
    if (!points.allFinite() || !weights.allFinite())
      throw InvalidInput("DiscreteMeasure: non-finite data");
    for (int i = 0; i < weights.size(); ++i)
      if (weights[i] < 0.0)
        throw InvalidInput("DiscreteMeasure: negative weight");
    if (mode == WeightMode::Probability &&
        std::abs(weights.sum() - 1.0) > 1e-12)
      throw InvalidInput("DiscreteMeasure: probability weights must sum to 1");
  }
};

// Canonical storage form: torus coordinates wrapped into [0,1), sphere points
// normalized. Function values are invariant under both maps.
inline void canonicalize_points(Domain domain, Eigen::MatrixXd& points) {
  if (domain == Domain::Torus) {
    for (int i = 0; i < points.rows(); ++i)
      for (int j = 0; j < points.cols(); ++j) {
        double v = points(i, j) - std::floor(points(i, j));
        points(i, j) = (v >= 1.0) ? 0.0 : v;
      }
  } else {
    for (int i = 0; i < points.rows(); ++i) {
      double r = points.row(i).norm();
      if (!(r > 0.0))
        throw InvalidInput("canonicalize_points: zero-length sphere point");
      points.row(i) /= r;
    }
  }
}

}  // namespace mzforge
