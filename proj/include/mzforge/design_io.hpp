#pragma once

#include <json.hpp>

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mzforge/design.hpp"
#include "mzforge/errors.hpp"
#include "mzforge/frames.hpp"
#include "mzforge/function_system.hpp"
#include "mzforge/measure.hpp"
#include "mzforge/multi_index.hpp"
#include "mzforge/quadrature.hpp"
#include "mzforge/recovery.hpp"
#include "mzforge/sphere_harmonics.hpp"

namespace mzforge {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kDesignSchema = "mzdesign/1";
inline constexpr const char* kEntfSchema = "mzentf/1";
inline constexpr const char* kRecoverySchema = "mzrecovery/1";

struct DesignMeta {
  std::uint64_t seed = 0;
  int restarts = 0;
  long iterations = 0;
  std::string tool_version = kToolVersion;
};

// On-disk form of a certified (or attempted) discretization. Torus designs
// carry their frequency set, sphere designs their harmonic degree; p > 2
// marks an even-power design whose constant refers to the lifted system.
struct DesignFile {
  std::string domain;  // "torus" | "sphere"
  std::optional<MultiIndexSet> index_set;
  std::optional<int> degree;
  int p = 2;
  DiscreteMeasure measure;
  double mz_constant = std::numeric_limits<double>::infinity();
  bool exact = false;
  DesignMeta meta;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const char* name,
                                           const char* context) {
  auto it = j.find(name);
  if (it == j.end())
    throw InvalidInput(std::string(context) + ": missing field '" + name +
                       "'");
  return *it;
}

template <typename T>
T field_as(const nlohmann::json& j, const char* name, const char* context) {
  try {
    return require_field(j, name, context).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string(context) + ": field '" + name + "': " +
                       e.what());
  }
}

inline nlohmann::json load_json_file(const std::string& path,
                                     const char* context) {
  std::ifstream in(path);
  if (!in)
    throw InvalidInput(std::string(context) + ": cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    // the parser reports line and column in its message
    throw InvalidInput(std::string(context) + ": '" + path + "': " + e.what());
  }
}

inline void store_json_file(const std::string& path, const nlohmann::json& j,
                            const char* context) {
  std::ofstream out(path);
  if (!out)
    throw InvalidInput(std::string(context) + ": cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace detail

inline nlohmann::json design_to_json(const DesignFile& d) {
  nlohmann::json j;
  j["schema"] = kDesignSchema;
  j["domain"] = d.domain;
  if (d.index_set) j["index_set"] = index_set_to_json(*d.index_set);
  if (d.degree) j["degree"] = *d.degree;
  j["p"] = d.p;
  nlohmann::json pts = nlohmann::json::array();
  for (int i = 0; i < d.measure.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < d.measure.points.cols(); ++c)
      row.push_back(d.measure.points(i, c));
    pts.push_back(std::move(row));
  }
  j["points"] = std::move(pts);
  nlohmann::json w = nlohmann::json::array();
  for (int i = 0; i < d.measure.size(); ++i) w.push_back(d.measure.weights(i));
  j["weights"] = std::move(w);
  j["mz_constant"] = d.mz_constant;
  j["exact"] = d.exact;
  j["meta"] = {{"seed", d.meta.seed},
               {"restarts", d.meta.restarts},
               {"iterations", d.meta.iterations},
               {"tool_version", d.meta.tool_version}};
  return j;
}

inline DesignFile design_from_json(const nlohmann::json& j) {
  constexpr const char* ctx = "design file";
  if (detail::field_as<std::string>(j, "schema", ctx) != kDesignSchema)
    throw InvalidInput("design file: unknown schema");
  DesignFile d;
  d.domain = detail::field_as<std::string>(j, "domain", ctx);
  if (d.domain != "torus" && d.domain != "sphere")
    throw InvalidInput("design file: field 'domain': expected torus|sphere");
  if (j.contains("index_set"))
    d.index_set = index_set_from_json(j["index_set"]);
  if (j.contains("degree")) d.degree = detail::field_as<int>(j, "degree", ctx);
  if (d.domain == "torus" && !d.index_set)
    throw InvalidInput("design file: torus designs need 'index_set'");
  if (d.domain == "sphere" && !d.degree)
    throw InvalidInput("design file: sphere designs need 'degree'");
  d.p = j.contains("p") ? detail::field_as<int>(j, "p", ctx) : 2;

  auto pts = detail::field_as<std::vector<std::vector<double>>>(j, "points",
                                                                ctx);
  auto wts = detail::field_as<std::vector<double>>(j, "weights", ctx);
  if (pts.empty())
    throw InvalidInput("design file: field 'points': empty");
  if (pts.size() != wts.size())
    throw InvalidInput(
        "design file: fields 'points' and 'weights' disagree on length");
  const int dim = static_cast<int>(pts.front().size());
  d.measure.points.resize(static_cast<int>(pts.size()), dim);
  d.measure.weights.resize(static_cast<int>(wts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (static_cast<int>(pts[i].size()) != dim)
      throw InvalidInput("design file: field 'points': row " +
                         std::to_string(i) + " has inconsistent dimension");
    for (int c = 0; c < dim; ++c)
      d.measure.points(static_cast<int>(i), c) = pts[i][c];
    d.measure.weights(static_cast<int>(i)) = wts[i];
  }
  // hand-edited weights must be quantifiable by re-verification, not
  // rejected here, so only nonnegativity and finiteness are gated
  d.measure.mode = WeightMode::Conic;
  d.measure.validate();

  d.mz_constant = detail::field_as<double>(j, "mz_constant", ctx);
  d.exact = detail::field_as<bool>(j, "exact", ctx);
  if (j.contains("meta")) {
    const auto& m = j["meta"];
    if (m.contains("seed")) d.meta.seed = m["seed"].get<std::uint64_t>();
    if (m.contains("restarts")) d.meta.restarts = m["restarts"].get<int>();
    if (m.contains("iterations"))
      d.meta.iterations = m["iterations"].get<long>();
    if (m.contains("tool_version"))
      d.meta.tool_version = m["tool_version"].get<std::string>();
  }
  return d;
}

inline void write_design_file(const std::string& path, const DesignFile& d) {
  detail::store_json_file(path, design_to_json(d), "design file");
}

inline DesignFile read_design_file(const std::string& path) {
  return design_from_json(detail::load_json_file(path, "design file"));
}

// one row per atom: x_1,...,x_d,weight
inline void write_design_csv(const std::string& path,
                             const DiscreteMeasure& m) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("design csv: cannot write '" + path + "'");
  const int d = static_cast<int>(m.points.cols());
  for (int c = 0; c < d; ++c) out << "x_" << (c + 1) << ',';
  out << "weight\n";
  out.precision(17);
  for (int i = 0; i < m.size(); ++i) {
    for (int c = 0; c < d; ++c) out << m.points(i, c) << ',';
    out << m.weights(i) << '\n';
  }
}

// The function system the stored constant refers to. For p > 2 this is the
// lifted system carrying |f|^{p/2}, matching how the design was certified.
inline std::shared_ptr<FunctionSystem> system_for_design(const DesignFile& d) {
  if (d.p != 2 && (d.p < 2 || d.p % 2 != 0))
    throw InvalidInput("design file: p must be 2 or a larger even integer");
  if (d.domain == "torus") {
    if (d.p == 2) return std::make_shared<TrigSystem>(*d.index_set);
    return std::make_shared<TrigSystem>(self_sumset(*d.index_set, d.p / 2));
  }
  return std::make_shared<SphereSystem>(*d.degree * (d.p / 2));
}

// Recomputes the certified constant from the stored nodes and weights.
inline double reverify_design(const DesignFile& d) {
  auto system = system_for_design(d);
  if (d.measure.points.cols() != system->domain_dim())
    throw InvalidInput("design file: point dimension does not match domain");
  return mz_constant(*system, d.measure);
}

inline DesignFile design_file_from_result(const MzDesign& des,
                                          const MultiIndexSet& I) {
  DesignFile d;
  d.domain = "torus";
  d.index_set = I;
  d.measure = des.measure;
  d.mz_constant = des.mz_constant;
  d.exact = des.exact;
  d.meta.seed = des.seed;
  d.meta.restarts = des.restarts_used;
  d.meta.iterations = des.optimizer_iterations;
  return d;
}

inline nlohmann::json entf_to_json(const EntfResult& r) {
  nlohmann::json j;
  j["schema"] = kEntfSchema;
  // row-major [re, im] pairs of the frame column matrix
  nlohmann::json t = nlohmann::json::array();
  for (int i = 0; i < r.frame_columns.rows(); ++i)
    for (int c = 0; c < r.frame_columns.cols(); ++c)
      t.push_back({r.frame_columns(i, c).real(), r.frame_columns(i, c).imag()});
  j["transform"] = std::move(t);
  j["transform_rows"] = r.frame_columns.rows();
  j["transform_cols"] = r.frame_columns.cols();
  nlohmann::json atoms = nlohmann::json::array();
  for (int i = 0; i < r.measure.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < r.measure.points.cols(); ++c)
      row.push_back(r.measure.points(i, c));
    atoms.push_back({{"point", std::move(row)}, {"weight", r.measure.weights(i)}});
  }
  j["atoms"] = std::move(atoms);
  j["certificate"] = {{"parseval_error", r.parseval_error},
                      {"max_norm_error", r.max_norm_error},
                      {"trace_error", r.trace_error},
                      {"sup_frame_function", r.sup_frame_function},
                      {"certified", r.certified},
                      {"failure_reason", r.failure_reason}};
  return j;
}

inline void write_entf_file(const std::string& path, const EntfResult& r) {
  detail::store_json_file(path, entf_to_json(r), "frame file");
}

inline nlohmann::json recovery_to_json(const RecoveryOperator& op, int dim,
                                       double smoothness) {
  nlohmann::json j;
  j["schema"] = kRecoverySchema;
  j["kernel"] = "sobolev";
  j["dim"] = dim;
  j["s"] = smoothness;
  j["n"] = op.n;
  nlohmann::json pts = nlohmann::json::array();
  for (int i = 0; i < op.nodes.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < op.nodes.points.cols(); ++c)
      row.push_back(op.nodes.points(i, c));
    pts.push_back(std::move(row));
  }
  j["points"] = std::move(pts);
  nlohmann::json w = nlohmann::json::array();
  for (int i = 0; i < op.nodes.size(); ++i) w.push_back(op.nodes.weights(i));
  j["weights"] = std::move(w);
  j["mz_constant"] = op.mz_constant;
  j["column_residual"] = op.column_residual;
  j["meta"] = {{"tool_version", kToolVersion}};
  return j;
}

// Rebuilds the operator from stored nodes: the spectrum is reconstructed
// from kernel parameters and the column matrix recomputed, so a tampered
// file fails the orthonormality gate rather than deserializing quietly.
inline RecoveryOperator recovery_from_json(const nlohmann::json& j) {
  constexpr const char* ctx = "recovery file";
  if (detail::field_as<std::string>(j, "schema", ctx) != kRecoverySchema)
    throw InvalidInput("recovery file: unknown schema");
  if (detail::field_as<std::string>(j, "kernel", ctx) != "sobolev")
    throw InvalidInput("recovery file: unknown kernel family");
  const int dim = detail::field_as<int>(j, "dim", ctx);
  const double s = detail::field_as<double>(j, "s", ctx);
  const int n = detail::field_as<int>(j, "n", ctx);
  auto spectrum = std::make_shared<PeriodicSobolevSpectrum>(dim, s);

  auto pts = detail::field_as<std::vector<std::vector<double>>>(j, "points",
                                                                ctx);
  auto wts = detail::field_as<std::vector<double>>(j, "weights", ctx);
  if (pts.empty() || pts.size() != wts.size())
    throw InvalidInput("recovery file: bad points/weights");

  RecoveryOperator op;
  op.spectrum = spectrum;
  op.n = n;
  op.nodes.points.resize(static_cast<int>(pts.size()), dim);
  op.nodes.weights.resize(static_cast<int>(wts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (static_cast<int>(pts[i].size()) != dim)
      throw InvalidInput("recovery file: field 'points': row " +
                         std::to_string(i) + " has wrong dimension");
    for (int c = 0; c < dim; ++c)
      op.nodes.points(static_cast<int>(i), c) = pts[i][c];
    op.nodes.weights(static_cast<int>(i)) = wts[i];
  }
  op.nodes.validate();

  DensityModifiedSystem system(spectrum, n);
  const int np = op.nodes.size();
  op.density.resize(np);
  op.columns.resize(np, n);
  for (int i = 0; i < np; ++i) {
    Eigen::VectorXd x = op.nodes.points.row(i).transpose();
    op.density(i) = system.density(x);
    double scale = std::sqrt(op.nodes.weights(i) / op.density(i));
    for (int c = 0; c < n; ++c)
      op.columns(i, c) = scale * spectrum->eigenfunction(c, x);
  }
  op.column_residual =
      (op.columns.adjoint() * op.columns -
       Eigen::MatrixXcd::Identity(n, n))
          .norm();
  if (!(op.column_residual <= kRecoveryColumnTol))
    throw NonExactDesign(
        "recovery file: stored nodes do not give orthonormal columns");
  op.mz_constant = detail::field_as<double>(j, "mz_constant", ctx);
  op.truncation_tie = spectrum->sigma(n - 1) == spectrum->sigma(n);
  return op;
}

inline void write_recovery_file(const std::string& path,
                                const RecoveryOperator& op, int dim,
                                double smoothness) {
  detail::store_json_file(path, recovery_to_json(op, dim, smoothness),
                          "recovery file");
}

inline RecoveryOperator read_recovery_file(const std::string& path) {
  return recovery_from_json(detail::load_json_file(path, "recovery file"));
}

}  // namespace mzforge
