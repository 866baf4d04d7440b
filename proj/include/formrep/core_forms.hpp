#pragma once

// Mixed graphs, their form representations, and the matrix transformation law
// relating two representations through one linear bijection per vertex.
//
// Matrix convention: the matrix M of a form A has M(k,l) = A(e_k, e_l), so
//   bilinear:      A(u, v) = u^T M v
//   sesquilinear:  A(u, v) = u^T M conj(v)
// A family (S_1..S_t) maps representation B to A by
//   M_A = S_i^T M_B S_j            (bilinear edge i - j)
//   M_A = S_i^T M_B conj(S_j)      (sesquilinear edge i -> j)
// which is the matrix form of A(u, v) = B(S_i u, S_j v).

#include "formrep/linalg.hpp"
#include "formrep/types.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace formrep {

/// One edge of a mixed graph. Vertex indices are 0-based in memory; the JSON
/// files use 1-based indices.
struct Edge {
  std::string id;
  int tail = 0;  // first-argument space
  int head = 0;  // second-argument space
  FormKind kind = FormKind::bilinear;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct MixedGraph {
  int vertex_count = 0;
  std::vector<Edge> edges;

  friend bool operator==(const MixedGraph&, const MixedGraph&) = default;

  const Edge* find(const std::string& id) const {
    auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.id == id; });
    return it == edges.end() ? nullptr : &*it;
  }

  void validate() const {
    if (vertex_count < 0) throw Error(ErrorCode::invalid_parameters, "negative vertex count");
    for (const auto& e : edges) {
      if (e.tail < 0 || e.tail >= vertex_count || e.head < 0 || e.head >= vertex_count)
        throw Error(ErrorCode::invalid_parameters, "edge '" + e.id + "' has an endpoint outside the graph");
    }
    for (std::size_t a = 0; a < edges.size(); ++a)
      for (std::size_t b = a + 1; b < edges.size(); ++b)
        if (edges[a].id == edges[b].id)
          throw Error(ErrorCode::invalid_parameters, "duplicate edge id '" + edges[a].id + "'");
  }
};

using DimensionVector = std::vector<int>;

class FormRepresentation {
 public:
  FormRepresentation() = default;

  /// Takes one matrix per edge, in edge order.
  FormRepresentation(MixedGraph graph, DimensionVector dims, std::vector<Matrix> matrices)
      : graph_(std::move(graph)), dims_(std::move(dims)), matrices_(std::move(matrices)) {
    graph_.validate();
    if (static_cast<int>(dims_.size()) != graph_.vertex_count)
      throw Error(ErrorCode::dimension_mismatch, "dimension vector length differs from vertex count");
    for (int d : dims_)
      if (d < 0) throw Error(ErrorCode::dimension_mismatch, "negative dimension");
    if (matrices_.size() != graph_.edges.size())
      throw Error(ErrorCode::dimension_mismatch, "expected one matrix per edge");
    for (std::size_t a = 0; a < matrices_.size(); ++a) {
      const auto& e = graph_.edges[a];
      const auto& m = matrices_[a];
      if (m.rows() != dims_[e.tail] || m.cols() != dims_[e.head])
        throw Error(ErrorCode::dimension_mismatch, "matrix of edge '" + e.id + "' has shape " +
                                                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
      if (!linalg::all_finite(m))
        throw Error(ErrorCode::invalid_parameters, "matrix of edge '" + e.id + "' has non-finite entries");
    }
  }

  const MixedGraph& graph() const { return graph_; }
  const DimensionVector& dims() const { return dims_; }
  const std::vector<Matrix>& matrices() const { return matrices_; }
  const Matrix& matrix(std::size_t edge_index) const { return matrices_.at(edge_index); }

  std::size_t edge_index(const std::string& id) const {
    for (std::size_t a = 0; a < graph_.edges.size(); ++a)
      if (graph_.edges[a].id == id) return a;
    throw Error(ErrorCode::unknown_edge, "no edge with id '" + id + "'");
  }

  const Matrix& matrix(const std::string& id) const { return matrices_[edge_index(id)]; }

 private:
  MixedGraph graph_;
  DimensionVector dims_;
  std::vector<Matrix> matrices_;
};

/// One square matrix per vertex.
struct TransformFamily {
  std::vector<Matrix> matrices;

  static TransformFamily identity(const DimensionVector& dims) {
    TransformFamily f;
    for (int d : dims) f.matrices.push_back(Matrix::Identity(d, d));
    return f;
  }
};

inline constexpr double invertibility_threshold = 1e-10;

namespace detail {

inline void check_family(const DimensionVector& dims, const TransformFamily& family) {
  if (family.matrices.size() != dims.size())
    throw Error(ErrorCode::dimension_mismatch, "family has " + std::to_string(family.matrices.size()) +
                                                   " matrices for " + std::to_string(dims.size()) + " vertices");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& s = family.matrices[i];
    if (s.rows() != dims[i] || s.cols() != dims[i])
      throw Error(ErrorCode::dimension_mismatch, "family matrix " + std::to_string(i + 1) + " has wrong size");
  }
}

inline bool family_invertible(const TransformFamily& family) {
  return std::all_of(family.matrices.begin(), family.matrices.end(),
                     [](const Matrix& s) { return linalg::is_invertible(s, invertibility_threshold); });
}

inline Matrix second_side(const Matrix& s, FormKind kind) {
  return kind == FormKind::bilinear ? s : Matrix(s.conjugate());
}

inline Matrix transform_edge(const Matrix& mb, const Matrix& si, const Matrix& sj, FormKind kind) {
  return si.transpose() * mb * second_side(sj, kind);
}

}  // namespace detail

/// A(u, v) for the form on `edge_id`.
inline Complex eval_form(const FormRepresentation& rep, const std::string& edge_id, const Vector& u,
                         const Vector& v) {
  const auto idx = rep.edge_index(edge_id);
  const auto& e = rep.graph().edges[idx];
  const auto& m = rep.matrix(idx);
  if (u.size() != m.rows() || v.size() != m.cols())
    throw Error(ErrorCode::dimension_mismatch, "argument lengths do not match edge '" + edge_id + "'");
  if (e.kind == FormKind::bilinear) return (u.transpose() * m * v).value();
  return (u.transpose() * m * v.conjugate()).value();
}

/// Representation A with A(u, v) = B(S_i u, S_j v).
inline FormRepresentation apply_transform(const FormRepresentation& rep_b, const TransformFamily& family) {
  detail::check_family(rep_b.dims(), family);
  if (!detail::family_invertible(family))
    throw Error(ErrorCode::non_invertible, "family contains a numerically singular matrix");
  std::vector<Matrix> out;
  out.reserve(rep_b.matrices().size());
  for (std::size_t a = 0; a < rep_b.graph().edges.size(); ++a) {
    const auto& e = rep_b.graph().edges[a];
    out.push_back(detail::transform_edge(rep_b.matrix(a), family.matrices[e.tail], family.matrices[e.head], e.kind));
  }
  return FormRepresentation(rep_b.graph(), rep_b.dims(), std::move(out));
}

struct EdgeResidual {
  std::string edge_id;
  double residual = 0.0;  // max-entry residual divided by max(1, ||M_A||_max)
};

struct VerificationReport {
  bool ok = true;
  bool invertible = true;
  double max_residual = 0.0;
  std::string worst_edge;
  std::vector<EdgeResidual> residuals;
};

/// Checks that `family` carries B to A edge by edge. Residuals are relative:
/// ||M_A - S_i^T M_B S_j'||_max / max(1, ||M_A||_max), compared against `tol`.
/// Differing graphs or dimensions are an error, not a negative answer.
inline VerificationReport verify_linear_isomorphism(const FormRepresentation& rep_a, const FormRepresentation& rep_b,
                                                    const TransformFamily& family, double tol) {
  if (!(rep_a.graph() == rep_b.graph()))
    throw Error(ErrorCode::structural_mismatch, "representations live on different graphs");
  if (rep_a.dims() != rep_b.dims())
    throw Error(ErrorCode::structural_mismatch, "representations have different dimension vectors");
  detail::check_family(rep_b.dims(), family);

  VerificationReport report;
  report.invertible = detail::family_invertible(family);
  for (std::size_t a = 0; a < rep_a.graph().edges.size(); ++a) {
    const auto& e = rep_a.graph().edges[a];
    const Matrix& ma = rep_a.matrix(a);
    Matrix predicted = detail::transform_edge(rep_b.matrix(a), family.matrices[e.tail], family.matrices[e.head], e.kind);
    double r = linalg::max_abs(ma - predicted) / std::max(1.0, linalg::max_abs(ma));
    report.residuals.push_back({e.id, r});
    if (report.worst_edge.empty() || r > report.max_residual) {
      report.max_residual = r;
      report.worst_edge = e.id;
    }
  }
  report.ok = report.invertible && report.max_residual <= tol;
  return report;
}

/// Matrix of the form on `edge_id` in the bases given by the columns of
/// basis_u (first argument) and basis_v (second argument).
inline Matrix matrix_of_form_in_bases(const FormRepresentation& rep, const std::string& edge_id,
                                      const Matrix& basis_u, const Matrix& basis_v) {
  const auto idx = rep.edge_index(edge_id);
  const auto& e = rep.graph().edges[idx];
  const auto& m = rep.matrix(idx);
  if (basis_u.rows() != m.rows() || basis_u.cols() != m.rows() || basis_v.rows() != m.cols() ||
      basis_v.cols() != m.cols())
    throw Error(ErrorCode::dimension_mismatch, "basis sizes do not match edge '" + edge_id + "'");
  if (!linalg::is_invertible(basis_u, invertibility_threshold) || !linalg::is_invertible(basis_v, invertibility_threshold))
    throw Error(ErrorCode::non_invertible, "basis matrix is singular");
  return detail::transform_edge(m, basis_u, basis_v, e.kind);
}

}  // namespace formrep
