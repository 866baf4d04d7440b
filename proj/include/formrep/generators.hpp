#pragma once

// Seeded test inputs: random representations and transforms, canonical block
// samples, and nonlinear homeomorphisms that preserve given forms.

#include "formrep/canonical.hpp"
#include "formrep/core_forms.hpp"
#include "formrep/linalg.hpp"
#include "formrep/linearize.hpp"
#include "formrep/oracle.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace formrep {

// ---------------------------------------------------------------------------
// Graphs

/// Two vertices: bilinear loop alpha at 1, bilinear beta 1 - 2, sesquilinear
/// gamma 2 -> 1, sesquilinear loop delta at 2.
inline MixedGraph example_graph() {
  return {2,
          {{"alpha", 0, 0, FormKind::bilinear},
           {"beta", 0, 1, FormKind::bilinear},
           {"gamma", 1, 0, FormKind::sesquilinear},
           {"delta", 1, 1, FormKind::sesquilinear}}};
}

inline MixedGraph loop_graph(FormKind kind) { return {1, {{"loop", 0, 0, kind}}}; }

/// Three vertices with parallel edges of both kinds and a directed cycle.
inline MixedGraph triangle_multigraph() {
  return {3,
          {{"a", 0, 1, FormKind::bilinear},
           {"b", 0, 1, FormKind::sesquilinear},
           {"c", 1, 2, FormKind::sesquilinear},
           {"d", 2, 0, FormKind::sesquilinear},
           {"e", 2, 2, FormKind::bilinear}}};
}

// ---------------------------------------------------------------------------
// Random matrices and representations

/// Q1 diag(s) Q2 with unitary Q1, Q2 and s log-uniform in [1, cond_max].
inline Matrix random_invertible(int n, double cond_max, std::uint64_t seed) {
  if (n < 0) throw Error(ErrorCode::invalid_parameters, "negative size");
  if (!(cond_max >= 1.0)) throw Error(ErrorCode::invalid_parameters, "cond_max must be at least 1");
  if (n == 0) return Matrix(0, 0);
  std::mt19937_64 rng(seed);
  const Matrix q1 = linalg::orthonormalize(linalg::random_gaussian_matrix(n, n, rng));
  const Matrix q2 = linalg::orthonormalize(linalg::random_gaussian_matrix(n, n, rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double log_max = std::log(cond_max);
  RealVector s(n);
  for (int i = 0; i < n; ++i) s(i) = std::exp(log_max * unit(rng));
  return q1 * s.cast<Complex>().asDiagonal() * q2;
}

inline FormRepresentation random_representation(const MixedGraph& graph, const DimensionVector& dims,
                                                 std::uint64_t seed) {
  graph.validate();
  if (static_cast<int>(dims.size()) != graph.vertex_count)
    throw Error(ErrorCode::dimension_mismatch, "dimension vector length differs from vertex count");
  std::mt19937_64 rng(seed);
  std::vector<Matrix> mats;
  for (const auto& e : graph.edges) mats.push_back(linalg::random_gaussian_matrix(dims[e.tail], dims[e.head], rng));
  return FormRepresentation(graph, dims, std::move(mats));
}

inline TransformFamily random_family(const DimensionVector& dims, double cond_max, std::uint64_t seed) {
  TransformFamily f;
  for (std::size_t i = 0; i < dims.size(); ++i)
    f.matrices.push_back(random_invertible(dims[i], cond_max, detail::mix_seed(seed, i)));
  return f;
}

/// Random representation whose forms all vanish on a kernel_dims[i]-dimensional
/// subspace at vertex i: M = P_i^T R P_j (conj(P_j) on sesquilinear edges),
/// P_i the orthogonal projector killing that subspace.
inline FormRepresentation degenerate_representation(const MixedGraph& graph, const DimensionVector& dims,
                                                    const std::vector<int>& kernel_dims, std::uint64_t seed) {
  if (kernel_dims.size() != dims.size()) throw Error(ErrorCode::dimension_mismatch, "one kernel size per vertex");
  std::mt19937_64 rng(seed);
  std::vector<Matrix> proj;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (kernel_dims[i] < 0 || kernel_dims[i] > dims[i])
      throw Error(ErrorCode::invalid_parameters, "kernel size outside [0, n]");
    const Matrix k = linalg::orthonormalize(linalg::random_gaussian_matrix(dims[i], kernel_dims[i], rng));
    proj.push_back(Matrix::Identity(dims[i], dims[i]) - k * k.adjoint());
  }
  const auto base = random_representation(graph, dims, detail::mix_seed(seed, 1));
  std::vector<Matrix> mats;
  for (std::size_t a = 0; a < graph.edges.size(); ++a) {
    const auto& e = graph.edges[a];
    mats.push_back(detail::transform_edge(base.matrix(a), proj[e.tail], proj[e.head], e.kind));
  }
  return FormRepresentation(graph, dims, std::move(mats));
}

// ---------------------------------------------------------------------------
// Oracle specifications

enum class OracleTerm { linear, radial, shear, compose };

/// linear(matrix) | radial(c, p) | shear(direction, g) | compose(parts).
/// compose [a, b, c] is a o b o c, so c is applied first.
struct OracleSpec {
  OracleTerm term = OracleTerm::linear;
  Matrix matrix;
  double c = 1.0;
  double p = 1.0;
  Vector direction;
  std::string g = "sin";
  std::vector<OracleSpec> parts;
  // File names used when the spec is written out as text.
  std::string matrix_file;
  std::string direction_file;

  static OracleSpec linear(Matrix m, std::string file = {}) {
    OracleSpec s;
    s.term = OracleTerm::linear;
    s.matrix = std::move(m);
    s.matrix_file = std::move(file);
    return s;
  }
  static OracleSpec radial(double c, double p) {
    OracleSpec s;
    s.term = OracleTerm::radial;
    s.c = c;
    s.p = p;
    return s;
  }
  static OracleSpec shear(Vector k, std::string g, std::string file = {}) {
    OracleSpec s;
    s.term = OracleTerm::shear;
    s.direction = std::move(k);
    s.g = std::move(g);
    s.direction_file = std::move(file);
    return s;
  }
  static OracleSpec compose(std::vector<OracleSpec> parts) {
    OracleSpec s;
    s.term = OracleTerm::compose;
    s.parts = std::move(parts);
    return s;
  }
};

/// Scalar functions for shears, evaluated on the projected coordinates.
///   sin:  sin(|y|^2) (1 + i)
///   osc:  a bounded sum of sines of |y| at frequencies 5, 23 and 61
///   dip:  -cos(|y|), equal to -1 at the origin
inline std::function<Complex(const Vector&)> shear_function(const std::string& name) {
  if (name == "sin") return [](const Vector& y) { return std::sin(y.squaredNorm()) * Complex(1, 1); };
  if (name == "osc")
    return [](const Vector& y) {
      const double r = y.norm();
      return (std::sin(5 * r) + 0.5 * std::sin(23 * r) + 0.25 * std::sin(61 * r)) * Complex(1, -0.5);
    };
  if (name == "dip") return [](const Vector& y) { return Complex(-std::cos(y.norm()), 0); };
  throw Error(ErrorCode::invalid_parameters, "unknown shear function '" + name + "'");
}

namespace detail {

/// Solves r (1 + c r^p) = target for r >= 0 by bisection.
inline double radial_preimage_norm(double target, double c, double p) {
  if (target == 0.0) return 0.0;
  double lo = 0.0;
  double hi = target;
  for (int iter = 0; iter < 200 && hi - lo > 1e-12 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid * (1.0 + c * std::pow(mid, p)) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline std::string describe(const OracleSpec& spec) {
  switch (spec.term) {
    case OracleTerm::linear: return "linear:" + (spec.matrix_file.empty() ? "<matrix>" : spec.matrix_file);
    case OracleTerm::radial: {
      std::ostringstream s;
      s << "radial:" << spec.c << ":" << spec.p;
      return s.str();
    }
    case OracleTerm::shear:
      return "shear:" + (spec.direction_file.empty() ? "<vector>" : spec.direction_file) + ":" + spec.g;
    case OracleTerm::compose: {
      std::string s = "compose:[";
      for (std::size_t i = 0; i < spec.parts.size(); ++i) s += (i ? "," : "") + describe(spec.parts[i]);
      return s + "]";
    }
  }
  return "?";
}

/// Builds the oracle; `dim` fixes the dimension of terms that do not carry one.
inline HomeomorphismOracle make_oracle(const OracleSpec& spec, int dim) {
  switch (spec.term) {
    case OracleTerm::linear: {
      if (spec.matrix.rows() != dim) throw Error(ErrorCode::dimension_mismatch, "linear oracle has the wrong size");
      return linear_oracle(spec.matrix, describe(spec));
    }
    case OracleTerm::radial: {
      if (!(spec.c > 0.0) || !(spec.p > 0.0) || !std::isfinite(spec.c) || !std::isfinite(spec.p))
        throw Error(ErrorCode::invalid_parameters, "radial oracle needs c > 0 and p > 0");
      const double c = spec.c;
      const double p = spec.p;
      auto fwd = [c, p](const Vector& x) -> Vector { return x * (1.0 + c * std::pow(x.norm(), p)); };
      auto inv = [c, p](const Vector& y) -> Vector {
        const double r = detail::radial_preimage_norm(y.norm(), c, p);
        return y / (1.0 + c * std::pow(r, p));
      };
      return {dim, fwd, inv, describe(spec)};
    }
    case OracleTerm::shear: {
      if (spec.direction.size() != dim) throw Error(ErrorCode::dimension_mismatch, "shear direction has the wrong size");
      const double knorm = spec.direction.norm();
      if (!(knorm > 0.0)) throw Error(ErrorCode::invalid_parameters, "shear direction must be nonzero");
      const Vector k = spec.direction;
      const Vector khat = k / knorm;
      auto g = shear_function(spec.g);
      // pi(x) = x - khat khat^* x is unchanged by shifts along k.
      auto project = [khat](const Vector& x) -> Vector { return x - khat * khat.dot(x); };
      auto fwd = [k, g, project](const Vector& x) -> Vector { return x + g(project(x)) * k; };
      auto inv = [k, g, project](const Vector& y) -> Vector { return y - g(project(y)) * k; };
      return {dim, fwd, inv, describe(spec)};
    }
    case OracleTerm::compose: {
      if (spec.parts.empty()) throw Error(ErrorCode::invalid_parameters, "empty composition");
      std::vector<HomeomorphismOracle> parts;
      for (const auto& part : spec.parts) parts.push_back(make_oracle(part, dim));
      auto fwd = [parts](const Vector& x) -> Vector {
        Vector y = x;
        for (auto it = parts.rbegin(); it != parts.rend(); ++it) y = it->forward(y);
        return y;
      };
      auto inv = [parts](const Vector& y) -> Vector {
        Vector x = y;
        for (const auto& part : parts) x = part.inverse(x);
        return x;
      };
      return {dim, fwd, inv, describe(spec)};
    }
  }
  throw Error(ErrorCode::invalid_parameters, "unknown oracle term");
}

// ---------------------------------------------------------------------------
// Form-preserving witnesses

/// repA, repB and per-vertex oracles phi_i with A(u, v) = B(phi_i u, phi_j v).
struct WitnessBundle {
  FormRepresentation rep_a;
  FormRepresentation rep_b;
  std::vector<OracleSpec> specs;
  TopologicalIsomorphismWitness witness;
  TransformFamily linear_parts;
  bool linear_only = true;
};

/// Orthonormal basis of the vectors at `vertex` on which every incident form
/// vanishes: M^T k = 0 on edges leaving it, M k = 0 (M conj(k) = 0 for
/// sesquilinear) on edges entering it.
inline Matrix joint_kernel(const FormRepresentation& rep, int vertex, double threshold = 1e-10) {
  const int n = rep.dims().at(static_cast<std::size_t>(vertex));
  std::vector<Matrix> rows;
  for (std::size_t a = 0; a < rep.graph().edges.size(); ++a) {
    const auto& e = rep.graph().edges[a];
    const Matrix& m = rep.matrix(a);
    if (e.tail == vertex) rows.push_back(m.transpose());
    if (e.head == vertex) rows.push_back(e.kind == FormKind::bilinear ? m : Matrix(m.conjugate()));
  }
  Eigen::Index total = 0;
  for (const auto& r : rows) total += r.rows();
  if (total == 0) return Matrix::Identity(n, n);
  Matrix stacked(total, n);
  Eigen::Index offset = 0;
  for (const auto& r : rows) {
    stacked.middleRows(offset, r.rows()) = r;
    offset += r.rows();
  }
  return linalg::null_space(stacked, threshold * std::max(1.0, linalg::spectral_norm(stacked)));
}

struct WitnessOptions {
  double cond_max = 10.0;
  std::string g = "sin";
  bool require_nonlinear = false;
  int check_samples = 50;
  double check_tol = 1e-9;
};

inline WitnessBundle form_preserving_witness(const FormRepresentation& rep, std::uint64_t seed,
                                             const WitnessOptions& opt = {}) {
  const auto& dims = rep.dims();
  WitnessBundle out{FormRepresentation(), rep, {}, {}, random_family(dims, opt.cond_max, seed), true};
  out.rep_a = apply_transform(rep, out.linear_parts);

  std::mt19937_64 rng(detail::mix_seed(seed, 0xBEEF));
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const int n = dims[i];
    auto linear = OracleSpec::linear(out.linear_parts.matrices[i]);
    const Matrix kernel = joint_kernel(rep, static_cast<int>(i));
    if (n > 0 && kernel.cols() == n) {
      out.specs.push_back(OracleSpec::compose({OracleSpec::radial(1.0, 1.0), linear}));
      out.linear_only = false;
    } else if (kernel.cols() > 0) {
      Vector k = kernel * linalg::random_gaussian_vector(kernel.cols(), rng);
      k /= k.norm();
      out.specs.push_back(OracleSpec::compose({OracleSpec::shear(k, opt.g), linear}));
      out.linear_only = false;
    } else {
      out.specs.push_back(linear);
    }
    out.witness.oracles.push_back(make_oracle(out.specs.back(), n));
  }
  if (opt.require_nonlinear && out.linear_only)
    throw Error(ErrorCode::no_nonlinear_witness,
                "every vertex carries a nondegenerate system of forms; only linear witnesses exist");

  // Sampled check of A(u, v) = B(phi_i u, phi_j v).
  for (std::size_t a = 0; a < rep.graph().edges.size(); ++a) {
    const auto& e = rep.graph().edges[a];
    const auto& phi_i = out.witness.oracles[static_cast<std::size_t>(e.tail)];
    const auto& phi_j = out.witness.oracles[static_cast<std::size_t>(e.head)];
    for (int t = 0; t < opt.check_samples; ++t) {
      const Vector u = linalg::random_gaussian_vector(dims[e.tail], rng);
      const Vector v = linalg::random_gaussian_vector(dims[e.head], rng);
      const Complex lhs = eval_form(out.rep_a, e.id, u, v);
      const Complex rhs = eval_form(rep, e.id, phi_i.forward(u), phi_j.forward(v));
      if (std::abs(lhs - rhs) > opt.check_tol * std::max(1.0, std::abs(lhs)))
        throw Error(ErrorCode::ill_conditioned, "witness failed the sampled form check on edge '" + e.id + "'");
    }
  }
  return out;
}

/// shear(k, dip) o L with L e_1 = k: the first candidate e_1 is sent to 0,
/// so extraction has to take the perturbation path at least once.
inline OracleSpec crafted_span_oracle(int n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::invalid_parameters, "crafted oracle needs n >= 1");
  Matrix l = random_invertible(n, 10.0, seed);
  l.col(0) /= l.col(0).norm();
  const Vector k = l.col(0);
  return OracleSpec::compose({OracleSpec::shear(k, "dip"), OracleSpec::linear(l)});
}

// ---------------------------------------------------------------------------
// Canonical block samples

inline CanonicalBlockMultiset sample_canonical_multiset(int total_size, FormKind kind, std::uint64_t seed,
                                                        int max_block = 3) {
  if (total_size < 0) throw Error(ErrorCode::invalid_parameters, "negative total size");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto unit_phase = [&]() { return std::polar(1.0, 2.0 * std::numbers::pi * unit(rng)); };

  CanonicalBlockMultiset out;
  out.kind = kind;
  int remaining = total_size;
  while (remaining > 0) {
    const int variant = pick(0, remaining >= 2 ? 2 : 1);
    if (variant == 2) {
      const int n = pick(1, std::min(max_block, remaining / 2));
      Complex mu = std::polar(1.2 + 3.8 * unit(rng), 2.0 * std::numbers::pi * unit(rng));
      if (kind == FormKind::bilinear) mu = normalize_bilinear_mu(mu);
      out.blocks.push_back(CanonicalBlock::hpair(n, mu));
      remaining -= 2 * n;
    } else {
      const int n = pick(1, std::min(max_block, remaining));
      if (variant == 0)
        out.blocks.push_back(CanonicalBlock::singular(n));
      else
        out.blocks.push_back(CanonicalBlock::gamma(n, kind == FormKind::bilinear ? Complex(1, 0) : unit_phase()));
      remaining -= n;
    }
  }
  return out;
}

}  // namespace formrep
