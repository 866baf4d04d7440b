#pragma once

// Turning homeomorphisms that intertwine two form representations into linear
// bijections that do the same.
//
// extract_basis_pair builds, one vector at a time, a basis u_1..u_n whose
// images v_k = phi(u_k) are again a basis. When the image of a fresh
// candidate falls into the span of the accepted images, the target is pushed
// off that span along a unit vector w orthogonal to it and pulled back
// through the inverse; for small enough pushes the preimage stays
// independent of u_1..u_k by continuity.
//
// Given such pairs (U_i, V_i) at every vertex, the forms are determined by
// their values on basis vectors, so S_i = V_i U_i^{-1} is a linear
// isomorphism whenever the homeomorphisms preserve the forms pointwise.

#include "formrep/core_forms.hpp"
#include "formrep/linalg.hpp"
#include "formrep/oracle.hpp"

#include <array>
#include <future>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

namespace formrep {

struct LinearizeConfig {
  double basis_rank_threshold = 1e-8;
  double residual_tol = 1e-8;
  int max_candidates = -1;  // n + 50 when negative
  int halvings = 60;
  double oracle_roundtrip_tol = 1e-8;
  int self_test_trials = 20;
  // Vertices are linearized one after another unless the caller states that
  // its oracles tolerate concurrent calls.
  bool concurrent_vertices = false;

  int candidate_budget(int n) const { return max_candidates < 0 ? n + 50 : max_candidates; }
};

/// Counters describing how a basis pair was found.
struct ExtractionTrace {
  int candidates_tried = 0;
  int candidates_in_span = 0;     // rejected because u was dependent on u_1..u_k
  int perturbation_steps = 0;     // times the image of a candidate fell into the span
  int perturbation_trials = 0;    // oracle inversions spent inside those steps
  int perturbation_failures = 0;  // steps whose schedule ran out
  double min_singular_u = 0.0;
  double min_singular_v = 0.0;
};

struct BasisPair {
  Matrix u;  // columns u_1..u_n
  Matrix v;  // columns v_k = forward(u_k), stored exactly as returned by the oracle
  ExtractionTrace trace;
};

struct TopologicalIsomorphismWitness {
  std::vector<HomeomorphismOracle> oracles;
};

namespace detail {

inline bool finite_vector(const Vector& x) {
  return linalg::all_finite(x);
}

inline Matrix append_column(const Matrix& m, const Vector& c) {
  Matrix out(c.size(), m.cols() + 1);
  if (m.cols() > 0) out.leftCols(m.cols()) = m;
  out.col(m.cols()) = c;
  return out;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

inline BasisPair extract_basis_pair(const HomeomorphismOracle& phi, const LinearizeConfig& cfg, std::uint64_t seed) {
  const int n = phi.dim;
  if (n < 0) throw Error(ErrorCode::invalid_parameters, "negative oracle dimension");
  BasisPair out{Matrix(n, 0), Matrix(n, 0), {}};
  if (n == 0) {
    out.trace.min_singular_u = out.trace.min_singular_v = 1.0;
    return out;
  }

  auto self_test = oracle_self_test(phi, cfg.self_test_trials, detail::mix_seed(seed, 0xC0FFEE), cfg.oracle_roundtrip_tol);
  if (!self_test.ok) {
    std::ostringstream msg;
    msg << "oracle '" << phi.description << "' failed the round-trip self test (max relative error "
        << self_test.max_roundtrip_error << ")";
    throw Error(ErrorCode::oracle_roundtrip, msg.str());
  }

  std::mt19937_64 rng(seed);
  const double threshold = cfg.basis_rank_threshold;
  const int budget = cfg.candidate_budget(n);
  const std::array<Complex, 4> phases{Complex(1, 0), Complex(0, 1), Complex(-1, 0), Complex(0, -1)};
  double best_seen = 0.0;

  auto accept = [&](const Vector& u, const Vector& v) {
    out.u = detail::append_column(out.u, u);
    out.v = detail::append_column(out.v, v);
    // Both column sets must stay independent after every acceptance.
    if (!linalg::numerically_independent(out.u, threshold) || !linalg::numerically_independent(out.v, threshold))
      throw Error(ErrorCode::ill_conditioned, "accepted a basis vector that breaks independence");
  };

  int next_standard = 0;
  while (out.u.cols() < n) {
    if (out.trace.candidates_tried >= budget) {
      std::ostringstream msg;
      msg << "candidate budget of " << budget << " exhausted with " << out.u.cols() << " of " << n
          << " basis vectors; best relative singular value reached " << best_seen;
      throw Error(ErrorCode::perturbation_exhausted, msg.str());
    }
    ++out.trace.candidates_tried;

    Vector u;
    if (next_standard < n) {
      u = Vector::Unit(n, next_standard++);
    } else {
      u = linalg::random_gaussian_vector(n, rng);
      u /= u.norm();
    }
    if (!linalg::numerically_independent(detail::append_column(out.u, u), threshold)) {
      ++out.trace.candidates_in_span;
      continue;
    }

    Vector v = phi.forward(u);
    if (!detail::finite_vector(v)) continue;
    if (linalg::numerically_independent(detail::append_column(out.v, v), threshold)) {
      accept(u, v);
      continue;
    }

    // The image of u lies (numerically) in span(v_1..v_k): perturb it.
    ++out.trace.perturbation_steps;
    const Vector w = linalg::unit_orthogonal_to(out.v, n, rng);
    const double a0 = std::max(1.0, v.norm());
    bool found = false;
    for (int h = 0; h <= cfg.halvings && !found; ++h) {
      const double magnitude = std::ldexp(a0, -h);
      for (const auto& phase : phases) {
        ++out.trace.perturbation_trials;
        const Vector target = v + (magnitude * phase) * w;
        const Vector ub = phi.inverse(target);
        if (!detail::finite_vector(ub)) continue;
        const Vector vb = phi.forward(ub);
        if (!detail::finite_vector(vb)) continue;
        const double su = linalg::relative_min_singular(detail::append_column(out.u, ub));
        const double sv = linalg::relative_min_singular(detail::append_column(out.v, vb));
        best_seen = std::max(best_seen, std::min(su, sv));
        if (su > threshold && sv > threshold) {
          accept(ub, vb);
          found = true;
          break;
        }
      }
    }
    if (!found) ++out.trace.perturbation_failures;
  }

  out.trace.min_singular_u = linalg::relative_min_singular(out.u);
  out.trace.min_singular_v = linalg::relative_min_singular(out.v);
  return out;
}

struct LinearizationResult {
  TransformFamily family;
  VerificationReport report;
  std::vector<BasisPair> bases;
};

/// S with S u_k = v_k for every column, i.e. S = V U^{-1}, via an LU solve of
/// U^T S^T = V^T.
inline Matrix linear_map_from_bases(const BasisPair& pair) {
  if (pair.u.size() == 0) return Matrix(0, 0);
  Eigen::PartialPivLU<Matrix> lu(pair.u.transpose());
  return lu.solve(pair.v.transpose()).transpose();
}

/// Linearizes a topological isomorphism A -> B given by one oracle per vertex.
/// A verification failure is reported in the result, not thrown.
inline LinearizationResult linearize_topological_isomorphism(const FormRepresentation& rep_a,
                                                             const FormRepresentation& rep_b,
                                                             const TopologicalIsomorphismWitness& witness,
                                                             const LinearizeConfig& cfg, std::uint64_t seed) {
  if (!(rep_a.graph() == rep_b.graph()))
    throw Error(ErrorCode::structural_mismatch, "representations live on different graphs");
  if (rep_a.dims() != rep_b.dims())
    throw Error(ErrorCode::dimension_mismatch, "representations have different dimension vectors");
  const auto& dims = rep_a.dims();
  if (witness.oracles.size() != dims.size())
    throw Error(ErrorCode::dimension_mismatch, "witness needs one oracle per vertex");
  for (std::size_t i = 0; i < dims.size(); ++i)
    if (witness.oracles[i].dim != dims[i])
      throw Error(ErrorCode::dimension_mismatch, "oracle " + std::to_string(i + 1) + " has dimension " +
                                                     std::to_string(witness.oracles[i].dim) + ", vertex needs " +
                                                     std::to_string(dims[i]));

  LinearizationResult result;
  result.bases.resize(dims.size());
  auto run_vertex = [&](std::size_t i) {
    return extract_basis_pair(witness.oracles[i], cfg, detail::mix_seed(seed, i));
  };
  if (cfg.concurrent_vertices) {
    std::vector<std::future<BasisPair>> jobs;
    for (std::size_t i = 0; i < dims.size(); ++i) jobs.push_back(std::async(std::launch::async, run_vertex, i));
    for (std::size_t i = 0; i < dims.size(); ++i) result.bases[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < dims.size(); ++i) result.bases[i] = run_vertex(i);
  }

  for (const auto& pair : result.bases) result.family.matrices.push_back(linear_map_from_bases(pair));
  result.report = verify_linear_isomorphism(rep_a, rep_b, result.family, cfg.residual_tol);
  return result;
}

}  // namespace formrep
