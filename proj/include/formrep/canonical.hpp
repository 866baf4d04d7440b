#pragma once

// Canonical block structure of a single square matrix under congruence
// (M -> S^T M S) and *congruence (M -> S^T M conj(S), equivalently T^* M T).
//
// Blocks:
//   Singular(n)    J_n(0)
//   Gamma(n, l)    l * Gamma_n, l = 1 for congruence, |l| = 1 for *congruence
//   HPair(n, mu)   [[0, I_n], [J_n(mu), 0]]
// with mu != (-1)^{n+1} (mu ~ 1/mu) for congruence and |mu| > 1 for
// *congruence.
//
// Classification: strip the singular blocks with a unitary regularization
// recursion, then read the regular part off the Jordan structure of its
// cosquare M^{-T} M (resp. M^{-*} M). For *congruence a Gamma block's
// parameter is only determined up to sign by the cosquare; the sign comes
// from the inertia of a Hermitian form built on ker (C - z)^n.

#include "formrep/core_forms.hpp"
#include "formrep/linalg.hpp"
#include "formrep/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

namespace formrep {

enum class BlockVariant { singular, gamma, hpair };

inline std::string_view to_string(BlockVariant v) {
  switch (v) {
    case BlockVariant::singular: return "singular";
    case BlockVariant::gamma: return "gamma";
    case BlockVariant::hpair: return "hpair";
  }
  return "unknown";
}

struct CanonicalBlock {
  BlockVariant variant = BlockVariant::singular;
  int n = 1;
  Complex param{1.0, 0.0};  // lambda for gamma, mu for hpair, unused for singular

  static CanonicalBlock singular(int n) { return {BlockVariant::singular, n, Complex(0, 0)}; }
  static CanonicalBlock gamma(int n, Complex lambda = Complex(1, 0)) { return {BlockVariant::gamma, n, lambda}; }
  static CanonicalBlock hpair(int n, Complex mu) { return {BlockVariant::hpair, n, mu}; }

  int size() const { return variant == BlockVariant::hpair ? 2 * n : n; }
};

struct CanonicalBlockMultiset {
  FormKind kind = FormKind::bilinear;
  std::vector<CanonicalBlock> blocks;

  int total_size() const {
    int t = 0;
    for (const auto& b : blocks) t += b.size();
    return t;
  }
};

struct CanonicalConfig {
  double rank_tol = 1e-9;     // relative singular-value cutoff for every rank decision
  double cluster_tol = 1e-6;  // relative distance for grouping and pairing eigenvalues
  double param_tol = 1e-6;    // relative tolerance when comparing block parameters
  int certificate_max_dim = 4;
  int certificate_restarts = 1000;
};

/// mu and 1/mu give congruent bilinear HPair blocks. Stored representative:
/// |mu| > 1, or |mu| = 1 with argument in [0, pi].
inline Complex normalize_bilinear_mu(Complex mu) {
  constexpr double unit_eps = 1e-12;
  const double m = std::abs(mu);
  if (m < 1.0 - unit_eps) return 1.0 / mu;
  if (m <= 1.0 + unit_eps && std::arg(mu) < 0.0) return 1.0 / mu;
  return mu;
}

inline CanonicalBlock normalized(const CanonicalBlock& b, FormKind kind) {
  if (kind == FormKind::bilinear && b.variant == BlockVariant::hpair)
    return CanonicalBlock::hpair(b.n, normalize_bilinear_mu(b.param));
  return b;
}

inline void validate_block(const CanonicalBlock& b, FormKind kind) {
  auto fail = [&](const std::string& why) {
    std::ostringstream msg;
    msg << to_string(b.variant) << "(" << b.n << ") " << why;
    throw Error(ErrorCode::invalid_parameters, msg.str());
  };
  if (b.n < 1) fail("needs n >= 1");
  if (!std::isfinite(b.param.real()) || !std::isfinite(b.param.imag())) fail("has a non-finite parameter");
  switch (b.variant) {
    case BlockVariant::singular: break;
    case BlockVariant::gamma:
      if (kind == FormKind::bilinear && std::abs(b.param - Complex(1, 0)) > 1e-12)
        fail("carries lambda = 1 for bilinear forms");
      if (kind == FormKind::sesquilinear && std::abs(std::abs(b.param) - 1.0) > 1e-9)
        fail("needs |lambda| = 1");
      break;
    case BlockVariant::hpair: {
      if (std::abs(b.param) == 0.0) fail("needs mu != 0");
      if (kind == FormKind::bilinear) {
        const double excluded = (b.n % 2 == 1) ? 1.0 : -1.0;  // (-1)^{n+1}
        if (std::abs(b.param - excluded) <= 1e-12) fail("excludes mu = (-1)^{n+1}");
      } else if (!(std::abs(b.param) > 1.0 + 1e-12)) {
        fail("needs |mu| > 1");
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Block matrices

inline Matrix jordan_block(int n, Complex mu) {
  Matrix j = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) j(i, i) = mu;
  for (int i = 0; i + 1 < n; ++i) j(i, i + 1) = 1.0;
  return j;
}

/// Gamma_n: alternating +-1 on the antidiagonal and just below it, ending in
/// [1 1 0 ... 0] in the last row; its cosquare is similar to J_n((-1)^{n+1}).
inline Matrix gamma_matrix(int n) {
  Matrix g = Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    const double s = ((n - 1 - r) % 2 == 0) ? 1.0 : -1.0;
    g(r, n - 1 - r) = s;
    if (r >= 1) g(r, n - r) = s;
  }
  return g;
}

inline Matrix hpair_matrix(int n, Complex mu) {
  Matrix h = Matrix::Zero(2 * n, 2 * n);
  h.topRightCorner(n, n) = Matrix::Identity(n, n);
  h.bottomLeftCorner(n, n) = jordan_block(n, mu);
  return h;
}

inline Matrix block_matrix(const CanonicalBlock& b) {
  switch (b.variant) {
    case BlockVariant::singular: return jordan_block(b.n, Complex(0, 0));
    case BlockVariant::gamma: return b.param * gamma_matrix(b.n);
    case BlockVariant::hpair: return hpair_matrix(b.n, b.param);
  }
  return Matrix(0, 0);
}

inline Matrix assemble_canonical_matrix(const CanonicalBlockMultiset& set) {
  for (const auto& b : set.blocks) validate_block(b, set.kind);
  const int total = set.total_size();
  Matrix m = Matrix::Zero(total, total);
  int offset = 0;
  for (const auto& b : set.blocks) {
    const int s = b.size();
    m.block(offset, offset, s, s) = block_matrix(b);
    offset += s;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Cosquare and regularization

inline Matrix cosquare(const Matrix& m, FormKind kind, double threshold = 1e-10) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::dimension_mismatch, "cosquare needs a square matrix");
  if (!linalg::is_invertible(m, threshold)) throw Error(ErrorCode::non_invertible, "cosquare needs a nonsingular matrix");
  if (m.size() == 0) return m;
  Eigen::PartialPivLU<Matrix> lu(linalg::adjoint(m, kind));
  return lu.solve(m);
}

struct Regularization {
  Matrix regular;                   // nonsingular, congruent to the regular part
  std::vector<int> singular_sizes;  // sizes of the J_k(0) summands, ascending
};

namespace detail {

inline Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

/// Singular values that straddle the cutoff too closely make the rank call
/// meaningless; those inputs are rejected instead of guessed.
inline Eigen::Index checked_nullity(const Matrix& m, double abs_tol, const char* what) {
  if (m.cols() == 0) return 0;
  auto s = linalg::singular_values(m);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > abs_tol) ++rank;
    if (s(i) > abs_tol / 4.0 && s(i) <= abs_tol * 4.0) {
      std::ostringstream msg;
      msg << "rank decision for " << what << " is ambiguous: singular value " << s(i) << " near cutoff " << abs_tol;
      throw Error(ErrorCode::ill_conditioned, msg.str());
    }
  }
  return m.cols() - rank;
}

inline Matrix checked_null_space(const Matrix& m, double abs_tol, const char* what) {
  const auto k = checked_nullity(m, abs_tol, what);
  return linalg::null_space_of_dim(m, k);
}

}  // namespace detail

/// Splits off the singular canonical blocks.
///
/// One step, with K the right radical {y : M y = 0}:
///   Z = {x : F(k, x) = 0 for all k in K},  D = two-sided radical of F|Z.
/// The form induced on Z / D is congruent to R + sum J_{k-2}(0) over the
/// blocks J_k(0) of M with k >= 4, and the dimensions involved count the
/// blocks of sizes 1, 2 and 3:
///   a1 = dim(K cap left radical), a3 = dim D - dim K,
///   a2 = dim K - a1 - a3 - dim ker(F on Z/D).
/// Every basis is orthonormal, so all transformations are unitary.
inline Regularization regularize(const Matrix& m_in, FormKind kind, double rank_tol = 1e-9) {
  if (m_in.rows() != m_in.cols()) throw Error(ErrorCode::dimension_mismatch, "regularize needs a square matrix");
  Regularization out;
  const double scale = linalg::spectral_norm(m_in);
  if (m_in.size() == 0) {
    out.regular = m_in;
    return out;
  }
  if (scale == 0.0) {
    out.singular_sizes.assign(static_cast<std::size_t>(m_in.rows()), 1);
    out.regular = Matrix(0, 0);
    return out;
  }
  const double tol = rank_tol * scale;

  Matrix m = m_in;
  int offset = 0;  // blocks found at recursion depth t have their size raised by 2t
  while (true) {
    const auto n = m.rows();
    if (n == 0) break;
    const Matrix k_right = detail::checked_null_space(m, tol, "the right radical");
    const auto r = k_right.cols();
    if (r == 0) break;

    const auto a1 = detail::checked_nullity(detail::stack(m, linalg::adjoint(m, kind)), tol, "the two-sided radical");
    // F(k, x) = adj(k) M x, so Z is the null space of adj(K) M with known rank r - a1.
    const Matrix functionals = linalg::adjoint(k_right, kind) * m;
    const Matrix z = linalg::null_space_of_dim(functionals, n - (r - a1));
    const Matrix mz = linalg::adjoint(z, kind) * m * z;
    const Matrix d = detail::checked_null_space(detail::stack(mz, linalg::adjoint(mz, kind)), tol, "the restricted radical");
    const auto a3 = d.cols() - r;
    const Matrix q = linalg::orthogonal_complement(d, z.cols());
    const Matrix next = linalg::adjoint(q, kind) * mz * q;

    Eigen::Index r_next = 0;
    if (next.rows() > 0) {
      r_next = detail::checked_nullity(next, tol, "the reduced form");
      const auto two_sided = detail::checked_nullity(detail::stack(next, linalg::adjoint(next, kind)), tol,
                                                     "the reduced two-sided radical");
      if (two_sided != 0)
        throw Error(ErrorCode::ill_conditioned, "regularization step left a size-1 singular block behind");
    }
    const auto a2 = r - a1 - a3 - r_next;
    if (a1 < 0 || a2 < 0 || a3 < 0)
      throw Error(ErrorCode::ill_conditioned, "inconsistent radical dimensions during regularization");
    if (offset == 0) {
      for (Eigen::Index c = 0; c < a1; ++c) out.singular_sizes.push_back(1);
    } else if (a1 != 0) {
      throw Error(ErrorCode::ill_conditioned, "reduced form has a two-sided radical");
    }
    for (Eigen::Index c = 0; c < a2; ++c) out.singular_sizes.push_back(2 + offset);
    for (Eigen::Index c = 0; c < a3; ++c) out.singular_sizes.push_back(3 + offset);
    m = next;
    offset += 2;
  }
  std::sort(out.singular_sizes.begin(), out.singular_sizes.end());
  out.regular = m;
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvalue clusters of the cosquare

namespace detail {

struct EigenCluster {
  Complex mu;
  std::vector<Complex> members;
  linalg::Staircase stairs;
  std::vector<int> sizes;  // Jordan block sizes, descending
  bool used = false;
};

inline double rel(Complex a) { return std::max(1.0, std::abs(a)); }

inline std::vector<std::vector<Complex>> single_linkage(const std::vector<Complex>& pts, double radius) {
  const std::size_t n = pts.size();
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    std::vector<std::size_t> stack{s};
    while (!stack.empty()) {
      auto a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < n; ++b)
        if (label[b] < 0 && std::abs(pts[a] - pts[b]) <= radius * std::max(rel(pts[a]), rel(pts[b]))) {
          label[b] = next;
          stack.push_back(b);
        }
    }
    ++next;
  }
  std::vector<std::vector<Complex>> groups(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) groups[static_cast<std::size_t>(label[i])].push_back(pts[i]);
  return groups;
}

/// Groups eigenvalues so that each group is exactly one eigenvalue of C:
/// a group is accepted when the staircase at its mean has total nullity equal
/// to the group size, and split with a smaller linkage radius otherwise.
/// Perturbed Jordan blocks spread their eigenvalues by about eps^{1/k}, so
/// grouping starts loose and only tightens where the rank test demands it.
inline void resolve_clusters(const Matrix& c, const std::vector<Complex>& pts, double radius, double abs_tol,
                             const CanonicalConfig& cfg, std::vector<EigenCluster>& out) {
  for (auto& group : single_linkage(pts, radius)) {
    Complex mean(0, 0);
    for (auto z : group) mean += z;
    mean /= static_cast<double>(group.size());
    const Matrix shifted = c - mean * Matrix::Identity(c.rows(), c.cols());
    auto stairs = linalg::staircase(shifted, abs_tol);
    if (stairs.total_nullity() == static_cast<Eigen::Index>(group.size()) && stairs.consistent()) {
      EigenCluster cl{mean, group, stairs, stairs.jordan_sizes(), false};
      const int largest = cl.sizes.empty() ? 1 : cl.sizes.front();
      double spread = 0.0;
      for (auto z : group) spread = std::max(spread, std::abs(z - mean));
      const double allowed = std::max(cfg.cluster_tol, std::pow(cfg.cluster_tol, 1.0 / largest));
      if (spread > allowed * rel(mean)) {
        std::ostringstream msg;
        msg << "eigenvalues near " << mean << " spread by " << spread << ", more than Jordan size " << largest
            << " explains";
        throw Error(ErrorCode::ill_conditioned, msg.str());
      }
      out.push_back(std::move(cl));
      continue;
    }
    if (group.size() == 1 || radius / 4.0 < cfg.cluster_tol) {
      std::ostringstream msg;
      msg << "cannot resolve eigenvalue cluster near " << mean << " (" << group.size() << " eigenvalues, nullity "
          << stairs.total_nullity() << ")";
      throw Error(ErrorCode::ill_conditioned, msg.str());
    }
    resolve_clusters(c, group, radius / 4.0, abs_tol, cfg, out);
  }
}

inline std::vector<EigenCluster> eigen_clusters(const Matrix& c, const CanonicalConfig& cfg) {
  std::vector<EigenCluster> out;
  if (c.rows() == 0) return out;
  Eigen::ComplexEigenSolver<Matrix> es(c, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::ill_conditioned, "eigenvalue iteration did not converge");
  std::vector<Complex> eig(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  const double abs_tol = cfg.rank_tol * std::max(1.0, linalg::spectral_norm(c));
  resolve_clusters(c, eig, 0.5, abs_tol, cfg, out);
  return out;
}

inline std::vector<int> count_by_size(const std::vector<int>& sizes) {
  const int largest = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  std::vector<int> counts(static_cast<std::size_t>(largest + 1), 0);
  for (int s : sizes) ++counts[static_cast<std::size_t>(s)];
  return counts;
}

inline EigenCluster* find_partner(std::vector<EigenCluster>& clusters, const EigenCluster& self, Complex target,
                                  double tol) {
  EigenCluster* best = nullptr;
  double best_dist = 0.0;
  for (auto& cl : clusters) {
    if (cl.used || &cl == &self) continue;
    const double d = std::abs(cl.mu - target);
    if (d <= tol * rel(target) && (best == nullptr || d < best_dist)) {
      best = &cl;
      best_dist = d;
    }
  }
  return best;
}

inline void pair_clusters(std::vector<EigenCluster>& clusters, EigenCluster& cl, Complex target, FormKind kind,
                          const CanonicalConfig& cfg, std::vector<CanonicalBlock>& blocks) {
  EigenCluster* partner = find_partner(clusters, cl, target, cfg.cluster_tol);
  if (partner == nullptr) {
    std::ostringstream msg;
    msg << "pairing failure: eigenvalue " << cl.mu << " has no partner near " << target;
    throw Error(ErrorCode::ill_conditioned, msg.str());
  }
  if (partner->sizes != cl.sizes) {
    std::ostringstream msg;
    msg << "pairing failure: Jordan structures at " << cl.mu << " and " << partner->mu << " differ";
    throw Error(ErrorCode::ill_conditioned, msg.str());
  }
  cl.used = partner->used = true;
  Complex mu = kind == FormKind::bilinear ? 0.5 * (cl.mu + 1.0 / partner->mu)
                                          : 0.5 * (cl.mu + 1.0 / std::conj(partner->mu));
  if (kind == FormKind::bilinear) mu = normalize_bilinear_mu(mu);
  for (int s : cl.sizes) blocks.push_back(CanonicalBlock::hpair(s, mu));
}

/// Hermitian form c' * Y^* R N^{s-1} Y on ker N^s with N = C - z, |z| = 1.
/// F(x, y) = x^* R y satisfies G(x, y) = w * conj(G(y, x)) with
/// w = (-1)^{s-1} z^{2s-1} there, so scaling by conj(sqrt(w)) makes it
/// Hermitian. Only Jordan chains of length exactly s contribute.
inline Matrix gamma_sign_form(const Matrix& r, const Matrix& c, Complex z, int s, const Matrix& y, Complex root) {
  const auto n = c.rows();
  const Matrix nz = c - z * Matrix::Identity(n, n);
  Matrix p = Matrix::Identity(n, n);
  for (int i = 0; i + 1 < s; ++i) p = nz * p;
  Matrix g = std::conj(root) * (y.adjoint() * r * p * y);
  return g;
}

inline Complex gamma_form_root(Complex z, int s) {
  const double sign = (s % 2 == 1) ? 1.0 : -1.0;  // (-1)^{s-1}
  return std::sqrt(sign * std::pow(z, 2 * s - 1));
}

/// Splits `count` size-s Gamma blocks at unit eigenvalue z between +l0 and -l0.
inline void gamma_signs(const Matrix& r, const Matrix& c, const EigenCluster& cl, int s, int count,
                        const CanonicalConfig& cfg, std::vector<CanonicalBlock>& blocks) {
  const Complex z = cl.mu / std::abs(cl.mu);
  const Complex l0 = std::sqrt(z * ((s % 2 == 1) ? 1.0 : -1.0));  // l0^2 (-1)^{s+1} = z
  const Complex root = gamma_form_root(z, s);

  const Matrix& y = cl.stairs.kernels.at(static_cast<std::size_t>(s - 1));
  Matrix h = gamma_sign_form(r, c, z, s, y, root);
  const double hscale = std::max(linalg::max_abs(h), 1e-300);
  if (linalg::max_abs(h - h.adjoint()) > 1e-4 * hscale)
    throw Error(ErrorCode::ill_conditioned, "sign form at a unit eigenvalue is not Hermitian");
  Matrix herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  std::vector<double> vals(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(vals.begin(), vals.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
  if (static_cast<int>(vals.size()) < count)
    throw Error(ErrorCode::ill_conditioned, "sign form is too small for the Jordan structure");
  const double kept = std::abs(vals[static_cast<std::size_t>(count - 1)]);
  const double dropped = static_cast<int>(vals.size()) > count ? std::abs(vals[static_cast<std::size_t>(count)]) : 0.0;
  if (!(kept > 1e3 * dropped) || kept <= cfg.rank_tol * hscale)
    throw Error(ErrorCode::ill_conditioned, "sign form rank does not match the number of Gamma blocks");
  int positive = 0;
  for (int i = 0; i < count; ++i)
    if (vals[static_cast<std::size_t>(i)] > 0) ++positive;

  // Orientation: the same form evaluated on the block l0 * Gamma_s itself.
  const Matrix ref = l0 * gamma_matrix(s);
  const Matrix ref_c = cosquare(ref, FormKind::sesquilinear);
  const Matrix ref_h = gamma_sign_form(ref, ref_c, z, s, Matrix::Identity(s, s), root);
  const double ref_sign = (0.5 * (ref_h + ref_h.adjoint())).trace().real() > 0 ? 1.0 : -1.0;

  const Complex plus = ref_sign > 0 ? l0 : -l0;
  for (int i = 0; i < positive; ++i) blocks.push_back(CanonicalBlock::gamma(s, plus));
  for (int i = positive; i < count; ++i) blocks.push_back(CanonicalBlock::gamma(s, -plus));
}

inline void sort_blocks(std::vector<CanonicalBlock>& blocks) {
  std::sort(blocks.begin(), blocks.end(), [](const CanonicalBlock& a, const CanonicalBlock& b) {
    if (a.variant != b.variant) return a.variant < b.variant;
    if (a.n != b.n) return a.n < b.n;
    if (a.param.real() != b.param.real()) return a.param.real() < b.param.real();
    return a.param.imag() < b.param.imag();
  });
}

}  // namespace detail

inline CanonicalBlockMultiset canonical_blocks(const Matrix& m, FormKind kind, const CanonicalConfig& cfg = {}) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::dimension_mismatch, "canonical_blocks needs a square matrix");
  if (!linalg::all_finite(m)) throw Error(ErrorCode::invalid_parameters, "matrix has non-finite entries");
  CanonicalBlockMultiset out;
  out.kind = kind;
  auto reg = regularize(m, kind, cfg.rank_tol);
  for (int s : reg.singular_sizes) out.blocks.push_back(CanonicalBlock::singular(s));

  if (reg.regular.rows() > 0) {
    const Matrix& r = reg.regular;
    const Matrix c = cosquare(r, kind, cfg.rank_tol);
    auto clusters = detail::eigen_clusters(c, cfg);

    for (auto& cl : clusters) {
      if (cl.used) continue;
      if (kind == FormKind::bilinear) {
        for (double unit : {1.0, -1.0}) {
          if (cl.used || std::abs(cl.mu - unit) > cfg.cluster_tol) continue;
          cl.used = true;
          // Gamma_k has cosquare eigenvalue (-1)^{k+1}; the other parity pairs up.
          const int gamma_parity = unit > 0 ? 1 : 0;
          const auto counts = detail::count_by_size(cl.sizes);
          for (std::size_t s = 1; s < counts.size(); ++s) {
            if (counts[s] == 0) continue;
            if (static_cast<int>(s % 2) == gamma_parity) {
              for (int i = 0; i < counts[s]; ++i) out.blocks.push_back(CanonicalBlock::gamma(static_cast<int>(s)));
            } else {
              if (counts[s] % 2 != 0)
                throw Error(ErrorCode::ill_conditioned, "pairing failure: odd number of Jordan blocks at +-1");
              for (int i = 0; i < counts[s] / 2; ++i)
                out.blocks.push_back(CanonicalBlock::hpair(static_cast<int>(s), Complex(unit, 0)));
            }
          }
        }
        if (cl.used) continue;
        detail::pair_clusters(clusters, cl, 1.0 / cl.mu, kind, cfg, out.blocks);
      } else {
        const double modulus = std::abs(cl.mu);
        if (std::abs(modulus - 1.0) <= cfg.cluster_tol) {
          cl.used = true;
          const auto counts = detail::count_by_size(cl.sizes);
          for (std::size_t s = 1; s < counts.size(); ++s)
            if (counts[s] > 0) detail::gamma_signs(r, c, cl, static_cast<int>(s), counts[s], cfg, out.blocks);
        } else if (modulus > 1.0) {
          detail::pair_clusters(clusters, cl, 1.0 / std::conj(cl.mu), kind, cfg, out.blocks);
        }
      }
    }
    for (const auto& cl : clusters)
      if (!cl.used) {
        std::ostringstream msg;
        msg << "pairing failure: eigenvalue " << cl.mu << " left unpaired";
        throw Error(ErrorCode::ill_conditioned, msg.str());
      }
  }
  detail::sort_blocks(out.blocks);
  if (out.total_size() != m.rows()) throw Error(ErrorCode::ill_conditioned, "block sizes do not add up");
  return out;
}

/// Multiset equality with parameter tolerance (bilinear mu compared after
/// normalization).
inline bool same_blocks(const CanonicalBlockMultiset& a, const CanonicalBlockMultiset& b, double param_tol = 1e-6) {
  if (a.kind != b.kind || a.blocks.size() != b.blocks.size()) return false;
  std::vector<bool> taken(b.blocks.size(), false);
  for (const auto& x0 : a.blocks) {
    const auto x = normalized(x0, a.kind);
    bool matched = false;
    for (std::size_t j = 0; j < b.blocks.size() && !matched; ++j) {
      if (taken[j]) continue;
      const auto y = normalized(b.blocks[j], b.kind);
      if (x.variant != y.variant || x.n != y.n) continue;
      double d = 0.0;
      if (x.variant != BlockVariant::singular) {
        d = std::abs(x.param - y.param);
        if (a.kind == FormKind::bilinear && x.variant == BlockVariant::hpair)
          d = std::min(d, std::abs(x.param - 1.0 / y.param));
      }
      if (d <= param_tol * std::max(1.0, std::abs(x.param))) {
        taken[j] = true;
        matched = true;
      }
    }
    if (!matched) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Equivalence decision for single forms

struct CongruenceDecision {
  bool equivalent = false;
  std::optional<TransformFamily> certificate;  // S with M1 = S^T M2 S (conj(S) for sesquilinear)
};

namespace detail {

/// Levenberg-Marquardt on the real and imaginary parts of S for
/// S^T M2 S' = M1. Returns a numerically invertible solution or nothing.
inline std::optional<Matrix> search_congruence(const Matrix& m1, const Matrix& m2, FormKind kind, int restarts,
                                               std::uint64_t seed) {
  const int n = static_cast<int>(m1.rows());
  const int vars = 2 * n * n;
  const double scale = std::max(1.0, linalg::max_abs(m1));
  auto second = [&](const Matrix& s) { return kind == FormKind::bilinear ? s : Matrix(s.conjugate()); };
  auto residual = [&](const Matrix& s) { return Matrix(s.transpose() * m2 * second(s) - m1); };
  auto to_real = [&](const Matrix& r) {
    Eigen::VectorXd out(vars);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        out(2 * (i * n + j)) = r(i, j).real();
        out(2 * (i * n + j) + 1) = r(i, j).imag();
      }
    return out;
  };
  auto from_real = [&](const Eigen::VectorXd& x) {
    Matrix s(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s(i, j) = Complex(x(2 * (i * n + j)), x(2 * (i * n + j) + 1));
    return s;
  };

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < restarts; ++attempt) {
    Eigen::VectorXd x = to_real(linalg::random_gaussian_matrix(n, n, rng));
    double damping = 1e-3;
    Matrix s = from_real(x);
    Eigen::VectorXd res = to_real(residual(s));
    double cost = res.squaredNorm();
    for (int iter = 0; iter < 200 && cost > 0.0; ++iter) {
      if (std::sqrt(cost) <= 1e-13 * scale) break;
      Eigen::MatrixXd jac(vars, vars);
      for (int v = 0; v < vars; ++v) {
        Matrix e = Matrix::Zero(n, n);
        const int idx = v / 2;
        e(idx / n, idx % n) = (v % 2 == 0) ? Complex(1, 0) : Complex(0, 1);
        Matrix d = e.transpose() * m2 * second(s) + s.transpose() * m2 * second(e);
        jac.col(v) = to_real(d);
      }
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      const Eigen::VectorXd grad = jac.transpose() * res;
      bool improved = false;
      for (int tries = 0; tries < 20; ++tries) {
        Eigen::MatrixXd lhs = jtj;
        lhs.diagonal().array() += damping * (1.0 + jtj.diagonal().array());
        Eigen::VectorXd step = lhs.ldlt().solve(-grad);
        Eigen::VectorXd trial = x + step;
        Eigen::VectorXd trial_res = to_real(residual(from_real(trial)));
        const double trial_cost = trial_res.squaredNorm();
        if (trial_cost < cost) {
          x = trial;
          s = from_real(x);
          res = trial_res;
          cost = trial_cost;
          damping = std::max(damping / 3.0, 1e-12);
          improved = true;
          break;
        }
        damping *= 4.0;
      }
      if (!improved) break;
    }
    if (linalg::max_abs(residual(s)) <= 1e-10 * scale && linalg::is_invertible(s, invertibility_threshold)) return s;
  }
  return std::nullopt;
}

}  // namespace detail

/// Decides whether M1 and M2 are congruent (*congruent) by comparing block
/// multisets. For small equivalent inputs a witnessing S is searched for;
/// not finding one is not a failure.
inline CongruenceDecision congruent_decision(const Matrix& m1, const Matrix& m2, FormKind kind,
                                             const CanonicalConfig& cfg = {}, bool want_certificate = true,
                                             std::uint64_t seed = 0) {
  if (m1.rows() != m1.cols() || m2.rows() != m2.cols())
    throw Error(ErrorCode::dimension_mismatch, "congruent_decision needs square matrices");
  CongruenceDecision out;
  if (m1.rows() != m2.rows()) return out;
  const auto b1 = canonical_blocks(m1, kind, cfg);
  const auto b2 = canonical_blocks(m2, kind, cfg);
  out.equivalent = same_blocks(b1, b2, cfg.param_tol);
  if (out.equivalent && want_certificate && m1.rows() <= cfg.certificate_max_dim) {
    if (m1.rows() == 0) {
      out.certificate = TransformFamily{{Matrix(0, 0)}};
    } else if (auto s = detail::search_congruence(m1, m2, kind, cfg.certificate_restarts, seed)) {
      out.certificate = TransformFamily{{*s}};
    }
  }
  return out;
}

}  // namespace formrep
