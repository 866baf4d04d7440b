#pragma once

// Numerical kernels shared by the form, linearization and canonical-form code:
// scale-aware rank decisions, null spaces, and the Kublanovskaya staircase
// for Jordan structure at a single eigenvalue.

#include "formrep/types.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace formrep::linalg {

/// Transpose for bilinear forms, conjugate transpose for sesquilinear ones.
inline Matrix adjoint(const Matrix& m, FormKind kind) {
  return kind == FormKind::bilinear ? Matrix(m.transpose()) : Matrix(m.adjoint());
}

inline double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// Singular values, descending. Empty for empty matrices.
inline RealVector singular_values(const Matrix& m) {
  if (m.size() == 0) return RealVector(0);
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

inline double spectral_norm(const Matrix& m) {
  auto s = singular_values(m);
  return s.size() == 0 ? 0.0 : s(0);
}

/// A square matrix is numerically invertible when its smallest singular value
/// exceeds `threshold` times its largest one, the latter floored at 1.
inline bool is_invertible(const Matrix& m, double threshold = 1e-10) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  auto s = singular_values(m);
  return s(s.size() - 1) > threshold * std::max(1.0, s(0));
}

/// Smallest singular value of a column set relative to its largest column norm.
inline double relative_min_singular(const Matrix& cols) {
  if (cols.cols() == 0) return 1.0;
  double scale = 0.0;
  for (Eigen::Index j = 0; j < cols.cols(); ++j) scale = std::max(scale, cols.col(j).norm());
  if (scale == 0.0) return 0.0;
  if (cols.cols() > cols.rows()) return 0.0;
  auto s = singular_values(cols);
  return s(s.size() - 1) / scale;
}

inline bool numerically_independent(const Matrix& cols, double threshold) {
  return relative_min_singular(cols) > threshold;
}

/// Orthonormal basis of the numerical null space {x : m x = 0}, deciding rank
/// with an absolute singular-value cutoff.
inline Matrix null_space(const Matrix& m, double abs_tol) {
  const auto n = m.cols();
  if (n == 0) return Matrix(0, 0);
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > abs_tol) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

/// Null space with a prescribed dimension (smallest singular directions).
inline Matrix null_space_of_dim(const Matrix& m, Eigen::Index dim) {
  const auto n = m.cols();
  if (m.rows() == 0) return Matrix::Identity(n, n).leftCols(dim);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

inline Eigen::Index nullity(const Matrix& m, double abs_tol) {
  return null_space(m, abs_tol).cols();
}

/// Orthonormal basis of the orthogonal complement of span(basis) in C^n.
/// `basis` must have orthonormal columns.
inline Matrix orthogonal_complement(const Matrix& basis, Eigen::Index n) {
  if (basis.cols() == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - basis.cols());
}

inline Matrix orthonormalize(const Matrix& cols) {
  if (cols.cols() == 0) return Matrix(cols.rows(), 0);
  Eigen::HouseholderQR<Matrix> qr(cols);
  Matrix q = qr.householderQ() * Matrix::Identity(cols.rows(), cols.cols());
  return q;
}

inline Vector random_gaussian_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double re = normal(rng);
    double im = normal(rng);
    v(i) = Complex(re, im);
  }
  return v;
}

inline Matrix random_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double re = normal(rng);
      double im = normal(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}

/// Unit vector orthogonal to every column of `cols`. Built by orthonormalizing
/// the columns and removing their components from a seeded random draw,
/// redrawn while the remainder has norm below 1e-12.
inline Vector unit_orthogonal_to(const Matrix& cols, Eigen::Index n, std::mt19937_64& rng) {
  Matrix q = cols.cols() == 0 ? Matrix(n, 0) : orthonormalize(cols);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Vector w = random_gaussian_vector(n, rng);
    for (int pass = 0; pass < 2; ++pass) w -= q * (q.adjoint() * w);
    double norm = w.norm();
    if (norm >= 1e-12) return w / norm;
  }
  throw Error(ErrorCode::ill_conditioned, "could not draw a vector orthogonal to the given span");
}

/// Result of the staircase reduction of a square matrix A at one eigenvalue.
/// `increments[j]` = dim ker A^{j+1} - dim ker A^j; `kernels[j]` is an
/// orthonormal basis of ker A^{j+1}. The sequence stops when an increment is 0.
struct Staircase {
  std::vector<Eigen::Index> increments;
  std::vector<Matrix> kernels;

  Eigen::Index total_nullity() const {
    Eigen::Index t = 0;
    for (auto k : increments) t += k;
    return t;
  }

  /// Jordan block sizes (descending) implied by the nullity increments.
  std::vector<int> jordan_sizes() const {
    std::vector<int> sizes;
    for (std::size_t j = 0; j < increments.size(); ++j) {
      Eigen::Index next = j + 1 < increments.size() ? increments[j + 1] : 0;
      for (Eigen::Index c = 0; c < increments[j] - next; ++c) sizes.push_back(static_cast<int>(j + 1));
    }
    std::sort(sizes.rbegin(), sizes.rend());
    return sizes;
  }

  bool consistent() const {
    for (std::size_t j = 1; j < increments.size(); ++j)
      if (increments[j] > increments[j - 1]) return false;
    return true;
  }
};

/// Kublanovskaya staircase: repeatedly split off the numerical kernel by a
/// unitary change of basis and recurse on the trailing block, so
/// dim ker A^{j+1} = dim ker A + dim ker A2^j. Every rank decision uses the
/// same absolute cutoff, which avoids forming powers of A.
inline Staircase staircase(const Matrix& a, double abs_tol) {
  Staircase out;
  const auto n = a.rows();
  Matrix current = a;
  Matrix basis = Matrix::Identity(n, n);  // columns span the current trailing space
  Matrix accumulated(n, 0);
  while (current.rows() > 0) {
    const auto m = current.rows();
    Eigen::JacobiSVD<Matrix> svd(current, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) > abs_tol) ++rank;
    const Eigen::Index k = m - rank;
    if (k == 0) break;
    Matrix v = svd.matrixV();
    Matrix kernel_part = v.rightCols(k);
    Matrix range_part = v.leftCols(rank);
    Matrix new_accumulated(n, accumulated.cols() + k);
    new_accumulated << accumulated, basis * kernel_part;
    accumulated = new_accumulated;
    out.increments.push_back(k);
    out.kernels.push_back(accumulated);
    current = range_part.adjoint() * current * range_part;
    basis = basis * range_part;
  }
  return out;
}

}  // namespace formrep::linalg
