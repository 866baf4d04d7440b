#include "formrep/canonical.hpp"
#include "formrep/generators.hpp"

#include <gtest/gtest.h>

using namespace formrep;
using B = CanonicalBlock;

namespace {

const Complex I(0, 1);

Matrix mat2(Complex a, Complex b, Complex c, Complex d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

Matrix congruent(const Matrix& m, const Matrix& s, FormKind kind) {
  return s.transpose() * m * (kind == FormKind::bilinear ? s : Matrix(s.conjugate()));
}

CanonicalBlockMultiset set_of(FormKind kind, std::vector<CanonicalBlock> blocks) { return {kind, std::move(blocks)}; }

bool matches(const Matrix& m, FormKind kind, const CanonicalBlockMultiset& want) {
  return same_blocks(canonical_blocks(m, kind), want);
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::parse_error;
}

int numerical_rank(const Matrix& m, double tol) {
  const auto s = linalg::singular_values(m);
  return static_cast<int>((s.array() > tol).count());
}

}  // namespace

TEST(Cosquare, Identity) {
  EXPECT_EQ(cosquare(Matrix::Identity(3, 3), FormKind::bilinear), Matrix::Identity(3, 3));
  EXPECT_EQ(cosquare(Matrix::Identity(3, 3), FormKind::sesquilinear), Matrix::Identity(3, 3));
}

TEST(Cosquare, TwoByTwoBilinear) {
  // M^T = [[0,2],[1,0]] has inverse [[0,1],[1/2,0]].
  const Matrix inv_t = mat2(0, 1, 0.5, 0);
  const Matrix want = inv_t * mat2(0, 1, 2, 0);
  EXPECT_LE(linalg::max_abs(want - mat2(2, 0, 0, 0.5)), 1e-15);
  EXPECT_LE(linalg::max_abs(cosquare(mat2(0, 1, 2, 0), FormKind::bilinear) - want), 1e-14);
}

TEST(Cosquare, ScalarSesquilinear) {
  // (conj(i))^{-1} i = i / (-i) = -1.
  Matrix m(1, 1);
  m << I;
  EXPECT_LE(std::abs(cosquare(m, FormKind::sesquilinear)(0, 0) - Complex(-1, 0)), 1e-15);
  EXPECT_LE(std::abs(cosquare(m, FormKind::bilinear)(0, 0) - Complex(1, 0)), 1e-15);
}

TEST(Cosquare, SingularInputIsRejected) {
  EXPECT_EQ(code_of([] { cosquare(mat2(1, 1, 1, 1), FormKind::bilinear); }), ErrorCode::non_invertible);
}

TEST(Regularize, NonsingularIsKept) {
  const Matrix m = random_invertible(4, 10.0, 2);
  const auto r = regularize(m, FormKind::bilinear);
  EXPECT_TRUE(r.singular_sizes.empty());
  EXPECT_EQ(r.regular.rows(), 4);
}

TEST(Regularize, ZeroForm) {
  const auto r = regularize(Matrix::Zero(3, 3), FormKind::sesquilinear);
  EXPECT_EQ(r.singular_sizes, (std::vector<int>{1, 1, 1}));
  EXPECT_EQ(r.regular.rows(), 0);
}

TEST(Regularize, NilpotentTwoByTwo) {
  const Matrix m = mat2(0, 1, 0, 0);
  const auto r = regularize(m, FormKind::bilinear);
  EXPECT_EQ(r.singular_sizes, (std::vector<int>{2}));
  EXPECT_EQ(r.regular.rows(), 0);
  // Independent check: congruence keeps rank and symmetry, and every direct
  // sum of 1x1 blocks of rank 1 is diag(0, a), which is symmetric.
  EXPECT_EQ(numerical_rank(m, 1e-12), 1);
  EXPECT_GT(linalg::max_abs(m - m.transpose()), 0.5);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const Matrix s = linalg::random_gaussian_matrix(2, 2, rng);
    const Matrix c = congruent(m, s, FormKind::bilinear);
    EXPECT_GT(linalg::max_abs(c - c.transpose()), 1e-6 * linalg::max_abs(c));
  }
}

TEST(Regularize, DeepNilpotentBlocks) {
  for (int k = 1; k <= 7; ++k) {
    for (auto kind : {FormKind::bilinear, FormKind::sesquilinear}) {
      const Matrix m = assemble_canonical_matrix(set_of(kind, {B::singular(k), B::gamma(1)}));
      const auto r = regularize(congruent(m, random_invertible(k + 1, 20.0, k), kind), kind);
      EXPECT_EQ(r.singular_sizes, std::vector<int>{k}) << "k = " << k;
      EXPECT_EQ(r.regular.rows(), 1);
    }
  }
}

TEST(Regularize, AmbiguousRankIsIllConditioned) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-9;
  EXPECT_EQ(code_of([&] { regularize(m, FormKind::bilinear, 1e-9); }), ErrorCode::ill_conditioned);
}

TEST(CanonicalBlocks, ZeroOneByOne) {
  for (auto kind : {FormKind::bilinear, FormKind::sesquilinear})
    EXPECT_TRUE(matches(Matrix::Zero(1, 1), kind, set_of(kind, {B::singular(1)})));
}

TEST(CanonicalBlocks, OneByOneBilinear) {
  EXPECT_TRUE(matches(Matrix::Ones(1, 1), FormKind::bilinear, set_of(FormKind::bilinear, {B::gamma(1)})));
}

TEST(CanonicalBlocks, DiagonalSymmetricIsTwoGammas) {
  const Matrix m = mat2(2, 0, 0, 5);
  // Scaling by diag(1/sqrt 2, 1/sqrt 5) gives I, which is Gamma_1 + Gamma_1.
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1.0 / std::sqrt(2.0);
  s(1, 1) = 1.0 / std::sqrt(5.0);
  const auto expected = set_of(FormKind::bilinear, {B::gamma(1), B::gamma(1)});
  EXPECT_LE(linalg::max_abs(congruent(m, s, FormKind::bilinear) - assemble_canonical_matrix(expected)), 1e-15);
  EXPECT_TRUE(matches(m, FormKind::bilinear, expected));
}

TEST(CanonicalBlocks, HPairFromCosquareEigenvalues) {
  EXPECT_TRUE(matches(mat2(0, 1, 2, 0), FormKind::bilinear, set_of(FormKind::bilinear, {B::hpair(1, 2.0)})));
}

TEST(CanonicalBlocks, SkewSymmetricPlane) {
  // Cosquare of a nonsingular skew form is -I.
  const Matrix m = mat2(0, 1, -1, 0);
  EXPECT_LE(linalg::max_abs(cosquare(m, FormKind::bilinear) + Matrix::Identity(2, 2)), 1e-15);
  EXPECT_TRUE(matches(m, FormKind::bilinear, set_of(FormKind::bilinear, {B::hpair(1, -1.0)})));
}

TEST(CanonicalBlocks, HermitianSignatureByInertia) {
  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = 2.0;
  d(1, 1) = 0.5;
  d(2, 2) = -3.0;
  const Matrix s = random_invertible(3, 50.0, 4);
  const Matrix m = congruent(d, s, FormKind::sesquilinear);
  EXPECT_LE(linalg::max_abs(m - m.adjoint()), 1e-12 * linalg::max_abs(m));
  EXPECT_TRUE(matches(m, FormKind::sesquilinear,
                      set_of(FormKind::sesquilinear, {B::gamma(1, 1.0), B::gamma(1, 1.0), B::gamma(1, -1.0)})));
}

TEST(CanonicalBlocks, TotalSizeIsConserved) {
  for (int t = 0; t < 40; ++t) {
    const auto kind = t % 2 ? FormKind::sesquilinear : FormKind::bilinear;
    const auto set = sample_canonical_multiset(1 + t % 8, kind, t);
    const auto got = canonical_blocks(assemble_canonical_matrix(set), kind);
    EXPECT_EQ(got.total_size(), set.total_size());
  }
}

TEST(CanonicalBlocks, SingularBlockCountIsCorank) {
  for (int t = 0; t < 40; ++t) {
    const auto kind = t % 2 ? FormKind::sesquilinear : FormKind::bilinear;
    const auto set = sample_canonical_multiset(2 + t % 7, kind, 100 + t);
    const Matrix m = congruent(assemble_canonical_matrix(set), random_invertible(set.total_size(), 100.0, t), kind);
    const auto got = canonical_blocks(m, kind);
    int singular = 0;
    for (const auto& b : got.blocks) singular += b.variant == BlockVariant::singular;
    EXPECT_EQ(singular, m.rows() - numerical_rank(m, 1e-9 * linalg::spectral_norm(m)));
  }
}

TEST(CanonicalBlocks, RandomCongruencesRecoverTheMultiset) {
  int ok = 0;
  for (int t = 0; t < 60; ++t) {
    const auto kind = t % 2 ? FormKind::sesquilinear : FormKind::bilinear;
    const auto set = sample_canonical_multiset(1 + t % 8, kind, 900 + t);
    const Matrix m = congruent(assemble_canonical_matrix(set), random_invertible(set.total_size(), 1e3, t), kind);
    try {
      EXPECT_TRUE(same_blocks(canonical_blocks(m, kind), set)) << "trial " << t;
      ++ok;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ill_conditioned);
    }
  }
  EXPECT_GE(ok, 57);
}

TEST(CanonicalBlocks, RepeatedAndBoundaryBlocks) {
  const Complex l = std::polar(1.0, 0.7);
  const std::vector<CanonicalBlockMultiset> cases = {
      set_of(FormKind::sesquilinear, {B::gamma(1, l), B::gamma(1, -l)}),
      set_of(FormKind::sesquilinear, {B::gamma(2, l), B::gamma(2, l)}),
      set_of(FormKind::sesquilinear, {B::gamma(1, l), B::gamma(3, -l), B::gamma(2, I * l)}),
      set_of(FormKind::sesquilinear, {B::hpair(1, 2.0), B::hpair(1, 2.0), B::singular(3)}),
      set_of(FormKind::bilinear, {B::hpair(2, 1.0), B::gamma(1), B::gamma(3)}),
      set_of(FormKind::bilinear, {B::hpair(1, -1.0), B::gamma(2), B::gamma(2)}),
      set_of(FormKind::bilinear, {B::hpair(1, std::polar(1.0, 1.0)), B::singular(2), B::singular(2)}),
      set_of(FormKind::bilinear, {B::singular(4), B::singular(5)}),
      set_of(FormKind::bilinear, {B::gamma(4), B::gamma(2)}),
  };
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Matrix m = assemble_canonical_matrix(cases[c]);
    for (int t = 0; t < 10; ++t) {
      const Matrix s = random_invertible(static_cast<int>(m.rows()), 1e3, 31 * c + t);
      EXPECT_TRUE(same_blocks(canonical_blocks(congruent(m, s, cases[c].kind), cases[c].kind), cases[c]))
          << "case " << c << " trial " << t;
    }
  }
}

TEST(CanonicalBlocks, NonSquareIsRejected) {
  EXPECT_EQ(code_of([] { canonical_blocks(Matrix::Zero(2, 3), FormKind::bilinear); }), ErrorCode::dimension_mismatch);
}

TEST(Assemble, SmallBlocks) {
  EXPECT_EQ(assemble_canonical_matrix(set_of(FormKind::bilinear, {B::singular(1)})), Matrix::Zero(1, 1));
  EXPECT_EQ(assemble_canonical_matrix(set_of(FormKind::bilinear, {B::gamma(1)})), Matrix::Ones(1, 1));
  const Matrix h = assemble_canonical_matrix(set_of(FormKind::bilinear, {B::hpair(1, 3.0)}));
  Eigen::ComplexEigenSolver<Matrix> es(cosquare(h, FormKind::bilinear));
  std::vector<double> ev{std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(1))};
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(ev[1], 3.0, 1e-14);
}

TEST(Assemble, InvalidParameters) {
  const auto bil = FormKind::bilinear;
  const auto ses = FormKind::sesquilinear;
  EXPECT_EQ(code_of([&] { assemble_canonical_matrix(set_of(bil, {B::hpair(1, 1.0)})); }), ErrorCode::invalid_parameters);
  EXPECT_EQ(code_of([&] { assemble_canonical_matrix(set_of(bil, {B::hpair(2, -1.0)})); }), ErrorCode::invalid_parameters);
  EXPECT_EQ(code_of([&] { assemble_canonical_matrix(set_of(bil, {B::hpair(1, 0.0)})); }), ErrorCode::invalid_parameters);
  EXPECT_EQ(code_of([&] { assemble_canonical_matrix(set_of(ses, {B::hpair(1, 0.5)})); }), ErrorCode::invalid_parameters);
  EXPECT_EQ(code_of([&] { assemble_canonical_matrix(set_of(ses, {B::gamma(2, 2.0)})); }), ErrorCode::invalid_parameters);
  EXPECT_EQ(code_of([&] { assemble_canonical_matrix(set_of(bil, {B::gamma(1, I)})); }), ErrorCode::invalid_parameters);
  EXPECT_EQ(code_of([&] { assemble_canonical_matrix(set_of(bil, {B::singular(0)})); }), ErrorCode::invalid_parameters);
  EXPECT_NO_THROW(assemble_canonical_matrix(set_of(bil, {B::hpair(2, 1.0), B::hpair(1, -1.0)})));
}

TEST(Normalization, IdempotentAndInversionInvariant) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const Complex mu(u(rng), u(rng));
    const Complex once = normalize_bilinear_mu(mu);
    EXPECT_EQ(normalize_bilinear_mu(once), once);
    EXPECT_LE(std::abs(normalize_bilinear_mu(1.0 / mu) - once), 1e-12 * std::abs(once));
    EXPECT_GE(std::abs(once), 1.0 - 1e-12);
  }
  EXPECT_LE(std::abs(normalize_bilinear_mu(std::polar(1.0, -1.0)) - std::polar(1.0, 1.0)), 1e-15);
  const Matrix a = assemble_canonical_matrix(set_of(FormKind::bilinear, {B::hpair(2, Complex(2, 1))}));
  const Matrix b = assemble_canonical_matrix(set_of(FormKind::bilinear, {B::hpair(2, 1.0 / Complex(2, 1))}));
  const auto ca = canonical_blocks(a, FormKind::bilinear);
  const auto cb = canonical_blocks(b, FormKind::bilinear);
  ASSERT_EQ(ca.blocks.size(), 1u);
  ASSERT_EQ(cb.blocks.size(), 1u);
  EXPECT_LE(std::abs(ca.blocks[0].param - cb.blocks[0].param), 1e-9);
  EXPECT_LE(std::abs(ca.blocks[0].param - Complex(2, 1)), 1e-9);
}

TEST(CongruentDecision, RandomCongruenceIsEquivalent) {
  for (int t = 0; t < 12; ++t) {
    const auto kind = t % 2 ? FormKind::sesquilinear : FormKind::bilinear;
    const int n = 1 + t % 6;
    std::mt19937_64 rng(t);
    const Matrix m = linalg::random_gaussian_matrix(n, n, rng);
    const Matrix s = random_invertible(n, 30.0, 50 + t);
    const auto d = congruent_decision(m, congruent(m, s, kind), kind);
    EXPECT_TRUE(d.equivalent) << "trial " << t;
    if (d.certificate) {
      const Matrix& c = d.certificate->matrices.front();
      EXPECT_LE(linalg::max_abs(congruent(congruent(m, s, kind), c, kind) - m), 1e-8 * std::max(1.0, linalg::max_abs(m)));
    }
  }
}

TEST(CongruentDecision, Examples) {
  EXPECT_FALSE(congruent_decision(Matrix::Ones(1, 1), Matrix::Zero(1, 1), FormKind::bilinear).equivalent);
  const auto d = congruent_decision(Matrix::Identity(2, 2), mat2(0, 1, 1, 0), FormKind::bilinear);
  EXPECT_TRUE(d.equivalent);
  ASSERT_TRUE(d.certificate.has_value());
  const Matrix& s = d.certificate->matrices.front();
  EXPECT_LE(linalg::max_abs(s.transpose() * mat2(0, 1, 1, 0) * s - Matrix::Identity(2, 2)), 1e-9);
  EXPECT_FALSE(congruent_decision(Matrix::Identity(2, 2), Matrix::Identity(3, 3), FormKind::bilinear).equivalent);
  EXPECT_FALSE(congruent_decision(mat2(0, 1, 0, 0), mat2(0, 0, 0, 1), FormKind::bilinear).equivalent);
}

TEST(CongruentDecision, HermitianFormsOfDifferentSignature) {
  Matrix p = Matrix::Identity(2, 2);
  Matrix q = Matrix::Identity(2, 2);
  q(1, 1) = -1.0;
  EXPECT_FALSE(congruent_decision(p, q, FormKind::sesquilinear).equivalent);
  // Both are congruent to I as bilinear forms.
  EXPECT_TRUE(congruent_decision(p, q, FormKind::bilinear, {}, false).equivalent);
}
