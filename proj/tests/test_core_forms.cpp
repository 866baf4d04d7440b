#include "formrep/core_forms.hpp"
#include "formrep/generators.hpp"

#include <gtest/gtest.h>

using namespace formrep;

namespace {

const Complex I(0, 1);

// Defining double sum, kept independent of the matrix products in the library.
Complex double_sum(const Matrix& m, const Vector& u, const Vector& v, FormKind kind) {
  Complex total(0, 0);
  for (Eigen::Index k = 0; k < m.rows(); ++k)
    for (Eigen::Index l = 0; l < m.cols(); ++l)
      total += u(k) * m(k, l) * (kind == FormKind::bilinear ? v(l) : std::conj(v(l)));
  return total;
}

Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

FormRepresentation single_loop(const Matrix& m, FormKind kind) {
  return FormRepresentation(loop_graph(kind), {static_cast<int>(m.rows())}, {m});
}

Matrix mat2(Complex a, Complex b, Complex c, Complex d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

double rel_diff(const Matrix& a, const Matrix& b) {
  return linalg::max_abs(a - b) / std::max(1.0, linalg::max_abs(a));
}

}  // namespace

TEST(EvalForm, IdentityOffDiagonalIsZero) {
  auto rep = single_loop(Matrix::Identity(2, 2), FormKind::bilinear);
  EXPECT_EQ(eval_form(rep, "loop", Vector::Unit(2, 0), Vector::Unit(2, 1)), Complex(0, 0));
}

TEST(EvalForm, ReadsEntryOneTwo) {
  auto rep = single_loop(mat2(0, 1, -1, 0), FormKind::bilinear);
  EXPECT_EQ(eval_form(rep, "loop", Vector::Unit(2, 0), Vector::Unit(2, 1)), Complex(1, 0));
}

TEST(EvalForm, SesquilinearConjugatesSecondArgument) {
  Matrix m(1, 1);
  m << I;
  Vector u(1), v(1);
  u << 1.0;
  v << I;
  auto rep = single_loop(m, FormKind::sesquilinear);
  const Complex expected = double_sum(m, u, v, FormKind::sesquilinear);
  EXPECT_NEAR(std::abs(expected - Complex(1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(eval_form(rep, "loop", u, v) - expected), 0.0, 1e-15);
}

TEST(EvalForm, UnknownEdgeAndBadLengthsAreDistinctErrors) {
  auto rep = single_loop(Matrix::Identity(2, 2), FormKind::bilinear);
  try {
    eval_form(rep, "nope", Vector::Zero(2), Vector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unknown_edge);
  }
  try {
    eval_form(rep, "loop", Vector::Zero(3), Vector::Zero(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(EvalForm, MatchesDoubleSumOnRandomVectors) {
  const auto rep = random_representation(example_graph(), {3, 4}, 11);
  std::mt19937_64 rng(5);
  for (std::size_t a = 0; a < rep.graph().edges.size(); ++a) {
    const auto& e = rep.graph().edges[a];
    for (int t = 0; t < 20; ++t) {
      Vector u = linalg::random_gaussian_vector(rep.dims()[e.tail], rng);
      Vector v = linalg::random_gaussian_vector(rep.dims()[e.head], rng);
      const Complex want = double_sum(rep.matrix(a), u, v, e.kind);
      EXPECT_LE(std::abs(eval_form(rep, e.id, u, v) - want), 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(Representation, ExampleGraphShapes) {
  const auto rep = random_representation(example_graph(), {2, 3}, 1);
  ASSERT_EQ(rep.matrices().size(), 4u);
  EXPECT_EQ(rep.matrix("alpha").rows(), 2);
  EXPECT_EQ(rep.matrix("alpha").cols(), 2);
  EXPECT_EQ(rep.matrix("beta").rows(), 2);
  EXPECT_EQ(rep.matrix("beta").cols(), 3);
  EXPECT_EQ(rep.matrix("gamma").rows(), 3);
  EXPECT_EQ(rep.matrix("gamma").cols(), 2);
  EXPECT_EQ(rep.matrix("delta").rows(), 3);
  EXPECT_EQ(rep.matrix("delta").cols(), 3);
}

TEST(Representation, RejectsWrongShapesAndNonFinite) {
  EXPECT_THROW(FormRepresentation(loop_graph(FormKind::bilinear), {2}, {Matrix::Zero(2, 3)}), Error);
  Matrix bad = Matrix::Zero(1, 1);
  bad(0, 0) = Complex(std::nan(""), 0);
  EXPECT_THROW(FormRepresentation(loop_graph(FormKind::bilinear), {1}, {bad}), Error);
  EXPECT_THROW(FormRepresentation(loop_graph(FormKind::bilinear), {1, 1}, {Matrix::Zero(1, 1)}), Error);
}

TEST(ApplyTransform, IdentityFamilyIsExact) {
  const auto rep = random_representation(example_graph(), {3, 2}, 4);
  const auto out = apply_transform(rep, TransformFamily::identity(rep.dims()));
  for (std::size_t a = 0; a < rep.matrices().size(); ++a) EXPECT_EQ(out.matrix(a), rep.matrix(a));
}

TEST(ApplyTransform, BilinearLoopExample) {
  const auto rep = single_loop(mat2(0, 1, -1, 0), FormKind::bilinear);
  const Matrix s = mat2(1, 1, 0, 1);
  const auto out = apply_transform(rep, {{s}});
  const Matrix want = naive_product(naive_product(s.transpose(), rep.matrix(0)), s);
  EXPECT_EQ(out.matrix(0), want);
  EXPECT_EQ(out.matrix(0), mat2(0, 1, -1, 0));
}

TEST(ApplyTransform, SesquilinearLoopExample) {
  Matrix one = Matrix::Ones(1, 1);
  Matrix s(1, 1);
  s << I;
  const auto out = apply_transform(single_loop(one, FormKind::sesquilinear), {{s}});
  EXPECT_NEAR(std::abs(out.matrix(0)(0, 0) - Complex(1, 0)), 0.0, 1e-15);
}

TEST(ApplyTransform, RejectsSingularFamily) {
  const auto rep = single_loop(Matrix::Identity(2, 2), FormKind::bilinear);
  try {
    apply_transform(rep, {{mat2(1, 1, 1, 1)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_invertible);
  }
  try {
    apply_transform(rep, {{Matrix::Identity(3, 3)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
  }
}

TEST(ApplyTransform, MatchesPointwiseLaw) {
  // A(u, v) = B(S_i u, S_j v) evaluated by the double sum.
  const auto rep_b = random_representation(triangle_multigraph(), {2, 3, 2}, 8);
  const auto fam = random_family(rep_b.dims(), 50.0, 9);
  const auto rep_a = apply_transform(rep_b, fam);
  std::mt19937_64 rng(2);
  for (std::size_t a = 0; a < rep_b.graph().edges.size(); ++a) {
    const auto& e = rep_b.graph().edges[a];
    for (int t = 0; t < 10; ++t) {
      Vector u = linalg::random_gaussian_vector(rep_b.dims()[e.tail], rng);
      Vector v = linalg::random_gaussian_vector(rep_b.dims()[e.head], rng);
      const Complex lhs = double_sum(rep_a.matrix(a), u, v, e.kind);
      const Complex rhs = double_sum(rep_b.matrix(a), fam.matrices[e.tail] * u, fam.matrices[e.head] * v, e.kind);
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(Verify, RoundTripIsTight) {
  const auto rep_b = random_representation(example_graph(), {3, 3}, 21);
  const auto fam = random_family(rep_b.dims(), 10.0, 22);
  const auto report = verify_linear_isomorphism(apply_transform(rep_b, fam), rep_b, fam, 1e-10);
  EXPECT_TRUE(report.ok);
  EXPECT_LE(report.max_residual, 1e-12);
  EXPECT_EQ(report.residuals.size(), 4u);
}

TEST(Verify, RankObstruction) {
  const auto a = single_loop(Matrix::Ones(1, 1), FormKind::bilinear);
  const auto b = single_loop(Matrix::Zero(1, 1), FormKind::bilinear);
  for (double s : {1.0, 2.0, -7.5}) {
    const auto report = verify_linear_isomorphism(a, b, {{Matrix::Constant(1, 1, s)}}, 1e-8);
    EXPECT_FALSE(report.ok);
    EXPECT_EQ(report.worst_edge, "loop");
  }
}

TEST(Verify, StructuralMismatchIsAnError) {
  const auto a = single_loop(Matrix::Ones(1, 1), FormKind::bilinear);
  const auto b = single_loop(Matrix::Ones(1, 1), FormKind::sesquilinear);
  const auto c = single_loop(Matrix::Identity(2, 2), FormKind::bilinear);
  try {
    verify_linear_isomorphism(a, b, {{Matrix::Ones(1, 1)}}, 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::structural_mismatch);
  }
  EXPECT_THROW(verify_linear_isomorphism(a, c, {{Matrix::Ones(1, 1)}}, 1e-8), Error);
}

TEST(Verify, SingularFamilyIsNotOk) {
  const auto a = single_loop(Matrix::Zero(2, 2), FormKind::bilinear);
  const auto report = verify_linear_isomorphism(a, a, {{Matrix::Zero(2, 2)}}, 1e-8);
  EXPECT_FALSE(report.ok);
  EXPECT_FALSE(report.invertible);
  EXPECT_EQ(report.max_residual, 0.0);
}

TEST(Verify, RandomizedRoundTrips) {
  for (int t = 0; t < 100; ++t) {
    const auto rep_b = random_representation(example_graph(), {1 + t % 4, 1 + (t / 4) % 4}, 100 + t);
    const auto fam = random_family(rep_b.dims(), 1e6, 300 + t);
    EXPECT_TRUE(verify_linear_isomorphism(apply_transform(rep_b, fam), rep_b, fam, 1e-9).ok) << "trial " << t;
  }
}

TEST(Verify, ZeroDimensionalSpacesAreVacuous) {
  const auto rep = random_representation(example_graph(), {0, 2}, 3);
  EXPECT_EQ(rep.matrix("alpha").size(), 0);
  const auto fam = TransformFamily::identity(rep.dims());
  EXPECT_TRUE(verify_linear_isomorphism(apply_transform(rep, fam), rep, fam, 0.0).ok);
  const auto empty = random_representation(MixedGraph{0, {}}, {}, 1);
  EXPECT_TRUE(empty.matrices().empty());
}

TEST(MatrixInBases, StandardBasesReturnStoredMatrix) {
  const auto rep = random_representation(example_graph(), {2, 3}, 6);
  for (const auto& e : rep.graph().edges) {
    const Matrix bu = Matrix::Identity(rep.dims()[e.tail], rep.dims()[e.tail]);
    const Matrix bv = Matrix::Identity(rep.dims()[e.head], rep.dims()[e.head]);
    EXPECT_EQ(matrix_of_form_in_bases(rep, e.id, bu, bv), rep.matrix(e.id));
  }
}

TEST(MatrixInBases, Examples) {
  const Matrix s = mat2(1, 1, 0, 1);
  EXPECT_EQ(matrix_of_form_in_bases(single_loop(mat2(0, 1, -1, 0), FormKind::bilinear), "loop", s, s),
            mat2(0, 1, -1, 0));
  Matrix b(1, 1);
  b << I;
  const Matrix out = matrix_of_form_in_bases(single_loop(Matrix::Ones(1, 1), FormKind::sesquilinear), "loop", b, b);
  EXPECT_NEAR(std::abs(out(0, 0) - Complex(1, 0)), 0.0, 1e-15);
}

TEST(MatrixInBases, EntriesAreFormValuesOnBasisVectors) {
  const auto rep = random_representation(example_graph(), {3, 2}, 14);
  const auto fam = random_family(rep.dims(), 20.0, 15);
  for (const auto& e : rep.graph().edges) {
    const Matrix& bu = fam.matrices[e.tail];
    const Matrix& bv = fam.matrices[e.head];
    const Matrix got = matrix_of_form_in_bases(rep, e.id, bu, bv);
    for (Eigen::Index k = 0; k < bu.cols(); ++k)
      for (Eigen::Index l = 0; l < bv.cols(); ++l) {
        const Complex want = eval_form(rep, e.id, bu.col(k), bv.col(l));
        EXPECT_LE(std::abs(got(k, l) - want), 1e-12 * std::max(1.0, std::abs(want)));
      }
  }
  EXPECT_THROW(matrix_of_form_in_bases(rep, "alpha", Matrix::Zero(3, 3), Matrix::Identity(3, 3)), Error);
}

TEST(Invariants, EvaluationMatchesEntriesExactly) {
  for (int n = 1; n <= 4; ++n) {
    const auto rep = random_representation(example_graph(), {n, 5 - n}, 40 + n);
    for (std::size_t a = 0; a < rep.graph().edges.size(); ++a) {
      const auto& e = rep.graph().edges[a];
      for (int k = 0; k < rep.dims()[e.tail]; ++k)
        for (int l = 0; l < rep.dims()[e.head]; ++l)
          EXPECT_EQ(eval_form(rep, e.id, Vector::Unit(rep.dims()[e.tail], k), Vector::Unit(rep.dims()[e.head], l)),
                    rep.matrix(a)(k, l));
    }
  }
}

TEST(Invariants, CompositionOfCongruences) {
  for (auto kind : {FormKind::bilinear, FormKind::sesquilinear}) {
    for (int t = 0; t < 20; ++t) {
      const int n = 1 + t % 4;
      const auto rep = random_representation(loop_graph(kind), {n}, 500 + t);
      const Matrix s1 = random_invertible(n, 30.0, 600 + t);
      const Matrix s2 = random_invertible(n, 30.0, 700 + t);
      // Applying S1 then S2 equals applying S1 S2.
      const auto two_steps = apply_transform(apply_transform(rep, {{s1}}), {{s2}});
      const auto one_step = apply_transform(rep, {{Matrix(s1 * s2)}});
      EXPECT_LE(rel_diff(one_step.matrix(0), two_steps.matrix(0)), 1e-10);
    }
  }
}

TEST(Invariants, ScalingSecondArgument) {
  const auto rep = random_representation(example_graph(), {2, 2}, 77);
  std::mt19937_64 rng(3);
  for (const auto& e : rep.graph().edges) {
    Vector u = linalg::random_gaussian_vector(2, rng);
    Vector v = linalg::random_gaussian_vector(2, rng);
    const Complex base = eval_form(rep, e.id, u, v);
    const Complex scaled = eval_form(rep, e.id, u, Vector(I * v));
    const Complex factor = e.kind == FormKind::bilinear ? I : std::conj(I);
    EXPECT_LE(std::abs(scaled - factor * base), 1e-12 * std::max(1.0, std::abs(base)));
  }
}
