#pragma once

#include "formrep/linalg.hpp"
#include "formrep/types.hpp"

#include <functional>
#include <limits>
#include <random>
#include <string>
#include <utility>

namespace formrep {

/// A black-box continuous bijection of C^n together with its inverse.
/// Nothing about linearity is assumed; the forward/inverse pair is trusted
/// only as far as oracle_self_test confirms it.
struct HomeomorphismOracle {
  using Map = std::function<Vector(const Vector&)>;

  int dim = 0;
  Map forward;
  Map inverse;
  std::string description;
};

inline HomeomorphismOracle linear_oracle(const Matrix& l, std::string description = "linear") {
  if (l.rows() != l.cols()) throw Error(ErrorCode::invalid_parameters, "linear oracle needs a square matrix");
  if (!linalg::is_invertible(l, 1e-10)) throw Error(ErrorCode::non_invertible, "linear oracle matrix is singular");
  Eigen::PartialPivLU<Matrix> lu(l);
  return {static_cast<int>(l.rows()), [l](const Vector& x) -> Vector { return l * x; },
          [lu](const Vector& y) -> Vector { return lu.solve(y); }, std::move(description)};
}

struct SelfTestReport {
  bool ok = true;
  double max_roundtrip_error = 0.0;  // relative, ||inverse(forward(x)) - x|| / max(1, ||x||) and the reverse
  int failures = 0;
};

/// Samples seeded points at several magnitudes and checks both round trips.
inline SelfTestReport oracle_self_test(const HomeomorphismOracle& phi, int trials, std::uint64_t seed,
                                       double tol = 1e-8) {
  if (trials < 1) throw Error(ErrorCode::invalid_parameters, "self test needs at least one trial");
  SelfTestReport report;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
  auto record = [&](double err) {
    if (!(err <= tol)) {  // also catches NaN
      report.ok = false;
      ++report.failures;
    }
    if (!(err <= report.max_roundtrip_error)) report.max_roundtrip_error = err;
  };
  for (int t = 0; t < trials; ++t) {
    Vector x = linalg::random_gaussian_vector(phi.dim, rng) * std::pow(10.0, log_scale(rng));
    Vector y = phi.forward(x);
    if (y.size() != phi.dim) {
      record(std::numeric_limits<double>::infinity());
      continue;
    }
    record((phi.inverse(y) - x).norm() / std::max(1.0, x.norm()));
    Vector z = linalg::random_gaussian_vector(phi.dim, rng) * std::pow(10.0, log_scale(rng));
    Vector w = phi.inverse(z);
    if (w.size() != phi.dim) {
      record(std::numeric_limits<double>::infinity());
      continue;
    }
    record((phi.forward(w) - z).norm() / std::max(1.0, z.norm()));
  }
  return report;
}

}  // namespace formrep
