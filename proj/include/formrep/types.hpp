#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace formrep {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Whether an edge carries a bilinear form (undirected edge) or a form that
/// is conjugate-linear in its second argument (directed edge).
enum class FormKind { bilinear, sesquilinear };

inline std::string_view to_string(FormKind kind) {
  return kind == FormKind::bilinear ? "bilinear" : "sesquilinear";
}

enum class ErrorCode {
  unknown_edge,
  dimension_mismatch,
  non_invertible,
  structural_mismatch,
  oracle_roundtrip,
  perturbation_exhausted,
  ill_conditioned,
  invalid_parameters,
  no_nonlinear_witness,
  parse_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_edge: return "unknown_edge";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::non_invertible: return "non_invertible";
    case ErrorCode::structural_mismatch: return "structural_mismatch";
    case ErrorCode::oracle_roundtrip: return "oracle_roundtrip";
    case ErrorCode::perturbation_exhausted: return "perturbation_exhausted";
    case ErrorCode::ill_conditioned: return "ill_conditioned";
    case ErrorCode::invalid_parameters: return "invalid_parameters";
    case ErrorCode::no_nonlinear_witness: return "no_nonlinear_witness";
    case ErrorCode::parse_error: return "parse_error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit-code table) can tell them apart.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace formrep
