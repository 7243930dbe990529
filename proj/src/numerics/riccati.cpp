#include <cmath>
#include <limits>
#include <sstream>

#include "obetc/numerics.hpp"

namespace obetc::numerics {
namespace {

void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    std::ostringstream os;
    os << name << " must be square, got " << m.rows() << "x" << m.cols();
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
}

// Column-major vectorization of A^T P + P A: (I (x) A^T + A^T (x) I) vec(P).
Matrix lyapunov_operator(const Matrix& A) {
  const Eigen::Index n = A.rows();
  Matrix op = Matrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index row = j * n + i;
      for (Eigen::Index k = 0; k < n; ++k) op(row, j * n + k) += A(k, i);
      for (Eigen::Index l = 0; l < n; ++l) op(row, l * n + i) += A(l, j);
    }
  }
  return op;
}

Matrix gain_from(const Eigen::LLT<Matrix>& r_chol, const Matrix& B, const Matrix& P) {
  return r_chol.solve(B.transpose() * P);
}

// Residual measured against the size of the individual terms, so badly
// conditioned problems with large P are judged at their round-off floor.
double scaled_care_residual(const Matrix& A, const Matrix& BRinvBt, const Matrix& Q,
                            const Matrix& P) {
  const Matrix AtP = A.transpose() * P;
  const Matrix quad = P * BRinvBt * P;
  const double scale = Q.norm() + 2.0 * AtP.norm() + quad.norm();
  return (AtP + AtP.transpose() - quad + Q).norm() / std::max(scale, 1e-300);
}

}  // namespace

double lyapunov_residual(const Matrix& A, const Matrix& P, const Matrix& Q) {
  return (A.transpose() * P + P * A + Q).norm();
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  require_square(A, "A");
  require_square(Q, "Q");
  if (A.rows() != Q.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "A and Q differ in size");
  }
  if (!all_finite(A) || !all_finite(Q)) {
    throw Error(ErrorCode::kBadSpec, "non-finite entries in Lyapunov data");
  }
  const Spectrum spec = eigenvalues(A);
  if (spec.max_real_part() >= 0.0) {
    std::ostringstream os;
    os << "A has an eigenvalue with real part " << spec.max_real_part();
    throw Error(ErrorCode::kNotHurwitz, os.str());
  }

  const Eigen::Index n = A.rows();
  const Matrix op = lyapunov_operator(A);
  Eigen::FullPivLU<Matrix> lu(op);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingular, "Kronecker Lyapunov operator is rank deficient");
  }

  const Matrix Qs = symmetrize(Q);
  Vector rhs = -Eigen::Map<const Vector>(Qs.data(), n * n);
  Vector vec_p = lu.solve(rhs);
  // One step of iterative refinement recovers most of the digits lost to
  // conditioning of the Kronecker system.
  const Vector correction = lu.solve(rhs - op * vec_p);
  vec_p += correction;

  Matrix P = symmetrize(Eigen::Map<const Matrix>(vec_p.data(), n, n));
  if (!all_finite(P)) {
    throw Error(ErrorCode::kSingular, "Lyapunov solution is not finite");
  }
  return P;
}

double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     const Matrix& P) {
  const Matrix BRinvBt = B * R.llt().solve(B.transpose());
  const Matrix res = A.transpose() * P + P * A - P * BRinvBt * P + Q;
  return res.norm() / std::max(1.0, Q.norm());
}

Matrix stabilizing_gain(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  if (is_hurwitz(A)) return Matrix::Zero(B.cols(), n);

  // Bass: with beta > max(-Re lambda(A)) so that -(A + beta I) is Hurwitz, Z solving
  //   (A + beta I) Z + Z (A + beta I)^T = 2 B B^T
  // is positive definite for controllable (A, B), and K = B^T Z^-1 yields
  //   (A - B K) Z + Z (A - B K)^T = -2 beta Z.
  double beta = 0.0;
  for (const auto& ev : eigenvalues(A).eigenvalues) beta = std::max(beta, -ev.real());
  beta += 1.0;
  const Matrix shifted = -(A + beta * Matrix::Identity(n, n)).transpose();
  const Matrix Z = solve_lyapunov(shifted, 2.0 * B * B.transpose());
  Eigen::LDLT<Matrix> ldlt(Z);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
    throw Error(ErrorCode::kNotStabilizable,
                "eigenvalue-shift Gramian is singular; (A, B) is not controllable");
  }
  Matrix K = ldlt.solve(B).transpose();
  if (!is_hurwitz(A - B * K)) {
    throw Error(ErrorCode::kNotStabilizable, "could not construct an initial stabilizing gain");
  }
  return K;
}

Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  const CareOptions& options) {
  require_square(A, "A");
  require_square(Q, "Q");
  require_square(R, "R");
  const Eigen::Index n = A.rows();
  if (B.rows() != n || Q.rows() != n || R.rows() != B.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "CARE data have inconsistent dimensions");
  }
  if (!all_finite(A) || !all_finite(B) || !all_finite(Q) || !all_finite(R)) {
    throw Error(ErrorCode::kBadSpec, "non-finite entries in Riccati data");
  }
  const Matrix Rs = symmetrize(R);
  const Eigen::LLT<Matrix> r_chol(Rs);
  if (r_chol.info() != Eigen::Success) {
    throw Error(ErrorCode::kBadSpec, "R must be symmetric positive definite");
  }
  const Matrix Qs = symmetrize(Q);

  const Matrix BRinvBt = B * r_chol.solve(B.transpose());
  Matrix K = stabilizing_gain(A, B);
  Matrix P_prev;
  double prev_step = std::numeric_limits<double>::infinity();

  for (int it = 0; it < options.max_iterations; ++it) {
    const Matrix closed = A - B * K;
    Matrix P;
    try {
      P = solve_lyapunov(closed, Qs + K.transpose() * Rs * K);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotHurwitz) {
        throw Error(ErrorCode::kNotStabilizable, "Newton iterate lost stability");
      }
      throw;
    }
    K = gain_from(r_chol, B, P);

    if (it > 0) {
      const double step = (P - P_prev).norm() / std::max(1.0, P_prev.norm());
      if (step <= options.tolerance) return P;
      // Quadratic convergence ends at the round-off floor of the Lyapunov
      // solve; accept once the step stops shrinking and the residual is met.
      if (step >= prev_step && scaled_care_residual(A, BRinvBt, Qs, P) <= 1e-10) return P;
      prev_step = step;
    }
    P_prev = std::move(P);
  }
  throw Error(ErrorCode::kNoConvergence, "Kleinman-Newton iteration hit the iteration cap");
}

}  // namespace obetc::numerics
