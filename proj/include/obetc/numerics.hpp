#pragma once

// Dense linear-algebra kernel for the small systems handled here (n <= ~16).
//
// Matrices are plain Eigen::MatrixXd values. Every solver symmetrizes its
// result before returning and guarantees the residual contract documented on
// the function; violations are reported through obetc::Error.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "obetc/error.hpp"

namespace obetc::numerics {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Eigenvalues of a real square matrix, sorted by (real, imag) ascending.
struct Spectrum {
  std::vector<Complex> eigenvalues;

  double max_real_part() const;
  std::size_t size() const { return eigenvalues.size(); }
};

struct SvdResult {
  Matrix U;
  Vector sigma;  // descending, non-negative
  Matrix V;
};

// --- basic queries ---------------------------------------------------------

bool all_finite(const Matrix& m);
bool is_symmetric(const Matrix& m, double tol = 1e-12);
Matrix symmetrize(const Matrix& m);

Spectrum eigenvalues(const Matrix& m);
bool is_hurwitz(const Matrix& m);

SvdResult svd(const Matrix& m);
double spectral_norm(const Matrix& m);

/// Numerical rank with the relative tolerance rel_tol * sigma_max.
int rank(const Matrix& m, double rel_tol = 1e-9);

/// Extreme eigenvalues of a symmetric matrix.
double min_sym_eigenvalue(const Matrix& m);
double max_sym_eigenvalue(const Matrix& m);

/// Principal square root of a symmetric positive semi-definite matrix.
Matrix psd_sqrt(const Matrix& m);

// --- matrix equations ------------------------------------------------------

/// Solves A^T P + P A + Q = 0 for P.
///
/// A must be Hurwitz. The result is symmetric and satisfies
/// ||A^T P + P A + Q||_F <= 1e-8 * max(1, ||Q||_F).
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

double lyapunov_residual(const Matrix& A, const Matrix& P, const Matrix& Q);

struct CareOptions {
  int max_iterations = 100;
  double tolerance = 1e-12;  // on ||P_{k+1} - P_k||_F / max(1, ||P_k||_F)
};

/// Stabilizing solution of A^T P + P A - P B R^-1 B^T P + Q = 0
/// (Kleinman-Newton iteration seeded by an eigenvalue-shift stabilizer).
Matrix solve_care(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                  const CareOptions& options = {});

/// ||A^T P + P A - P B R^-1 B^T P + Q||_F / max(1, ||Q||_F)
double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                     const Matrix& P);

/// Some K with A - B K Hurwitz (Bass's eigenvalue-shift construction).
/// Throws NotStabilizable when no such gain can be built this way.
Matrix stabilizing_gain(const Matrix& A, const Matrix& B);

// --- Fourier transforms ----------------------------------------------------

/// X[k] = sum_n x[n] exp(-2 pi i k n / N). Power-of-two lengths use radix-2,
/// other lengths go through Bluestein's chirp-z transform.
std::vector<Complex> dft(std::span<const Complex> x);
/// Inverse of dft, including the 1/N factor.
std::vector<Complex> idft(std::span<const Complex> x);

std::vector<Complex> to_complex(std::span<const double> x);

}  // namespace obetc::numerics
