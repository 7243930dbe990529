#include <algorithm>
#include <cmath>

#include "obetc/numerics.hpp"

namespace obetc::numerics {

double Spectrum::max_real_part() const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& ev : eigenvalues) m = std::max(m, ev.real());
  return m;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Spectrum eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "eigenvalues of a non-square matrix");
  }
  Spectrum out;
  if (m.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kNoConvergence, "eigenvalue iteration did not converge");
  }
  const auto& ev = solver.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return out;
}

bool is_hurwitz(const Matrix& m) { return eigenvalues(m).max_real_part() < 0.0; }

SvdResult svd(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::kNoConvergence, "SVD did not converge");
  }
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> solver(m);
  return solver.singularValues()(0);
}

int rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> solver(m);
  const Vector& s = solver.singularValues();
  if (s(0) == 0.0) return 0;
  return static_cast<int>((s.array() > rel_tol * s(0)).count());
}

double min_sym_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double max_sym_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(m));
  Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& vecs = solver.eigenvectors();
  return symmetrize(vecs * root.asDiagonal() * vecs.transpose());
}

}  // namespace obetc::numerics
