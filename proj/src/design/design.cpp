#include <cmath>
#include <sstream>

#include "obetc/design.hpp"

namespace obetc::design {

using numerics::is_hurwitz;

namespace {

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " must be " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw Error(ErrorCode::kDimensionMismatch, os.str());
  }
}

void require_psd(const Matrix& m, const char* name, bool strict) {
  if (!numerics::is_symmetric(m, 1e-10)) {
    throw Error(ErrorCode::kBadSpec, std::string(name) + " must be symmetric");
  }
  const double lo = numerics::min_sym_eigenvalue(m);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (strict ? !(lo > 0.0) : lo < -1e-12 * scale) {
    throw Error(ErrorCode::kBadSpec, std::string(name) + (strict ? " must be positive definite"
                                                                 : " must be positive semi-definite"));
  }
}

// rank [B, AB, ..., A^{n-1} B] with A normalized by its spectral norm; the
// scaling leaves the column space unchanged but keeps the powers comparable.
bool full_krylov_rank(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  const double a_norm = numerics::spectral_norm(A);
  const Matrix As = a_norm > 0.0 ? Matrix(A / a_norm) : A;
  Matrix krylov(n, n * B.cols());
  Matrix block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    krylov.middleCols(k * B.cols(), B.cols()) = block;
    block = As * block;
  }
  return numerics::rank(krylov, 1e-9) == n;
}

}  // namespace

double TriggerDesign::ultimate_bound() const {
  const double lo = numerics::min_sym_eigenvalue(P_tilde);
  const double hi = numerics::max_sym_eigenvalue(P_tilde);
  return std::sqrt(hi / lo) * epsilon;
}

void DesignWeights::validate(const LtiModel& model) const {
  require_shape(Q, model.n(), model.n(), "Q");
  require_shape(R, model.m(), model.m(), "R");
  require_shape(W, model.n(), model.n(), "W");
  require_shape(V, model.q(), model.q(), "V");
  require_psd(Q, "Q", false);
  require_psd(R, "R", true);
  require_psd(W, "W", false);
  require_psd(V, "V", true);
}

bool check_controllability(const Matrix& A, const Matrix& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "controllability: A is n x n, B must be n x m");
  }
  return full_krylov_rank(A, B);
}

bool check_observability(const Matrix& A, const Matrix& C) {
  if (A.rows() != A.cols() || C.cols() != A.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "observability: A is n x n, C must be q x n");
  }
  return full_krylov_rank(A.transpose(), C.transpose());
}

LqrResult lqr_gain(const LtiModel& model, const DesignWeights& weights) {
  model.validate();
  weights.validate(model);
  LqrResult out;
  if (!check_controllability(model.A, model.B)) {
    out.warnings.emplace_back("(A, B) is not controllable");
  }
  if (!check_observability(model.A, numerics::psd_sqrt(weights.Q))) {
    out.warnings.emplace_back(is_hurwitz(model.A)
                                  ? "(A, Q^1/2) fails the observability rank test; A is Hurwitz"
                                  : "(A, Q^1/2) fails the observability rank test");
  }
  out.P = numerics::solve_care(model.A, model.B, weights.Q, weights.R);
  out.K = weights.R.llt().solve(model.B.transpose() * out.P);
  if (!is_hurwitz(model.A - model.B * out.K)) {
    throw Error(ErrorCode::kNotStabilizable, "A - BK is not Hurwitz");
  }
  return out;
}

ObserverResult observer_gain(const LtiModel& model, const DesignWeights& weights) {
  model.validate();
  weights.validate(model);
  if (!check_observability(model.A, model.C)) {
    throw Error(ErrorCode::kNotObservable, "(A, C) is not observable");
  }
  ObserverResult out;
  out.S = numerics::solve_care(model.A.transpose(), model.C.transpose(), weights.W, weights.V);
  out.L = weights.V.llt().solve(model.C * out.S).transpose();
  if (!is_hurwitz(model.A - out.L * model.C)) {
    throw Error(ErrorCode::kNotObservable, "A - LC is not Hurwitz");
  }
  return out;
}

GainSet design_gains(const LtiModel& model, const DesignWeights& weights) {
  auto lqr = lqr_gain(model, weights);
  auto obs = observer_gain(model, weights);
  return {std::move(lqr.K), std::move(obs.L), std::move(lqr.P), std::move(obs.S),
          std::move(lqr.warnings)};
}

Matrix augmented_matrix(const LtiModel& model, const GainSet& gains) {
  const Eigen::Index n = model.n();
  require_shape(gains.K, model.m(), n, "K");
  require_shape(gains.L, n, model.q(), "L");
  const Matrix BK = model.B * gains.K;
  Matrix At = Matrix::Zero(2 * n, 2 * n);
  At.topLeftCorner(n, n) = model.A - BK;
  At.topRightCorner(n, n) = BK;
  At.bottomRightCorner(n, n) = model.A - gains.L * model.C;
  return At;
}

TriggerDesign build_trigger_design(const LtiModel& model, const GainSet& gains,
                                   const Matrix& Q_tilde, double sigma, double epsilon) {
  model.validate();
  if (!(sigma > 0.0 && sigma <= 1.0)) {
    throw Error(ErrorCode::kBadSpec, "sigma must lie in (0, 1]");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kBadSpec, "epsilon must be non-negative");

  const Eigen::Index n2 = 2 * model.n();
  TriggerDesign td;
  td.sigma = sigma;
  td.epsilon = epsilon;
  td.Q_tilde = Q_tilde.size() == 0 ? Matrix(Matrix::Identity(n2, n2)) : Q_tilde;
  require_shape(td.Q_tilde, n2, n2, "Q_tilde");
  require_psd(td.Q_tilde, "Q_tilde", true);

  td.A_tilde = augmented_matrix(model, gains);
  td.P_tilde = numerics::solve_lyapunov(td.A_tilde, td.Q_tilde);

  td.Phi = Matrix::Zero(2 * n2, 2 * n2);
  td.Phi.topLeftCorner(n2, n2) = (sigma - 1.0) * td.Q_tilde;
  td.Phi.topRightCorner(n2, n2) = td.P_tilde;
  td.Phi.bottomLeftCorner(n2, n2) = td.P_tilde;
  return td;
}

}  // namespace obetc::design
