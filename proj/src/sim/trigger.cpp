#include <cmath>
#include <limits>

#include "obetc/sim.hpp"

namespace obetc::sim {

std::string_view to_string(TriggerPolicy policy) {
  switch (policy) {
    case TriggerPolicy::kQuadraticOnly: return "event";
    case TriggerPolicy::kQuadraticAndFloor: return "event-floor";
    case TriggerPolicy::kPeriodic: return "periodic";
  }
  return "unknown";
}

TriggerPolicy parse_policy(std::string_view name) {
  if (name == "event") return TriggerPolicy::kQuadraticOnly;
  if (name == "event-floor") return TriggerPolicy::kQuadraticAndFloor;
  if (name == "periodic") return TriggerPolicy::kPeriodic;
  throw Error(ErrorCode::kConfig,
              "unknown policy '" + std::string(name) + "' (event|event-floor|periodic)");
}

Vector compute_psi(const Matrix& B, const Matrix& K, const Matrix& L, const Vector& xhat,
                   const Vector& xhat_k, const Vector& y, const Vector& y_k) {
  const Eigen::Index n = B.rows();
  Vector psi(2 * n);
  psi.head(n) = B * (K * (xhat - xhat_k));
  psi.tail(n) = L * (y - y_k);
  return psi;
}

double trigger_quadratic(const Vector& X, const Vector& psi, const Matrix& Phi) {
  const Eigen::Index n2 = X.size();
  Vector z(2 * n2);
  z << X, psi;
  return z.dot(Phi * z);
}

bool should_trigger(double quadratic, double norm_X, double epsilon, TriggerPolicy policy) {
  switch (policy) {
    case TriggerPolicy::kPeriodic: return true;
    case TriggerPolicy::kQuadraticOnly: return quadratic >= 0.0;
    case TriggerPolicy::kQuadraticAndFloor: return quadratic >= 0.0 && norm_X > epsilon;
  }
  return false;
}

bool should_trigger(const Vector& X, const Vector& psi, const Matrix& Phi, double epsilon,
                    TriggerPolicy policy) {
  return should_trigger(trigger_quadratic(X, psi, Phi), X.norm(), epsilon, policy);
}

TauBound analytic_tau(const Matrix& A_tilde, const Matrix& P_tilde, const Matrix& Q_tilde,
                      double sigma, double epsilon, double beta_hat) {
  TauBound b;
  b.alpha = 1.0 + numerics::spectral_norm(A_tilde);
  b.theta_min = (1.0 - sigma) * numerics::min_sym_eigenvalue(Q_tilde) /
                (2.0 * numerics::spectral_norm(P_tilde));
  if (!(epsilon > 0.0) || !(b.theta_min > 0.0)) {
    b.degenerate = true;
    b.gamma = epsilon > 0.0 ? beta_hat / epsilon : std::numeric_limits<double>::infinity();
    return b;
  }
  b.gamma = beta_hat / epsilon;
  if (b.gamma == 0.0) {
    // Limit of the arctan expression as gamma -> 0.
    b.tau = b.theta_min / (b.alpha * (1.0 + b.theta_min));
    return b;
  }
  // atan(r (1 + theta)) - atan(r), folded into a single atan so small gamma
  // (large r) does not cancel near pi / 2.
  const double ratio = std::sqrt(b.alpha / b.gamma);
  const double gap =
      std::atan2(ratio * b.theta_min, 1.0 + ratio * ratio * (1.0 + b.theta_min));
  b.tau = gap / std::sqrt(b.alpha * b.gamma);
  return b;
}

}  // namespace obetc::sim
