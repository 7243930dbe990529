#pragma once

#include <string>
#include <vector>

#include "obetc/model.hpp"

namespace obetc::design {

/// Designer weights. Q, W are PSD (n x n); R (m x m) and V (q x q) are PD.
struct DesignWeights {
  Matrix Q;
  Matrix R;
  Matrix W;
  Matrix V;

  void validate(const LtiModel& model) const;
};

struct GainSet {
  Matrix K;       // m x n, u = -K xhat
  Matrix L;       // n x q
  Matrix P_ctrl;  // control Riccati solution
  Matrix S_obs;   // filter Riccati solution
  std::vector<std::string> warnings;
};

/// Augmented closed-loop data for the quadratic event condition
/// [X; psi]^T Phi [X; psi] >= 0.
struct TriggerDesign {
  Matrix A_tilde;  // [[A - BK, BK], [0, A - LC]]
  Matrix P_tilde;  // A_tilde^T P_tilde + P_tilde A_tilde + Q_tilde = 0
  Matrix Q_tilde;
  Matrix Phi;      // [[(sigma - 1) Q_tilde, P_tilde], [P_tilde, 0]]
  double sigma = 1.0;
  double epsilon = 0.0;

  /// sqrt(lambda_max(P_tilde) / lambda_min(P_tilde)) * epsilon
  double ultimate_bound() const;
};

bool check_controllability(const Matrix& A, const Matrix& B);
bool check_observability(const Matrix& A, const Matrix& C);

struct LqrResult {
  Matrix K;
  Matrix P;
  std::vector<std::string> warnings;
};

struct ObserverResult {
  Matrix L;
  Matrix S;
};

/// K = R^-1 B^T P with P the stabilizing CARE solution.
LqrResult lqr_gain(const LtiModel& model, const DesignWeights& weights);

/// S solves A S + S A^T - S C^T V^-1 C S + W = 0 (the dual CARE),
/// L = S C^T V^-1. Throws NotObservable when (A, C) is unobservable.
ObserverResult observer_gain(const LtiModel& model, const DesignWeights& weights);

GainSet design_gains(const LtiModel& model, const DesignWeights& weights);

/// Q_tilde defaults to the 2n identity when empty.
TriggerDesign build_trigger_design(const LtiModel& model, const GainSet& gains,
                                   const Matrix& Q_tilde, double sigma, double epsilon);

Matrix augmented_matrix(const LtiModel& model, const GainSet& gains);

}  // namespace obetc::design
