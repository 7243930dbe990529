#pragma once

#include <string>

#include "obetc/numerics.hpp"

namespace obetc {

using numerics::Matrix;
using numerics::Vector;

/// State-space quadruple (A, B, C, D): n states, m inputs, q outputs.
/// Whether the model is continuous (x' = Ax + Bu) or discrete
/// (x[k+1] = Ax[k] + Bu[k]) is recorded in `discrete`.
struct LtiModel {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;
  bool discrete = false;
  double sample_time = 0.0;  // only meaningful when discrete

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index q() const { return C.rows(); }

  /// Throws DimensionMismatch (or BadSpec for non-finite entries).
  void validate() const;
};

/// Inverse bilinear (Tustin) map of a discrete model with sample time T to
/// continuous time. The transfer function is preserved under
/// z = (1 + sT/2) / (1 - sT/2).
LtiModel discrete_to_continuous(const LtiModel& discrete);

/// Forward bilinear map, continuous to discrete with sample time T.
LtiModel continuous_to_discrete(const LtiModel& continuous, double sample_time);

}  // namespace obetc
