#include <cmath>
#include <sstream>

#include "obetc/model.hpp"

namespace obetc {

void LtiModel::validate() const {
  std::ostringstream os;
  if (A.rows() != A.cols() || A.rows() == 0) {
    os << "A must be square and non-empty, got " << A.rows() << "x" << A.cols();
  } else if (B.rows() != A.rows()) {
    os << "B has " << B.rows() << " rows, expected " << A.rows();
  } else if (C.cols() != A.rows()) {
    os << "C has " << C.cols() << " columns, expected " << A.rows();
  } else if (D.rows() != C.rows() || D.cols() != B.cols()) {
    os << "D must be " << C.rows() << "x" << B.cols() << ", got " << D.rows() << "x" << D.cols();
  }
  if (!os.str().empty()) throw Error(ErrorCode::kDimensionMismatch, os.str());
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite()) {
    throw Error(ErrorCode::kBadSpec, "model has non-finite entries");
  }
}

LtiModel discrete_to_continuous(const LtiModel& d) {
  d.validate();
  if (!d.discrete || !(d.sample_time > 0.0)) {
    throw Error(ErrorCode::kBadSpec, "expected a discrete model with positive sample time");
  }
  const double T = d.sample_time;
  const Eigen::Index n = d.n();
  const Matrix I = Matrix::Identity(n, n);
  Eigen::FullPivLU<Matrix> lu(d.A + I);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingular, "discrete model has a pole at z = -1");
  }
  const Matrix E = lu.inverse();
  const double s = 2.0 / std::sqrt(T);
  LtiModel c;
  c.A = (2.0 / T) * (d.A - I) * E;
  c.B = s * E * d.B;
  c.C = s * d.C * E;
  c.D = d.D - d.C * E * d.B;
  c.discrete = false;
  return c;
}

LtiModel continuous_to_discrete(const LtiModel& c, double T) {
  c.validate();
  if (!(T > 0.0)) throw Error(ErrorCode::kBadSpec, "sample time must be positive");
  const Eigen::Index n = c.n();
  const Matrix I = Matrix::Identity(n, n);
  Eigen::FullPivLU<Matrix> lu(I - 0.5 * T * c.A);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::kSingular, "continuous model has a pole at s = 2/T");
  }
  const Matrix M = lu.inverse();
  LtiModel d;
  d.A = M * (I + 0.5 * T * c.A);
  d.B = std::sqrt(T) * M * c.B;
  d.C = std::sqrt(T) * c.C * M;
  d.D = c.D + 0.5 * T * c.C * M * c.B;
  d.discrete = true;
  d.sample_time = T;
  return d;
}

}  // namespace obetc
