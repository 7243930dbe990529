#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "obetc/sysid.hpp"

namespace obetc::era {

using numerics::Complex;

std::vector<double> impulse_response(std::span<const double> u, std::span<const double> y,
                                     double lambda) {
  if (u.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "input and output differ in length");
  }
  if (u.size() < 8) {
    throw Error(ErrorCode::kTooShort, "need at least 8 samples for deconvolution");
  }
  const auto U = numerics::dft(numerics::to_complex(u));
  const auto Y = numerics::dft(numerics::to_complex(y));

  double max_power = 0.0;
  for (const auto& v : U) max_power = std::max(max_power, std::norm(v));
  if (std::sqrt(max_power) < 1e-12) {
    throw Error(ErrorCode::kDegenerateInput, "input spectrum is numerically zero");
  }
  if (lambda < 0.0) lambda = 1e-10 * max_power;

  std::vector<Complex> H(U.size());
  for (std::size_t k = 0; k < U.size(); ++k) {
    const double denom = std::norm(U[k]) + lambda;
    H[k] = denom > 0.0 ? Y[k] * std::conj(U[k]) / denom : Complex{};
  }
  const auto h = numerics::idft(H);
  std::vector<double> out(h.size());
  std::transform(h.begin(), h.end(), out.begin(), [](const Complex& c) { return c.real(); });
  return out;
}

Matrix build_hankel(std::span<const double> h, std::size_t blocks, std::size_t start) {
  const std::size_t dim = blocks + 1;
  if (h.size() < start + 2 * blocks + 1) {
    std::ostringstream os;
    os << "impulse sequence of length " << h.size() << " cannot fill a " << dim << "x" << dim
       << " Hankel matrix starting at index " << start;
    throw Error(ErrorCode::kTooShort, os.str());
  }
  Matrix H(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) H(i, j) = h[start + i + j];
  }
  return H;
}

std::size_t select_order(std::span<const double> sigma, double threshold) {
  if (sigma.empty()) throw Error(ErrorCode::kBadSpec, "no singular values");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kBadSpec, "energy threshold must lie in (0, 1]");
  }
  const double total = std::accumulate(sigma.begin(), sigma.end(), 0.0);
  if (!(total > 0.0)) return sigma.size();
  double running = 0.0;
  for (std::size_t r = 0; r < sigma.size(); ++r) {
    running += sigma[r];
    // Guard against round-off in the last few ulps of the sum.
    if (running / total >= threshold * (1.0 - 1e-14)) return r + 1;
  }
  return sigma.size();
}

LtiModel realize(const Matrix& H0, const Matrix& H1, std::size_t order, double y0,
                 double sample_time) {
  if (H0.rows() != H1.rows() || H0.cols() != H1.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "H0 and H1 differ in shape");
  }
  const auto r = static_cast<Eigen::Index>(order);
  if (r < 1 || r > std::min(H0.rows(), H0.cols())) {
    throw Error(ErrorCode::kBadSpec, "realization order out of range");
  }
  const auto dec = numerics::svd(H0);
  if (dec.sigma(r - 1) <= 1e-12 * dec.sigma(0)) {
    throw Error(ErrorCode::kRankDeficient, "requested order exceeds numerical rank of H0");
  }
  const Matrix Ur = dec.U.leftCols(r);
  const Matrix Vr = dec.V.leftCols(r);
  const Vector root = dec.sigma.head(r).cwiseSqrt();
  const Vector inv_root = root.cwiseInverse();

  LtiModel model;
  model.A = inv_root.asDiagonal() * Ur.transpose() * H1 * Vr * inv_root.asDiagonal();
  model.B = (root.asDiagonal() * Vr.transpose()).leftCols(1);
  model.C = (Ur * root.asDiagonal()).topRows(1);
  model.D = Matrix::Constant(1, 1, y0);
  model.discrete = true;
  model.sample_time = sample_time;
  return model;
}

std::vector<double> simulate_discrete(const LtiModel& model, std::span<const double> u) {
  model.validate();
  if (model.m() != 1 || model.q() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "only single-input single-output models");
  }
  Vector x = Vector::Zero(model.n());
  const Vector b = model.B.col(0);
  const Eigen::RowVectorXd c = model.C.row(0);
  const double d = model.D(0, 0);
  std::vector<double> y(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    y[k] = c.dot(x) + d * u[k];
    x = model.A * x + b * u[k];
  }
  return y;
}

double validate_model(const LtiModel& model, const EraDataset& data) {
  data.validate();
  const LtiModel discrete =
      model.discrete ? model : continuous_to_discrete(model, 1.0 / data.sample_rate);
  const auto ysim = simulate_discrete(discrete, data.u);
  const double mean = std::accumulate(data.y.begin(), data.y.end(), 0.0) /
                      static_cast<double>(data.y.size());
  double err = 0.0, spread = 0.0;
  for (std::size_t k = 0; k < data.y.size(); ++k) {
    err += (ysim[k] - data.y[k]) * (ysim[k] - data.y[k]);
    spread += (data.y[k] - mean) * (data.y[k] - mean);
  }
  if (spread == 0.0) return err == 0.0 ? 1.0 : 0.0;
  const double fit = 1.0 - std::sqrt(err) / std::sqrt(spread);
  return std::clamp(fit, 0.0, 1.0);
}

IdentifiedModel identify(const EraDataset& data, const EraConfig& config) {
  data.validate();
  if (std::all_of(data.y.begin(), data.y.end(), [](double v) { return v == 0.0; })) {
    throw Error(ErrorCode::kDegenerateInput, "output channel is identically zero");
  }
  IdentifiedModel out;
  out.impulse = impulse_response(data.u, data.y, config.regularization);

  const Matrix H0 = build_hankel(out.impulse, config.hankel_blocks, 1);
  const Matrix H1 = build_hankel(out.impulse, config.hankel_blocks, 2);
  const auto dec = numerics::svd(H0);
  out.singular_values.assign(dec.sigma.data(), dec.sigma.data() + dec.sigma.size());

  out.order = select_order(out.singular_values, config.energy_threshold);
  const double total =
      std::accumulate(out.singular_values.begin(), out.singular_values.end(), 0.0);
  const double kept = std::accumulate(out.singular_values.begin(),
                                      out.singular_values.begin() +
                                          static_cast<std::ptrdiff_t>(out.order),
                                      0.0);
  out.energy_captured = total > 0.0 ? kept / total : 0.0;

  out.model = realize(H0, H1, out.order, out.impulse.front(), 1.0 / data.sample_rate);
  out.fit = validate_model(out.model, data);
  return out;
}

}  // namespace obetc::era
