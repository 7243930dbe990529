#pragma once

// Eigensystem realization: excitation synthesis, impulse-response recovery by
// regularized spectral division, Hankel assembly, order selection by singular
// value mass, and balanced realization. Single-input single-output only.

#include <filesystem>
#include <span>
#include <vector>

#include "obetc/model.hpp"

namespace obetc::era {

/// Exponential chirp. Frequencies are in Hz and get normalized by
/// sample_rate; `samples` is the record length.
struct ChirpSpec {
  double amplitude = 0.05;
  double f_start = 0.1;
  double f_end = 100.0;
  std::size_t samples = 8000;
  double sample_rate = 1000.0;

  /// Per-sample growth ratio (f_end / f_start)^(1 / samples).
  double ratio() const;
  void validate() const;  // throws BadSpec
};

/// u(k) = a sin(2 pi f0 (r^k - 1) / ln r), k = 0 .. samples-1, with
/// f0 = f_start / sample_rate in cycles per sample.
std::vector<double> gen_chirp(const ChirpSpec& spec);

struct EraDataset {
  std::vector<double> u;
  std::vector<double> y;
  std::vector<double> impulse;  // filled by the pipeline
  double sample_rate = 1000.0;

  void validate() const;
};

/// Reads a CSV with header `t,u,y` (extra output columns are rejected).
/// Sample rate is inferred from the time column.
EraDataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const EraDataset& data, const std::filesystem::path& path);

/// Regularization used when the caller passes a negative lambda:
/// 1e-10 * max |U(w)|^2.
inline constexpr double kDefaultRegularization = -1.0;

/// h = idft( Y conj(U) / (|U|^2 + lambda) ), real part.
std::vector<double> impulse_response(std::span<const double> u, std::span<const double> y,
                                     double lambda = kDefaultRegularization);

/// (N+1)x(N+1) Hankel matrix with entry (i, j) = h[start + i + j].
Matrix build_hankel(std::span<const double> h, std::size_t blocks, std::size_t start);

/// Smallest r whose leading singular values hold `threshold` of the total.
std::size_t select_order(std::span<const double> sigma, double threshold);

/// Rank-r realization from H0 = H(start 1) and its one-step shift H1.
/// D is set to y0. Throws RankDeficient if sigma_r <= 1e-12 sigma_1.
LtiModel realize(const Matrix& H0, const Matrix& H1, std::size_t order, double y0,
                 double sample_time = 1.0);

/// Output of a discrete model driven by u from zero initial state.
std::vector<double> simulate_discrete(const LtiModel& model, std::span<const double> u);

/// 1 - ||y_sim - y|| / ||y - mean(y)||, clipped to [0, 1].
double validate_model(const LtiModel& model, const EraDataset& data);

struct EraConfig {
  std::size_t hankel_blocks = 40;
  double energy_threshold = 0.99;
  double regularization = kDefaultRegularization;
};

struct IdentifiedModel {
  LtiModel model;  // discrete, sample_time = 1 / sample_rate
  std::size_t order = 0;
  double energy_captured = 0.0;
  double fit = 0.0;
  std::vector<double> singular_values;
  std::vector<double> impulse;
};

/// Full pipeline: impulse_response -> build_hankel -> svd -> select_order ->
/// realize -> validate_model.
IdentifiedModel identify(const EraDataset& data, const EraConfig& config = {});

}  // namespace obetc::era
