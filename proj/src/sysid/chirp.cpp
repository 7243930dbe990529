#include <cmath>
#include <numbers>
#include <sstream>

#include "obetc/sysid.hpp"

namespace obetc::era {

double ChirpSpec::ratio() const {
  return std::pow(f_end / f_start, 1.0 / static_cast<double>(samples));
}

void ChirpSpec::validate() const {
  std::ostringstream os;
  if (!(amplitude > 0.0)) os << "amplitude must be positive";
  else if (!(f_start > 0.0)) os << "f_start must be positive";
  else if (!(f_end > f_start)) os << "f_end must exceed f_start";
  else if (samples < 2) os << "chirp needs at least 2 samples";
  else if (!(sample_rate > 0.0)) os << "sample_rate must be positive";
  else if (!(ratio() > 1.0)) os << "frequency ratio per sample is not above 1";
  if (!os.str().empty()) throw Error(ErrorCode::kBadSpec, os.str());
}

std::vector<double> gen_chirp(const ChirpSpec& spec) {
  spec.validate();
  const double r = spec.ratio();
  const double log_r = std::log(r);
  const double f0 = spec.f_start / spec.sample_rate;
  std::vector<double> u(spec.samples);
  for (std::size_t k = 0; k < spec.samples; ++k) {
    // expm1 keeps r^k - 1 accurate when r is very close to 1.
    const double growth = std::expm1(static_cast<double>(k) * log_r);
    u[k] = spec.amplitude * std::sin(2.0 * std::numbers::pi * f0 * growth / log_r);
  }
  return u;
}

}  // namespace obetc::era
