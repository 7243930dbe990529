#include <cmath>
#include <numbers>

#include "obetc/numerics.hpp"

namespace obetc::numerics {
namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 transform; sign = -1 forward, +1 backward
// (unnormalized).
void radix2(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles are evaluated directly rather than by recurrence to keep
        // round-off at O(eps log n).
        const Complex w = std::polar(1.0, ang * static_cast<double>(k));
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * w;
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

// Bluestein chirp-z for arbitrary n.
std::vector<Complex> bluestein(std::span<const Complex> x, int sign) {
  const std::size_t n = x.size();
  const std::size_t m = next_power_of_two(2 * n - 1);
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for long sequences.
    const std::size_t k2 = (k * k) % (2 * n);
    chirp[k] = std::polar(1.0, sign * std::numbers::pi * static_cast<double>(k2) /
                                   static_cast<double>(n));
  }
  std::vector<Complex> a(m, Complex{}), b(m, Complex{});
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  radix2(a, -1);
  radix2(b, -1);
  for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
  radix2(a, +1);
  std::vector<Complex> out(n);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
  return out;
}

std::vector<Complex> transform(std::span<const Complex> x, int sign) {
  if (x.empty()) throw Error(ErrorCode::kBadSpec, "Fourier transform of an empty sequence");
  if (is_power_of_two(x.size())) {
    std::vector<Complex> a(x.begin(), x.end());
    radix2(a, sign);
    return a;
  }
  return bluestein(x, sign);
}

}  // namespace

std::vector<Complex> dft(std::span<const Complex> x) { return transform(x, -1); }

std::vector<Complex> idft(std::span<const Complex> x) {
  std::vector<Complex> out = transform(x, +1);
  const double inv_n = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= inv_n;
  return out;
}

std::vector<Complex> to_complex(std::span<const double> x) {
  return {x.begin(), x.end()};
}

}  // namespace obetc::numerics
