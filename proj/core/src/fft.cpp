#include "gblr/fft.hpp"

#include <numbers>

namespace gblr::fft {
namespace {

// Twiddles exp(sign * 2 pi i k / n) for k in [0, n). Angles are formed from the
// exact integer index so the table carries no accumulated phase error.
std::vector<Complex> twiddles(std::size_t n, double sign) {
  std::vector<Complex> table(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    table[k] = std::polar(1.0, angle);
  }
  return table;
}

void radix2_in_place(std::vector<Complex>& a, double sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto w = twiddles(n, sign);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = w[k * stride] * a[start + k + half];
        const Complex e = a[start + k];
        a[start + k] = e + t;
        a[start + k + half] = e - t;
      }
    }
  }
}

std::vector<Complex> direct(std::span<const Complex> x, double sign) {
  const std::size_t n = x.size();
  const auto w = twiddles(n, sign);
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    std::size_t idx = 0;  // (j * k) mod n
    for (std::size_t j = 0; j < n; ++j) {
      acc += x[j] * w[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    out[k] = acc;
  }
  return out;
}

std::vector<Complex> transform(std::span<const Complex> x, double sign) {
  if (is_power_of_two(x.size())) {
    std::vector<Complex> a(x.begin(), x.end());
    radix2_in_place(a, sign);
    return a;
  }
  return direct(x, sign);
}

}  // namespace

std::vector<Complex> forward(std::span<const Complex> x) { return transform(x, -1.0); }

std::vector<Complex> inverse(std::span<const Complex> spectrum) {
  auto out = transform(spectrum, +1.0);
  const double scale = spectrum.empty() ? 1.0 : 1.0 / static_cast<double>(spectrum.size());
  for (auto& v : out) v *= scale;
  return out;
}

}  // namespace gblr::fft
