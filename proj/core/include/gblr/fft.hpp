#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace gblr::fft {

using Complex = std::complex<double>;

[[nodiscard]] constexpr bool is_power_of_two(std::size_t n) noexcept {
  return n != 0 && (n & (n - 1)) == 0;
}

// X[k] = sum_j x[j] exp(-2 pi i j k / n). Radix-2 for power-of-two n,
// direct O(n^2) sum otherwise.
[[nodiscard]] std::vector<Complex> forward(std::span<const Complex> x);

// x[j] = (1/n) sum_k X[k] exp(+2 pi i j k / n).
[[nodiscard]] std::vector<Complex> inverse(std::span<const Complex> spectrum);

}  // namespace gblr::fft
