#include "gblr/fft.hpp"
#include "gblr/random.hpp"
#include "gblr/verify.hpp"

#include <doctest.h>

#include <cmath>

using gblr::fft::Complex;

namespace {

std::vector<Complex> random_signal(int n, gblr::Rng& rng) {
  std::vector<Complex> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = {gblr::standard_normal(rng), gblr::standard_normal(rng)};
  return x;
}

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("impulse and constant") {
  const std::vector<Complex> impulse{1, 0, 0, 0};
  for (const auto& v : gblr::fft::forward(impulse)) CHECK(std::abs(v - Complex(1, 0)) < 1e-15);
  const std::vector<Complex> ones{1, 1, 1, 1};
  const auto spec = gblr::fft::forward(ones);
  CHECK(std::abs(spec[0] - Complex(4, 0)) < 1e-15);
  for (int k = 1; k < 4; ++k) CHECK(std::abs(spec[static_cast<std::size_t>(k)]) < 1e-15);
}

TEST_CASE("forward matches the direct sum for power-of-two and other sizes") {
  gblr::Rng rng(3);
  for (int n : {1, 2, 7, 8, 16, 33, 64, 100, 512}) {
    CAPTURE(n);
    const auto x = random_signal(n, rng);
    CHECK(max_diff(gblr::fft::forward(x), gblr::verify::brute_dft(x)) < 1e-10 * n);
  }
}

TEST_CASE("inverse undoes forward") {
  gblr::Rng rng(4);
  for (int n : {5, 8, 33, 256}) {
    const auto x = random_signal(n, rng);
    CHECK(max_diff(gblr::fft::inverse(gblr::fft::forward(x)), x) < 1e-12);
  }
}

TEST_CASE("empty input") {
  CHECK(gblr::fft::forward(std::vector<Complex>{}).empty());
  CHECK(gblr::fft::inverse(std::vector<Complex>{}).empty());
}
