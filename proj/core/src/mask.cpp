#include "gblr/mask.hpp"

#include "gblr/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace gblr {
namespace {

using Complex = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// sin(pi x) with the argument reduced to [-1, 1] first, so integer x gives an
// exact zero and large arguments keep full precision.
double sin_pi(double x) noexcept { return std::sin(kPi * std::remainder(x, 2.0)); }

// exp(i pi t) with t reduced modulo 2.
Complex unit_phase(double t) noexcept { return std::polar(1.0, kPi * std::remainder(t, 2.0)); }

// w * sinc(w k / n) / sinc(k / n), written so that w = 0 and k = 0 need no special casing
// beyond the k = 0 bin itself.
double dirichlet_magnitude(double w, int k, int n) noexcept {
  if (k == 0) return w;
  const double x = static_cast<double>(k) / n;
  return sin_pi(w * k / n) / (kPi * x) / sinc(x);
}

// Location phase exp(-2 pi i k l / n) = exp(i pi t) with t = -2 k l / n.
Complex location_phase(double l, int k, int n) noexcept {
  return unit_phase(-2.0 * std::fmod(k * l, static_cast<double>(n)) / n);
}

RealVector real_inverse(const std::vector<Complex>& spectrum) {
  const auto time = fft::inverse(spectrum);
  RealVector out(static_cast<Eigen::Index>(time.size()));
  for (std::size_t j = 0; j < time.size(); ++j) out[static_cast<Eigen::Index>(j)] = time[j].real();
  return out;
}

// Spectral factors shared by the mask and its derivatives.
struct Factors {
  std::vector<Complex> mask;        // g d_w phase_l
  std::vector<Complex> d_width;     // g exp(-2 pi i k (w + l) / n) exp(i pi k / n) / sinc(k / n)
  std::vector<Complex> d_location;  // (-2 pi i k / n) g d_w phase_l
};

Factors factors(const MaskParams& p, Smoothing s, bool with_grads) {
  p.validate();
  const int n = p.length;
  const double w = p.width;
  const double l = p.location;
  Factors f;
  f.mask.resize(static_cast<std::size_t>(n));
  if (with_grads) {
    f.d_width.resize(static_cast<std::size_t>(n));
    f.d_location.resize(static_cast<std::size_t>(n));
  }
  for (int k = 0; k < n; ++k) {
    const double g = s.gaussian(k, n);
    const Complex d = dirichlet_magnitude(w, k, n) *
                      unit_phase(std::fmod(k * (1.0 - w), 2.0 * n) / n);
    const Complex shift = location_phase(l, k, n);
    const auto idx = static_cast<std::size_t>(k);
    f.mask[idx] = g * d * shift;
    if (with_grads) {
      const double x = static_cast<double>(k) / n;
      const Complex phase = unit_phase(-2.0 * std::fmod(k * (w + l), static_cast<double>(n)) / n) *
                            unit_phase(x);
      f.d_width[idx] = g * phase / sinc(x);
      f.d_location[idx] = Complex{0.0, -2.0 * kPi * x} * f.mask[idx];
    }
  }
  return f;
}

bool is_integer(double v) noexcept { return std::floor(v) == v; }

}  // namespace

Smoothing::Smoothing(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("smoothing sigma must be positive");
}

double Smoothing::gaussian(int k, int n) const noexcept {
  if (is_infinite()) return 1.0;
  const double f = static_cast<double>(k) / n;
  return std::exp(-f * f / (2.0 * sigma_ * sigma_));
}

void MaskParams::validate() const {
  if (length < 1) throw std::invalid_argument("mask length must be >= 1");
  const double n = length;
  if (!(width >= 0.0 && width <= n))
    throw std::invalid_argument("mask width " + std::to_string(width) + " outside [0, " +
                                std::to_string(length) + "]");
  if (!(location >= 0.0 && location <= n))
    throw std::invalid_argument("mask location " + std::to_string(location) + " outside [0, " +
                                std::to_string(length) + "]");
}

double sinc(double x) noexcept {
  if (x == 0.0) return 1.0;
  return sin_pi(x) / (kPi * x);
}

RealVector boxcar(int length, int width, int location) {
  if (length < 1) throw std::invalid_argument("boxcar length must be >= 1");
  if (width < 0 || width > length) throw std::invalid_argument("boxcar width out of range");
  if (location < 0 || location >= length) throw std::invalid_argument("boxcar location out of range");
  RealVector m = RealVector::Zero(length);
  for (int j = 0; j < width; ++j) m[(location + j) % length] = 1.0;
  return m;
}

RealVector boxcar(const MaskParams& params) {
  if (!is_integer(params.width) || !is_integer(params.location))
    throw std::invalid_argument("boxcar requires integer width and location");
  return boxcar(params.length, static_cast<int>(params.width), static_cast<int>(params.location));
}

Spectrum dirichlet_kernel(double width, int length) {
  MaskParams{width, 0.0, length}.validate();
  Spectrum out(length);
  for (int k = 0; k < length; ++k) {
    out[k] = dirichlet_magnitude(width, k, length) *
             unit_phase(std::fmod(k * (1.0 - width), 2.0 * length) / length);
  }
  return out;
}

Spectrum gaudi_spectrum(const MaskParams& params, Smoothing smoothing) {
  const auto f = factors(params, smoothing, false);
  return Eigen::Map<const Spectrum>(f.mask.data(), params.length);
}

RealVector gaudi_mask(const MaskParams& params, Smoothing smoothing) {
  return real_inverse(factors(params, smoothing, false).mask);
}

RealVector mask_grad_w(const MaskParams& params, Smoothing smoothing) {
  return real_inverse(factors(params, smoothing, true).d_width);
}

RealVector mask_grad_l(const MaskParams& params, Smoothing smoothing) {
  return real_inverse(factors(params, smoothing, true).d_location);
}

MaskWithGrads gaudi_mask_with_grads(const MaskParams& params, Smoothing smoothing) {
  const auto f = factors(params, smoothing, true);
  return {real_inverse(f.mask), real_inverse(f.d_width), real_inverse(f.d_location)};
}

double boxcar_error_bound(int length, Smoothing smoothing) {
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  if (smoothing.is_infinite()) return 0.0;
  const double a = 1.0 - 1.0 / length;
  const double sigma = smoothing.sigma();
  return -std::expm1(-a * a / (2.0 * sigma * sigma));
}

}  // namespace gblr
