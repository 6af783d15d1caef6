#pragma once

// Boxcar and Gaudi (Gaussian-Dirichlet) masks.
//
// A boxcar mask of length n has `width` cyclically consecutive ones starting
// at `location`. Its DFT is a Dirichlet kernel times a location phase, which
// is a closed-form, everywhere-differentiable function of real width and
// location. Attenuating that spectrum with a Gaussian gives the Gaudi mask:
//
//   spectrum[k] = g(k) * d_w[k] * exp(-2 pi i k l / n)
//   d_w[k]      = w sinc(w k / n) / sinc(k / n) * exp(i pi k (1 - w) / n)
//   g(k)        = exp(-(k/n)^2 / (2 sigma^2))
//
// The time-domain mask is the real part of the inverse DFT. All functions here
// are pure.

#include <Eigen/Core>

#include <complex>
#include <limits>

namespace gblr {

using RealVector = Eigen::VectorXd;
using Spectrum = Eigen::VectorXcd;

/// Gaussian smoothing strength. `infinite()` disables smoothing exactly.
class Smoothing {
 public:
  constexpr Smoothing() = default;
  explicit Smoothing(double sigma);

  static constexpr Smoothing infinite() noexcept { return Smoothing{}; }

  [[nodiscard]] constexpr double sigma() const noexcept { return sigma_; }
  [[nodiscard]] constexpr bool is_infinite() const noexcept {
    return sigma_ == std::numeric_limits<double>::infinity();
  }
  /// Attenuation applied to frequency bin k of an n-point spectrum.
  [[nodiscard]] double gaussian(int k, int n) const noexcept;

  friend constexpr bool operator==(Smoothing, Smoothing) = default;

 private:
  double sigma_ = std::numeric_limits<double>::infinity();
};

/// Real-valued width/location of a length-n mask. Both live in [0, n].
struct MaskParams {
  double width = 0.0;
  double location = 0.0;
  int length = 1;

  /// Throws std::invalid_argument when outside the closed domain.
  void validate() const;
};

/// Normalized sinc, sin(pi x) / (pi x), with sinc(0) = 1.
[[nodiscard]] double sinc(double x) noexcept;

/// Binary boxcar mask; entry j is 1 iff location <= j + a n < location + width, a in {0, 1}.
[[nodiscard]] RealVector boxcar(int length, int width, int location);
/// Same as above; rejects non-integer width or location.
[[nodiscard]] RealVector boxcar(const MaskParams& params);

[[nodiscard]] Spectrum dirichlet_kernel(double width, int length);
[[nodiscard]] Spectrum gaudi_spectrum(const MaskParams& params, Smoothing smoothing);
[[nodiscard]] RealVector gaudi_mask(const MaskParams& params, Smoothing smoothing);

/// d(gaudi_mask)/d(width). Well defined and nonzero at width = 0.
[[nodiscard]] RealVector mask_grad_w(const MaskParams& params, Smoothing smoothing);
/// d(gaudi_mask)/d(location).
[[nodiscard]] RealVector mask_grad_l(const MaskParams& params, Smoothing smoothing);

/// Mask and both derivatives computed from shared spectral factors.
struct MaskWithGrads {
  RealVector mask;
  RealVector d_width;
  RealVector d_location;
};
[[nodiscard]] MaskWithGrads gaudi_mask_with_grads(const MaskParams& params, Smoothing smoothing);

/// Upper bound on ||boxcar - gaudi_mask||_2 / ||boxcar||_2 for integer parameters.
[[nodiscard]] double boxcar_error_bound(int length, Smoothing smoothing);

}  // namespace gblr
