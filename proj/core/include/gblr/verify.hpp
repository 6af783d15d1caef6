#pragma once

// Independent oracles and randomized property suites.
//
// The oracles here share no kernels with the code they check: the DFT is a
// direct double sum, boxcars and dense references are built by explicit loops,
// and derivatives come from finite differences.

#include "gblr/gblr_matrix.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gblr::verify {

using Complex = std::complex<double>;

/// X[k] = sum_j x[j] exp(-2 pi i j k / n), O(n^2).
[[nodiscard]] std::vector<Complex> brute_dft(std::span<const Complex> x);

enum class FdScheme {
  central,   ///< (f(p+h) - f(p-h)) / 2h
  forward,   ///< one-sided, probes p, p+h, p+2h (second order)
  backward,  ///< one-sided, probes p, p-h, p-2h (second order)
};

struct FdConfig {
  double h = 1e-4;
  FdScheme scheme = FdScheme::central;
  double tolerance = 1e-4;  ///< relative tolerance used by callers comparing against the estimate

  void validate() const;
};

struct FdResult {
  std::vector<double> gradient;
  std::vector<std::size_t> nan_probes;  ///< coordinates where some probe was not finite

  [[nodiscard]] bool ok() const noexcept { return nan_probes.empty(); }
};

using ScalarFunction = std::function<double(std::span<const double>)>;

[[nodiscard]] FdResult fd_gradient(const ScalarFunction& f, std::span<const double> p, const FdConfig& config);
/// Per-coordinate schemes (e.g. one-sided at domain boundaries); `schemes` has one entry per coordinate.
[[nodiscard]] FdResult fd_gradient(const ScalarFunction& f, std::span<const double> p, const FdConfig& config,
                                   std::span<const FdScheme> schemes);

/// Vector-valued variant: column i is the derivative of f with respect to p[i].
using VectorFunction = std::function<RealVector(std::span<const double>)>;
[[nodiscard]] DenseMatrix fd_jacobian(const VectorFunction& f, std::span<const double> p, const FdConfig& config,
                                      std::span<const FdScheme> schemes);

/// Binary boxcar built entry by entry.
[[nodiscard]] RealVector reference_boxcar(int length, int width, int location);

/// Dense form of a frozen matrix built entry by entry from its windows.
[[nodiscard]] DenseMatrix reference_dense(const GblrMatrix& m);

/// ||a - b||_2 / max(||a||_2, ||b||_2), or 0 when both are zero.
[[nodiscard]] double relative_error(const RealVector& a, const RealVector& b);

// Suites ---------------------------------------------------------------------

struct SuiteOptions {
  std::uint64_t seed = 20240229;
  /// Run each suite against a deliberately broken variant; every suite should then fail.
  bool negative_control = false;
};

struct SuiteResult {
  std::string name;
  std::uint64_t seed = 0;
  int cases = 0;
  int failures = 0;
  std::vector<std::string> counterexamples;  ///< first few failing cases, each with its case seed
  double seconds = 0.0;

  [[nodiscard]] bool passed() const noexcept { return cases > 0 && failures == 0; }
};

struct Report {
  bool negative_control = false;
  std::vector<SuiteResult> suites;

  [[nodiscard]] bool passed() const noexcept;
  /// Multi-line JSON with suite name, cases, failures, seed and counterexamples.
  [[nodiscard]] std::string to_json() const;
};

/// dft, boxcar, bound, gradients, flops, embeddings, interpolation, sparsification.
[[nodiscard]] const std::vector<std::string>& suite_names();

/// Throws std::invalid_argument for an unknown name.
[[nodiscard]] SuiteResult run_suite(const std::string& name, const SuiteOptions& options = {});

/// Runs the suites named in `filter` (comma separated; empty runs all).
[[nodiscard]] Report theorem_suites(const std::string& filter = "", const SuiteOptions& options = {});

}  // namespace gblr::verify
