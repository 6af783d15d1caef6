#pragma once

// Initialization of a Gaudi-GBLR matrix from a dense target.
//
// Column windows come from rows of the Gram matrix W^T W (highest norm first):
// smooth |row| with a Gaussian filter, keep entries >= tau_ratio * max, and
// take the longest cyclic run of kept entries. Row windows repeat the same on
// R = (W m_C)(W m_C)^T. Blocks are added until the summed widths exceed the
// budget. Content is seeded from the SVD of W, then everything is refined by
// proximal gradient descent on ||W - W(theta)||_F^2 + lambda ||w||_1.

#include "gblr/gaudi.hpp"
#include "gblr/optim.hpp"

#include <span>
#include <vector>

namespace gblr {

struct InitConfig {
  double gamma = 1.0;         ///< Gaussian filter standard deviation
  double tau_ratio = 0.98;    ///< binarization threshold as a fraction of the filtered max
  double budget = 0.0;        ///< total width sum_k (wR_k + wC_k) allowed
  int blocks = 0;             ///< K; 0 selects the number of columns
  /// Pick each block's windows from the residual left after subtracting the
  /// best rank-1 fit inside every earlier block, instead of from W itself.
  bool deflate = false;
  Smoothing smoothing = Smoothing::infinite();

  int refine_iterations = 500;
  double lambda = 0.0;
  AdamWConfig structure_optimizer{0.0025, 0.9, 0.999, 1e-8, 0.0};
  AdamWConfig content_optimizer{0.01, 0.9, 0.999, 1e-8, 0.0};
  StraightThrough straight_through = StraightThrough::at_infinity;

  void validate() const;
};

/// Cyclic window: `width` consecutive entries starting at `location`.
struct Window {
  int width = 0;
  int location = 0;

  friend bool operator==(const Window&, const Window&) = default;
};

/// C = W^T W.
[[nodiscard]] DenseMatrix gram(const DenseMatrix& w);

/// Row indices by descending L2 norm, ties by ascending index.
[[nodiscard]] std::vector<int> row_order(const DenseMatrix& c);

/// Discrete Gaussian smoothing: kernel radius ceil(4 gamma), unit sum, reflective boundary.
[[nodiscard]] std::vector<double> gaussian_filter(std::span<const double> values, double gamma);

/// Longest cyclic run of ones (earliest start on ties); all ones gives (n, 0).
[[nodiscard]] Window longest_run(std::span<const unsigned char> bits);

/// Window from |row| -> filter -> threshold -> longest run. An all-zero row gives (0, 0).
[[nodiscard]] Window mask_from_row(std::span<const double> row, double gamma, double tau_ratio);

/// Structure by the Gram-row procedure and content by SVD seeding (no refinement).
[[nodiscard]] GaudiGblrMatrix initialize(const DenseMatrix& w, const InitConfig& config);

struct RefineResult {
  GaudiGblrMatrix theta;
  double initial_error = 0.0;  ///< ||W - W(theta)||_F before refinement
  double final_error = 0.0;    ///< same, for the returned theta
  int iterations = 0;
};

/// PGD refinement. Returns the iterate with the lowest objective seen, so the
/// result never has a higher objective than the input.
[[nodiscard]] RefineResult refine(GaudiGblrMatrix theta, const DenseMatrix& w, const InitConfig& config);

}  // namespace gblr
