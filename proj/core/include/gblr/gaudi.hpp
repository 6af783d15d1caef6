#pragma once

// Trainable Gaudi-GBLR matrices.
//
//   W(theta) = sum_k (mask(wR_k, lR_k) .* u_k) (mask(wC_k, lC_k) .* v_k)^T
//
// where the masks are Gaudi masks of real-valued width/location. Content
// vectors are stored full length (m for rows, n for columns) so that a mask
// may grow over entries it did not cover before. Gradients are closed form;
// there is no autodiff.

#include "gblr/gblr_matrix.hpp"
#include "gblr/mask.hpp"

#include <vector>

namespace gblr {

/// How real-valued structure is turned into masks.
enum class StructureMode {
  continuous,  ///< masks at the real-valued width/location
  quantized,   ///< masks at rounded width/location; gradients pass straight through
};

struct GaudiGblrMatrix {
  int rows = 0;
  int cols = 0;
  RealVector row_width;     ///< K entries in [0, rows]
  RealVector row_location;  ///< K entries in [0, rows]
  RealVector col_width;     ///< K entries in [0, cols]
  RealVector col_location;  ///< K entries in [0, cols]
  DenseMatrix row_content;  ///< rows x K, column k is u_k
  DenseMatrix col_content;  ///< cols x K, column k is v_k
  Smoothing smoothing;

  /// All widths, locations and content zero.
  static GaudiGblrMatrix zeros(int rows, int cols, int blocks, Smoothing smoothing = Smoothing::infinite());
  /// Integer structure and zero-padded content of a frozen matrix.
  static GaudiGblrMatrix from_frozen(const GblrMatrix& frozen, Smoothing smoothing = Smoothing::infinite());

  [[nodiscard]] int blocks() const noexcept { return static_cast<int>(row_width.size()); }
  /// Throws std::invalid_argument on inconsistent shapes or out-of-domain structure.
  void validate() const;
  /// Projects widths and locations onto their closed intervals.
  void clamp_structure();

  /// sum_k (wR_k + wC_k) of the real-valued widths.
  [[nodiscard]] double total_width() const noexcept;
  /// total_width / (2K).
  [[nodiscard]] double average_width() const noexcept;
};

struct GradBundle {
  DenseMatrix d_row_content;
  DenseMatrix d_col_content;
  RealVector d_row_width;
  RealVector d_row_location;
  RealVector d_col_width;
  RealVector d_col_location;

  static GradBundle zeros_like(const GaudiGblrMatrix& theta);
  [[nodiscard]] bool all_finite() const;
  GradBundle& operator+=(const GradBundle& other);
};

/// Masks (with derivatives) and the dense matrix for one parameter state.
struct Materialized {
  DenseMatrix dense;
  DenseMatrix masked_rows;  ///< rows x K, column k is mask_R .* u_k
  DenseMatrix masked_cols;  ///< cols x K, column k is mask_C .* v_k
  std::vector<MaskWithGrads> row_masks;
  std::vector<MaskWithGrads> col_masks;
};

[[nodiscard]] Materialized materialize(const GaudiGblrMatrix& theta,
                                       StructureMode mode = StructureMode::continuous);

[[nodiscard]] DenseMatrix dense(const GaudiGblrMatrix& theta, StructureMode mode = StructureMode::continuous);

/// dense(theta) x. Throws std::invalid_argument on size mismatch.
[[nodiscard]] RealVector forward(const GaudiGblrMatrix& theta, const RealVector& x,
                                 StructureMode mode = StructureMode::continuous);

/// Gradient of a scalar loss given dL/dW (rows x cols) at the materialized state.
[[nodiscard]] GradBundle backward_dense(const GaudiGblrMatrix& theta, const Materialized& state,
                                        const DenseMatrix& grad_dense);

/// Gradient of L = gy^T dense(theta) x with respect to every parameter.
[[nodiscard]] GradBundle backward(const GaudiGblrMatrix& theta, const RealVector& x, const RealVector& gy,
                                  StructureMode mode = StructureMode::continuous);

/// Nearest integer, ties to even.
[[nodiscard]] double round_half_even(double v) noexcept;

/// Rounds structure to integers (widths clamped, locations taken cyclically)
/// and crops content to the resulting windows.
[[nodiscard]] GblrMatrix freeze(const GaudiGblrMatrix& theta);

}  // namespace gblr
