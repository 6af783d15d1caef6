#pragma once

// Proximal gradient descent for Gaudi-GBLR parameters.
//
// One optimizer step: an AdamW step on every trainable parameter, then soft
// shrinkage of the widths by lr * lambda followed by clipping to [0, n].
// Locations are projected to [0, n] but never shrunk.

#include "gblr/gaudi.hpp"
#include "gblr/mask.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gblr {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// First/second moments and step count for one parameter array.
struct MomentState {
  std::vector<double> first;
  std::vector<double> second;
  std::int64_t step = 0;
};

/// Decoupled-weight-decay Adam update of `params` in place. The state is
/// resized on first use. Throws std::domain_error on a NaN gradient and
/// std::invalid_argument on a size mismatch.
void adaptive_step(std::span<double> params, std::span<const double> grad, MomentState& state,
                   const AdamWConfig& config);

/// S_mu(x) = x - mu if x > mu, else 0 (mu >= 0).
[[nodiscard]] double soft_shrink(double x, double mu) noexcept;

/// w <- clip(S_threshold(w), 0, upper), elementwise.
void proximal_width_step(std::span<double> widths, double threshold, double upper) noexcept;

/// Adaptive step on widths, then shrinkage by lr * lambda_eff, then clip to [0, upper].
void pgd_width_update(std::span<double> widths, std::span<const double> grad, MomentState& state,
                      const AdamWConfig& config, double lambda_eff, double upper);

/// Budget-triggered shrinkage: lambda0 while the total average width exceeds the budget, else 0.
struct BudgetRule {
  double budget = 0.0;
  double lambda0 = 0.04;

  [[nodiscard]] double effective_lambda(double total_width) const noexcept {
    return total_width <= budget ? 0.0 : lambda0;
  }
};

/// sigma held at `start` for `warmup` epochs, then linear to `end` at `final_epoch`.
struct SigmaSchedule {
  int warmup = 5;
  double start = 1.0;
  double end = 100.0;
  int final_epoch = 300;

  /// Throws std::invalid_argument on start > end or a non-positive start.
  void validate() const;
  [[nodiscard]] Smoothing value(int epoch) const;
};

/// When the forward pass uses rounded structure (gradients pass straight through).
enum class StraightThrough {
  off,          ///< always use the real-valued structure
  at_infinity,  ///< rounded structure once sigma is infinite
  always,       ///< rounded structure at every sigma
};

[[nodiscard]] StructureMode structure_mode(Smoothing smoothing, StraightThrough policy) noexcept;

/// Forward value of the straight-through estimator: nearest integer, ties to even.
[[nodiscard]] std::vector<double> ste_quantize(std::span<const double> values);

/// Clamp every value to [0, upper].
void project(std::span<double> values, double upper) noexcept;

/// Optimizer state for every parameter group of one Gaudi-GBLR matrix.
struct GaudiOptimizer {
  AdamWConfig structure;
  AdamWConfig content;
  bool train_structure = true;
  bool train_content = true;

  MomentState row_width, row_location, col_width, col_location;
  MomentState row_content, col_content;

  /// Adaptive step on every trainable group (parameter order as declared).
  void adaptive(GaudiGblrMatrix& theta, const GradBundle& grads);
  /// Shrink + clip widths with threshold structure.lr * lambda_eff; project locations.
  void proximal(GaudiGblrMatrix& theta, double lambda_eff) const;
  /// adaptive() followed by proximal().
  void step(GaudiGblrMatrix& theta, const GradBundle& grads, double lambda_eff);
};

}  // namespace gblr
