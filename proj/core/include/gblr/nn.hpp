#pragma once

// Small MLPs with Gaudi-GBLR weights and a PGD training loop.
//
//   f(x) = L_T(a(... a(L_1 x) ...)),   L_i(z) = W_i(theta) z + b_i
//
// Training minimizes mean task loss + lambda * (sum of all widths), where
// lambda is switched on only while the summed average width of all layers is
// above the budget.

#include "gblr/gaudi.hpp"
#include "gblr/init.hpp"
#include "gblr/optim.hpp"
#include "gblr/random.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gblr {

enum class Activation { relu, identity };
enum class LossKind { squared_error, cross_entropy };

struct GaudiLinear {
  GaudiGblrMatrix weight;
  RealVector bias;
  bool train_structure = true;
  bool train_content = true;
  bool train_bias = true;

  [[nodiscard]] int in_features() const noexcept { return weight.cols; }
  [[nodiscard]] int out_features() const noexcept { return weight.rows; }
};

struct Mlp {
  std::vector<GaudiLinear> layers;
  Activation activation = Activation::relu;  ///< applied between layers, not after the last

  void validate() const;
  [[nodiscard]] int input_size() const;
  [[nodiscard]] int output_size() const;
  /// Sum over layers of each layer's average width.
  [[nodiscard]] double total_average_width() const;
};

/// Columns are samples.
struct Dataset {
  DenseMatrix inputs;
  DenseMatrix targets;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(inputs.cols()); }
  [[nodiscard]] Dataset slice(const std::vector<int>& columns) const;
};

[[nodiscard]] RealVector mlp_forward(const Mlp& model, const RealVector& x,
                                     StructureMode mode = StructureMode::continuous);
[[nodiscard]] DenseMatrix mlp_forward_batch(const Mlp& model, const DenseMatrix& inputs,
                                            StructureMode mode = StructureMode::continuous);

/// Mean over samples. Squared error is ||f(x) - y||^2; cross-entropy takes one-hot targets.
[[nodiscard]] double task_loss(const DenseMatrix& outputs, const DenseMatrix& targets, LossKind kind);

/// Mean task loss + lambda_eff * (sum of all width parameters).
[[nodiscard]] double objective(const Mlp& model, const Dataset& batch, double lambda_eff, LossKind kind,
                               StructureMode mode = StructureMode::continuous);

struct LayerGradients {
  GradBundle weight;
  RealVector bias;
};

struct MlpGradients {
  double loss = 0.0;
  std::vector<LayerGradients> layers;
};

/// Mean task loss and its gradient with respect to every parameter.
[[nodiscard]] MlpGradients mlp_gradients(const Mlp& model, const Dataset& batch, LossKind kind,
                                         StructureMode mode = StructureMode::continuous);

struct TrainConfig {
  int epochs = 300;
  int batch_size = 64;
  AdamWConfig structure_optimizer{1e-3, 0.9, 0.999, 1e-8, 0.0};
  AdamWConfig content_optimizer{1e-3, 0.9, 0.999, 1e-8, 0.05};
  double lambda0 = 0.04;
  double budget = std::numeric_limits<double>::infinity();  ///< on the summed average width
  int sigma_warmup = 5;
  double sigma_start = 1.0;
  double sigma_end = 100.0;
  StraightThrough straight_through = StraightThrough::at_infinity;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::squared_error;

  void validate() const;
  /// Schedule reaching sigma_end at the last epoch.
  [[nodiscard]] SigmaSchedule schedule() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;         ///< mean task loss over the epoch's batches
  double total_width = 0.0;  ///< summed average width after the epoch
  double sigma = 0.0;
  double lambda = 0.0;       ///< effective lambda at the epoch's last step
  std::vector<std::int64_t> flops;  ///< per layer, after freezing

  /// One newline-free JSON object with stable field names.
  [[nodiscard]] std::string to_json() const;
};

struct TrainResult {
  Mlp model;
  std::vector<EpochRecord> log;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mini-batch PGD. Throws TrainingDiverged when the loss becomes non-finite.
[[nodiscard]] TrainResult train(Mlp model, const Dataset& data, const TrainConfig& config);

// Synthetic tasks ------------------------------------------------------------

/// Frozen GBLR network used to generate regression targets.
struct Teacher {
  std::vector<GblrMatrix> weights;
  std::vector<RealVector> biases;
  Activation activation = Activation::relu;

  [[nodiscard]] RealVector forward(const RealVector& x) const;
  [[nodiscard]] double total_average_width() const;
};

/// `layers` square n x n layers of K planted width x width blocks; layer i is scaled by scales[i].
[[nodiscard]] Teacher planted_teacher(int n, int blocks, int width, const std::vector<double>& scales, Rng& rng);

/// Standard-normal inputs labelled by the teacher.
[[nodiscard]] Dataset sample_teacher(const Teacher& teacher, int count, Rng& rng);

/// Two Gaussian blobs at +/- separation/2 along a random direction; one-hot targets of length 2.
[[nodiscard]] Dataset make_blobs(int dim, int count, double separation, Rng& rng);

/// MLP with the given layer sizes (sizes[0] inputs), `blocks` blocks per layer,
/// every block starting at width `initial_width` (clamped to the layer size),
/// locations spread evenly, and N(0, content_scale^2) content.
[[nodiscard]] Mlp make_student(const std::vector<int>& sizes, int blocks, double initial_width,
                               double content_scale, Rng& rng);

/// Single-layer warm start: least-squares dense fit of targets ~ W x + b, then
/// initialize() and refine() on W under `config`.
[[nodiscard]] GaudiLinear fit_linear(const Dataset& data, const InitConfig& config);

/// Frozen-weight copy of a model (σ = infinity, integer structure).
[[nodiscard]] Mlp freeze_model(const Mlp& model);

}  // namespace gblr
