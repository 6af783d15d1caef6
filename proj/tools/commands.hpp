#pragma once

// Subcommands of the gblr tool, callable without going through argv.

#include "gblr/init.hpp"
#include "gblr/nn.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace gblr::cli {

enum ExitCode : int { kSuccess = 0, kVerificationFailure = 1, kUsageError = 2 };

/// Bad flags, a config that fails validation, or unreadable/unwritable files.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// compress -------------------------------------------------------------------

/// Window-picking settings tried by compress; the lowest final error wins.
struct InitCandidate {
  double gamma = 1.0;
  double tau_ratio = 0.98;
  bool deflate = false;
};

struct CompressConfig {
  /// Budget, blocks and refinement; gamma/tau/deflate come from the candidates.
  /// The budget starts as NaN, meaning "not given".
  InitConfig init;
  std::vector<InitCandidate> candidates;
};

[[nodiscard]] CompressConfig default_compress_config();

struct CompressReport {
  int rows = 0;
  int cols = 0;
  int blocks = 0;
  double budget = 0.0;
  double frobenius_error = 0.0;  ///< ||W - freeze(theta)||_F
  double relative_error = 0.0;   ///< divided by ||W||_F (0 for a zero W)
  double total_width = 0.0;      ///< sum_k (wR_k + wC_k) after freezing
  std::int64_t flops = 0;        ///< multiplications per product after freezing
  double compression_ratio = 0.0;  ///< rows * cols / flops (infinite at zero flops)
  int candidate = 0;             ///< index of the winning InitCandidate

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct CompressOutcome {
  GaudiGblrMatrix theta;
  CompressReport report;
};

[[nodiscard]] CompressOutcome compress(const DenseMatrix& w, const CompressConfig& config);

// train ----------------------------------------------------------------------

enum class TaskKind {
  planted_linear,  ///< one planted GBLR layer; student warm-started by fit_linear
  planted_mlp,     ///< relu MLP teacher; student from make_student
};

struct TaskConfig {
  TaskKind kind = TaskKind::planted_linear;
  int n = 32;
  int blocks = 8;
  int width = 4;
  std::vector<double> scales{1.0};  ///< one per teacher layer (planted_mlp)
  int train_samples = 4096;
  int test_samples = 1024;
  double budget_factor = 1.25;  ///< budget = factor * teacher total average width
  int student_blocks = 8;
  double initial_width = 16.0;
  double content_scale = 0.3;
};

struct TrainRunConfig {
  TaskConfig task;
  TrainConfig train;  ///< budget is replaced by absolute_budget or the task's factor
  InitConfig warm_start;
  std::optional<double> absolute_budget;
  std::uint64_t seed = 0;
};

[[nodiscard]] TrainRunConfig default_train_config();

struct TrainSummary {
  double test_relative_mse = 0.0;  ///< of the frozen model
  double total_width = 0.0;
  double budget = 0.0;
  std::vector<double> layer_widths;
  std::vector<std::int64_t> layer_flops;
  int epochs = 0;

  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

struct TrainOutcome {
  TrainResult result;
  TrainSummary summary;
};

/// Throws TrainingDiverged.
[[nodiscard]] TrainOutcome run_training(const TrainRunConfig& config);

/// metrics.jsonl, summary.json, layer<i>.gaudi and layer<i>.gblr (frozen) in `dir`.
void write_training_outputs(const std::filesystem::path& dir, const TrainOutcome& outcome);

// config files ---------------------------------------------------------------

struct RunConfig {
  CompressConfig compress = default_compress_config();
  TrainRunConfig train = default_train_config();
  int bench_trials = 1000;
};

/// Applies a JSON config over `config`. Unknown keys and wrong types throw UsageError.
void apply_config(RunConfig& config, const nlohmann::json& j);
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// analysis -------------------------------------------------------------------

/// Number of blocks covering each entry.
[[nodiscard]] Eigen::MatrixXi overlap_counts(const GblrMatrix& m);

/// Singular values above 1e-6 * sigma_max.
[[nodiscard]] int numerical_rank(const DenseMatrix& m);

void write_pgm(std::ostream& out, const Eigen::MatrixXi& counts);
void write_csv(std::ostream& out, const Eigen::MatrixXi& counts);

/// Entry point behind main(); returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gblr::cli
