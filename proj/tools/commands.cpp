#include "commands.hpp"

#include "gblr/io.hpp"
#include "gblr/verify.hpp"

#include <CLI11.hpp>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>

namespace gblr::cli {
namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

OrderedJson finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double relative_mse(const DenseMatrix& pred, const DenseMatrix& targets) {
  const double var = (targets.colwise() - targets.rowwise().mean()).squaredNorm();
  const double err = (pred - targets).squaredNorm();
  return var > 0.0 ? err / var : err;
}

// Config schema --------------------------------------------------------------

using Setter = std::function<void(const Json&, const std::string&)>;

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw UsageError("config: " + key + " must be " + expected);
}

Setter real(double& dst) {
  return [&dst](const Json& v, const std::string& key) {
    if (!v.is_number()) bad_type(key, "a number");
    dst = v.get<double>();
  };
}

Setter integer(int& dst) {
  return [&dst](const Json& v, const std::string& key) {
    if (!v.is_number_integer()) bad_type(key, "an integer");
    dst = v.get<int>();
  };
}

Setter boolean(bool& dst) {
  return [&dst](const Json& v, const std::string& key) {
    if (!v.is_boolean()) bad_type(key, "a boolean");
    dst = v.get<bool>();
  };
}

Setter seed_value(std::uint64_t& dst) {
  return [&dst](const Json& v, const std::string& key) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      bad_type(key, "a nonnegative integer");
    dst = v.get<std::uint64_t>();
  };
}

Setter straight_through(StraightThrough& dst) {
  return [&dst](const Json& v, const std::string& key) {
    static const std::map<std::string, StraightThrough> names{
        {"off", StraightThrough::off}, {"at_infinity", StraightThrough::at_infinity}, {"always", StraightThrough::always}};
    if (!v.is_string() || !names.contains(v.get<std::string>()))
      bad_type(key, "one of \"off\", \"at_infinity\", \"always\"");
    dst = names.at(v.get<std::string>());
  };
}

Setter smoothing(Smoothing& dst) {
  return [&dst](const Json& v, const std::string& key) {
    if (v.is_string() && v.get<std::string>() == "inf") {
      dst = Smoothing::infinite();
    } else if (v.is_number() && v.get<double>() > 0.0) {
      dst = Smoothing(v.get<double>());
    } else {
      bad_type(key, "a positive number or \"inf\"");
    }
  };
}

void apply_section(const Json& j, const std::string& section, const std::map<std::string, Setter>& fields) {
  if (!j.is_object()) throw UsageError("config: " + section + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw UsageError("config: unknown key " + section + "." + key);
    it->second(value, section + "." + key);
  }
}

std::map<std::string, Setter> optimizer_fields(InitConfig& c) {
  return {{"refine_iterations", integer(c.refine_iterations)},
          {"lambda", real(c.lambda)},
          {"structure_lr", real(c.structure_optimizer.lr)},
          {"content_lr", real(c.content_optimizer.lr)},
          {"smoothing", smoothing(c.smoothing)},
          {"straight_through", straight_through(c.straight_through)}};
}

void apply_candidates(std::vector<InitCandidate>& out, const Json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) bad_type(key, "a non-empty array");
  std::vector<InitCandidate> list;
  for (const auto& item : v) {
    InitCandidate c;
    apply_section(item, key + "[]",
                  {{"gamma", real(c.gamma)}, {"tau_ratio", real(c.tau_ratio)}, {"deflate", boolean(c.deflate)}});
    list.push_back(c);
  }
  out = std::move(list);
}

void apply_scales(std::vector<double>& out, const Json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) bad_type(key, "a non-empty array of numbers");
  std::vector<double> list;
  for (const auto& item : v) {
    if (!item.is_number()) bad_type(key, "a non-empty array of numbers");
    list.push_back(item.get<double>());
  }
  out = std::move(list);
}

void validate_run_config(const RunConfig& c) {
  try {
    InitConfig probe = c.compress.init;
    if (std::isnan(probe.budget)) probe.budget = 0.0;
    probe.validate();
    if (c.compress.candidates.empty()) throw std::invalid_argument("compress needs at least one candidate");
    for (const auto& cand : c.compress.candidates) {
      probe.gamma = cand.gamma;
      probe.tau_ratio = cand.tau_ratio;
      probe.validate();
    }
    c.train.train.validate();
    const auto& t = c.train.task;
    if (t.n < 1 || t.blocks < 1 || t.width < 1 || t.width > t.n)
      throw std::invalid_argument("task needs n >= 1, blocks >= 1 and 1 <= width <= n");
    if (t.train_samples < 1 || t.test_samples < 1) throw std::invalid_argument("task needs samples");
    if (t.budget_factor < 0.0) throw std::invalid_argument("budget_factor must be nonnegative");
    if (t.student_blocks < 1) throw std::invalid_argument("student_blocks must be positive");
    if (t.kind == TaskKind::planted_linear && t.scales.size() != 1)
      throw std::invalid_argument("planted_linear takes exactly one scale");
    if (c.bench_trials < 1) throw std::invalid_argument("bench trials must be positive");
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

// Subcommands ----------------------------------------------------------------

void print_json(std::ostream& out, const OrderedJson& j) { out << j.dump(2) << '\n'; }

int cmd_compress(const RunConfig& config, const std::filesystem::path& input, const std::filesystem::path& output,
                 std::ostream& out) {
  DenseMatrix w;
  try {
    w = io::read_dense(input);
  } catch (const std::exception& e) {
    throw UsageError(std::string("cannot read dense matrix: ") + e.what());
  }
  const CompressOutcome result = compress(w, config.compress);
  if (!output.empty()) io::write_gaudi(output, result.theta);
  print_json(out, result.report.to_json());
  return kSuccess;
}

int cmd_train(const RunConfig& config, const std::filesystem::path& output, std::ostream& out, std::ostream& err) {
  TrainOutcome outcome;
  try {
    outcome = run_training(config.train);
  } catch (const TrainingDiverged& e) {
    err << "training diverged: " << e.what() << '\n';
    return kVerificationFailure;
  }
  if (!output.empty()) write_training_outputs(output, outcome);
  print_json(out, outcome.summary.to_json());
  return kSuccess;
}

int cmd_check(const std::string& suite, std::uint64_t seed, bool negative, std::ostream& out) {
  verify::SuiteOptions options;
  options.seed = seed;
  options.negative_control = negative;
  verify::Report report;
  try {
    report = verify::theorem_suites(suite, options);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  out << report.to_json() << '\n';
  return report.passed() ? kSuccess : kVerificationFailure;
}

GblrMatrix read_checkpoint(const std::filesystem::path& path) {
  try {
    return io::read_any_as_frozen(path);
  } catch (const std::exception& e) {
    throw UsageError("cannot read checkpoint " + path.string() + ": " + e.what());
  }
}

int cmd_bench(const std::filesystem::path& input, int trials, std::ostream& out) {
  const GblrMatrix m = read_checkpoint(input);
  const DenseMatrix dense = m.to_dense();
  const RealVector x = RealVector::LinSpaced(m.cols(), -1.0, 1.0);

  MultiplicationCounter counter;
  (void)m.mvp({x.data(), static_cast<std::size_t>(x.size())}, counter);

  using Clock = std::chrono::steady_clock;
  double sink = 0.0;
  auto t0 = Clock::now();
  for (int t = 0; t < trials; ++t) sink += m.mvp(x).sum();
  const double gblr_ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count() / trials;
  t0 = Clock::now();
  for (int t = 0; t < trials; ++t) {
    const RealVector y = dense * x;
    sink += y.sum();
  }
  const double dense_ns = std::chrono::duration<double, std::nano>(Clock::now() - t0).count() / trials;

  OrderedJson j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["blocks"] = m.blocks();
  j["trials"] = trials;
  j["flops"] = m.flops();
  j["counted_multiplications"] = counter.count;
  j["dense_multiplications"] = static_cast<std::int64_t>(m.rows()) * m.cols();
  j["gblr_ns_per_mvp"] = gblr_ns;
  j["dense_ns_per_mvp"] = dense_ns;
  j["checksum"] = finite_or_string(sink);
  print_json(out, j);
  return kSuccess;
}

OrderedJson dump_one(const std::filesystem::path& input, const std::filesystem::path& output, const std::string& format) {
  const GblrMatrix m = read_checkpoint(input);
  const Eigen::MatrixXi counts = overlap_counts(m);
  if (!output.empty()) {
    std::ofstream file(output);
    if (!file) throw UsageError("cannot write " + output.string());
    if (format == "pgm") {
      write_pgm(file, counts);
    } else {
      write_csv(file, counts);
    }
    if (!file) throw UsageError("failed writing " + output.string());
  }
  OrderedJson j;
  j["input"] = input.string();
  j["output"] = output.string();
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["blocks"] = m.blocks();
  j["max_overlap"] = counts.size() > 0 ? counts.maxCoeff() : 0;
  j["rank"] = numerical_rank(m.to_dense());
  return j;
}

bool is_checkpoint(const std::filesystem::path& p) {
  return p.extension() == ".gblr" || p.extension() == ".gaudi";
}

int cmd_mask_dump(const std::filesystem::path& input, const std::filesystem::path& output, const std::string& format,
                  std::ostream& out) {
  OrderedJson report = OrderedJson::array();
  if (std::filesystem::is_directory(input)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(input))
      if (entry.is_regular_file() && is_checkpoint(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no checkpoints in " + input.string());
    if (!output.empty()) std::filesystem::create_directories(output);
    for (const auto& f : files) {
      const std::string name = f.stem().string() + (f.extension() == ".gaudi" ? "_gaudi." : ".") + format;
      report.push_back(dump_one(f, output.empty() ? std::filesystem::path{} : output / name, format));
    }
  } else {
    report.push_back(dump_one(input, output, format));
  }
  print_json(out, report);
  return kSuccess;
}

}  // namespace

// compress -------------------------------------------------------------------

CompressConfig default_compress_config() {
  CompressConfig c;
  c.init.budget = std::numeric_limits<double>::quiet_NaN();
  c.init.refine_iterations = 1000;
  c.init.structure_optimizer.lr = 0.0;
  c.init.content_optimizer.lr = 0.01;
  c.candidates = {InitCandidate{1.0, 0.98, false}, InitCandidate{0.5, 0.1, true}};
  return c;
}

OrderedJson CompressReport::to_json() const {
  OrderedJson j;
  j["rows"] = rows;
  j["cols"] = cols;
  j["blocks"] = blocks;
  j["budget"] = budget;
  j["frobenius_error"] = frobenius_error;
  j["relative_error"] = relative_error;
  j["total_width"] = total_width;
  j["flops"] = flops;
  j["compression_ratio"] = finite_or_string(compression_ratio);
  j["candidate"] = candidate;
  return j;
}

CompressOutcome compress(const DenseMatrix& w, const CompressConfig& config) {
  if (config.candidates.empty()) throw std::invalid_argument("compress: no init candidates");
  const double norm = w.norm();
  std::optional<CompressOutcome> best;
  for (std::size_t i = 0; i < config.candidates.size(); ++i) {
    InitConfig init = config.init;
    init.gamma = config.candidates[i].gamma;
    init.tau_ratio = config.candidates[i].tau_ratio;
    init.deflate = config.candidates[i].deflate;
    GaudiGblrMatrix theta = initialize(w, init);
    if (init.refine_iterations > 0) theta = refine(std::move(theta), w, init).theta;
    const GblrMatrix frozen = freeze(theta);
    const double error = (frozen.to_dense() - w).norm();
    if (best && !(error < best->report.frobenius_error)) continue;

    CompressReport r;
    r.rows = static_cast<int>(w.rows());
    r.cols = static_cast<int>(w.cols());
    r.blocks = theta.blocks();
    r.budget = init.budget;
    r.frobenius_error = error;
    r.relative_error = norm > 0.0 ? error / norm : error;
    r.total_width = static_cast<double>(frozen.structure().total_width());
    r.flops = frozen.flops();
    r.compression_ratio = r.flops > 0 ? static_cast<double>(w.size()) / static_cast<double>(r.flops)
                                      : std::numeric_limits<double>::infinity();
    r.candidate = static_cast<int>(i);
    best = CompressOutcome{GaudiGblrMatrix::from_frozen(frozen), r};
  }
  return std::move(*best);
}

// train ----------------------------------------------------------------------

TrainRunConfig default_train_config() {
  TrainRunConfig c;
  c.train.epochs = 30;
  c.train.batch_size = 64;
  c.train.structure_optimizer.lr = 1e-4;
  c.train.content_optimizer.lr = 3e-3;
  c.train.content_optimizer.weight_decay = 0.0;
  c.train.lambda0 = 0.5;
  c.train.straight_through = StraightThrough::always;
  c.warm_start.gamma = 0.5;
  c.warm_start.tau_ratio = 0.1;
  c.warm_start.deflate = true;
  c.warm_start.refine_iterations = 1000;
  c.warm_start.structure_optimizer.lr = 0.0;
  c.warm_start.content_optimizer.lr = 0.01;
  c.seed = 7;
  return c;
}

OrderedJson TrainSummary::to_json() const {
  OrderedJson j;
  j["test_relative_mse"] = finite_or_string(test_relative_mse);
  j["total_width"] = total_width;
  j["budget"] = finite_or_string(budget);
  j["layer_widths"] = layer_widths;
  j["layer_flops"] = layer_flops;
  j["epochs"] = epochs;
  return j;
}

TrainOutcome run_training(const TrainRunConfig& config) {
  const TaskConfig& task = config.task;
  Rng rng(config.seed);
  const std::vector<double> scales =
      task.kind == TaskKind::planted_linear ? std::vector<double>{task.scales.front()} : task.scales;
  const Teacher teacher = planted_teacher(task.n, task.blocks, task.width, scales, rng);
  const Dataset train_set = sample_teacher(teacher, task.train_samples, rng);
  const Dataset test_set = sample_teacher(teacher, task.test_samples, rng);

  TrainConfig train = config.train;
  train.budget = config.absolute_budget.value_or(task.budget_factor * teacher.total_average_width());
  train.seed = config.seed;

  Mlp student;
  if (task.kind == TaskKind::planted_linear) {
    InitConfig init = config.warm_start;
    init.blocks = task.student_blocks;
    init.budget = 2.0 * task.student_blocks * train.budget;
    student.layers.push_back(fit_linear(train_set, init));
  } else {
    student = make_student(std::vector<int>(scales.size() + 1, task.n), task.student_blocks, task.initial_width,
                           task.content_scale, rng);
  }

  TrainOutcome outcome;
  outcome.result = gblr::train(student, train_set, train);
  const Mlp frozen = freeze_model(outcome.result.model);
  auto& s = outcome.summary;
  s.test_relative_mse = relative_mse(mlp_forward_batch(frozen, test_set.inputs, StructureMode::quantized), test_set.targets);
  s.total_width = outcome.result.model.total_average_width();
  s.budget = train.budget;
  s.epochs = train.epochs;
  for (const auto& layer : outcome.result.model.layers) {
    s.layer_widths.push_back(layer.weight.average_width());
    s.layer_flops.push_back(freeze(layer.weight).flops());
  }
  return outcome;
}

void write_training_outputs(const std::filesystem::path& dir, const TrainOutcome& outcome) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream metrics(dir / "metrics.jsonl");
    if (!metrics) throw UsageError("cannot write " + (dir / "metrics.jsonl").string());
    for (const auto& rec : outcome.result.log) metrics << rec.to_json() << '\n';
  }
  {
    std::ofstream summary(dir / "summary.json");
    if (!summary) throw UsageError("cannot write " + (dir / "summary.json").string());
    summary << outcome.summary.to_json().dump(2) << '\n';
  }
  const auto& layers = outcome.result.model.layers;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string stem = "layer" + std::to_string(i);
    io::write_gaudi(dir / (stem + ".gaudi"), layers[i].weight);
    io::write_gblr(dir / (stem + ".gblr"), freeze(layers[i].weight));
  }
}

// config files ---------------------------------------------------------------

void apply_config(RunConfig& config, const Json& j) {
  if (!j.is_object()) throw UsageError("config: top level must be an object");
  for (const auto& [section, value] : j.items()) {
    if (section == "compress") {
      auto& c = config.compress;
      auto fields = optimizer_fields(c.init);
      fields["budget"] = real(c.init.budget);
      fields["blocks"] = integer(c.init.blocks);
      fields["candidates"] = [&c](const Json& v, const std::string& key) { apply_candidates(c.candidates, v, key); };
      apply_section(value, section, fields);
    } else if (section == "warm_start") {
      auto& w = config.train.warm_start;
      auto fields = optimizer_fields(w);
      fields["gamma"] = real(w.gamma);
      fields["tau_ratio"] = real(w.tau_ratio);
      fields["deflate"] = boolean(w.deflate);
      apply_section(value, section, fields);
    } else if (section == "train") {
      auto& t = config.train.train;
      apply_section(value, section,
                    {{"epochs", integer(t.epochs)},
                     {"batch_size", integer(t.batch_size)},
                     {"lambda", real(t.lambda0)},
                     {"sigma_start", real(t.sigma_start)},
                     {"sigma_end", real(t.sigma_end)},
                     {"warmup", integer(t.sigma_warmup)},
                     {"straight_through", straight_through(t.straight_through)},
                     {"structure_lr", real(t.structure_optimizer.lr)},
                     {"content_lr", real(t.content_optimizer.lr)},
                     {"weight_decay", real(t.content_optimizer.weight_decay)},
                     {"seed", seed_value(config.train.seed)}});
    } else if (section == "task") {
      auto& t = config.train.task;
      apply_section(value, section,
                    {{"kind",
                      [&t](const Json& v, const std::string& key) {
                        if (v == "planted_linear") {
                          t.kind = TaskKind::planted_linear;
                        } else if (v == "planted_mlp") {
                          t.kind = TaskKind::planted_mlp;
                        } else {
                          bad_type(key, "\"planted_linear\" or \"planted_mlp\"");
                        }
                      }},
                     {"n", integer(t.n)},
                     {"blocks", integer(t.blocks)},
                     {"width", integer(t.width)},
                     {"scales", [&t](const Json& v, const std::string& key) { apply_scales(t.scales, v, key); }},
                     {"train_samples", integer(t.train_samples)},
                     {"test_samples", integer(t.test_samples)},
                     {"budget_factor", real(t.budget_factor)},
                     {"student_blocks", integer(t.student_blocks)},
                     {"initial_width", real(t.initial_width)},
                     {"content_scale", real(t.content_scale)}});
    } else if (section == "bench") {
      apply_section(value, section, {{"trials", integer(config.bench_trials)}});
    } else {
      throw UsageError("config: unknown section " + section);
    }
  }
  validate_run_config(config);
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  apply_config(config, j);
}

// analysis -------------------------------------------------------------------

Eigen::MatrixXi overlap_counts(const GblrMatrix& m) {
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(m.rows(), m.cols());
  for (const auto& b : m.structure().blocks())
    for (int i = 0; i < b.row_width; ++i)
      for (int j = 0; j < b.col_width; ++j)
        ++counts((b.row_location + i) % m.rows(), (b.col_location + j) % m.cols());
  return counts;
}

int numerical_rank(const DenseMatrix& m) {
  if (m.size() == 0) return 0;
  const Eigen::JacobiSVD<DenseMatrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] <= 0.0) return 0;
  return static_cast<int>((s.array() > 1e-6 * s[0]).count());
}

void write_pgm(std::ostream& out, const Eigen::MatrixXi& counts) {
  const int maxval = std::max(1, counts.size() > 0 ? counts.maxCoeff() : 0);
  out << "P2\n" << counts.cols() << ' ' << counts.rows() << '\n' << maxval << '\n';
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) out << (j ? " " : "") << counts(i, j);
    out << '\n';
  }
}

void write_csv(std::ostream& out, const Eigen::MatrixXi& counts) {
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) out << (j ? "," : "") << counts(i, j);
    out << '\n';
  }
}

// argv -----------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaudi-GBLR matrices: compress, train, check, bench, mask-dump"};
  app.require_subcommand(1);

  std::string input, output, config_path, suite, format = "pgm";
  std::optional<double> budget, lambda, sigma_start, sigma_end;
  std::optional<int> warmup, epochs, trials;
  std::optional<std::uint64_t> seed;
  bool negative = false;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config; its values override flags")->check(CLI::ExistingFile);
  };

  auto* compress_cmd = app.add_subcommand("compress", "Compress a dense matrix to a Gaudi-GBLR checkpoint");
  compress_cmd->add_option("--input", input, "Dense matrix file")->required();
  compress_cmd->add_option("--output", output, "Checkpoint to write");
  compress_cmd->add_option("--budget", budget, "Total width sum_k (wR_k + wC_k)");
  compress_cmd->add_option("--lambda", lambda, "Width penalty during refinement");
  add_config(compress_cmd);

  auto* train_cmd = app.add_subcommand("train", "Train a student on a planted-teacher task");
  train_cmd->add_option("--output", output, "Output directory");
  train_cmd->add_option("--budget", budget, "Budget on the summed average width (default: factor x teacher)");
  train_cmd->add_option("--lambda", lambda, "Width penalty while over budget");
  train_cmd->add_option("--sigma-start", sigma_start, "Initial sigma");
  train_cmd->add_option("--sigma-end", sigma_end, "Final sigma");
  train_cmd->add_option("--warmup", warmup, "Epochs at the initial sigma");
  train_cmd->add_option("--epochs", epochs, "Training epochs");
  train_cmd->add_option("--seed", seed, "Seed for data, initialization and batching");
  add_config(train_cmd);

  auto* check_cmd = app.add_subcommand("check", "Run verification suites");
  check_cmd->add_option("--suite", suite, "Comma-separated suite names (default: all)");
  check_cmd->add_option("--seed", seed, "Seed for the suites");
  check_cmd->add_flag("--negative-control", negative, "Run against deliberately corrupted references");

  auto* bench_cmd = app.add_subcommand("bench", "Time the product of a checkpoint against its dense form");
  bench_cmd->add_option("--input", input, "Checkpoint")->required();
  bench_cmd->add_option("--trials", trials, "Products per measurement");
  add_config(bench_cmd);

  auto* dump_cmd = app.add_subcommand("mask-dump", "Write block-overlap counts and report the rank");
  dump_cmd->add_option("--input", input, "Checkpoint or directory of checkpoints")->required();
  dump_cmd->add_option("--output", output, "Output file (directory when the input is a directory)");
  dump_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"pgm", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsageError;
  }

  try {
    RunConfig config;
    if (budget) {
      config.compress.init.budget = *budget;
      config.train.absolute_budget = *budget;
    }
    if (lambda) {
      config.compress.init.lambda = *lambda;
      config.train.train.lambda0 = *lambda;
    }
    if (sigma_start) config.train.train.sigma_start = *sigma_start;
    if (sigma_end) config.train.train.sigma_end = *sigma_end;
    if (warmup) config.train.train.sigma_warmup = *warmup;
    if (epochs) config.train.train.epochs = *epochs;
    if (seed) config.train.seed = *seed;
    if (trials) config.bench_trials = *trials;
    if (!config_path.empty()) {
      apply_config_file(config, config_path);
    } else {
      apply_config(config, Json::object());
    }

    if (*compress_cmd) {
      if (std::isnan(config.compress.init.budget))
        throw UsageError("compress needs --budget or a config with compress.budget");
      return cmd_compress(config, input, output, out);
    }
    if (*train_cmd) return cmd_train(config, output, out, err);
    if (*check_cmd) return cmd_check(suite, seed.value_or(verify::SuiteOptions{}.seed), negative, out);
    if (*bench_cmd) return cmd_bench(input, config.bench_trials, out);
    if (*dump_cmd) return cmd_mask_dump(input, output, format, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const io::FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace gblr::cli
