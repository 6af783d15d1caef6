#include "gblr/nn.hpp"

#include <Eigen/Cholesky>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gblr {
namespace {

DenseMatrix activate(const DenseMatrix& h, Activation a) {
  return a == Activation::relu ? DenseMatrix(h.cwiseMax(0.0)) : h;
}

DenseMatrix activation_grad(const DenseMatrix& h, Activation a) {
  if (a == Activation::identity) return DenseMatrix::Ones(h.rows(), h.cols());
  return (h.array() > 0.0).cast<double>().matrix();
}

void set_smoothing(Mlp& model, Smoothing s) {
  for (auto& layer : model.layers) layer.weight.smoothing = s;
}

}  // namespace

void Mlp::validate() const {
  if (layers.empty()) throw std::invalid_argument("model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight.validate();
    if (layers[i].bias.size() != layers[i].weight.rows)
      throw std::invalid_argument("bias length of layer " + std::to_string(i) + " does not match its outputs");
    if (i > 0 && layers[i].weight.cols != layers[i - 1].weight.rows)
      throw std::invalid_argument("layer " + std::to_string(i) + " input size does not match previous output");
  }
}

int Mlp::input_size() const { return layers.at(0).in_features(); }
int Mlp::output_size() const { return layers.back().out_features(); }

double Mlp::total_average_width() const {
  double total = 0.0;
  for (const auto& layer : layers) total += layer.weight.average_width();
  return total;
}

Dataset Dataset::slice(const std::vector<int>& columns) const {
  Dataset out{DenseMatrix(inputs.rows(), static_cast<Eigen::Index>(columns.size())),
              DenseMatrix(targets.rows(), static_cast<Eigen::Index>(columns.size()))};
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = inputs.col(columns[i]);
    out.targets.col(static_cast<Eigen::Index>(i)) = targets.col(columns[i]);
  }
  return out;
}

DenseMatrix mlp_forward_batch(const Mlp& model, const DenseMatrix& inputs, StructureMode mode) {
  model.validate();
  if (inputs.rows() != model.input_size()) throw std::invalid_argument("input dimension mismatch");
  DenseMatrix z = inputs;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    DenseMatrix h = dense(layer.weight, mode) * z;
    h.colwise() += layer.bias;
    z = (i + 1 < model.layers.size()) ? activate(h, model.activation) : h;
  }
  return z;
}

RealVector mlp_forward(const Mlp& model, const RealVector& x, StructureMode mode) {
  return mlp_forward_batch(model, x, mode).col(0);
}

double task_loss(const DenseMatrix& outputs, const DenseMatrix& targets, LossKind kind) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols())
    throw std::invalid_argument("output/target shape mismatch");
  const auto count = static_cast<double>(outputs.cols());
  if (count == 0) return 0.0;
  if (kind == LossKind::squared_error) return (outputs - targets).squaredNorm() / count;
  double total = 0.0;
  for (Eigen::Index j = 0; j < outputs.cols(); ++j) {
    const double peak = outputs.col(j).maxCoeff();
    const double log_norm = peak + std::log((outputs.col(j).array() - peak).exp().sum());
    total -= targets.col(j).dot((outputs.col(j).array() - log_norm).matrix());
  }
  return total / count;
}

double objective(const Mlp& model, const Dataset& batch, double lambda_eff, LossKind kind, StructureMode mode) {
  double widths = 0.0;
  for (const auto& layer : model.layers) widths += layer.weight.total_width();
  return task_loss(mlp_forward_batch(model, batch.inputs, mode), batch.targets, kind) + lambda_eff * widths;
}

MlpGradients mlp_gradients(const Mlp& model, const Dataset& batch, LossKind kind, StructureMode mode) {
  model.validate();
  if (batch.inputs.rows() != model.input_size() || batch.targets.rows() != model.output_size())
    throw std::invalid_argument("batch dimension mismatch");
  const std::size_t depth = model.layers.size();
  std::vector<Materialized> states;
  std::vector<DenseMatrix> inputs;  // input to each layer
  std::vector<DenseMatrix> pre;     // pre-activation of each layer
  states.reserve(depth);
  DenseMatrix z = batch.inputs;
  for (std::size_t i = 0; i < depth; ++i) {
    const auto& layer = model.layers[i];
    states.push_back(materialize(layer.weight, mode));
    inputs.push_back(z);
    DenseMatrix h = states.back().dense * z;
    h.colwise() += layer.bias;
    pre.push_back(h);
    z = (i + 1 < depth) ? activate(h, model.activation) : h;
  }

  MlpGradients out;
  out.loss = task_loss(z, batch.targets, kind);
  const auto count = static_cast<double>(batch.inputs.cols());
  DenseMatrix grad;
  if (kind == LossKind::squared_error) {
    grad = 2.0 * (z - batch.targets) / count;
  } else {
    grad.resize(z.rows(), z.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const Eigen::ArrayXd e = (z.col(j).array() - z.col(j).maxCoeff()).exp();
      grad.col(j) = (e / e.sum()).matrix() - batch.targets.col(j);
    }
    grad /= count;
  }

  out.layers.resize(depth);
  for (std::size_t i = depth; i-- > 0;) {
    const auto& layer = model.layers[i];
    const DenseMatrix grad_w = grad * inputs[i].transpose();
    out.layers[i].weight = backward_dense(layer.weight, states[i], grad_w);
    out.layers[i].bias = grad.rowwise().sum();
    if (i > 0) {
      const DenseMatrix upstream = states[i].dense.transpose() * grad;
      grad = upstream.cwiseProduct(activation_grad(pre[i - 1], model.activation));
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (budget < 0.0) throw std::invalid_argument("budget must be nonnegative");
  if (lambda0 < 0.0) throw std::invalid_argument("lambda0 must be nonnegative");
  schedule().validate();
}

SigmaSchedule TrainConfig::schedule() const {
  return SigmaSchedule{sigma_warmup, sigma_start, sigma_end, std::max(epochs - 1, 0)};
}

std::string EpochRecord::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = loss;
  j["total_width"] = total_width;
  j["sigma"] = std::isinf(sigma) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(sigma);
  j["lambda"] = lambda;
  j["flops"] = flops;
  return j.dump();
}

TrainResult train(Mlp model, const Dataset& data, const TrainConfig& config) {
  config.validate();
  model.validate();
  if (data.size() == 0) throw std::invalid_argument("training set is empty");
  if (data.inputs.rows() != model.input_size() || data.targets.rows() != model.output_size())
    throw std::invalid_argument("dataset does not match the model dimensions");

  std::vector<GaudiOptimizer> opts(model.layers.size());
  std::vector<MomentState> bias_states(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    opts[i].structure = config.structure_optimizer;
    opts[i].content = config.content_optimizer;
    opts[i].train_structure = model.layers[i].train_structure;
    opts[i].train_content = model.layers[i].train_content;
  }
  AdamWConfig bias_config = config.content_optimizer;
  bias_config.weight_decay = 0.0;

  const BudgetRule rule{config.budget, config.lambda0};
  const SigmaSchedule schedule = config.schedule();
  Rng rng(config.seed);
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Smoothing sigma = schedule.value(epoch);
    set_smoothing(model, sigma);
    const StructureMode mode = structure_mode(sigma, config.straight_through);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int batches = 0;
    double lambda = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const Dataset batch = data.slice(std::vector<int>(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                        order.begin() + static_cast<std::ptrdiff_t>(stop)));
      auto grads = mlp_gradients(model, batch, config.loss, mode);
      if (!std::isfinite(grads.loss))
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batches));
      loss_sum += grads.loss;
      ++batches;
      for (std::size_t i = 0; i < model.layers.size(); ++i) {
        opts[i].adaptive(model.layers[i].weight, grads.layers[i].weight);
        if (model.layers[i].train_bias) {
          auto& b = model.layers[i].bias;
          adaptive_step({b.data(), static_cast<std::size_t>(b.size())},
                        {grads.layers[i].bias.data(), static_cast<std::size_t>(grads.layers[i].bias.size())},
                        bias_states[i], bias_config);
        }
      }
      lambda = rule.effective_lambda(model.total_average_width());
      for (std::size_t i = 0; i < model.layers.size(); ++i) opts[i].proximal(model.layers[i].weight, lambda);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / batches;
    rec.total_width = model.total_average_width();
    rec.sigma = sigma.sigma();
    rec.lambda = lambda;
    for (const auto& layer : model.layers) rec.flops.push_back(freeze(layer.weight).flops());
    result.log.push_back(std::move(rec));
  }
  result.model = std::move(model);
  return result;
}

RealVector Teacher::forward(const RealVector& x) const {
  RealVector z = x;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    RealVector h = weights[i].mvp(z) + biases[i];
    z = (i + 1 < weights.size() && activation == Activation::relu) ? RealVector(h.cwiseMax(0.0)) : h;
  }
  return z;
}

double Teacher::total_average_width() const {
  double total = 0.0;
  for (const auto& w : weights) total += w.structure().average_width();
  return total;
}

Teacher planted_teacher(int n, int blocks, int width, const std::vector<double>& scales, Rng& rng) {
  Teacher t;
  for (double scale : scales) {
    const auto planted = planted_gblr(n, n, blocks, width, rng);
    std::vector<RealVector> u;
    std::vector<RealVector> v;
    for (int k = 0; k < planted.blocks(); ++k) {
      u.push_back(planted.row_content(k) * scale);
      v.push_back(planted.col_content(k));
    }
    t.weights.emplace_back(planted.structure(), std::move(u), std::move(v));
    t.biases.push_back(0.1 * random_vector(n, rng));
  }
  return t;
}

Dataset sample_teacher(const Teacher& teacher, int count, Rng& rng) {
  const int in = teacher.weights.front().cols();
  const int out = teacher.weights.back().rows();
  Dataset d{random_dense(in, count, rng), DenseMatrix(out, count)};
  for (int j = 0; j < count; ++j) d.targets.col(j) = teacher.forward(d.inputs.col(j));
  return d;
}

Dataset make_blobs(int dim, int count, double separation, Rng& rng) {
  RealVector direction = random_vector(dim, rng);
  direction.normalize();
  Dataset d{random_dense(dim, count, rng), DenseMatrix::Zero(2, count)};
  for (int j = 0; j < count; ++j) {
    const int label = j % 2;
    d.inputs.col(j) += (label == 0 ? -0.5 : 0.5) * separation * direction;
    d.targets(label, j) = 1.0;
  }
  return d;
}

Mlp make_student(const std::vector<int>& sizes, int blocks, double initial_width, double content_scale, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("a model needs at least two layer sizes");
  Mlp model;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int in = sizes[i];
    const int out = sizes[i + 1];
    GaudiLinear layer{GaudiGblrMatrix::zeros(out, in, blocks), RealVector::Zero(out)};
    layer.weight.row_width.setConstant(std::min<double>(initial_width, out));
    layer.weight.col_width.setConstant(std::min<double>(initial_width, in));
    for (int k = 0; k < blocks; ++k) {  // spread the windows evenly
      layer.weight.row_location[k] = std::floor(static_cast<double>(k) * out / blocks);
      layer.weight.col_location[k] = std::floor(static_cast<double>(k) * in / blocks);
    }
    layer.weight.row_content = content_scale * random_dense(out, blocks, rng);
    layer.weight.col_content = content_scale * random_dense(in, blocks, rng);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

GaudiLinear fit_linear(const Dataset& data, const InitConfig& config) {
  const int n = static_cast<int>(data.inputs.rows());
  if (data.size() == 0 || data.targets.cols() != data.inputs.cols())
    throw std::invalid_argument("fit_linear: empty or mismatched dataset");
  DenseMatrix x(n + 1, data.size());
  x.topRows(n) = data.inputs;
  x.row(n).setOnes();
  const DenseMatrix wb = (x * x.transpose()).ldlt().solve(x * data.targets.transpose()).transpose();
  const DenseMatrix w = wb.leftCols(n);
  GaudiGblrMatrix theta = initialize(w, config);
  if (config.refine_iterations > 0) theta = refine(std::move(theta), w, config).theta;
  return GaudiLinear{std::move(theta), wb.col(n)};
}

Mlp freeze_model(const Mlp& model) {
  Mlp out = model;
  for (auto& layer : out.layers) layer.weight = GaudiGblrMatrix::from_frozen(freeze(layer.weight));
  return out;
}

}  // namespace gblr
