#include "gblr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gblr {
namespace {

std::span<double> as_span(RealVector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> as_span(DenseMatrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> as_span(const RealVector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
std::span<const double> as_span(const DenseMatrix& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

}  // namespace

void adaptive_step(std::span<double> params, std::span<const double> grad, MomentState& state,
                   const AdamWConfig& c) {
  if (params.size() != grad.size()) throw std::invalid_argument("parameter and gradient sizes differ");
  for (double g : grad)
    if (std::isnan(g)) throw std::domain_error("NaN gradient");
  if (state.first.size() != params.size()) {
    state.first.assign(params.size(), 0.0);
    state.second.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    state.first[i] = c.beta1 * state.first[i] + (1.0 - c.beta1) * g;
    state.second[i] = c.beta2 * state.second[i] + (1.0 - c.beta2) * g * g;
    // beta = 0 makes the bias correction 1; with beta = 1 there is nothing to correct.
    const double m_hat = bias1 > 0.0 ? state.first[i] / bias1 : state.first[i];
    const double v_hat = bias2 > 0.0 ? state.second[i] / bias2 : state.second[i];
    params[i] -= c.lr * c.weight_decay * params[i];
    params[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

double soft_shrink(double x, double mu) noexcept { return x > mu ? x - mu : 0.0; }

void proximal_width_step(std::span<double> widths, double threshold, double upper) noexcept {
  for (double& w : widths) w = std::clamp(soft_shrink(w, threshold), 0.0, upper);
}

void pgd_width_update(std::span<double> widths, std::span<const double> grad, MomentState& state,
                      const AdamWConfig& config, double lambda_eff, double upper) {
  adaptive_step(widths, grad, state, config);
  proximal_width_step(widths, config.lr * lambda_eff, upper);
}

void SigmaSchedule::validate() const {
  if (!(start > 0.0)) throw std::invalid_argument("sigma schedule start must be positive");
  if (!(start <= end)) throw std::invalid_argument("sigma schedule requires start <= end");
  if (std::isinf(end) && start != end)
    throw std::invalid_argument("sigma schedule cannot interpolate towards infinity");
  if (warmup < 0 || final_epoch < 0) throw std::invalid_argument("sigma schedule epochs must be >= 0");
}

Smoothing SigmaSchedule::value(int epoch) const {
  validate();
  if (epoch < 0) throw std::invalid_argument("epoch must be >= 0");
  if (epoch < warmup || start == end) return Smoothing(start);
  if (final_epoch <= warmup) return Smoothing(end);
  const double frac = std::min(1.0, static_cast<double>(epoch - warmup) / (final_epoch - warmup));
  return Smoothing(start + (end - start) * frac);
}

StructureMode structure_mode(Smoothing smoothing, StraightThrough policy) noexcept {
  const bool quantize = policy == StraightThrough::always ||
                        (policy == StraightThrough::at_infinity && smoothing.is_infinite());
  return quantize ? StructureMode::quantized : StructureMode::continuous;
}

std::vector<double> ste_quantize(std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), round_half_even);
  return out;
}

void project(std::span<double> values, double upper) noexcept {
  for (double& v : values) v = std::clamp(v, 0.0, upper);
}

void GaudiOptimizer::adaptive(GaudiGblrMatrix& theta, const GradBundle& g) {
  if (train_content) {
    adaptive_step(as_span(theta.row_content), as_span(g.d_row_content), row_content, content);
    adaptive_step(as_span(theta.col_content), as_span(g.d_col_content), col_content, content);
  }
  if (train_structure) {
    adaptive_step(as_span(theta.row_width), as_span(g.d_row_width), row_width, structure);
    adaptive_step(as_span(theta.row_location), as_span(g.d_row_location), row_location, structure);
    adaptive_step(as_span(theta.col_width), as_span(g.d_col_width), col_width, structure);
    adaptive_step(as_span(theta.col_location), as_span(g.d_col_location), col_location, structure);
  }
}

void GaudiOptimizer::proximal(GaudiGblrMatrix& theta, double lambda_eff) const {
  const double threshold = train_structure ? structure.lr * lambda_eff : 0.0;
  proximal_width_step(as_span(theta.row_width), threshold, theta.rows);
  proximal_width_step(as_span(theta.col_width), threshold, theta.cols);
  project(as_span(theta.row_location), theta.rows);
  project(as_span(theta.col_location), theta.cols);
}

void GaudiOptimizer::step(GaudiGblrMatrix& theta, const GradBundle& grads, double lambda_eff) {
  adaptive(theta, grads);
  proximal(theta, lambda_eff);
}

}  // namespace gblr
