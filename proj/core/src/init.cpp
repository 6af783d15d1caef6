#include "gblr/init.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace gblr {
namespace {

// Half-sample symmetric reflection of index i into [0, n).
int reflect(int i, int n) {
  const int period = 2 * n;
  int r = i % period;
  if (r < 0) r += period;
  return r < n ? r : period - 1 - r;
}

Window window_from_abs(const RealVector& row, double gamma, double tau_ratio) {
  std::vector<double> a(static_cast<std::size_t>(row.size()));
  for (Eigen::Index j = 0; j < row.size(); ++j) a[static_cast<std::size_t>(j)] = std::abs(row[j]);
  return mask_from_row(a, gamma, tau_ratio);
}

// Subtract the best rank-1 approximation of the windowed part of `e`.
void deflate_window(DenseMatrix& e, Window row, Window col) {
  if (row.width == 0 || col.width == 0) return;
  const auto m = static_cast<int>(e.rows());
  const auto n = static_cast<int>(e.cols());
  DenseMatrix tile(row.width, col.width);
  for (int a = 0; a < row.width; ++a)
    for (int b = 0; b < col.width; ++b) tile(a, b) = e((row.location + a) % m, (col.location + b) % n);
  Eigen::JacobiSVD<DenseMatrix> svd(tile, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const DenseMatrix fit = svd.singularValues()[0] * svd.matrixU().col(0) * svd.matrixV().col(0).transpose();
  for (int a = 0; a < row.width; ++a)
    for (int b = 0; b < col.width; ++b) e((row.location + a) % m, (col.location + b) % n) -= fit(a, b);
}

}  // namespace

void InitConfig::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (!(tau_ratio > 0.0 && tau_ratio <= 1.0)) throw std::invalid_argument("tau_ratio must lie in (0, 1]");
  if (!(budget >= 0.0)) throw std::invalid_argument("budget must be nonnegative");
  if (blocks < 0) throw std::invalid_argument("block count must be nonnegative");
  if (refine_iterations < 0) throw std::invalid_argument("refine_iterations must be nonnegative");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
}

DenseMatrix gram(const DenseMatrix& w) { return w.transpose() * w; }

std::vector<int> row_order(const DenseMatrix& c) {
  std::vector<int> idx(static_cast<std::size_t>(c.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  const RealVector norms = c.rowwise().norm();
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return norms[a] > norms[b]; });
  return idx;
}

std::vector<double> gaussian_filter(std::span<const double> values, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const int n = static_cast<int>(values.size());
  const int radius = static_cast<int>(std::ceil(4.0 * gamma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    const double v = std::exp(-0.5 * (t / gamma) * (t / gamma));
    kernel[static_cast<std::size_t>(t + radius)] = v;
    total += v;
  }
  for (double& v : kernel) v /= total;
  std::vector<double> out(values.size(), 0.0);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int t = -radius; t <= radius; ++t)
      acc += kernel[static_cast<std::size_t>(t + radius)] * values[static_cast<std::size_t>(reflect(j + t, n))];
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

Window longest_run(std::span<const unsigned char> bits) {
  const int n = static_cast<int>(bits.size());
  if (n == 0) return {};
  if (std::all_of(bits.begin(), bits.end(), [](unsigned char b) { return b != 0; })) return {n, 0};
  // Walk 2n entries so runs crossing the end are seen whole; each run starts
  // after a zero, so the first pass from index 0 lists starts in ascending order.
  Window best;
  int run = 0;
  int start = 0;
  for (int t = 0; t < 2 * n; ++t) {
    if (bits[static_cast<std::size_t>(t % n)]) {
      if (run == 0) start = t;
      ++run;
      if (start < n && run > best.width) best = {run, start};
    } else {
      run = 0;
    }
  }
  return best;
}

Window mask_from_row(std::span<const double> row, double gamma, double tau_ratio) {
  std::vector<double> a(row.size());
  std::transform(row.begin(), row.end(), a.begin(), [](double v) { return std::abs(v); });
  const auto filtered = gaussian_filter(a, gamma);
  const double peak = filtered.empty() ? 0.0 : *std::max_element(filtered.begin(), filtered.end());
  if (!(peak > 0.0)) return {};
  const double tau = tau_ratio * peak;
  std::vector<unsigned char> bits(filtered.size());
  std::transform(filtered.begin(), filtered.end(), bits.begin(),
                 [tau](double v) -> unsigned char { return v >= tau ? 1 : 0; });
  return longest_run(bits);
}

GaudiGblrMatrix initialize(const DenseMatrix& w, const InitConfig& config) {
  config.validate();
  const auto m = static_cast<int>(w.rows());
  const auto n = static_cast<int>(w.cols());
  if (m < 1 || n < 1) throw std::invalid_argument("target matrix must be non-empty");
  const int k_count = config.blocks > 0 ? config.blocks : n;
  auto theta = GaudiGblrMatrix::zeros(m, n, k_count, config.smoothing);

  DenseMatrix residual = w;
  DenseMatrix c = gram(w);
  auto order = row_order(c);
  double used = 0.0;
  for (int k = 0; k < std::min(k_count, n); ++k) {
    const int pick = config.deflate ? order.front() : order[static_cast<std::size_t>(k)];
    const Window col = window_from_abs(c.row(pick).transpose(), config.gamma, config.tau_ratio);
    const RealVector col_mask = boxcar(n, col.width, col.location);
    const DenseMatrix masked = residual * col_mask.asDiagonal();
    const DenseMatrix r = masked * masked.transpose();
    Eigen::Index pivot = 0;
    r.rowwise().norm().maxCoeff(&pivot);
    const Window row = window_from_abs(r.row(pivot).transpose(), config.gamma, config.tau_ratio);
    used += col.width + row.width;
    if (used > config.budget) break;  // this block and all later ones stay at zero width
    theta.row_width[k] = row.width;
    theta.row_location[k] = row.location;
    theta.col_width[k] = col.width;
    theta.col_location[k] = col.location;
    if (config.deflate) {
      deflate_window(residual, row, col);
      c = gram(residual);
      order = row_order(c);
    }
  }

  Eigen::JacobiSVD<DenseMatrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-12 * (sv.size() > 0 ? sv[0] : 0.0);
  for (int k = 0; k < k_count; ++k) {
    if (k < sv.size() && sv[k] > cutoff) {
      const double scale = std::sqrt(sv[k]);
      theta.row_content.col(k) = svd.matrixU().col(k) * scale;
      theta.col_content.col(k) = svd.matrixV().col(k) * scale;
    } else {
      theta.row_width[k] = 0.0;
      theta.row_location[k] = 0.0;
      theta.col_width[k] = 0.0;
      theta.col_location[k] = 0.0;
    }
  }
  return theta;
}

RefineResult refine(GaudiGblrMatrix theta, const DenseMatrix& w, const InitConfig& config) {
  config.validate();
  theta.validate();
  if (w.rows() != theta.rows || w.cols() != theta.cols)
    throw std::invalid_argument("refine: target shape does not match theta");
  const StructureMode mode = structure_mode(theta.smoothing, config.straight_through);
  GaudiOptimizer opt;
  opt.structure = config.structure_optimizer;
  opt.content = config.content_optimizer;

  RefineResult result;
  result.theta = theta;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= config.refine_iterations; ++it) {
    const auto state = materialize(theta, mode);
    const DenseMatrix residual = state.dense - w;
    const double err2 = residual.squaredNorm();
    const double objective = err2 + config.lambda * theta.total_width();
    if (it == 0) result.initial_error = std::sqrt(err2);
    if (objective < best) {
      best = objective;
      result.theta = theta;
      result.final_error = std::sqrt(err2);
    }
    if (it == config.refine_iterations) break;
    const auto grads = backward_dense(theta, state, 2.0 * residual);
    opt.step(theta, grads, config.lambda);
    result.iterations = it + 1;
  }
  return result;
}

}  // namespace gblr
