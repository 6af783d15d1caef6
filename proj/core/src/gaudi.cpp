#include "gblr/gaudi.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gblr {
namespace {

void check_range(const RealVector& v, double upper, const char* what) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!(v[k] >= 0.0 && v[k] <= upper))
      throw std::invalid_argument(std::string(what) + "[" + std::to_string(k) + "] = " + std::to_string(v[k]) +
                                  " outside [0, " + std::to_string(upper) + "]");
  }
}

double quantize(double v, double upper) { return std::clamp(round_half_even(v), 0.0, upper); }

MaskParams mask_params(double width, double location, int length, StructureMode mode) {
  if (mode == StructureMode::quantized) {
    const double n = length;
    return {quantize(width, n), quantize(location, n), length};
  }
  return {width, location, length};
}

}  // namespace

GaudiGblrMatrix GaudiGblrMatrix::zeros(int rows, int cols, int blocks, Smoothing smoothing) {
  if (rows < 1 || cols < 1 || blocks < 0) throw std::invalid_argument("invalid Gaudi-GBLR dimensions");
  GaudiGblrMatrix t;
  t.rows = rows;
  t.cols = cols;
  t.row_width = RealVector::Zero(blocks);
  t.row_location = RealVector::Zero(blocks);
  t.col_width = RealVector::Zero(blocks);
  t.col_location = RealVector::Zero(blocks);
  t.row_content = DenseMatrix::Zero(rows, blocks);
  t.col_content = DenseMatrix::Zero(cols, blocks);
  t.smoothing = smoothing;
  return t;
}

GaudiGblrMatrix GaudiGblrMatrix::from_frozen(const GblrMatrix& frozen, Smoothing smoothing) {
  auto t = zeros(frozen.rows(), frozen.cols(), frozen.blocks(), smoothing);
  for (int k = 0; k < frozen.blocks(); ++k) {
    const Block& b = frozen.structure()[k];
    t.row_width[k] = b.row_width;
    t.row_location[k] = b.row_location;
    t.col_width[k] = b.col_width;
    t.col_location[k] = b.col_location;
    for (int i = 0; i < b.row_width; ++i)
      t.row_content((b.row_location + i) % t.rows, k) = frozen.row_content(k)[i];
    for (int j = 0; j < b.col_width; ++j)
      t.col_content((b.col_location + j) % t.cols, k) = frozen.col_content(k)[j];
  }
  return t;
}

void GaudiGblrMatrix::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("Gaudi-GBLR dimensions must be positive");
  const auto k = row_width.size();
  if (row_location.size() != k || col_width.size() != k || col_location.size() != k)
    throw std::invalid_argument("structure arrays differ in length");
  if (row_content.rows() != rows || row_content.cols() != k || col_content.rows() != cols ||
      col_content.cols() != k)
    throw std::invalid_argument("content shape does not match (rows x K, cols x K)");
  check_range(row_width, rows, "row_width");
  check_range(row_location, rows, "row_location");
  check_range(col_width, cols, "col_width");
  check_range(col_location, cols, "col_location");
}

void GaudiGblrMatrix::clamp_structure() {
  const auto clip = [](RealVector& v, double upper) {
    v = v.cwiseMax(0.0).cwiseMin(upper);
  };
  clip(row_width, rows);
  clip(row_location, rows);
  clip(col_width, cols);
  clip(col_location, cols);
}

double GaudiGblrMatrix::total_width() const noexcept { return row_width.sum() + col_width.sum(); }

double GaudiGblrMatrix::average_width() const noexcept {
  return blocks() == 0 ? 0.0 : total_width() / (2.0 * blocks());
}

GradBundle GradBundle::zeros_like(const GaudiGblrMatrix& theta) {
  const int k = theta.blocks();
  return {DenseMatrix::Zero(theta.rows, k), DenseMatrix::Zero(theta.cols, k), RealVector::Zero(k),
          RealVector::Zero(k),          RealVector::Zero(k),                RealVector::Zero(k)};
}

bool GradBundle::all_finite() const {
  return d_row_content.allFinite() && d_col_content.allFinite() && d_row_width.allFinite() &&
         d_row_location.allFinite() && d_col_width.allFinite() && d_col_location.allFinite();
}

GradBundle& GradBundle::operator+=(const GradBundle& o) {
  d_row_content += o.d_row_content;
  d_col_content += o.d_col_content;
  d_row_width += o.d_row_width;
  d_row_location += o.d_row_location;
  d_col_width += o.d_col_width;
  d_col_location += o.d_col_location;
  return *this;
}

Materialized materialize(const GaudiGblrMatrix& theta, StructureMode mode) {
  theta.validate();
  const int k_count = theta.blocks();
  Materialized out;
  out.masked_rows.resize(theta.rows, k_count);
  out.masked_cols.resize(theta.cols, k_count);
  out.row_masks.reserve(static_cast<std::size_t>(k_count));
  out.col_masks.reserve(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    out.row_masks.push_back(gaudi_mask_with_grads(
        mask_params(theta.row_width[k], theta.row_location[k], theta.rows, mode), theta.smoothing));
    out.col_masks.push_back(gaudi_mask_with_grads(
        mask_params(theta.col_width[k], theta.col_location[k], theta.cols, mode), theta.smoothing));
    out.masked_rows.col(k) = out.row_masks.back().mask.cwiseProduct(theta.row_content.col(k));
    out.masked_cols.col(k) = out.col_masks.back().mask.cwiseProduct(theta.col_content.col(k));
  }
  out.dense = out.masked_rows * out.masked_cols.transpose();
  return out;
}

DenseMatrix dense(const GaudiGblrMatrix& theta, StructureMode mode) {
  theta.validate();
  const int k_count = theta.blocks();
  DenseMatrix a(theta.rows, k_count);
  DenseMatrix b(theta.cols, k_count);
  for (int k = 0; k < k_count; ++k) {
    a.col(k) = gaudi_mask(mask_params(theta.row_width[k], theta.row_location[k], theta.rows, mode),
                          theta.smoothing)
                   .cwiseProduct(theta.row_content.col(k));
    b.col(k) = gaudi_mask(mask_params(theta.col_width[k], theta.col_location[k], theta.cols, mode),
                          theta.smoothing)
                   .cwiseProduct(theta.col_content.col(k));
  }
  return a * b.transpose();
}

RealVector forward(const GaudiGblrMatrix& theta, const RealVector& x, StructureMode mode) {
  if (x.size() != theta.cols)
    throw std::invalid_argument("forward: input length " + std::to_string(x.size()) + " != cols " +
                                std::to_string(theta.cols));
  return dense(theta, mode) * x;
}

GradBundle backward_dense(const GaudiGblrMatrix& theta, const Materialized& state, const DenseMatrix& g) {
  if (g.rows() != theta.rows || g.cols() != theta.cols)
    throw std::invalid_argument("backward: upstream gradient has the wrong shape");
  const int k_count = theta.blocks();
  // dL/d(mask_R .* u_k) and dL/d(mask_C .* v_k) for all k at once.
  const DenseMatrix d_rows = g * state.masked_cols;
  const DenseMatrix d_cols = g.transpose() * state.masked_rows;
  GradBundle out = GradBundle::zeros_like(theta);
  for (int k = 0; k < k_count; ++k) {
    const auto& rm = state.row_masks[static_cast<std::size_t>(k)];
    const auto& cm = state.col_masks[static_cast<std::size_t>(k)];
    out.d_row_content.col(k) = rm.mask.cwiseProduct(d_rows.col(k));
    out.d_col_content.col(k) = cm.mask.cwiseProduct(d_cols.col(k));
    const RealVector d_row_mask = theta.row_content.col(k).cwiseProduct(d_rows.col(k));
    const RealVector d_col_mask = theta.col_content.col(k).cwiseProduct(d_cols.col(k));
    out.d_row_width[k] = d_row_mask.dot(rm.d_width);
    out.d_row_location[k] = d_row_mask.dot(rm.d_location);
    out.d_col_width[k] = d_col_mask.dot(cm.d_width);
    out.d_col_location[k] = d_col_mask.dot(cm.d_location);
  }
  return out;
}

GradBundle backward(const GaudiGblrMatrix& theta, const RealVector& x, const RealVector& gy, StructureMode mode) {
  if (x.size() != theta.cols || gy.size() != theta.rows)
    throw std::invalid_argument("backward: x or gy has the wrong length");
  const auto state = materialize(theta, mode);
  return backward_dense(theta, state, gy * x.transpose());
}

double round_half_even(double v) noexcept {
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(v);
  std::fesetround(saved);
  return r;
}

GblrMatrix freeze(const GaudiGblrMatrix& theta) {
  theta.validate();
  std::vector<Block> blocks;
  std::vector<RealVector> u;
  std::vector<RealVector> v;
  const auto wrap = [](double l, int n) { return static_cast<int>(round_half_even(l)) % n; };
  for (int k = 0; k < theta.blocks(); ++k) {
    Block b{static_cast<int>(quantize(theta.row_width[k], theta.rows)), wrap(theta.row_location[k], theta.rows),
            static_cast<int>(quantize(theta.col_width[k], theta.cols)), wrap(theta.col_location[k], theta.cols)};
    RealVector uk(b.row_width);
    for (int i = 0; i < b.row_width; ++i) uk[i] = theta.row_content((b.row_location + i) % theta.rows, k);
    RealVector vk(b.col_width);
    for (int j = 0; j < b.col_width; ++j) vk[j] = theta.col_content((b.col_location + j) % theta.cols, k);
    blocks.push_back(b);
    u.push_back(std::move(uk));
    v.push_back(std::move(vk));
  }
  return GblrMatrix(BlockStructure(theta.rows, theta.cols, std::move(blocks)), std::move(u), std::move(v));
}

}  // namespace gblr
