#include "gblr/gblr_matrix.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gblr {
namespace {

void check_window(int width, int location, int extent, const char* what) {
  if (width < 0 || width > extent)
    throw std::invalid_argument(std::string(what) + " width " + std::to_string(width) + " outside [0, " +
                                std::to_string(extent) + "]");
  if (location < 0 || location >= extent)
    throw std::invalid_argument(std::string(what) + " location " + std::to_string(location) +
                                " outside [0, " + std::to_string(extent - 1) + "]");
}

struct NoCount {
  void add(std::uint64_t) noexcept {}
};
struct Count {
  std::uint64_t* total;
  void add(std::uint64_t n) noexcept { *total += n; }
};

template <class Counter>
RealVector mvp_kernel(const BlockStructure& s, const std::vector<RealVector>& u,
                      const std::vector<RealVector>& v, std::span<const double> x, Counter counter) {
  if (static_cast<int>(x.size()) != s.cols())
    throw std::invalid_argument("mvp: input length " + std::to_string(x.size()) + " != cols " +
                                std::to_string(s.cols()));
  const int m = s.rows();
  const int n = s.cols();
  RealVector y = RealVector::Zero(m);
  for (int k = 0; k < s.size(); ++k) {
    const Block& b = s[k];
    const auto& vk = v[static_cast<std::size_t>(k)];
    const auto& uk = u[static_cast<std::size_t>(k)];
    double t = 0.0;
    int col = b.col_location;
    for (int j = 0; j < b.col_width; ++j) {
      t += vk[j] * x[static_cast<std::size_t>(col)];
      if (++col == n) col = 0;
    }
    counter.add(static_cast<std::uint64_t>(b.col_width));
    int row = b.row_location;
    for (int i = 0; i < b.row_width; ++i) {
      y[row] += uk[i] * t;
      if (++row == m) row = 0;
    }
    counter.add(static_cast<std::uint64_t>(b.row_width));
  }
  return y;
}

}  // namespace

BlockStructure::BlockStructure(int rows, int cols, std::vector<Block> blocks)
    : rows_(rows), cols_(cols), blocks_(std::move(blocks)) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("matrix dimensions must be positive");
  for (const auto& b : blocks_) {
    check_window(b.row_width, b.row_location, rows_, "row");
    check_window(b.col_width, b.col_location, cols_, "column");
  }
}

std::int64_t BlockStructure::total_width() const noexcept {
  std::int64_t total = 0;
  for (const auto& b : blocks_) total += b.row_width + b.col_width;
  return total;
}

double BlockStructure::average_width() const noexcept {
  if (blocks_.empty()) return 0.0;
  return static_cast<double>(total_width()) / (2.0 * static_cast<double>(blocks_.size()));
}

GblrMatrix::GblrMatrix(BlockStructure structure, std::vector<RealVector> row_content,
                       std::vector<RealVector> col_content)
    : structure_(std::move(structure)), u_(std::move(row_content)), v_(std::move(col_content)) {
  const auto k = static_cast<std::size_t>(structure_.size());
  if (u_.size() != k || v_.size() != k)
    throw std::invalid_argument("content count does not match block count");
  for (std::size_t i = 0; i < k; ++i) {
    const Block& b = structure_.blocks()[i];
    if (u_[i].size() != b.row_width || v_[i].size() != b.col_width)
      throw std::invalid_argument("cropped content length of block " + std::to_string(i) +
                                  " does not match its widths");
  }
}

GblrMatrix GblrMatrix::zeros(BlockStructure structure) {
  std::vector<RealVector> u;
  std::vector<RealVector> v;
  for (const auto& b : structure.blocks()) {
    u.push_back(RealVector::Zero(b.row_width));
    v.push_back(RealVector::Zero(b.col_width));
  }
  return GblrMatrix(std::move(structure), std::move(u), std::move(v));
}

DenseMatrix GblrMatrix::to_dense() const {
  const int m = rows();
  const int n = cols();
  DenseMatrix w = DenseMatrix::Zero(m, n);
  for (int k = 0; k < blocks(); ++k) {
    const Block& b = structure_[k];
    const auto& uk = u_[static_cast<std::size_t>(k)];
    const auto& vk = v_[static_cast<std::size_t>(k)];
    for (int j = 0; j < b.col_width; ++j) {
      const int col = (b.col_location + j) % n;
      for (int i = 0; i < b.row_width; ++i) w((b.row_location + i) % m, col) += uk[i] * vk[j];
    }
  }
  return w;
}

RealVector GblrMatrix::mvp(std::span<const double> x) const {
  return mvp_kernel(structure_, u_, v_, x, NoCount{});
}

RealVector GblrMatrix::mvp(std::span<const double> x, MultiplicationCounter& counter) const {
  return mvp_kernel(structure_, u_, v_, x, Count{&counter.count});
}

GblrMatrix embed_low_rank(const DenseMatrix& u, const DenseMatrix& v, int block_count) {
  if (u.cols() != v.cols()) throw std::invalid_argument("U and V must have the same number of columns");
  if (u.rows() < 1 || v.rows() < 1) throw std::invalid_argument("matrix dimensions must be positive");
  const auto rank = static_cast<int>(u.cols());
  if (block_count < rank)
    throw std::invalid_argument("block count " + std::to_string(block_count) + " below rank " +
                                std::to_string(rank));
  const int m = static_cast<int>(u.rows());
  const int n = static_cast<int>(v.rows());
  std::vector<Block> blocks;
  std::vector<RealVector> uc;
  std::vector<RealVector> vc;
  for (int k = 0; k < block_count; ++k) {
    if (k < rank) {
      blocks.push_back({m, 0, n, 0});
      uc.emplace_back(u.col(k));
      vc.emplace_back(v.col(k));
    } else {
      blocks.push_back({});
      uc.emplace_back();
      vc.emplace_back();
    }
  }
  return GblrMatrix(BlockStructure(m, n, std::move(blocks)), std::move(uc), std::move(vc));
}

GblrMatrix embed_block_sparse(int rows, int cols, const std::vector<PlacedBlock>& blocks, int block_count) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("matrix dimensions must be positive");
  std::vector<unsigned char> occupied(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0);
  std::vector<Block> out;
  std::vector<RealVector> uc;
  std::vector<RealVector> vc;
  for (const auto& pb : blocks) {
    const auto h = static_cast<int>(pb.values.rows());
    const auto w = static_cast<int>(pb.values.cols());
    if (h > rows || w > cols) throw std::invalid_argument("placed block larger than the matrix");
    check_window(h, pb.row, rows, "block row");
    check_window(w, pb.col, cols, "block column");
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        auto& cell = occupied[static_cast<std::size_t>((pb.row + i) % rows) * static_cast<std::size_t>(cols) +
                              static_cast<std::size_t>((pb.col + j) % cols)];
        if (cell) throw std::invalid_argument("block-sparse input blocks overlap");
        cell = 1;
      }
    }
    if (h == 0 || w == 0) continue;
    Eigen::JacobiSVD<DenseMatrix> svd(pb.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-12 * (sv.size() > 0 ? sv[0] : 0.0);
    for (Eigen::Index r = 0; r < sv.size(); ++r) {
      if (!(sv[r] > cutoff)) break;
      const double scale = std::sqrt(sv[r]);
      out.push_back({h, pb.row, w, pb.col});
      uc.emplace_back(svd.matrixU().col(r) * scale);
      vc.emplace_back(svd.matrixV().col(r) * scale);
    }
  }
  if (block_count > 0) {
    if (static_cast<int>(out.size()) > block_count)
      throw std::invalid_argument("block-sparse input needs " + std::to_string(out.size()) +
                                  " rank-1 blocks, more than " + std::to_string(block_count));
    while (static_cast<int>(out.size()) < block_count) {
      out.push_back({});
      uc.emplace_back();
      vc.emplace_back();
    }
  }
  return GblrMatrix(BlockStructure(rows, cols, std::move(out)), std::move(uc), std::move(vc));
}

GblrMatrix embed_blr(const DenseMatrix& matrix, int tile) {
  const auto m = static_cast<int>(matrix.rows());
  const auto n = static_cast<int>(matrix.cols());
  if (tile < 1 || m < 1 || n < 1 || m % tile != 0 || n % tile != 0)
    throw std::invalid_argument("matrix dimensions must be divisible by the tile size");
  std::vector<Block> blocks;
  std::vector<RealVector> uc;
  std::vector<RealVector> vc;
  for (int bi = 0; bi < m / tile; ++bi) {
    for (int bj = 0; bj < n / tile; ++bj) {
      const DenseMatrix t = matrix.block(bi * tile, bj * tile, tile, tile);
      Eigen::JacobiSVD<DenseMatrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      if (sv.size() > 1 && sv[1] > 1e-8 * std::max(sv[0], 1.0))
        throw std::invalid_argument("tile (" + std::to_string(bi) + ", " + std::to_string(bj) +
                                    ") has rank > 1");
      blocks.push_back({tile, bi * tile, tile, bj * tile});
      const double scale = std::sqrt(sv[0]);
      uc.emplace_back(svd.matrixU().col(0) * scale);
      vc.emplace_back(svd.matrixV().col(0) * scale);
    }
  }
  return GblrMatrix(BlockStructure(m, n, std::move(blocks)), std::move(uc), std::move(vc));
}

BlockStructure interpolate_structure(const BlockStructure& a, const BlockStructure& b, double alpha) {
  if (a.size() != b.size()) throw std::invalid_argument("structures have different block counts");
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("structures have different dimensions");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  const auto mix = [alpha](int x, int y) {
    return static_cast<int>(std::floor(alpha * x + (1.0 - alpha) * y));
  };
  std::vector<Block> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (int k = 0; k < a.size(); ++k) {
    const Block& p = a[k];
    const Block& q = b[k];
    out.push_back({mix(p.row_width, q.row_width), mix(p.row_location, q.row_location),
                   mix(p.col_width, q.col_width), mix(p.col_location, q.col_location)});
  }
  return BlockStructure(a.rows(), a.cols(), std::move(out));
}

}  // namespace gblr
