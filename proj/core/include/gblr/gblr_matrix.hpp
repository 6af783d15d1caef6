#pragma once

// Frozen (inference-time) Generalized Block-Low-Rank matrices.
//
// An m x n GBLR matrix is a sum of K zero-padded rank-1 blocks
//
//   W = sum_k (boxcar(wR_k, lR_k) .* u_k) (boxcar(wC_k, lC_k) .* v_k)^T
//
// with cyclic block windows. Only the cropped content (u_k of length wR_k,
// v_k of length wC_k) is stored, so a matrix-vector product costs exactly
// sum_k (wR_k + wC_k) multiplications.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace gblr {

using RealVector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

struct Block {
  int row_width = 0;
  int row_location = 0;
  int col_width = 0;
  int col_location = 0;

  friend bool operator==(const Block&, const Block&) = default;
};

class BlockStructure {
 public:
  BlockStructure() = default;
  /// Throws std::invalid_argument if any width/location is out of range.
  BlockStructure(int rows, int cols, std::vector<Block> blocks);

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }
  [[nodiscard]] int size() const noexcept { return static_cast<int>(blocks_.size()); }
  [[nodiscard]] const Block& operator[](int k) const { return blocks_.at(static_cast<std::size_t>(k)); }
  [[nodiscard]] const std::vector<Block>& blocks() const noexcept { return blocks_; }

  /// sum_k (wR_k + wC_k)
  [[nodiscard]] std::int64_t total_width() const noexcept;
  /// total_width / (2K); zero when K = 0.
  [[nodiscard]] double average_width() const noexcept;
  /// True when average_width() <= s, i.e. membership in GBLR(n, K, s).
  [[nodiscard]] bool within_budget(double s) const noexcept { return average_width() <= s; }

  friend bool operator==(const BlockStructure&, const BlockStructure&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Block> blocks_;
};

/// Counts scalar multiplications performed by an instrumented product.
struct MultiplicationCounter {
  std::uint64_t count = 0;
};

class GblrMatrix {
 public:
  GblrMatrix() = default;
  /// `row_content[k]` must have length wR_k and `col_content[k]` length wC_k.
  GblrMatrix(BlockStructure structure, std::vector<RealVector> row_content,
             std::vector<RealVector> col_content);

  /// Zero content of the right cropped lengths.
  static GblrMatrix zeros(BlockStructure structure);

  [[nodiscard]] int rows() const noexcept { return structure_.rows(); }
  [[nodiscard]] int cols() const noexcept { return structure_.cols(); }
  [[nodiscard]] int blocks() const noexcept { return structure_.size(); }
  [[nodiscard]] const BlockStructure& structure() const noexcept { return structure_; }
  [[nodiscard]] const RealVector& row_content(int k) const { return u_.at(static_cast<std::size_t>(k)); }
  [[nodiscard]] const RealVector& col_content(int k) const { return v_.at(static_cast<std::size_t>(k)); }

  [[nodiscard]] DenseMatrix to_dense() const;

  /// y = W x over cropped windows. Throws std::invalid_argument on size mismatch.
  [[nodiscard]] RealVector mvp(std::span<const double> x) const;
  [[nodiscard]] RealVector mvp(std::span<const double> x, MultiplicationCounter& counter) const;
  [[nodiscard]] RealVector mvp(const RealVector& x) const {
    return mvp(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  /// Multiplications per product: sum_k (wR_k + wC_k).
  [[nodiscard]] std::int64_t flops() const noexcept { return structure_.total_width(); }

 private:
  BlockStructure structure_;
  std::vector<RealVector> u_;
  std::vector<RealVector> v_;
};

/// Low-rank U V^T (U: m x r, V: n x r) as r full-width blocks padded with
/// zero-width blocks up to `block_count`. Requires block_count >= r.
[[nodiscard]] GblrMatrix embed_low_rank(const DenseMatrix& u, const DenseMatrix& v, int block_count);

/// Dense sub-block placed at (row, col); windows wrap cyclically.
struct PlacedBlock {
  int row = 0;
  int col = 0;
  DenseMatrix values;
};

/// Block-sparse matrix as overlapping rank-1 clones: each placed block is split
/// by SVD into rank-many rank-1 blocks sharing its window. Overlapping input
/// blocks are rejected. When `block_count` > 0 the result is padded with
/// zero-width blocks to that count (and rejected if it would exceed it).
[[nodiscard]] GblrMatrix embed_block_sparse(int rows, int cols, const std::vector<PlacedBlock>& blocks,
                                            int block_count = 0);

/// Block-low-rank matrix with s x s tiles of rank <= 1: one block per tile,
/// K = (rows / s) * (cols / s). Rejects non-divisible sizes and tiles of rank > 1.
[[nodiscard]] GblrMatrix embed_blr(const DenseMatrix& matrix, int tile);

/// Elementwise floor(alpha * a + (1 - alpha) * b) of widths and locations.
[[nodiscard]] BlockStructure interpolate_structure(const BlockStructure& a, const BlockStructure& b,
                                                   double alpha);

}  // namespace gblr
