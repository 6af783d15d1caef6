#include "gblr/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gblr {
namespace {

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

RealVector random_vector(int size, Rng& rng) {
  RealVector v(size);
  for (int i = 0; i < size; ++i) v[i] = standard_normal(rng);
  return v;
}

DenseMatrix random_dense(int rows, int cols, Rng& rng) {
  DenseMatrix m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = standard_normal(rng);
  return m;
}

BlockStructure random_structure(int rows, int cols, int blocks, Rng& rng) {
  std::vector<Block> out;
  out.reserve(static_cast<std::size_t>(blocks));
  for (int k = 0; k < blocks; ++k) {
    out.push_back({uniform_int(rng, 0, rows), uniform_int(rng, 0, rows - 1), uniform_int(rng, 0, cols),
                   uniform_int(rng, 0, cols - 1)});
  }
  return BlockStructure(rows, cols, std::move(out));
}

BlockStructure random_structure_within(int rows, int cols, int blocks, double s, Rng& rng) {
  if (s < 0.0) throw std::invalid_argument("budget must be nonnegative");
  auto base = random_structure(rows, cols, blocks, rng);
  std::vector<Block> out = base.blocks();
  // Peel widths off random blocks until the total fits 2Ks.
  const auto limit = static_cast<std::int64_t>(std::floor(2.0 * blocks * s));
  std::int64_t total = base.total_width();
  while (total > limit) {
    auto& b = out[static_cast<std::size_t>(uniform_int(rng, 0, blocks - 1))];
    int& w = (uniform_int(rng, 0, 1) == 0) ? b.row_width : b.col_width;
    if (w == 0) continue;
    const auto cut = std::min<std::int64_t>(w, std::max<std::int64_t>(1, (total - limit + 1) / 2));
    w -= static_cast<int>(cut);
    total -= cut;
  }
  return BlockStructure(rows, cols, std::move(out));
}

GblrMatrix random_gblr(const BlockStructure& structure, Rng& rng) {
  std::vector<RealVector> u;
  std::vector<RealVector> v;
  for (const auto& b : structure.blocks()) {
    u.push_back(random_vector(b.row_width, rng));
    v.push_back(random_vector(b.col_width, rng));
  }
  return GblrMatrix(structure, std::move(u), std::move(v));
}

GblrMatrix planted_gblr(int rows, int cols, int blocks, int width, Rng& rng) {
  if (width > rows || width > cols) throw std::invalid_argument("planted width exceeds the matrix");
  std::vector<Block> out;
  for (int k = 0; k < blocks; ++k)
    out.push_back({width, uniform_int(rng, 0, rows - 1), width, uniform_int(rng, 0, cols - 1)});
  return random_gblr(BlockStructure(rows, cols, std::move(out)), rng);
}

}  // namespace gblr
