#include "gblr/gblr_matrix.hpp"
#include "gblr/random.hpp"
#include "gblr/verify.hpp"

#include <doctest.h>

#include <stdexcept>

using namespace gblr;

namespace {

RealVector vec(std::initializer_list<double> v) {
  RealVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

GblrMatrix example_block() {
  return GblrMatrix(BlockStructure(4, 4, {Block{2, 1, 2, 0}}), {vec({1, 2})}, {vec({3, 4})});
}

}  // namespace

TEST_CASE("structure validation") {
  CHECK_THROWS_AS(BlockStructure(4, 4, {Block{5, 0, 1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(BlockStructure(4, 4, {Block{1, 4, 1, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(BlockStructure(4, 6, {Block{1, 0, 7, 0}}), std::invalid_argument);
  CHECK_NOTHROW(BlockStructure(4, 6, {Block{4, 3, 6, 5}}));
  CHECK_THROWS_AS(GblrMatrix(BlockStructure(4, 4, {Block{2, 0, 2, 0}}), {vec({1})}, {vec({1, 2})}),
                  std::invalid_argument);
}

TEST_CASE("to_dense examples") {
  CHECK(GblrMatrix(BlockStructure(3, 5, {}), {}, {}).to_dense().isZero());
  DenseMatrix expected = DenseMatrix::Zero(4, 4);
  expected.row(1) << 3, 4, 0, 0;
  expected.row(2) << 6, 8, 0, 0;
  CHECK(example_block().to_dense() == expected);
}

TEST_CASE("identical blocks sum to rank two") {
  Rng rng(1);
  const Block b{3, 2, 3, 5};
  const RealVector u1 = random_vector(3, rng), v1 = random_vector(3, rng);
  const RealVector u2 = random_vector(3, rng), v2 = random_vector(3, rng);
  const GblrMatrix m(BlockStructure(8, 8, {b, b}), {u1, u2}, {v1, v2});
  const DenseMatrix d = m.to_dense();
  DenseMatrix tile(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) tile(i, j) = d((2 + i) % 8, (5 + j) % 8);
  CHECK((tile - (u1 * v1.transpose() + u2 * v2.transpose())).norm() < 1e-12);
}

TEST_CASE("mvp examples and counting") {
  const auto m = example_block();
  MultiplicationCounter c;
  const std::vector<double> x{1, 1, 0, 0};
  CHECK(m.mvp(x, c) == vec({0, 7, 14, 0}));
  CHECK(c.count == 4);
  CHECK_THROWS_AS((void)m.mvp(std::vector<double>{1, 2, 3}), std::invalid_argument);

  const GblrMatrix zero_width(BlockStructure(4, 4, {Block{0, 0, 0, 0}}), {RealVector()}, {RealVector()});
  MultiplicationCounter c0;
  CHECK(zero_width.mvp(x, c0).isZero());
  CHECK(c0.count == 0);
}

TEST_CASE("mvp agrees with the dense oracle, including rectangular and wrapped blocks") {
  Rng rng(2);
  for (auto [m, n] : {std::pair{32, 32}, std::pair{20, 12}, std::pair{7, 33}}) {
    for (int t = 0; t < 20; ++t) {
      const GblrMatrix g = random_gblr(random_structure(m, n, 8, rng), rng);
      const RealVector x = random_vector(n, rng);
      MultiplicationCounter c;
      const RealVector y = g.mvp({x.data(), static_cast<std::size_t>(n)}, c);
      const DenseMatrix ref = verify::reference_dense(g);
      CHECK((g.to_dense() - ref).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((y - ref * x).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(static_cast<std::int64_t>(c.count) == g.flops());
    }
  }
}

TEST_CASE("wrapped block equals a rolled matrix") {
  Rng rng(3);
  const RealVector u = random_vector(3, rng), v = random_vector(4, rng);
  const GblrMatrix wrapped(BlockStructure(6, 6, {Block{3, 5, 4, 4}}), {u}, {v});
  const GblrMatrix straight(BlockStructure(6, 6, {Block{3, 0, 4, 0}}), {u}, {v});
  const DenseMatrix s = straight.to_dense();
  DenseMatrix rolled(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) rolled((i + 5) % 6, (j + 4) % 6) = s(i, j);
  CHECK((wrapped.to_dense() - rolled).norm() == 0.0);
}

TEST_CASE("flops and average width") {
  const BlockStructure s(4, 4, {Block{2, 0, 2, 0}, Block{3, 0, 1, 0}, Block{1, 0, 1, 0}, Block{0, 0, 2, 0}});
  CHECK(s.total_width() == 12);
  CHECK(s.average_width() == doctest::Approx(1.5));
  CHECK(GblrMatrix::zeros(s).flops() == 12);
  CHECK(BlockStructure(4, 4, {}).total_width() == 0);
  CHECK(BlockStructure(4, 4, {}).average_width() == 0.0);
  std::vector<Block> same(5, Block{3, 0, 3, 1});
  CHECK(BlockStructure(8, 8, same).total_width() == 2 * 5 * 3);
}

TEST_CASE("budget bound flops <= 2Ks") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const double s = 1.0 + 15.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const BlockStructure st = random_structure_within(16, 16, 6, s, rng);
    CHECK(st.within_budget(s));
    CHECK(st.total_width() <= 2 * 6 * s + 1e-12);
  }
}

TEST_CASE("embed_low_rank") {
  Rng rng(5);
  const DenseMatrix u = random_dense(16, 3, rng), v = random_dense(16, 3, rng);
  const GblrMatrix g = embed_low_rank(u, v, 4);
  CHECK(g.blocks() == 4);
  CHECK((g.to_dense() - u * v.transpose()).norm() < 1e-9);

  const GblrMatrix two = embed_low_rank(random_dense(4, 2, rng), random_dense(4, 2, rng), 2);
  CHECK(two.structure().average_width() == 4.0);

  const GblrMatrix none = embed_low_rank(DenseMatrix(5, 0), DenseMatrix(5, 0), 2);
  CHECK(none.to_dense().isZero());
  CHECK(none.flops() == 0);
  CHECK_THROWS_AS((void)embed_low_rank(u, v, 2), std::invalid_argument);
}

TEST_CASE("embed_block_sparse") {
  const GblrMatrix eye = embed_block_sparse(8, 8, {PlacedBlock{0, 0, DenseMatrix::Identity(2, 2)}});
  CHECK(eye.blocks() == 2);
  DenseMatrix expected = DenseMatrix::Zero(8, 8);
  expected.topLeftCorner(2, 2).setIdentity();
  CHECK((eye.to_dense() - expected).norm() < 1e-12);

  Rng rng(6);
  const RealVector a = random_vector(3, rng), b = random_vector(3, rng);
  const GblrMatrix r1 = embed_block_sparse(8, 8, {PlacedBlock{1, 1, a * b.transpose()}});
  CHECK(r1.blocks() == 1);

  const DenseMatrix block = random_dense(4, 4, rng);
  const GblrMatrix wrapped = embed_block_sparse(8, 8, {PlacedBlock{3, 5, block}});
  DenseMatrix ref = DenseMatrix::Zero(8, 8);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) ref((3 + i) % 8, (5 + j) % 8) = block(i, j);
  CHECK((wrapped.to_dense() - ref).norm() < 1e-8);

  CHECK_THROWS_AS((void)embed_block_sparse(8, 8, {PlacedBlock{0, 0, DenseMatrix::Ones(3, 3)},
                                                  PlacedBlock{2, 2, DenseMatrix::Ones(2, 2)}}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)embed_block_sparse(8, 8, {PlacedBlock{0, 0, block}}, 2), std::invalid_argument);
  CHECK(embed_block_sparse(8, 8, {PlacedBlock{0, 0, block}}, 6).blocks() == 6);
}

TEST_CASE("embed_blr") {
  Rng rng(7);
  DenseMatrix m(16, 16);
  for (int bi = 0; bi < 4; ++bi)
    for (int bj = 0; bj < 4; ++bj) m.block(bi * 4, bj * 4, 4, 4) = random_vector(4, rng) * random_vector(4, rng).transpose();
  const GblrMatrix g = embed_blr(m, 4);
  CHECK(g.blocks() == 16);
  CHECK((g.to_dense() - m).norm() < 1e-9);
  CHECK(g.structure().within_budget(4.0));

  const GblrMatrix z = embed_blr(DenseMatrix::Zero(4, 4), 2);
  CHECK(z.to_dense().isZero());
  CHECK(z.blocks() == 4);
  CHECK_THROWS_AS((void)embed_blr(DenseMatrix::Zero(6, 6), 4), std::invalid_argument);
  CHECK_THROWS_AS((void)embed_blr(DenseMatrix::Identity(4, 4), 4), std::invalid_argument);
}

TEST_CASE("interpolate_structure") {
  const BlockStructure a(8, 8, {Block{4, 1, 4, 2}, Block{2, 3, 2, 0}});
  const BlockStructure b(8, 8, {Block{2, 5, 2, 2}, Block{2, 0, 2, 7}});
  CHECK(interpolate_structure(a, b, 1.0) == a);
  CHECK(interpolate_structure(a, b, 0.0) == b);
  const auto mid = interpolate_structure(a, b, 0.5);
  CHECK(mid[0].row_width == 3);
  CHECK(mid[1].row_width == 2);
  CHECK(mid[0].row_location == 3);
  CHECK_THROWS_AS((void)interpolate_structure(a, BlockStructure(8, 8, {Block{}}), 0.5), std::invalid_argument);
  CHECK_THROWS_AS((void)interpolate_structure(a, b, 1.5), std::invalid_argument);

  Rng rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    const double s = 1.0 + 20.0 * u(rng);
    const auto x = random_structure_within(24, 24, 5, s, rng);
    const auto y = random_structure_within(24, 24, 5, s, rng);
    CHECK(interpolate_structure(x, y, u(rng)).within_budget(s));
  }
}
