#include "gblr/nn.hpp"
#include "gblr/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace gblr;

namespace {

GaudiLinear random_layer(int out, int in, int k, Smoothing s, Rng& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  GaudiLinear l{GaudiGblrMatrix::zeros(out, in, k, s), random_vector(out, rng)};
  for (int b = 0; b < k; ++b) {
    l.weight.row_width[b] = u(rng) * out;
    l.weight.row_location[b] = u(rng) * out;
    l.weight.col_width[b] = u(rng) * in;
    l.weight.col_location[b] = u(rng) * in;
  }
  l.weight.row_content = random_dense(out, k, rng);
  l.weight.col_content = random_dense(in, k, rng);
  return l;
}

Mlp random_mlp(int n, int k, Smoothing s, Rng& rng) {
  Mlp m;
  m.layers.push_back(random_layer(n, n, k, s, rng));
  m.layers.push_back(random_layer(n, n, k, s, rng));
  return m;
}

RealVector dense_reference(const Mlp& m, const RealVector& x) {
  RealVector z = x;
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    RealVector h = dense(m.layers[i].weight) * z + m.layers[i].bias;
    z = i + 1 < m.layers.size() ? RealVector(h.cwiseMax(0.0)) : h;
  }
  return z;
}

}  // namespace

TEST_CASE("forward examples") {
  Rng rng(1);
  Mlp zero;
  zero.layers.push_back({GaudiGblrMatrix::zeros(4, 4, 2), RealVector::Zero(4)});
  zero.layers.push_back({GaudiGblrMatrix::zeros(3, 4, 2), RealVector::Zero(3)});
  CHECK(mlp_forward(zero, random_vector(4, rng)).isZero());

  const Mlp m = random_mlp(10, 3, Smoothing(20.0), rng);
  for (int t = 0; t < 5; ++t) {
    const RealVector x = random_vector(10, rng);
    CHECK((mlp_forward(m, x) - dense_reference(m, x)).cwiseAbs().maxCoeff() < 1e-8);
  }
  const Mlp frozen = freeze_model(m);
  const RealVector x = random_vector(10, rng);
  RealVector h = freeze(frozen.layers[0].weight).mvp(x) + frozen.layers[0].bias;
  h = h.cwiseMax(0.0);
  const RealVector y = freeze(frozen.layers[1].weight).mvp(h) + frozen.layers[1].bias;
  CHECK((mlp_forward(frozen, x) - y).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS((void)mlp_forward(m, random_vector(9, rng)), std::invalid_argument);
}

TEST_CASE("objective by hand") {
  Mlp m;
  GaudiLinear l1{GaudiGblrMatrix::zeros(2, 2, 1), RealVector::Zero(2)};
  l1.weight.row_width[0] = 2;
  l1.weight.col_width[0] = 2;
  l1.weight.row_content.col(0) << 1, -1;
  l1.weight.col_content.col(0) << 2, 1;
  l1.bias << 0.5, 0.0;
  GaudiLinear l2{GaudiGblrMatrix::zeros(1, 2, 1), RealVector::Constant(1, 0.25)};
  l2.weight.row_width[0] = 1;
  l2.weight.col_width[0] = 2;
  l2.weight.row_content(0, 0) = 3;
  l2.weight.col_content.col(0) << 1, 1;
  m.layers = {l1, l2};
  Dataset d{DenseMatrix(2, 1), DenseMatrix(1, 1)};
  d.inputs << 1, 2;
  d.targets << 10;
  // W1 x = [4, -4]; +b = [4.5, -4]; relu = [4.5, 0]; W2 h = 13.5; +0.25 = 13.75.
  const double loss = 3.75 * 3.75;
  CHECK(std::abs(objective(m, d, 0.0, LossKind::squared_error) - loss) < 1e-10);
  const double widths = 2 + 2 + 1 + 2;
  CHECK(std::abs(objective(m, d, 0.1, LossKind::squared_error) - (loss + 0.1 * widths)) < 1e-10);
  Mlp no_width = m;
  for (auto& l : no_width.layers) {
    l.weight.row_width.setZero();
    l.weight.col_width.setZero();
  }
  const double task = objective(no_width, d, 0.0, LossKind::squared_error);
  CHECK(objective(no_width, d, 0.7, LossKind::squared_error) == task);
}

TEST_CASE("cross-entropy loss") {
  DenseMatrix out(2, 1), target(2, 1);
  out << 0.0, 0.0;
  target << 1.0, 0.0;
  CHECK(task_loss(out, target, LossKind::cross_entropy) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("end-to-end gradient check") {
  Rng rng(2);
  Mlp m = random_mlp(12, 3, Smoothing(30.0), rng);
  const Dataset batch{random_dense(12, 5, rng), random_dense(12, 5, rng)};
  const auto g = mlp_gradients(m, batch, LossKind::squared_error);

  std::vector<double> p, a;
  const auto push = [](std::vector<double>& dst, const double* src, Eigen::Index n) { dst.insert(dst.end(), src, src + n); };
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const auto& w = m.layers[i].weight;
    const auto& gw = g.layers[i].weight;
    push(p, w.row_width.data(), w.row_width.size());
    push(p, w.row_location.data(), w.row_location.size());
    push(p, w.col_width.data(), w.col_width.size());
    push(p, w.col_location.data(), w.col_location.size());
    push(p, w.row_content.data(), w.row_content.size());
    push(p, w.col_content.data(), w.col_content.size());
    push(p, m.layers[i].bias.data(), m.layers[i].bias.size());
    push(a, gw.d_row_width.data(), gw.d_row_width.size());
    push(a, gw.d_row_location.data(), gw.d_row_location.size());
    push(a, gw.d_col_width.data(), gw.d_col_width.size());
    push(a, gw.d_col_location.data(), gw.d_col_location.size());
    push(a, gw.d_row_content.data(), gw.d_row_content.size());
    push(a, gw.d_col_content.data(), gw.d_col_content.size());
    push(a, g.layers[i].bias.data(), g.layers[i].bias.size());
  }
  const auto rebuild = [&](std::span<const double> q) {
    Mlp c = m;
    std::size_t j = 0;
    const auto pull = [&](double* dst, Eigen::Index n) {
      for (Eigen::Index t = 0; t < n; ++t) dst[t] = q[j++];
    };
    for (auto& l : c.layers) {
      auto& w = l.weight;
      pull(w.row_width.data(), w.row_width.size());
      pull(w.row_location.data(), w.row_location.size());
      pull(w.col_width.data(), w.col_width.size());
      pull(w.col_location.data(), w.col_location.size());
      pull(w.row_content.data(), w.row_content.size());
      pull(w.col_content.data(), w.col_content.size());
      pull(l.bias.data(), l.bias.size());
    }
    return c;
  };
  const auto fd = verify::fd_gradient(
      [&](std::span<const double> q) { return objective(rebuild(q), batch, 0.0, LossKind::squared_error); }, p,
      verify::FdConfig{});
  REQUIRE(fd.ok());
  Eigen::Map<const RealVector> av(a.data(), static_cast<Eigen::Index>(a.size()));
  Eigen::Map<const RealVector> fv(fd.gradient.data(), static_cast<Eigen::Index>(fd.gradient.size()));
  CHECK(verify::relative_error(av, fv) < 1e-3);
  CHECK(g.loss == doctest::Approx(objective(m, batch, 0.0, LossKind::squared_error)));
}

TEST_CASE("no budget means no shrinkage") {
  Rng rng(3);
  const Teacher t = planted_teacher(12, 3, 3, {1.0}, rng);
  const Dataset d = sample_teacher(t, 128, rng);
  const Mlp student = make_student({12, 12}, 3, 6.0, 0.3, rng);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lambda0 = 0.0;
  cfg.budget = std::numeric_limits<double>::infinity();
  const auto r = train(student, d, cfg);
  for (const auto& rec : r.log) CHECK(rec.lambda == 0.0);

  TrainConfig with_lambda = cfg;
  with_lambda.lambda0 = 0.5;
  const auto r2 = train(student, d, with_lambda);
  CHECK(r2.log.back().to_json() == r.log.back().to_json());
}

TEST_CASE("budget is met at the final epoch") {
  Rng rng(4);
  const Teacher t = planted_teacher(16, 4, 4, {1.0}, rng);
  const Dataset d = sample_teacher(t, 512, rng);
  const Mlp student = make_student({16, 16}, 4, 12.0, 0.3, rng);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.lambda0 = 2.0;
  cfg.structure_optimizer.lr = 0.05;
  cfg.budget = 5.0;
  cfg.straight_through = StraightThrough::always;
  const auto r = train(student, d, cfg);
  // Worst-case Adam step on one width: lr (1 - beta1) / sqrt(1 - beta2).
  const auto& o = cfg.structure_optimizer;
  const double slack = o.lr * (1 - o.beta1) / std::sqrt(1 - o.beta2) + 1e-12;
  CHECK(r.model.total_average_width() <= cfg.budget + slack);
  CHECK(r.log.front().sigma == 1.0);
  CHECK(r.log.back().sigma == 100.0);
}

TEST_CASE("determinism") {
  Rng a(5), b(5);
  const Teacher ta = planted_teacher(12, 3, 3, {1.0, 2.0}, a);
  const Teacher tb = planted_teacher(12, 3, 3, {1.0, 2.0}, b);
  const Dataset da = sample_teacher(ta, 128, a), db = sample_teacher(tb, 128, b);
  const Mlp sa = make_student({12, 12, 12}, 3, 6.0, 0.3, a), sb = make_student({12, 12, 12}, 3, 6.0, 0.3, b);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.seed = 9;
  const auto ra = train(sa, da, cfg), rb = train(sb, db, cfg);
  REQUIRE(ra.log.size() == rb.log.size());
  for (std::size_t i = 0; i < ra.log.size(); ++i) CHECK(ra.log[i].to_json() == rb.log[i].to_json());
}

TEST_CASE("freeze fidelity at the final sigma") {
  Rng rng(6);
  const Teacher t = planted_teacher(16, 4, 4, {1.0}, rng);
  const Dataset d = sample_teacher(t, 512, rng);
  const Dataset test = sample_teacher(t, 256, rng);
  InitConfig init;
  init.budget = 40;
  init.blocks = 4;
  init.gamma = 0.5;
  init.tau_ratio = 0.1;
  init.deflate = true;
  init.structure_optimizer.lr = 0.0;
  Mlp m;
  m.layers.push_back(fit_linear(d, init));
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.structure_optimizer.lr = 1e-4;
  cfg.straight_through = StraightThrough::always;
  const auto r = train(m, d, cfg);
  const double sigma_loss = task_loss(mlp_forward_batch(r.model, test.inputs, StructureMode::quantized), test.targets,
                                      LossKind::squared_error);
  const Mlp frozen = freeze_model(r.model);
  const double frozen_loss = task_loss(mlp_forward_batch(frozen, test.inputs, StructureMode::quantized), test.targets,
                                       LossKind::squared_error);
  const double bound = 2 * 4 * boxcar_error_bound(16, Smoothing(cfg.sigma_end));
  CHECK(std::abs(frozen_loss - sigma_loss) <= 5 * bound * std::max(1.0, sigma_loss));
}

TEST_CASE("fit_linear recovers an exactly linear map") {
  Rng rng(7);
  const Teacher t = planted_teacher(16, 1, 4, {1.0}, rng);
  const Dataset d = sample_teacher(t, 400, rng);
  InitConfig init;
  init.budget = 16;
  init.blocks = 2;
  init.gamma = 0.5;
  init.tau_ratio = 0.1;
  init.refine_iterations = 400;
  init.structure_optimizer.lr = 0.0;
  const GaudiLinear l = fit_linear(d, init);
  CHECK((l.bias - t.biases[0]).norm() < 1e-6);
  const DenseMatrix w = t.weights[0].to_dense();
  CHECK((freeze(l.weight).to_dense() - w).norm() / w.norm() < 1e-6);
}

TEST_CASE("fit_linear matches initialize and refine on the least-squares fit") {
  Rng rng(7);
  const Teacher t = planted_teacher(16, 3, 4, {1.0}, rng);
  const Dataset d = sample_teacher(t, 400, rng);
  InitConfig init;
  init.budget = 48;
  init.blocks = 3;
  init.gamma = 0.5;
  init.tau_ratio = 0.1;
  init.deflate = true;
  init.refine_iterations = 200;
  init.structure_optimizer.lr = 0.0;
  const GaudiLinear l = fit_linear(d, init);
  const DenseMatrix w = t.weights[0].to_dense();
  const auto expected = refine(initialize(w, init), w, init).theta;
  CHECK((materialize(l.weight, StructureMode::quantized).dense -
         materialize(expected, StructureMode::quantized).dense).norm() < 1e-6 * w.norm());
  CHECK_THROWS_AS(fit_linear(Dataset{}, init), std::invalid_argument);
}

TEST_CASE("blobs and students") {
  Rng rng(8);
  const Dataset d = make_blobs(6, 10, 4.0, rng);
  CHECK(d.targets.colwise().sum().isOnes());
  const Mlp s = make_student({6, 5, 2}, 3, 10.0, 0.1, rng);
  CHECK(s.layers[0].weight.row_width.maxCoeff() == 5.0);
  CHECK(s.layers[0].weight.col_width.maxCoeff() == 6.0);
  CHECK(s.input_size() == 6);
  CHECK(s.output_size() == 2);
  CHECK_THROWS_AS((void)make_student({6}, 3, 1.0, 0.1, rng), std::invalid_argument);
}
