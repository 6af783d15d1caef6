#include "gblr/gaudi.hpp"
#include "gblr/optim.hpp"

#include <algorithm>
#include <random>

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace gblr;

TEST_CASE("soft shrink") {
  CHECK(soft_shrink(0.25, 0.1) == doctest::Approx(0.15));
  CHECK(soft_shrink(0.05, 0.1) == 0.0);
  CHECK(soft_shrink(-0.3, 0.1) == 0.0);
}

TEST_CASE("adaptive step degenerate cases") {
  std::vector<double> p{1.0, -2.0};
  MomentState s;
  adaptive_step(p, std::vector<double>{0.0, 0.0}, s, AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.0});
  CHECK(p == std::vector<double>{1.0, -2.0});

  std::vector<double> q{1.0};
  MomentState s2;
  adaptive_step(q, std::vector<double>{0.5}, s2, AdamWConfig{0.1, 0.0, 0.0, 1e-8, 0.0});
  CHECK(q[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adaptive step against a reference implementation") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double p_ref = 1.0, m = 0.0, v = 0.0;
  std::vector<double> p{1.0};
  MomentState s;
  for (int t = 1; t <= 3; ++t) {
    const double g = 1.0;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    p_ref -= lr * mh / (std::sqrt(vh) + eps);
    adaptive_step(p, std::vector<double>{g}, s, AdamWConfig{lr, b1, b2, eps, 0.0});
    CHECK(std::abs(p[0] - p_ref) < 1e-12);
  }
  CHECK(s.step == 3);
}

TEST_CASE("decoupled weight decay") {
  std::vector<double> p{2.0};
  MomentState s;
  adaptive_step(p, std::vector<double>{0.0}, s, AdamWConfig{0.1, 0.9, 0.999, 1e-8, 0.5});
  CHECK(p[0] == doctest::Approx(2.0 - 0.1 * 0.5 * 2.0));
}

TEST_CASE("adaptive step errors") {
  std::vector<double> p{1.0};
  MomentState s;
  CHECK_THROWS_AS(adaptive_step(p, std::vector<double>{std::nan("")}, s, AdamWConfig{}), std::domain_error);
  CHECK_THROWS_AS(adaptive_step(p, std::vector<double>{1.0, 2.0}, s, AdamWConfig{}), std::invalid_argument);
}

TEST_CASE("pgd width update") {
  std::vector<double> w{0.05, 3.0, 7.9};
  proximal_width_step(w, 0.1, 8.0);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == doctest::Approx(2.9));

  std::vector<double> over{8.5};
  proximal_width_step(over, 0.0, 8.0);
  CHECK(over[0] == 8.0);

  // lambda = 0 reduces to the adaptive step plus clipping.
  std::vector<double> a{2.0, 5.0}, b{2.0, 5.0};
  MomentState sa, sb;
  const AdamWConfig cfg{0.1, 0.9, 0.999, 1e-8, 0.0};
  const std::vector<double> g{1.0, -1.0};
  pgd_width_update(a, g, sa, cfg, 0.0, 8.0);
  adaptive_step(b, g, sb, cfg);
  project(b, 8.0);
  CHECK(a == b);
}

TEST_CASE("shrinkage never increases a width and clipping keeps the domain") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> w0{4 * (u(rng) + 1), 4 * (u(rng) + 1)};
    std::vector<double> g{u(rng), u(rng)};
    auto a = w0, b = w0;
    MomentState sa, sb;
    const AdamWConfig cfg{0.5, 0.9, 0.999, 1e-8, 0.0};
    pgd_width_update(a, g, sa, cfg, 0.3, 8.0);
    pgd_width_update(b, g, sb, cfg, 0.0, 8.0);
    for (int i = 0; i < 2; ++i) {
      CHECK(a[i] <= b[i]);
      CHECK(a[i] >= 0.0);
      CHECK(a[i] <= 8.0);
    }
  }
}

TEST_CASE("sparsification in finitely many steps") {
  std::vector<double> w{7.3, 0.4, 2.0, 8.0};
  MomentState s;
  const AdamWConfig cfg{0.05, 0.9, 0.999, 1e-8, 0.0};
  const double lambda = 0.5;
  const int limit = static_cast<int>(std::ceil(8.0 / (cfg.lr * lambda))) + 5;
  const std::vector<double> zero(4, 0.0);
  int steps = 0;
  while (steps < limit && std::any_of(w.begin(), w.end(), [](double x) { return x != 0.0; })) {
    pgd_width_update(w, zero, s, cfg, lambda, 8.0);
    ++steps;
  }
  for (double x : w) CHECK(x == 0.0);
}

TEST_CASE("plain proximal gradient on the scalar lasso") {
  // min (a - w)^2 + lam * w over w >= 0: minimizer max(a - lam / 2, 0).
  for (double a : {3.0, 0.2}) {
    const double lam = 1.0, eta = 0.1;
    double w = 5.0;
    for (int t = 0; t < 2000; ++t) {
      w -= eta * 2 * (w - a);
      w = soft_shrink(w, eta * lam);
    }
    CHECK(std::abs(w - std::max(a - lam / 2, 0.0)) < 1e-6);
  }
}

TEST_CASE("budget rule") {
  const BudgetRule r{10.0, 0.04};
  CHECK(r.effective_lambda(9.0) == 0.0);
  CHECK(r.effective_lambda(10.0) == 0.0);
  CHECK(r.effective_lambda(11.0) == 0.04);
  CHECK(BudgetRule{}.lambda0 == 0.04);
}

TEST_CASE("sigma schedule") {
  const SigmaSchedule s{5, 1.0, 100.0, 300};
  CHECK(s.value(0).sigma() == 1.0);
  CHECK(s.value(4).sigma() == 1.0);
  CHECK(s.value(300).sigma() == 100.0);
  CHECK(s.value(5).sigma() == 1.0);
  const SigmaSchedule even{4, 1.0, 100.0, 300};
  CHECK(std::abs(even.value(152).sigma() - 50.5) < 1e-9);
  CHECK_THROWS_AS((SigmaSchedule{5, 100.0, 1.0, 10}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((SigmaSchedule{5, 0.0, 1.0, 10}.validate()), std::invalid_argument);
}

TEST_CASE("straight-through quantization and projection") {
  const std::vector<double> w{2.4, 2.5, 3.5, 0.6};
  CHECK(ste_quantize(w) == std::vector<double>{2.0, 2.0, 4.0, 1.0});
  std::vector<double> p{-0.2, 9.0, 3.3};
  project(p, 8.0);
  CHECK(p == std::vector<double>{0.0, 8.0, 3.3});
  CHECK(structure_mode(Smoothing::infinite(), StraightThrough::at_infinity) == StructureMode::quantized);
  CHECK(structure_mode(Smoothing(10.0), StraightThrough::at_infinity) == StructureMode::continuous);
  CHECK(structure_mode(Smoothing(10.0), StraightThrough::always) == StructureMode::quantized);
  CHECK(structure_mode(Smoothing::infinite(), StraightThrough::off) == StructureMode::continuous);
}

TEST_CASE("quantized forward passes gradients straight through") {
  auto theta = GaudiGblrMatrix::zeros(6, 6, 1, Smoothing(10.0));
  theta.row_width[0] = 2.4;
  theta.col_width[0] = 3.0;
  theta.row_content.setOnes();
  theta.col_content.setOnes();
  auto q = theta;
  q.row_width[0] = 2.0;
  const RealVector x = RealVector::Ones(6), gy = RealVector::Ones(6);
  const auto gq = backward(theta, x, gy, StructureMode::quantized);
  const auto gr = backward(q, x, gy, StructureMode::continuous);
  CHECK(gq.d_row_width[0] == doctest::Approx(gr.d_row_width[0]));
  CHECK((dense(theta, StructureMode::quantized) - dense(q)).norm() < 1e-12);
}
