#include "gblr/verify.hpp"

#include "gblr/fft.hpp"
#include "gblr/gaudi.hpp"
#include "gblr/mask.hpp"
#include "gblr/optim.hpp"
#include "gblr/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace gblr::verify {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxCounterexamples = 8;

// Distinct, reproducible seed for case i of a suite.
std::uint64_t case_seed(std::uint64_t suite_seed, int i) {
  return suite_seed * 6364136223846793005ULL + 1442695040888963407ULL * static_cast<std::uint64_t>(i + 1);
}

int pick(Rng& rng, std::initializer_list<int> values) {
  std::uniform_int_distribution<std::size_t> d(0, values.size() - 1);
  return *(values.begin() + d(rng));
}

double pick(Rng& rng, std::initializer_list<double> values) {
  std::uniform_int_distribution<std::size_t> d(0, values.size() - 1);
  return *(values.begin() + d(rng));
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::string sigma_text(double sigma) {
  if (std::isinf(sigma)) return "inf";
  std::ostringstream os;
  os << sigma;
  return os.str();
}

Smoothing smoothing_of(double sigma) { return std::isinf(sigma) ? Smoothing::infinite() : Smoothing(sigma); }

class Recorder {
 public:
  Recorder(std::string name, std::uint64_t seed) {
    result_.name = std::move(name);
    result_.seed = seed;
  }

  void check(bool ok, std::uint64_t seed, const std::function<std::string()>& describe) {
    ++result_.cases;
    if (ok) return;
    ++result_.failures;
    if (result_.counterexamples.size() < kMaxCounterexamples)
      result_.counterexamples.push_back("case_seed=" + std::to_string(seed) + " " + describe());
  }

  SuiteResult finish(double seconds) {
    result_.seconds = seconds;
    return std::move(result_);
  }

 private:
  SuiteResult result_;
};

std::vector<Complex> brute_idft(std::span<const Complex> spectrum) {
  std::vector<Complex> conj(spectrum.begin(), spectrum.end());
  for (auto& c : conj) c = std::conj(c);
  auto out = brute_dft(conj);
  const double n = static_cast<double>(out.size());
  for (auto& c : out) c = std::conj(c) / n;
  return out;
}

// Gaudi mask with the sign of the Dirichlet phase flipped. Used only as a
// negative control: every mask-based suite must reject it.
RealVector corrupted_mask(double w, double l, int n, double sigma) {
  std::vector<Complex> spectrum(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double x = static_cast<double>(k) / n;
    const double g = std::isinf(sigma) ? 1.0 : std::exp(-x * x / (2.0 * sigma * sigma));
    const double magnitude = k == 0 ? w : std::sin(kPi * w * x) / std::sin(kPi * x);
    const Complex phase = std::polar(1.0, -kPi * k * (1.0 - w) / n) * std::polar(1.0, -2.0 * kPi * k * l / n);
    spectrum[static_cast<std::size_t>(k)] = g * magnitude * phase;
  }
  const auto time = brute_idft(spectrum);
  RealVector out(n);
  for (int j = 0; j < n; ++j) out[j] = time[static_cast<std::size_t>(j)].real();
  return out;
}

RealVector mask_under_test(double w, double l, int n, double sigma, bool corrupt) {
  if (corrupt) return corrupted_mask(w, l, n, sigma);
  return gaudi_mask({w, l, n}, smoothing_of(sigma));
}

template <class Fn>
SuiteResult timed(const std::string& name, std::uint64_t seed, Fn body) {
  Recorder rec(name, seed);
  const auto t0 = std::chrono::steady_clock::now();
  body(rec);
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  return rec.finish(dt.count());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// dft: brute force vs the library FFT ----------------------------------------

SuiteResult suite_dft(const SuiteOptions& o) {
  return timed("dft", o.seed, [&](Recorder& rec) {
    for (int i = 0; i < 40; ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int n = pick(rng, {1, 2, 7, 8, 16, 33, 64, 128});
      std::vector<Complex> x(static_cast<std::size_t>(n));
      for (auto& c : x) c = {standard_normal(rng), standard_normal(rng)};
      auto oracle = brute_dft(x);
      if (o.negative_control) {  // wrong sign convention
        const auto forward = oracle;
        for (std::size_t k = 0; k < oracle.size(); ++k) oracle[k] = forward[(oracle.size() - k) % oracle.size()];
      }
      const auto fast = fft::forward(x);
      double err = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) err = std::max(err, std::abs(oracle[k] - fast[k]));
      rec.check(err < 1e-10, cs, [&] { return "n=" + std::to_string(n) + " max_abs_err=" + fmt(err); });
    }
  });
}

// boxcar: sigma = infinity recovers the boxcar exactly --------------------------

SuiteResult suite_boxcar(const SuiteOptions& o) {
  return timed("boxcar", o.seed, [&](Recorder& rec) {
    int i = 0;
    for (int n : {7, 8, 33, 64, 512}) {
      for (int t = 0; t < 200; ++t, ++i) {
        const auto cs = case_seed(o.seed, i);
        Rng rng(cs);
        const int w = uniform_int(rng, 0, n);
        const int l = uniform_int(rng, 0, n - 1);
        const RealVector got = mask_under_test(w, l, n, kInf, o.negative_control);
        const double err = (got - reference_boxcar(n, w, l)).cwiseAbs().maxCoeff();
        rec.check(err < 1e-9, cs, [&] {
          return "n=" + std::to_string(n) + " w=" + std::to_string(w) + " l=" + std::to_string(l) +
                 " max_abs_err=" + fmt(err);
        });
      }
    }
  });
}

// bound: relative L2 error of the smoothed mask is below the closed-form bound --

SuiteResult suite_bound(const SuiteOptions& o) {
  return timed("bound", o.seed, [&](Recorder& rec) {
    int i = 0;
    for (int n : {7, 8, 33, 64, 512}) {
      for (double sigma : {1.0, 5.0, 10.0, 100.0}) {
        const double a = 1.0 - 1.0 / n;
        const double bound = 1.0 - std::exp(-a * a / (2.0 * sigma * sigma));
        for (int t = 0; t < 200; ++t, ++i) {
          const auto cs = case_seed(o.seed, i);
          Rng rng(cs);
          const int w = uniform_int(rng, 0, n);
          const int l = uniform_int(rng, 0, n - 1);
          const RealVector box = reference_boxcar(n, w, l);
          const RealVector got = mask_under_test(w, l, n, sigma, o.negative_control);
          const double diff = (got - box).norm();
          const double rel = box.norm() > 0.0 ? diff / box.norm() : diff;
          rec.check(rel <= bound + 1e-9, cs, [&] {
            return "n=" + std::to_string(n) + " sigma=" + sigma_text(sigma) + " w=" + std::to_string(w) +
                   " l=" + std::to_string(l) + " rel_err=" + fmt(rel) + " bound=" + fmt(bound);
          });
        }
      }
    }
  });
}

// gradients: closed-form derivatives vs finite differences -----------------------

bool grads_close(const RealVector& analytic, const RealVector& numeric, double tol, double* rel_out) {
  const double diff = (analytic - numeric).norm();
  const double scale = std::max(analytic.norm(), numeric.norm());
  *rel_out = scale > 0.0 ? diff / scale : 0.0;
  // Zero-gradient cases (e.g. location of a full mask) only see roundoff.
  return diff <= tol * scale || diff < 1e-9;
}

FdScheme boundary_scheme(double v, double upper, double h) {
  if (v - 2.0 * h < 0.0) return FdScheme::forward;
  if (v + 2.0 * h > upper) return FdScheme::backward;
  return FdScheme::central;
}

std::vector<double> flatten(const GaudiGblrMatrix& t) {
  std::vector<double> p;
  auto append = [&p](const auto& m) { p.insert(p.end(), m.data(), m.data() + m.size()); };
  append(t.row_content);
  append(t.col_content);
  append(t.row_width);
  append(t.row_location);
  append(t.col_width);
  append(t.col_location);
  return p;
}

std::vector<double> flatten(const GradBundle& g) {
  std::vector<double> p;
  auto append = [&p](const auto& m) { p.insert(p.end(), m.data(), m.data() + m.size()); };
  append(g.d_row_content);
  append(g.d_col_content);
  append(g.d_row_width);
  append(g.d_row_location);
  append(g.d_col_width);
  append(g.d_col_location);
  return p;
}

GaudiGblrMatrix unflatten(GaudiGblrMatrix t, std::span<const double> p) {
  std::size_t at = 0;
  auto take = [&](auto& m) {
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(at), m.size(), m.data());
    at += static_cast<std::size_t>(m.size());
  };
  take(t.row_content);
  take(t.col_content);
  take(t.row_width);
  take(t.row_location);
  take(t.col_width);
  take(t.col_location);
  return t;
}

double random_width(Rng& rng, int n) {
  const int kind = uniform_int(rng, 0, 4);
  if (kind == 0) return 0.0;
  if (kind == 1) return n;
  return uniform_real(rng, 0.0, n);
}

SuiteResult suite_gradients(const SuiteOptions& o) {
  return timed("gradients", o.seed, [&](Recorder& rec) {
    const FdConfig cfg;
    int i = 0;
    // Mask derivatives in width and location.
    for (int t = 0; t < 100; ++t, ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int n = pick(rng, {7, 8, 33, 64});
      const double sigma = pick(rng, {1.0, 5.0, 10.0, 100.0, kInf});
      const double w = t < 4 ? (t % 2 == 0 ? 0.0 : n) : random_width(rng, n);
      const double l = uniform_real(rng, 3.0 * cfg.h, n - 3.0 * cfg.h);
      const bool corrupt = o.negative_control;
      const std::array<FdScheme, 1> w_scheme{boundary_scheme(w, n, cfg.h)};
      const std::array<FdScheme, 1> l_scheme{FdScheme::central};
      const std::array<double, 1> pw{w};
      const std::array<double, 1> pl{l};
      const DenseMatrix fd_w = fd_jacobian(
          [&](std::span<const double> p) { return mask_under_test(p[0], l, n, sigma, corrupt); }, pw, cfg, w_scheme);
      const DenseMatrix fd_l = fd_jacobian(
          [&](std::span<const double> p) { return mask_under_test(w, p[0], n, sigma, corrupt); }, pl, cfg, l_scheme);
      const MaskParams params{w, l, n};
      double rel_w = 0.0;
      double rel_l = 0.0;
      const bool ok_w = grads_close(mask_grad_w(params, smoothing_of(sigma)), fd_w.col(0), cfg.tolerance, &rel_w);
      const bool ok_l = grads_close(mask_grad_l(params, smoothing_of(sigma)), fd_l.col(0), cfg.tolerance, &rel_l);
      rec.check(ok_w && ok_l, cs, [&] {
        return "mask n=" + std::to_string(n) + " sigma=" + sigma_text(sigma) + " w=" + fmt(w) + " l=" + fmt(l) +
               " rel_err_w=" + fmt(rel_w) + " rel_err_l=" + fmt(rel_l);
      });
    }
    // The width derivative at w = 0 is nonzero.
    for (int n : {7, 8, 33, 64}) {
      for (double sigma : {1.0, 5.0, 10.0, 100.0, kInf}) {
        const auto cs = case_seed(o.seed, i++);
        Rng rng(cs);
        const double l = uniform_real(rng, 0.0, n);
        const double norm = mask_grad_w({0.0, l, n}, smoothing_of(sigma)).norm();
        rec.check(norm > 1e-6, cs, [&] {
          return "zero-width n=" + std::to_string(n) + " sigma=" + sigma_text(sigma) + " grad_norm=" + fmt(norm);
        });
      }
    }
    // Full backward of L = gy^T W(theta) x over every parameter.
    for (int t = 0; t < 100; ++t, ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int m = pick(rng, {7, 8, 12});
      const int n = pick(rng, {7, 8, 12, 33});
      const int k_count = uniform_int(rng, 1, 3);
      const double sigma = pick(rng, {1.0, 5.0, 10.0, 100.0, kInf});
      auto theta = GaudiGblrMatrix::zeros(m, n, k_count, smoothing_of(sigma));
      for (int k = 0; k < k_count; ++k) {
        theta.row_width[k] = random_width(rng, m);
        theta.col_width[k] = random_width(rng, n);
        theta.row_location[k] = uniform_real(rng, 3.0 * cfg.h, m - 3.0 * cfg.h);
        theta.col_location[k] = uniform_real(rng, 3.0 * cfg.h, n - 3.0 * cfg.h);
      }
      theta.row_content = random_dense(m, k_count, rng);
      theta.col_content = random_dense(n, k_count, rng);
      const RealVector x = random_vector(n, rng);
      const RealVector gy = random_vector(m, rng);

      const auto p = flatten(theta);
      std::vector<FdScheme> schemes(p.size(), FdScheme::central);
      const std::size_t structure_at = static_cast<std::size_t>((m + n) * k_count);
      for (int k = 0; k < k_count; ++k) {
        schemes[structure_at + static_cast<std::size_t>(k)] = boundary_scheme(theta.row_width[k], m, cfg.h);
        schemes[structure_at + static_cast<std::size_t>(2 * k_count + k)] =
            boundary_scheme(theta.col_width[k], n, cfg.h);
      }
      auto loss = [&](std::span<const double> q) -> double {
        const auto probe = unflatten(theta, q);
        if (!o.negative_control) return gy.dot(forward(probe, x));
        DenseMatrix w = DenseMatrix::Zero(m, n);
        for (int k = 0; k < k_count; ++k) {
          const RealVector u = corrupted_mask(probe.row_width[k], probe.row_location[k], m, sigma)
                                   .cwiseProduct(probe.row_content.col(k));
          const RealVector v = corrupted_mask(probe.col_width[k], probe.col_location[k], n, sigma)
                                   .cwiseProduct(probe.col_content.col(k));
          w += u * v.transpose();
        }
        return gy.dot(w * x);
      };
      const auto fd = fd_gradient(loss, p, cfg, schemes);
      const auto analytic = flatten(backward(theta, x, gy));
      double rel = 0.0;
      const bool ok = fd.ok() && grads_close(Eigen::Map<const RealVector>(analytic.data(), std::ssize(analytic)),
                                             Eigen::Map<const RealVector>(fd.gradient.data(), std::ssize(fd.gradient)),
                                             cfg.tolerance, &rel);
      rec.check(ok, cs, [&] {
        return "backward m=" + std::to_string(m) + " n=" + std::to_string(n) + " K=" + std::to_string(k_count) +
               " sigma=" + sigma_text(sigma) + " rel_err=" + fmt(rel);
      });
    }
  });
}

// flops: instrumented count and output of the frozen product ------------------

SuiteResult suite_flops(const SuiteOptions& o) {
  return timed("flops", o.seed, [&](Recorder& rec) {
    for (int i = 0; i < 1000; ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int rows = i < 4 ? pick(rng, {7, 8, 33, 64}) : uniform_int(rng, 1, 48);
      const int cols = i < 4 ? pick(rng, {7, 8, 33, 64}) : uniform_int(rng, 1, 48);
      const int k_count = uniform_int(rng, 0, 10);
      const auto m = random_gblr(random_structure(rows, cols, k_count, rng), rng);
      std::int64_t expected = 0;
      for (const auto& b : m.structure().blocks()) expected += b.row_width + b.col_width;
      DenseMatrix oracle = reference_dense(m);
      if (o.negative_control) oracle.col(0) *= -1.0;  // wrong reference
      const RealVector x = random_vector(cols, rng);
      MultiplicationCounter counter;
      const RealVector y = m.mvp(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), counter);
      const RealVector y_ref = oracle * x;
      const double err = (y - y_ref).cwiseAbs().maxCoeff() / std::max(1.0, y_ref.cwiseAbs().maxCoeff());
      const bool count_ok = static_cast<std::int64_t>(counter.count) == expected && m.flops() == expected;
      rec.check(count_ok && err < 1e-9, cs, [&] {
        return "rows=" + std::to_string(rows) + " cols=" + std::to_string(cols) + " K=" + std::to_string(k_count) +
               " count=" + std::to_string(counter.count) + " expected=" + std::to_string(expected) +
               " max_err=" + fmt(err);
      });
    }
  });
}

// embeddings: low-rank, block-sparse and block-low-rank inputs ---------------

SuiteResult suite_embeddings(const SuiteOptions& o) {
  return timed("embeddings", o.seed, [&](Recorder& rec) {
    constexpr int n = 16;
    constexpr int s = 4;
    int i = 0;
    // Returns the reconstruction error, damaged for the negative control.
    auto error_of = [&](const GblrMatrix& g, const DenseMatrix& target) {
      DenseMatrix rebuilt = reference_dense(g);
      if (o.negative_control) rebuilt *= 0.5;
      return (rebuilt - target).norm();
    };
    for (int t = 0; t < 30; ++t, ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int r = uniform_int(rng, 1, 4);
      const int k_count = r * n / s;  // rank Ks/n = r
      const DenseMatrix u = random_dense(n, r, rng);
      const DenseMatrix v = random_dense(n, r, rng);
      const DenseMatrix target = u * v.transpose();
      const auto g = embed_low_rank(u, v, k_count);
      const double err = error_of(g, target);
      const bool ok = err < 1e-8 && g.blocks() == k_count && g.structure().within_budget(s);
      rec.check(ok, cs, [&] {
        return "low-rank r=" + std::to_string(r) + " K=" + std::to_string(g.blocks()) +
               " avg_width=" + fmt(g.structure().average_width()) + " err=" + fmt(err);
      });
    }
    for (int t = 0; t < 30; ++t, ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int count = uniform_int(rng, 1, 4);
      // Non-overlapping slots on the 4 x 4 grid of 4 x 4 tiles, blocks of size <= 4 x 4 inside.
      std::vector<int> slots(16);
      std::iota(slots.begin(), slots.end(), 0);
      std::shuffle(slots.begin(), slots.end(), rng);
      std::vector<PlacedBlock> blocks;
      DenseMatrix target = DenseMatrix::Zero(n, n);
      for (int b = 0; b < count; ++b) {
        const int h = uniform_int(rng, 1, s);
        const int w = uniform_int(rng, 1, s);
        const int row = (slots[static_cast<std::size_t>(b)] / 4) * s;
        const int col = (slots[static_cast<std::size_t>(b)] % 4) * s;
        DenseMatrix values = random_dense(h, w, rng);
        if (uniform_int(rng, 0, 2) == 0 && h > 1 && w > 1)  // some rank-deficient blocks
          values = random_vector(h, rng) * random_vector(w, rng).transpose();
        target.block(row, col, h, w) = values;
        blocks.push_back({row, col, values});
      }
      const int k_count = count * s;  // (n, K/s, s)-block-sparse
      const auto g = embed_block_sparse(n, n, blocks, k_count);
      const double err = error_of(g, target);
      const bool ok = err < 1e-8 && g.blocks() == k_count && g.structure().within_budget(s);
      rec.check(ok, cs, [&] {
        return "block-sparse blocks=" + std::to_string(count) + " K=" + std::to_string(g.blocks()) +
               " avg_width=" + fmt(g.structure().average_width()) + " err=" + fmt(err);
      });
    }
    for (int t = 0; t < 30; ++t, ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      DenseMatrix target(n, n);
      for (int r = 0; r < n; r += s)
        for (int c = 0; c < n; c += s) target.block(r, c, s, s) = random_vector(s, rng) * random_vector(s, rng).transpose();
      const auto g = embed_blr(target, s);
      const double err = error_of(g, target);
      const bool ok = err < 1e-8 && g.blocks() == (n / s) * (n / s) && g.structure().within_budget(s);
      rec.check(ok, cs, [&] {
        return "block-low-rank K=" + std::to_string(g.blocks()) +
               " avg_width=" + fmt(g.structure().average_width()) + " err=" + fmt(err);
      });
    }
  });
}

// interpolation: floor-mixing never leaves the budget ---------------------------

// Random structure with total width exactly floor(2 K s), the tightest case.
BlockStructure tight_structure(int rows, int cols, int k_count, double s, Rng& rng) {
  const auto base = random_structure_within(rows, cols, k_count, s, rng);
  auto blocks = base.blocks();
  const auto target = static_cast<std::int64_t>(std::floor(2.0 * k_count * s));
  std::int64_t total = base.total_width();
  while (total < target) {
    auto& b = blocks[static_cast<std::size_t>(uniform_int(rng, 0, k_count - 1))];
    if (uniform_int(rng, 0, 1) == 0 && b.row_width < rows) {
      ++b.row_width;
      ++total;
    } else if (b.col_width < cols) {
      ++b.col_width;
      ++total;
    }
  }
  return {rows, cols, std::move(blocks)};
}

BlockStructure ceil_interpolation(const BlockStructure& a, const BlockStructure& b, double alpha) {
  std::vector<Block> out;
  auto mix = [alpha](int x, int y) { return static_cast<int>(std::ceil(alpha * x + (1.0 - alpha) * y)); };
  for (int k = 0; k < a.size(); ++k) {
    out.push_back({std::min(mix(a[k].row_width, b[k].row_width), a.rows()),
                   mix(a[k].row_location, b[k].row_location) % a.rows(),
                   std::min(mix(a[k].col_width, b[k].col_width), a.cols()),
                   mix(a[k].col_location, b[k].col_location) % a.cols()});
  }
  return {a.rows(), a.cols(), std::move(out)};
}

SuiteResult suite_interpolation(const SuiteOptions& o) {
  return timed("interpolation", o.seed, [&](Recorder& rec) {
    for (int i = 0; i < 1000; ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int n = pick(rng, {7, 8, 33, 64});
      const int k_count = uniform_int(rng, 1, 8);
      const double s = uniform_int(rng, 0, 3) == 0 ? uniform_int(rng, 1, n) : uniform_real(rng, 0.5, n);
      const bool tight = i % 2 == 0;
      const auto a = tight ? tight_structure(n, n, k_count, s, rng) : random_structure_within(n, n, k_count, s, rng);
      const auto b = tight ? tight_structure(n, n, k_count, s, rng) : random_structure_within(n, n, k_count, s, rng);
      const double alpha = uniform_real(rng, 0.0, 1.0);
      const auto mixed = o.negative_control ? ceil_interpolation(a, b, alpha) : interpolate_structure(a, b, alpha);
      const bool ok = a.within_budget(s) && b.within_budget(s) && mixed.within_budget(s);
      rec.check(ok, cs, [&] {
        return "n=" + std::to_string(n) + " K=" + std::to_string(k_count) + " s=" + fmt(s) + " alpha=" + fmt(alpha) +
               " avg_width=" + fmt(mixed.average_width());
      });
    }
  });
}

// sparsification: zero task gradient drives every width to exactly zero ------

SuiteResult suite_sparsification(const SuiteOptions& o) {
  return timed("sparsification", o.seed, [&](Recorder& rec) {
    for (int i = 0; i < 40; ++i) {
      const auto cs = case_seed(o.seed, i);
      Rng rng(cs);
      const int n = pick(rng, {7, 8, 33, 64});
      const int k_count = uniform_int(rng, 1, 6);
      const double lr = pick(rng, {0.01, 0.1, 0.5});
      const double lambda = pick(rng, {0.04, 1.0, 4.0, 10.0});
      if (lr * lambda < 0.01) continue;
      auto theta = GaudiGblrMatrix::zeros(n, n, k_count);
      for (int k = 0; k < k_count; ++k) {
        theta.row_width[k] = uniform_real(rng, 0.0, n);
        theta.col_width[k] = uniform_real(rng, 0.0, n);
        theta.row_location[k] = uniform_real(rng, 0.0, n);
        theta.col_location[k] = uniform_real(rng, 0.0, n);
      }
      theta.row_content = random_dense(n, k_count, rng);
      theta.col_content = random_dense(n, k_count, rng);
      if (i == 0) theta.row_width[0] = n;
      const double w_max = std::max(theta.row_width.maxCoeff(), theta.col_width.maxCoeff());
      const auto limit = static_cast<int>(std::ceil(w_max / (lr * lambda))) + 5;

      GaudiOptimizer opt;
      opt.structure.lr = lr;
      opt.content.lr = lr;
      const auto zero = GradBundle::zeros_like(theta);
      const double applied = o.negative_control ? lambda / 2.0 : lambda;
      int steps = 0;
      bool negative = false;
      while (steps < limit && (theta.row_width.maxCoeff() > 0.0 || theta.col_width.maxCoeff() > 0.0)) {
        opt.step(theta, zero, applied);
        ++steps;
        negative = negative || theta.row_width.minCoeff() < 0.0 || theta.col_width.minCoeff() < 0.0;
      }
      const bool zeroed = theta.row_width.maxCoeff() == 0.0 && theta.col_width.maxCoeff() == 0.0;
      rec.check(zeroed && !negative, cs, [&] {
        return "n=" + std::to_string(n) + " K=" + std::to_string(k_count) + " lr=" + fmt(lr) +
               " lambda=" + fmt(lambda) + " w_max=" + fmt(w_max) + " steps=" + std::to_string(steps) +
               " limit=" + std::to_string(limit);
      });
    }
  });
}

using SuiteFn = SuiteResult (*)(const SuiteOptions&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> r = {
      {"dft", suite_dft},
      {"boxcar", suite_boxcar},
      {"bound", suite_bound},
      {"gradients", suite_gradients},
      {"flops", suite_flops},
      {"embeddings", suite_embeddings},
      {"interpolation", suite_interpolation},
      {"sparsification", suite_sparsification},
  };
  return r;
}

}  // namespace

std::vector<Complex> brute_dft(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      // Reduce j k mod n before scaling so large products keep full precision.
      const double angle = -2.0 * kPi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += x[j] * Complex{std::cos(angle), std::sin(angle)};
    }
    out[k] = acc;
  }
  return out;
}

void FdConfig::validate() const {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  if (!(tolerance > 0.0)) throw std::invalid_argument("finite-difference tolerance must be positive");
}

FdResult fd_gradient(const ScalarFunction& f, std::span<const double> p, const FdConfig& config) {
  const std::vector<FdScheme> schemes(p.size(), config.scheme);
  return fd_gradient(f, p, config, schemes);
}

FdResult fd_gradient(const ScalarFunction& f, std::span<const double> p, const FdConfig& config,
                     std::span<const FdScheme> schemes) {
  const VectorFunction wrapped = [&f](std::span<const double> q) {
    RealVector out(1);
    out[0] = f(q);
    return out;
  };
  FdResult result;
  const DenseMatrix jac = fd_jacobian(wrapped, p, config, schemes);
  result.gradient.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    result.gradient[i] = jac(0, static_cast<Eigen::Index>(i));
    if (!std::isfinite(result.gradient[i])) result.nan_probes.push_back(i);
  }
  return result;
}

DenseMatrix fd_jacobian(const VectorFunction& f, std::span<const double> p, const FdConfig& config,
                        std::span<const FdScheme> schemes) {
  config.validate();
  if (schemes.size() != p.size()) throw std::invalid_argument("one finite-difference scheme per coordinate");
  std::vector<double> q(p.begin(), p.end());
  auto at = [&](std::size_t i, double offset) {
    q[i] = p[i] + offset;
    RealVector v = f(q);
    q[i] = p[i];
    return v;
  };
  const double h = config.h;
  DenseMatrix jac;
  for (std::size_t i = 0; i < p.size(); ++i) {
    RealVector d;
    switch (schemes[i]) {
      case FdScheme::central:
        d = (at(i, h) - at(i, -h)) / (2.0 * h);
        break;
      case FdScheme::forward:
        d = (-3.0 * at(i, 0.0) + 4.0 * at(i, h) - at(i, 2.0 * h)) / (2.0 * h);
        break;
      case FdScheme::backward:
        d = (3.0 * at(i, 0.0) - 4.0 * at(i, -h) + at(i, -2.0 * h)) / (2.0 * h);
        break;
    }
    if (jac.size() == 0) jac.resize(d.size(), static_cast<Eigen::Index>(p.size()));
    jac.col(static_cast<Eigen::Index>(i)) = d;
  }
  return jac;
}

RealVector reference_boxcar(int length, int width, int location) {
  RealVector m = RealVector::Zero(length);
  for (int j = 0; j < length; ++j) {
    // j lies in the window iff its cyclic offset from the location is below the width.
    const int offset = ((j - location) % length + length) % length;
    if (offset < width) m[j] = 1.0;
  }
  return m;
}

DenseMatrix reference_dense(const GblrMatrix& m) {
  DenseMatrix out = DenseMatrix::Zero(m.rows(), m.cols());
  for (int k = 0; k < m.blocks(); ++k) {
    const Block& b = m.structure()[k];
    for (int a = 0; a < b.row_width; ++a) {
      for (int c = 0; c < b.col_width; ++c) {
        const int i = (b.row_location + a) % m.rows();
        const int j = (b.col_location + c) % m.cols();
        out(i, j) += m.row_content(k)[a] * m.col_content(k)[c];
      }
    }
  }
  return out;
}

double relative_error(const RealVector& a, const RealVector& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale > 0.0 ? (a - b).norm() / scale : 0.0;
}

bool Report::passed() const noexcept {
  return !suites.empty() && std::all_of(suites.begin(), suites.end(), [](const auto& s) { return s.passed(); });
}

std::string Report::to_json() const {
  nlohmann::ordered_json j;
  j["passed"] = passed();
  j["negative_control"] = negative_control;
  auto list = nlohmann::ordered_json::array();
  for (const auto& s : suites) {
    list.push_back({{"suite", s.name},
                    {"passed", s.passed()},
                    {"cases", s.cases},
                    {"failures", s.failures},
                    {"seed", s.seed},
                    {"seconds", s.seconds},
                    {"counterexamples", s.counterexamples}});
  }
  j["suites"] = std::move(list);
  return j.dump(2);
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& options) {
  for (const auto& [n, fn] : registry())
    if (n == name) return fn(options);
  throw std::invalid_argument("unknown suite '" + name + "'");
}

Report theorem_suites(const std::string& filter, const SuiteOptions& options) {
  std::vector<std::string> wanted;
  std::stringstream ss(filter);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) wanted.push_back(item);
  for (const auto& w : wanted)
    if (std::find(suite_names().begin(), suite_names().end(), w) == suite_names().end())
      throw std::invalid_argument("unknown suite '" + w + "'");
  Report report;
  report.negative_control = options.negative_control;
  for (const auto& name : suite_names()) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
    report.suites.push_back(run_suite(name, options));
  }
  return report;
}

}  // namespace gblr::verify
