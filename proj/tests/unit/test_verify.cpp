#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "boolattn/attention.hpp"
#include "boolattn/rng.hpp"
#include "boolattn/verify.hpp"

using namespace boolattn;

namespace {

Matrix random_bits(std::size_t n, std::size_t d, std::uint64_t seed, bool signs = false) {
  Engine rng(seed);
  std::vector<double> x(n * d);
  for (double& v : x) {
    const double b = static_cast<double>(uniform_below(rng, 2));
    v = signs ? 2 * b - 1 : b;
  }
  return Matrix(n, d, x);
}

Matrix with_column(const Matrix& x, std::size_t col, const std::function<double(std::size_t)>& f) {
  std::vector<double> v(x.data().begin(), x.data().end());
  for (std::size_t l = 0; l < x.rows(); ++l) v[l * x.cols() + col] = f(l);
  return Matrix(x.rows(), x.cols(), v);
}

// Naive brute-force max deviation over r = 1, 2.
double brute_deviation(const Matrix& x) {
  const double n = static_cast<double>(x.rows());
  double worst = 0.0;
  for (std::size_t a = 0; a < x.cols(); ++a) {
    double s = 0.0;
    for (std::size_t l = 0; l < x.rows(); ++l) s += x(l, a);
    worst = std::max(worst, std::abs(s / n - 0.5));
    for (std::size_t b = a + 1; b < x.cols(); ++b) {
      double p = 0.0;
      for (std::size_t l = 0; l < x.rows(); ++l) p += x(l, a) * x(l, b);
      worst = std::max(worst, std::abs(p / n - 0.25));
    }
  }
  return worst;
}

Matrix column_stochastic(std::size_t d, std::size_t t, const std::vector<std::pair<std::size_t, double>>& pair_vals) {
  // Each column m gets pair_vals[2m], pair_vals[2m+1]; the rest is spread evenly.
  std::vector<double> s(d * t, 0.0);
  for (std::size_t m = 0; m < t; ++m) {
    const auto [r1, v1] = pair_vals[2 * m];
    const auto [r2, v2] = pair_vals[2 * m + 1];
    const double rest = (1.0 - v1 - v2) / static_cast<double>(d - 2);
    for (std::size_t j = 0; j < d; ++j) s[j * t + m] = rest;
    s[r1 * t + m] = v1;
    s[r2 * t + m] = v2;
  }
  return Matrix(d, t, s);
}

}  // namespace

TEST_CASE("kappa") {
  CHECK(std::abs(kappa(16, 0.01, 1024) - 4.0 * std::sqrt(std::log(1600.0) / 1024.0)) < 1e-15);
  CHECK(std::abs(kappa(16, 0.01, 1024) - 0.3396) < 1e-4);
  CHECK(std::abs(kappa(16, 0.01, 4096) - kappa(16, 0.01, 1024) / 2) < 1e-15);
  for (std::size_t n = 1; n < 100; ++n) CHECK(kappa(16, 0.01, n + 1) < kappa(16, 0.01, n));
  for (std::size_t d = 1; d < 100; ++d) CHECK(kappa(d + 1, 0.01, 100) > kappa(d, 0.01, 100));
  CHECK_THROWS_AS(kappa(16, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(kappa(16, 0.1, 10), std::invalid_argument);
  CHECK_THROWS_AS(kappa(16, 0.05, 0), std::invalid_argument);
}

TEST_CASE("interaction concentration matches brute force") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix x = random_bits(300, 12, s);
    const ConcentrationReport r = check_interaction_concentration(x, 0.01);
    CHECK(std::abs(r.max_deviation - brute_deviation(x)) < 1e-15);
    CHECK(r.n_terms_checked == 12 + 66);
    CHECK(r.pass == (r.max_deviation <= r.kappa));
  }
}

TEST_CASE("constant column fails with the argmax on it") {
  const Matrix x = with_column(random_bits(1024, 16, 1), 5, [](std::size_t) { return 1.0; });
  const ConcentrationReport r = check_interaction_concentration(x, 0.01);
  CHECK_FALSE(r.pass);
  CHECK(r.argmax_tuple == std::vector<std::size_t>{5});
  CHECK(std::abs(r.max_deviation - 0.5) < 1e-15);
}

TEST_CASE("single row is a vacuous pass") {
  const ConcentrationReport r = check_interaction_concentration(random_bits(1, 8, 3), 0.01);
  CHECK(r.kappa > 1.0);
  CHECK(r.pass);
}

TEST_CASE("triples are scanned on request") {
  const Matrix x = random_bits(200, 6, 9);
  const ConcentrationReport r = check_interaction_concentration(x, 0.01, true);
  CHECK(r.n_terms_checked == 6 + 15 + 20);
  CHECK_THROWS_AS(check_interaction_concentration(random_bits(10, 4, 1, true), 0.01),
                  std::invalid_argument);
}

TEST_CASE("majority concentration on degenerate pairs") {
  const PairingMap p = build_pairing(std::vector<std::size_t>{2, 7}, 10);
  const Matrix base = random_bits(4096, 10, 4, true);
  const Matrix dup = with_column(base, 7, [&base](std::size_t l) { return base(l, 2); });
  const ConcentrationReport r1 = check_majority_concentration(dup, p, 0.01);
  CHECK_FALSE(r1.pass);
  CHECK(std::abs(r1.max_deviation - 0.5) < 1e-15);

  const Matrix anti = with_column(base, 7, [&base](std::size_t l) { return -base(l, 2); });
  const ConcentrationReport r2 = check_majority_concentration(anti, p, 0.01);
  CHECK_FALSE(r2.pass);
  CHECK(std::abs(r2.max_deviation - 0.5) < 1e-15);
  CHECK(r2.argmax_tuple == std::vector<std::size_t>{2, 7});

  CHECK(check_majority_concentration(base, p, 0.01).pass);
  CHECK_THROWS_AS(check_majority_concentration(random_bits(10, 10, 1), p, 0.01), std::invalid_argument);
}

TEST_CASE("concentration CSV row") {
  ConcentrationReport r;
  r.d = 4;
  r.n = 8;
  r.failure_prob_target = 0.01;
  r.kappa = 0.5;
  r.max_deviation = 0.25;
  r.argmax_tuple = {1, 3};
  r.pass = true;
  CHECK(to_csv_row(r) == "4,8,0.01,0.5,0.25,true,1;3");
}

TEST_CASE("gradient structure on synthetic gradients") {
  const std::size_t d = 64;
  const std::vector<std::size_t> b{0, 5, 9, 20};
  const PairingMap p = build_pairing(b, d);
  std::vector<double> ideal(d * 2, 0.0);
  for (std::size_t m = 0; m < 2; ++m) {
    ideal[p.c1[m] * 2 + m] = -1.0 / (8.0 * d);
    ideal[p.c2[m] * 2 + m] = -1.0 / (8.0 * d);
  }
  // kappa small enough that the band 4 kappa / d is narrower than 1/(8d).
  const double k_small = 0.01;
  const GradientStructureReport good = check_gradient_structure(Matrix(d, 2, ideal), p, d, 8.0, k_small);
  CHECK(good.pass);
  CHECK(good.separation_ratio == std::numeric_limits<double>::infinity());
  CHECK(good.on_pair_centre == -1.0 / (8.0 * d));

  const GradientStructureReport zero = check_gradient_structure(Matrix::zeros(d, 2), p, d, 8.0, k_small);
  CHECK_FALSE(zero.pass);
  CHECK(zero.on_pair_violations == 4);
  CHECK_THROWS_AS(check_gradient_structure(Matrix::zeros(d, 3), p, d, 8.0, k_small), std::invalid_argument);
}

TEST_CASE("softmax sandwich") {
  const PairingMap p = build_pairing(std::vector<std::size_t>{0, 1}, 4);
  CHECK(check_softmax_sandwich(column_stochastic(4, 1, {{0, 0.5}, {1, 0.5}}), p, 1e-6).pass);
  CHECK_FALSE(check_softmax_sandwich(column_stochastic(4, 1, {{0, 0.4}, {1, 0.6}}), p, 0.04).pass);
  CHECK(check_softmax_sandwich(column_stochastic(4, 1, {{0, 0.45}, {1, 0.55}}), p, 0.04).pass);
  CHECK_THROWS_AS(check_softmax_sandwich(Matrix(4, 1, {0.5, 0.5, 0.5, 0.5}), p, 0.1), std::invalid_argument);
}

TEST_CASE("real gradient at W = 0 has negative on-pair entries") {
  const TaskSpec task = make_task(64, 32, Mode::And, 0.0, 3);
  const Batch b = sample_batch(task, 256, 3);
  const Matrix g = analytic_gradient(WeightMatrix::zeros(64, 16), b.x, b.e);
  const GradientStructureReport r = check_gradient_structure(g, b.pairing, 64, 8.0, kappa(64, 0.01, 256));
  CHECK(r.separation_ratio > 1.0);
  CHECK(r.band_half_width == 4.0 * kappa(64, 0.01, 256) / 64.0);
}
