#include "boolattn/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "boolattn/format.hpp"
#include "boolattn/rng.hpp"
#include "boolattn/taskgen.hpp"
#include "boolattn/trainer.hpp"

namespace boolattn {
namespace {

constexpr std::uint64_t kSubsetStream = 0x62;
constexpr std::uint64_t kInputStream = 0x78;
constexpr std::uint64_t kInitStream = 0x69;
constexpr std::uint64_t kSupportStream = 0x73;

struct AndSample {
  Matrix x;
  std::vector<double> y;
  std::vector<std::size_t> subset;
};

// One AND draw for trial `trial`: a uniform k-subset, n uniform rows, labels.
AndSample sample_and(std::size_t d, std::size_t k, std::size_t n, std::uint64_t seed,
                     std::size_t trial) {
  AndSample s{Matrix::zeros(1, 1), std::vector<double>(n), {}};
  s.subset = random_subset(d, k, derive_seed({seed, trial, kSubsetStream}));
  Engine rng(derive_seed({seed, trial, kInputStream}));
  BitSource bits(rng);
  std::vector<double> xs(n * d);
  for (double& v : xs) v = bits.next() ? 1.0 : 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    double y = 1.0;
    for (std::size_t j : s.subset) y *= xs[l * d + j];
    s.y[l] = y;
  }
  s.x = Matrix(n, d, std::move(xs));
  return s;
}

std::vector<double> readout(const Matrix& z) {
  std::vector<double> yhat = row_sums(z);
  for (double& v : yhat) v /= static_cast<double>(z.cols());
  return yhat;
}

double floor_ratio(std::size_t d, std::size_t k) {
  const double ratio = static_cast<double>(k) / static_cast<double>(d);
  return std::min(ratio, 1.0 - ratio);
}

}  // namespace

std::vector<double> EndToEndEstimator::support_output() const { return predict_soft(model_weights); }

double hardness_floor(std::size_t d, std::size_t k) {
  if (k < 2 || k > d) throw std::invalid_argument("hardness_floor: need 2 <= k <= d");
  return floor_ratio(d, k);
}

HardnessReport label_degeneracy(std::size_t d, std::size_t k, std::size_t n, std::size_t trials,
                                std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("label_degeneracy: n must be >= 1");
  if (trials == 0) throw std::invalid_argument("label_degeneracy: trials must be >= 1");
  if (k < 1 || k > d) throw std::invalid_argument("label_degeneracy: need 1 <= k <= d");

  std::size_t all_zero = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const AndSample s = sample_and(d, k, n, seed, trial);
    if (std::all_of(s.y.begin(), s.y.end(), [](double v) { return v == 0.0; })) ++all_zero;
  }
  HardnessReport r;
  r.d = d;
  r.k = k;
  r.n = n;
  r.trials = trials;
  r.frac_all_zero_batches = static_cast<double>(all_zero) / static_cast<double>(trials);
  r.floor = floor_ratio(d, k);
  return r;
}

double end_to_end_loss(const WeightMatrix& w, const Matrix& x, std::span<const double> y) {
  if (y.size() != x.rows()) throw std::invalid_argument("end_to_end_loss: y length differs from n");
  const std::vector<double> yhat = readout(forward(w, x));
  std::vector<double> sq(yhat.size());
  for (std::size_t i = 0; i < yhat.size(); ++i) sq[i] = (yhat[i] - y[i]) * (yhat[i] - y[i]);
  return pairwise_sum(sq) / (2.0 * static_cast<double>(x.rows()));
}

Matrix end_to_end_gradient(const WeightMatrix& w, const Matrix& x, std::span<const double> y) {
  if (y.size() != x.rows()) throw std::invalid_argument("end_to_end_gradient: y length differs from n");
  const std::size_t n = x.rows(), d = w.d(), t = w.t();
  const Matrix s = softmax_columns(w.values);
  const Matrix z = matmul(x, s);
  const std::vector<double> yhat = readout(z);

  std::vector<double> g(d * t);
  std::vector<double> terms(n);
  for (std::size_t m = 0; m < t; ++m) {
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) terms[i] = (yhat[i] - y[i]) * (x(i, j) - z(i, m));
      g[j * t + m] = s(j, m) * pairwise_sum(terms) / (static_cast<double>(n) * static_cast<double>(t));
    }
  }
  return Matrix(d, t, std::move(g));
}

EndToEndEstimator end_to_end_train(const Matrix& x, std::span<const double> y, std::size_t t,
                                   std::size_t steps, double lr, std::uint64_t seed,
                                   double init_scale) {
  if (t == 0) throw std::invalid_argument("end_to_end_train: t must be >= 1");
  const std::size_t d = x.cols();
  Engine rng(derive_seed({seed, kInitStream}));
  std::vector<double> w0(d * t);
  for (double& v : w0) v = uniform(rng, -init_scale, init_scale);

  EndToEndEstimator est{{Matrix(d, t, std::move(w0))}, steps, lr,
                        "mean over columns of Att_W(X) row i", {}};
  for (std::size_t step = 0; step < steps; ++step) {
    est.loss_history.push_back(end_to_end_loss(est.model_weights, x, y));
    const Matrix g = end_to_end_gradient(est.model_weights, x, y);
    std::vector<double> next(est.model_weights.values.data().begin(),
                             est.model_weights.values.data().end());
    for (std::size_t i = 0; i < next.size(); ++i) next[i] -= lr * g.data()[i];
    est.model_weights = {Matrix(d, t, std::move(next))};
  }
  est.loss_history.push_back(end_to_end_loss(est.model_weights, x, y));
  return est;
}

double support_loss(std::span<const double> f, std::size_t k, std::size_t n_subsets,
                    std::uint64_t seed) {
  if (n_subsets == 0) throw std::invalid_argument("support_loss: n_subsets must be >= 1");
  const std::size_t d = f.size();
  std::vector<double> per_subset(n_subsets);
  std::vector<char> member(d);
  for (std::size_t i = 0; i < n_subsets; ++i) {
    std::fill(member.begin(), member.end(), 0);
    for (std::size_t j : random_subset(d, k, derive_seed({seed, i, kSupportStream}))) member[j] = 1;
    double best = std::abs((member[0] ? 1.0 : 0.0) - f[0]);
    for (std::size_t j = 1; j < d; ++j) best = std::min(best, std::abs((member[j] ? 1.0 : 0.0) - f[j]));
    per_subset[i] = best;
  }
  return pairwise_sum(per_subset) / static_cast<double>(n_subsets);
}

double support_loss(const EndToEndEstimator& estimator, std::size_t d, std::size_t k,
                    std::size_t n_subsets, std::uint64_t seed) {
  const std::vector<double> f = estimator.support_output();
  if (f.size() != d) throw std::invalid_argument("support_loss: estimator width differs from d");
  return support_loss(f, k, n_subsets, seed);
}

HardnessReport run_hardness(std::size_t d, std::size_t k, std::size_t n, std::size_t trials,
                            std::size_t n_subsets, std::size_t steps, double lr,
                            std::uint64_t seed) {
  if (k % 2 != 0) throw std::invalid_argument("run_hardness: k must be even");
  HardnessReport r = label_degeneracy(d, k, n, trials, seed);

  // Train on the first degenerate draw; the estimator never sees the subset.
  std::size_t chosen = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const AndSample s = sample_and(d, k, n, seed, trial);
    if (std::all_of(s.y.begin(), s.y.end(), [](double v) { return v == 0.0; })) {
      chosen = trial;
      break;
    }
  }
  const AndSample s = sample_and(d, k, n, seed, chosen);
  const EndToEndEstimator est = end_to_end_train(s.x, s.y, k / 2, steps, lr, seed);
  r.estimator_loss = support_loss(est, d, k, n_subsets, seed);
  r.n_subsets_evaluated = n_subsets;
  return r;
}

std::string hardness_csv_header() { return "d,k,n,trials,frac_all_zero,floor,estimator_loss"; }

std::string to_csv_row(const HardnessReport& r) {
  return std::to_string(r.d) + ',' + std::to_string(r.k) + ',' + std::to_string(r.n) + ',' +
         std::to_string(r.trials) + ',' + format_double(r.frac_all_zero_batches) + ',' +
         format_double(r.floor) + ',' + format_double(r.estimator_loss);
}

}  // namespace boolattn
