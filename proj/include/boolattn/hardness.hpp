#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boolattn/attention.hpp"
#include "boolattn/numerics.hpp"

namespace boolattn {

struct HardnessReport {
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t trials = 0;
  double frac_all_zero_batches = 0.0;
  double floor = 0.0;
  double estimator_loss = 0.0;
  std::size_t n_subsets_evaluated = 0;
};

/// Attention model trained end to end from (X, y) alone. The hidden subset and
/// the teacher intermediates are never visible to it.
struct EndToEndEstimator {
  WeightMatrix model_weights;
  std::size_t steps = 0;
  double lr = 0.0;
  std::string readout;
  std::vector<double> loss_history;  // loss before each step, then the final loss

  /// The estimator's fixed guess at v_b: predict_soft of the trained weights.
  std::vector<double> support_output() const;
};

/// min{k/d, 1 - k/d}.
double hardness_floor(std::size_t d, std::size_t k);

/// Fraction of `trials` independent AND (task, batch) draws whose labels are
/// all zero. Fills d, k, n, trials, frac_all_zero_batches and floor.
HardnessReport label_degeneracy(std::size_t d, std::size_t k, std::size_t n, std::size_t trials,
                                std::uint64_t seed);

/// Gradient descent on (1/2n) sum_i (yhat_i - y_i)^2 with the scalar readout
/// yhat_i = mean over columns of row i of forward(W, X). W has t columns and
/// starts from uniform noise on [-init_scale, init_scale] drawn from `seed`.
EndToEndEstimator end_to_end_train(const Matrix& x, std::span<const double> y, std::size_t t,
                                   std::size_t steps, double lr, std::uint64_t seed,
                                   double init_scale = 0.01);

/// Loss and gradient of the end-to-end objective, exposed for testing.
double end_to_end_loss(const WeightMatrix& w, const Matrix& x, std::span<const double> y);
Matrix end_to_end_gradient(const WeightMatrix& w, const Matrix& x, std::span<const double> y);

/// Monte-Carlo mean over n_subsets uniform k-subsets b of min_j |(v_b - f)_j|.
double support_loss(std::span<const double> f, std::size_t k, std::size_t n_subsets,
                    std::uint64_t seed);
double support_loss(const EndToEndEstimator& estimator, std::size_t d, std::size_t k,
                    std::size_t n_subsets, std::uint64_t seed);

/// Degeneracy statistics, then an estimator trained on the first all-zero
/// batch (or the first batch if none was degenerate) scored by support_loss.
HardnessReport run_hardness(std::size_t d, std::size_t k, std::size_t n, std::size_t trials,
                            std::size_t n_subsets, std::size_t steps, double lr,
                            std::uint64_t seed);

/// `d,k,n,trials,frac_all_zero,floor,estimator_loss`.
std::string hardness_csv_header();
std::string to_csv_row(const HardnessReport& report);

}  // namespace boolattn
