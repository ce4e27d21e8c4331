#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "boolattn/attention.hpp"
#include "boolattn/numerics.hpp"
#include "boolattn/taskgen.hpp"

namespace boolattn {

enum class DecodeMode {
  PaperThreshold,  // fixed cutoff 0.5 * d^(eps/8)
  GapSplit,        // cutoff at half the largest weight
};

std::string_view to_string(DecodeMode mode);
DecodeMode parse_decode_mode(std::string_view text);

enum class EtaRule {
  Theorem,  // eta_const * d^(1 + eps/8)
  Linear,   // eta_const * d; puts majority on-pair weights near 1/2
};

std::string_view to_string(EtaRule rule);
EtaRule parse_eta_rule(std::string_view text);

struct TrainConfig {
  double eps = 8.0;
  double eta_const = 8.0;
  DecodeMode decode_mode = DecodeMode::GapSplit;
  EtaRule eta_rule = EtaRule::Theorem;

  void validate() const;
};

/// Outcome of one teacher-forced step on one (task, batch) pair.
struct RecoveryReport {
  // run identity, echoed into the CSV row
  std::size_t d = 0;
  std::size_t k = 0;
  std::size_t n = 0;
  double eps = 0.0;
  double eta_const = 0.0;
  Mode mode = Mode::And;
  double noise_p = 0.0;
  std::uint64_t seed = 0;

  double inf_error = 0.0;
  std::vector<double> soft_prediction;
  std::vector<std::size_t> decoded_subset;
  bool exact_match = false;
  WeightMatrix w_after;
};

/// eta = eta_const * d^(1 + eps/8), or eta_const * d under EtaRule::Linear.
double learning_rate(std::size_t d, const TrainConfig& config);

/// W1 = W0 - eta * oracle_gradient(W0, X, E).
WeightMatrix one_step(const WeightMatrix& w0, const Batch& batch, double eta,
                      const GradientOracleSpec& oracle);

/// 2 * softmax(W) * 1_t.
std::vector<double> predict_soft(const WeightMatrix& w);

/// ||predict_soft(W) - v_b||_inf.
double recovery_error(const WeightMatrix& w, std::span<const double> v_b);

/// Bit j is decoded when at least one of its weights W(j, m) lies strictly
/// above the cutoff. Returns sorted indices.
std::vector<std::size_t> decode_threshold(const WeightMatrix& w, DecodeMode mode, double eps);

/// Nearest integer with half-integers rounded down: nint(x) = x - 1/2 there.
long long nint(double x);

/// nint(2 W) entrywise.
IntMatrix decode_majority(const WeightMatrix& w);

/// sign(x^T M 1_t), 0 on a tie.
int majority_predict(std::span<const double> x, const IntMatrix& m);

/// The d x t 0/1 matrix with ones exactly at (c1[m], m) and (c2[m], m).
IntMatrix pair_indicator(const PairingMap& pairing);

/// W0 = 0, one step, then decode with config.decode_mode. Used for AND/OR
/// and their noisy variants.
RecoveryReport run_teacher_forced(const Batch& batch, const TrainConfig& config,
                                  const GradientOracleSpec& oracle, std::uint64_t seed);

/// Majority variant: decodes nint(2 W1) and reports exact_match when it equals
/// the pair indicator; decoded_subset lists rows of nint(2 W1) holding a
/// non-zero entry.
RecoveryReport run_majority(const Batch& batch, const TrainConfig& config,
                            const GradientOracleSpec& oracle, std::uint64_t seed);

/// Header and row for `d,k,n,eps,eta_const,mode,p,seed,inf_error,exact_match`.
std::string recovery_csv_header();
std::string to_csv_row(const RecoveryReport& report);

}  // namespace boolattn
