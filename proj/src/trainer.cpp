#include "boolattn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "boolattn/format.hpp"

namespace boolattn {

std::string_view to_string(DecodeMode mode) {
  return mode == DecodeMode::GapSplit ? "GAP_SPLIT" : "PAPER_THRESHOLD";
}

DecodeMode parse_decode_mode(std::string_view text) {
  if (text == "GAP_SPLIT") return DecodeMode::GapSplit;
  if (text == "PAPER_THRESHOLD") return DecodeMode::PaperThreshold;
  throw std::invalid_argument("unknown decode mode '" + std::string(text) + "'");
}

std::string_view to_string(EtaRule rule) { return rule == EtaRule::Linear ? "linear" : "theorem"; }

EtaRule parse_eta_rule(std::string_view text) {
  if (text == "theorem") return EtaRule::Theorem;
  if (text == "linear") return EtaRule::Linear;
  throw std::invalid_argument("unknown eta rule '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("eps must be > 0");
  if (!(eta_const > 0.0) || !std::isfinite(eta_const)) {
    throw std::invalid_argument("eta_const must be > 0");
  }
}

double learning_rate(std::size_t d, const TrainConfig& config) {
  const double dd = static_cast<double>(d);
  if (config.eta_rule == EtaRule::Linear) return config.eta_const * dd;
  return config.eta_const * std::pow(dd, 1.0 + config.eps / 8.0);
}

WeightMatrix one_step(const WeightMatrix& w0, const Batch& batch, double eta,
                      const GradientOracleSpec& oracle) {
  if (w0.d() != batch.task.d || w0.t() != batch.task.t()) {
    throw std::invalid_argument("one_step: W0 must be d x k/2");
  }
  const Matrix g = oracle_gradient(w0, batch.x, batch.e, oracle);
  std::vector<double> w1(w0.values.data().begin(), w0.values.data().end());
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] -= eta * g.data()[i];
  return {Matrix(w0.d(), w0.t(), std::move(w1))};
}

std::vector<double> predict_soft(const WeightMatrix& w) {
  std::vector<double> p = row_sums(softmax_columns(w.values));
  for (double& v : p) v *= 2.0;
  return p;
}

double recovery_error(const WeightMatrix& w, std::span<const double> v_b) {
  if (v_b.size() != w.d()) throw std::invalid_argument("recovery_error: length mismatch");
  return inf_norm_diff(predict_soft(w), v_b);
}

std::vector<std::size_t> decode_threshold(const WeightMatrix& w, DecodeMode mode, double eps) {
  const auto entries = w.values.data();
  double cutoff = 0.0;
  if (mode == DecodeMode::PaperThreshold) {
    cutoff = 0.5 * std::pow(static_cast<double>(w.d()), eps / 8.0);
  } else {
    cutoff = *std::max_element(entries.begin(), entries.end()) / 2.0;
  }
  std::vector<std::size_t> decoded;
  for (std::size_t j = 0; j < w.d(); ++j) {
    int hits = 0;
    for (std::size_t m = 0; m < w.t(); ++m) hits += w.values(j, m) > cutoff ? 1 : 0;
    if (hits >= 1) decoded.push_back(j);
  }
  return decoded;
}

long long nint(double x) {
  const double fl = std::floor(x);
  const double frac = x - fl;
  return static_cast<long long>(frac > 0.5 ? fl + 1.0 : fl);
}

IntMatrix decode_majority(const WeightMatrix& w) {
  IntMatrix out{w.d(), w.t(), std::vector<long long>(w.d() * w.t())};
  for (std::size_t i = 0; i < out.entries.size(); ++i) out.entries[i] = nint(2.0 * w.values.data()[i]);
  return out;
}

int majority_predict(std::span<const double> x, const IntMatrix& m) {
  if (x.size() != m.rows) throw std::invalid_argument("majority_predict: length mismatch");
  long long total = 0;
  for (std::size_t j = 0; j < m.rows; ++j) {
    if (x[j] != 1.0 && x[j] != -1.0) {
      throw std::invalid_argument("majority_predict: inputs must be +1 or -1");
    }
    long long row = 0;
    for (std::size_t c = 0; c < m.cols; ++c) row += m(j, c);
    total += x[j] > 0.0 ? row : -row;
  }
  return total > 0 ? 1 : (total < 0 ? -1 : 0);
}

IntMatrix pair_indicator(const PairingMap& pairing) {
  const std::size_t d = pairing.col_of.size();
  const std::size_t t = pairing.t();
  IntMatrix out{d, t, std::vector<long long>(d * t, 0)};
  for (std::size_t m = 0; m < t; ++m) {
    out.entries[pairing.c1[m] * t + m] = 1;
    out.entries[pairing.c2[m] * t + m] = 1;
  }
  return out;
}

namespace {

RecoveryReport base_report(const Batch& batch, const TrainConfig& config, std::uint64_t seed) {
  RecoveryReport r;
  r.d = batch.task.d;
  r.k = batch.task.k;
  r.n = batch.n();
  r.eps = config.eps;
  r.eta_const = config.eta_const;
  r.mode = batch.task.mode;
  r.noise_p = batch.task.noise_p;
  r.seed = seed;
  return r;
}

}  // namespace

RecoveryReport run_teacher_forced(const Batch& batch, const TrainConfig& config,
                                  const GradientOracleSpec& oracle, std::uint64_t seed) {
  config.validate();
  RecoveryReport r = base_report(batch, config, seed);
  const double eta = learning_rate(batch.task.d, config);
  r.w_after = one_step(WeightMatrix::zeros(batch.task.d, batch.task.t()), batch, eta, oracle);
  r.soft_prediction = predict_soft(r.w_after);
  r.inf_error = inf_norm_diff(r.soft_prediction, target_indicator(batch.task));
  r.decoded_subset = decode_threshold(r.w_after, config.decode_mode, config.eps);
  r.exact_match = r.decoded_subset == batch.task.subset;
  return r;
}

RecoveryReport run_majority(const Batch& batch, const TrainConfig& config,
                            const GradientOracleSpec& oracle, std::uint64_t seed) {
  if (batch.task.mode != Mode::Majority) {
    throw std::invalid_argument("run_majority: batch is not a majority task");
  }
  config.validate();
  RecoveryReport r = base_report(batch, config, seed);
  const double eta = learning_rate(batch.task.d, config);
  r.w_after = one_step(WeightMatrix::zeros(batch.task.d, batch.task.t()), batch, eta, oracle);
  r.soft_prediction = predict_soft(r.w_after);
  r.inf_error = inf_norm_diff(r.soft_prediction, target_indicator(batch.task));
  const IntMatrix decoded = decode_majority(r.w_after);
  for (std::size_t j = 0; j < decoded.rows; ++j) {
    for (std::size_t m = 0; m < decoded.cols; ++m) {
      if (decoded(j, m) != 0) {
        r.decoded_subset.push_back(j);
        break;
      }
    }
  }
  r.exact_match = decoded == pair_indicator(batch.pairing);
  return r;
}

std::string recovery_csv_header() { return "d,k,n,eps,eta_const,mode,p,seed,inf_error,exact_match"; }

std::string to_csv_row(const RecoveryReport& r) {
  std::string row;
  row += std::to_string(r.d) + ',' + std::to_string(r.k) + ',' + std::to_string(r.n) + ',';
  row += format_double(r.eps) + ',' + format_double(r.eta_const) + ',';
  row += std::string(to_string(r.mode)) + ',' + format_double(r.noise_p) + ',';
  row += std::to_string(r.seed) + ',' + format_double(r.inf_error) + ',';
  row += r.exact_match ? "true" : "false";
  return row;
}

}  // namespace boolattn
