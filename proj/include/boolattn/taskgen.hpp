#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "boolattn/numerics.hpp"

namespace boolattn {

// Indices are 0-based throughout: bit j lives in column j of X, teacher
// column m in column m of E and W.

enum class Mode { And, Or, NoisyAnd, NoisyOr, Majority };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// {0,1} for the AND/OR family, {-1,+1} for majority.
inline bool uses_sign_alphabet(Mode mode) { return mode == Mode::Majority; }
inline bool is_noisy(Mode mode) { return mode == Mode::NoisyAnd || mode == Mode::NoisyOr; }

/// The hidden Boolean concept.
struct TaskSpec {
  std::size_t d = 0;
  std::size_t k = 0;
  Mode mode = Mode::And;
  double noise_p = 0.0;
  std::vector<std::size_t> subset;  // sorted, k distinct indices in [0, d)
  std::uint64_t seed = 0;

  std::size_t t() const { return k / 2; }
};

/// Assignment of the k relevant bits to t teacher columns, two per column.
struct PairingMap {
  std::vector<std::optional<std::size_t>> col_of;  // length d; empty for bits outside the subset
  std::vector<std::size_t> c1;                     // length t
  std::vector<std::size_t> c2;                     // length t

  std::size_t t() const { return c1.size(); }
  bool on_pair(std::size_t j, std::size_t m) const { return col_of[j] == m; }
};

struct Batch {
  Matrix x;               // n x d over the task alphabet
  std::vector<double> y;  // length n
  Matrix e;               // n x t teacher intermediates
  PairingMap pairing;
  TaskSpec task;

  std::size_t n() const { return x.rows(); }
};

/// Draws the hidden subset uniformly from all k-subsets of [0, d) with a
/// seeded partial Fisher-Yates shuffle.
TaskSpec make_task(std::size_t d, std::size_t k, Mode mode, double noise_p, std::uint64_t seed);

/// Uniform k-subset of [0, d), sorted. 1 <= k <= d.
std::vector<std::size_t> random_subset(std::size_t d, std::size_t k, std::uint64_t seed);

/// Pairs consecutive elements of the sorted subset: (b0,b1), (b2,b3), ...
PairingMap build_pairing(std::span<const std::size_t> subset, std::size_t d);

/// Samples n i.i.d. rows. Inputs come from a stream keyed on (task.seed, seed);
/// intermediate-bit noise uses its own stream keyed on (task.seed, noise_seed),
/// defaulting to seed, so one X can be replayed under several noise draws.
Batch sample_batch(const TaskSpec& task, std::size_t n, std::uint64_t seed,
                   std::optional<std::uint64_t> noise_seed = std::nullopt);

/// Boolean label of one input row. Noisy modes label with their clean
/// counterpart; noise only touches the intermediates.
double label(const TaskSpec& task, std::span<const double> x_row);

/// Noise-free intermediates: products x_c1 * x_c2 for the AND/OR family,
/// (x_c1 + x_c2) / 2 for majority.
Matrix clean_intermediates(const TaskSpec& task, const PairingMap& pairing, const Matrix& x);

/// v_b, the {0,1} indicator of the hidden subset.
std::vector<double> target_indicator(const TaskSpec& task);

/// Text format: header `d k t mode p seed`, then one line per row holding the
/// d inputs, the label and the t intermediates, all space separated.
void write_batch(std::ostream& out, const Batch& batch);
Batch read_batch(std::istream& in);

}  // namespace boolattn
