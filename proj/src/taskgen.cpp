#include "boolattn/taskgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "boolattn/format.hpp"
#include "boolattn/rng.hpp"

namespace boolattn {
namespace {

constexpr std::uint64_t kInputStream = 0x58;
constexpr std::uint64_t kNoiseStream = 0x4e;

void check_alphabet(Mode mode, double v) {
  const bool ok = uses_sign_alphabet(mode) ? (v == 1.0 || v == -1.0) : (v == 0.0 || v == 1.0);
  if (!ok) {
    throw std::invalid_argument("value " + format_double(v) + " outside the " +
                                std::string(to_string(mode)) + " alphabet");
  }
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::And: return "AND";
    case Mode::Or: return "OR";
    case Mode::NoisyAnd: return "NOISY_AND";
    case Mode::NoisyOr: return "NOISY_OR";
    case Mode::Majority: return "MAJORITY";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  for (Mode m : {Mode::And, Mode::Or, Mode::NoisyAnd, Mode::NoisyOr, Mode::Majority}) {
    if (text == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown mode '" + std::string(text) + "'");
}

std::vector<std::size_t> random_subset(std::size_t d, std::size_t k, std::uint64_t seed) {
  if (k < 1 || k > d) throw std::invalid_argument("random_subset: need 1 <= k <= d");
  std::vector<std::size_t> pool(d);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  Engine rng(derive_seed({seed}));
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pick = i + static_cast<std::size_t>(uniform_below(rng, d - i));
    std::swap(pool[i], pool[pick]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

TaskSpec make_task(std::size_t d, std::size_t k, Mode mode, double noise_p, std::uint64_t seed) {
  if (k < 2 || k > d) throw std::invalid_argument("make_task: need 2 <= k <= d");
  if (k % 2 != 0) throw std::invalid_argument("make_task: k must be even");
  if (!(noise_p >= 0.0 && noise_p <= 1.0 / 3.0)) {
    throw std::invalid_argument("make_task: noise_p must lie in [0, 1/3]");
  }
  if (noise_p != 0.0 && !is_noisy(mode)) {
    throw std::invalid_argument("make_task: noise_p set for a noise-free mode");
  }
  return TaskSpec{d, k, mode, noise_p, random_subset(d, k, seed), seed};
}

PairingMap build_pairing(std::span<const std::size_t> subset, std::size_t d) {
  if (subset.empty() || subset.size() % 2 != 0) {
    throw std::invalid_argument("build_pairing: subset size must be even and non-zero");
  }
  PairingMap p;
  p.col_of.assign(d, std::nullopt);
  const std::size_t t = subset.size() / 2;
  for (std::size_t m = 0; m < t; ++m) {
    const std::size_t a = subset[2 * m];
    const std::size_t b = subset[2 * m + 1];
    if (!(a < b) || b >= d || (m > 0 && subset[2 * m - 1] >= a)) {
      throw std::invalid_argument("build_pairing: subset must be strictly increasing within [0, d)");
    }
    p.c1.push_back(a);
    p.c2.push_back(b);
    p.col_of[a] = m;
    p.col_of[b] = m;
  }
  return p;
}

double label(const TaskSpec& task, std::span<const double> x_row) {
  if (x_row.size() != task.d) throw std::invalid_argument("label: row length differs from d");
  for (double v : x_row) check_alphabet(task.mode, v);
  switch (task.mode) {
    case Mode::And:
    case Mode::NoisyAnd: {
      double y = 1.0;
      for (std::size_t j : task.subset) y *= x_row[j];
      return y;
    }
    case Mode::Or:
    case Mode::NoisyOr: {
      double none = 1.0;
      for (std::size_t j : task.subset) none *= 1.0 - x_row[j];
      return 1.0 - none;
    }
    case Mode::Majority: {
      double s = 0.0;
      for (std::size_t j : task.subset) s += x_row[j];
      return sign_of(s);
    }
  }
  return 0.0;
}

Matrix clean_intermediates(const TaskSpec& task, const PairingMap& pairing, const Matrix& x) {
  const std::size_t n = x.rows();
  const std::size_t t = pairing.t();
  std::vector<double> e(n * t);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t m = 0; m < t; ++m) {
      const double a = x(l, pairing.c1[m]);
      const double b = x(l, pairing.c2[m]);
      e[l * t + m] = uses_sign_alphabet(task.mode) ? (a + b) / 2.0 : a * b;
    }
  }
  return Matrix(n, t, std::move(e));
}

Batch sample_batch(const TaskSpec& task, std::size_t n, std::uint64_t seed,
                   std::optional<std::uint64_t> noise_seed) {
  if (n == 0) throw std::invalid_argument("sample_batch: n must be >= 1");
  const std::size_t d = task.d;

  Engine input_rng(derive_seed({task.seed, seed, kInputStream}));
  BitSource bits(input_rng);
  const bool sign = uses_sign_alphabet(task.mode);
  std::vector<double> xs(n * d);
  for (double& v : xs) {
    const bool bit = bits.next();
    v = sign ? (bit ? 1.0 : -1.0) : (bit ? 1.0 : 0.0);
  }
  Matrix x(n, d, std::move(xs));

  std::vector<double> y(n);
  for (std::size_t l = 0; l < n; ++l) y[l] = label(task, x.row(l));

  PairingMap pairing = build_pairing(task.subset, d);
  Matrix e = clean_intermediates(task, pairing, x);
  if (is_noisy(task.mode) && task.noise_p > 0.0) {
    Engine noise_rng(derive_seed({task.seed, noise_seed.value_or(seed), kNoiseStream}));
    std::vector<double> flipped(e.data().begin(), e.data().end());
    for (double& v : flipped) {
      if (uniform01(noise_rng) < task.noise_p) v = 1.0 - v;
    }
    e = Matrix(n, pairing.t(), std::move(flipped));
  }
  return Batch{std::move(x), std::move(y), std::move(e), std::move(pairing), task};
}

std::vector<double> target_indicator(const TaskSpec& task) {
  std::vector<double> v(task.d, 0.0);
  for (std::size_t j : task.subset) v[j] = 1.0;
  return v;
}

void write_batch(std::ostream& out, const Batch& batch) {
  const TaskSpec& task = batch.task;
  out << task.d << ' ' << task.k << ' ' << task.t() << ' ' << to_string(task.mode) << ' '
      << format_double(task.noise_p) << ' ' << task.seed << '\n';
  auto put = [&out](double v, bool first) {
    if (!first) out << ' ';
    out << static_cast<long long>(v);
  };
  for (std::size_t l = 0; l < batch.n(); ++l) {
    bool first = true;
    for (double v : batch.x.row(l)) {
      put(v, first);
      first = false;
    }
    put(batch.y[l], false);
    for (double v : batch.e.row(l)) put(v, false);
    out << '\n';
  }
}

Batch read_batch(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("read_batch: missing header line");
  std::istringstream hs(header);
  std::size_t d = 0, k = 0, t = 0;
  std::string mode_text, p_text;
  std::uint64_t seed = 0;
  if (!(hs >> d >> k >> t >> mode_text >> p_text >> seed)) {
    throw std::runtime_error("read_batch: malformed header '" + header + "'");
  }
  const double p = parse_double(p_text);
  TaskSpec task = make_task(d, k, parse_mode(mode_text), p, seed);
  if (t != task.t()) throw std::runtime_error("read_batch: header t differs from k/2");

  std::vector<double> xs, ys, es;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    long long v = 0;
    while (ls >> v) vals.push_back(static_cast<double>(v));
    if (!ls.eof() || vals.size() != d + 1 + t) {
      throw std::runtime_error("read_batch: line " + std::to_string(line_no) + " expected " +
                               std::to_string(d + 1 + t) + " integers");
    }
    xs.insert(xs.end(), vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(d));
    ys.push_back(vals[d]);
    es.insert(es.end(), vals.begin() + static_cast<std::ptrdiff_t>(d + 1), vals.end());
  }
  const std::size_t n = ys.size();
  if (n == 0) throw std::runtime_error("read_batch: no rows");

  Matrix x(n, d, std::move(xs));
  for (std::size_t l = 0; l < n; ++l) {
    if (label(task, x.row(l)) != ys[l]) {
      throw std::runtime_error("read_batch: label on row " + std::to_string(l + 1) +
                               " disagrees with the hidden subset");
    }
  }
  PairingMap pairing = build_pairing(task.subset, d);
  Matrix e(n, t, std::move(es));
  if (!is_noisy(task.mode) && !(e == clean_intermediates(task, pairing, x))) {
    throw std::runtime_error("read_batch: intermediates disagree with the hidden subset");
  }
  return Batch{std::move(x), std::move(ys), std::move(e), std::move(pairing), std::move(task)};
}

}  // namespace boolattn
