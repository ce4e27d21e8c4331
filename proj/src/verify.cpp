#include "boolattn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "boolattn/format.hpp"

namespace boolattn {
namespace {

std::vector<double> column_major(const Matrix& m) {
  std::vector<double> out(m.rows() * m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[c * m.rows() + r] = m(r, c);
  }
  return out;
}

void track(ConcentrationReport& r, double deviation, std::vector<std::size_t> tuple) {
  ++r.n_terms_checked;
  if (deviation > r.max_deviation || r.argmax_tuple.empty()) {
    r.max_deviation = deviation;
    r.argmax_tuple = std::move(tuple);
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

double kappa(std::size_t d, double p, std::size_t n) {
  if (!(p > 0.0 && p < 0.1)) throw std::invalid_argument("kappa: p must lie in (0, 0.1)");
  if (n == 0) throw std::invalid_argument("kappa: n must be >= 1");
  return 4.0 * std::sqrt(std::log(static_cast<double>(d) / p) / static_cast<double>(n));
}

ConcentrationReport check_interaction_concentration(const Matrix& x, double p,
                                                    bool include_triples) {
  for (double v : x.data()) {
    if (v != 0.0 && v != 1.0) {
      throw std::invalid_argument("check_interaction_concentration: entries must be 0 or 1");
    }
  }
  const std::size_t n = x.rows(), d = x.cols();
  ConcentrationReport r;
  r.d = d;
  r.n = n;
  r.failure_prob_target = p;
  r.kappa = kappa(d, p, n);

  const std::vector<double> cols = column_major(x);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> terms(n);
  auto col = [&](std::size_t j) { return cols.data() + j * n; };

  for (std::size_t j = 0; j < d; ++j) {
    std::copy(col(j), col(j) + n, terms.begin());
    track(r, std::abs(pairwise_sum(terms) * inv_n - 0.5), {j});
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      for (std::size_t l = 0; l < n; ++l) terms[l] = col(a)[l] * col(b)[l];
      track(r, std::abs(pairwise_sum(terms) * inv_n - 0.25), {a, b});
    }
  }
  if (include_triples) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        for (std::size_t c = b + 1; c < d; ++c) {
          for (std::size_t l = 0; l < n; ++l) terms[l] = col(a)[l] * col(b)[l] * col(c)[l];
          track(r, std::abs(pairwise_sum(terms) * inv_n - 0.125), {a, b, c});
        }
      }
    }
  }
  r.pass = r.max_deviation <= r.kappa;
  return r;
}

ConcentrationReport check_majority_concentration(const Matrix& x, const PairingMap& pairing,
                                                 double p) {
  for (double v : x.data()) {
    if (v != 1.0 && v != -1.0) {
      throw std::invalid_argument("check_majority_concentration: entries must be +1 or -1");
    }
  }
  if (pairing.col_of.size() != x.cols()) {
    throw std::invalid_argument("check_majority_concentration: pairing width differs from d");
  }
  const std::size_t n = x.rows(), d = x.cols();
  ConcentrationReport r;
  r.d = d;
  r.n = n;
  r.failure_prob_target = p;
  r.kappa = kappa(d, p, n);

  std::vector<double> terms(n);
  for (std::size_t m = 0; m < pairing.t(); ++m) {
    const std::size_t a = pairing.c1[m], b = pairing.c2[m];
    for (std::size_t l = 0; l < n; ++l) terms[l] = x(l, a) * (x(l, a) + x(l, b)) / 2.0;
    track(r, std::abs(pairwise_sum(terms) / static_cast<double>(n) - 0.5), {a, b});
  }
  r.pass = r.max_deviation <= r.kappa;
  return r;
}

std::string concentration_csv_header() { return "d,n,p,kappa,max_deviation,pass,argmax_tuple"; }

std::string to_csv_row(const ConcentrationReport& r) {
  std::string tuple;
  for (std::size_t i = 0; i < r.argmax_tuple.size(); ++i) {
    if (i > 0) tuple += ';';
    tuple += std::to_string(r.argmax_tuple[i]);
  }
  return std::to_string(r.d) + ',' + std::to_string(r.n) + ',' +
         format_double(r.failure_prob_target) + ',' + format_double(r.kappa) + ',' +
         format_double(r.max_deviation) + ',' + (r.pass ? "true" : "false") + ',' + tuple;
}

GradientStructureReport check_gradient_structure(const Matrix& g, const PairingMap& pairing,
                                                 std::size_t d, double eps, double kappa_val) {
  if (g.rows() != d || pairing.col_of.size() != d || g.cols() != pairing.t()) {
    throw std::invalid_argument("check_gradient_structure: G must be d x t matching the pairing");
  }
  const double dd = static_cast<double>(d);
  GradientStructureReport r;
  r.band_half_width = 4.0 * kappa_val / dd;
  r.on_pair_centre = -1.0 / (8.0 * dd);
  r.nominal_error_scale = std::pow(dd, -1.0 - eps / 4.0);

  std::vector<double> on_mags;
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t m = 0; m < g.cols(); ++m) {
      const double v = g(j, m);
      if (pairing.on_pair(j, m)) {
        const double off = std::abs(v - r.on_pair_centre);
        r.worst_on_pair_offset = std::max(r.worst_on_pair_offset, off);
        if (off > r.band_half_width) ++r.on_pair_violations;
        on_mags.push_back(std::abs(v));
      } else {
        r.worst_off_pair = std::max(r.worst_off_pair, std::abs(v));
        if (std::abs(v) > r.band_half_width) ++r.off_pair_violations;
      }
    }
  }
  const double med = median(std::move(on_mags));
  r.separation_ratio = r.worst_off_pair > 0.0 ? med / r.worst_off_pair
                                              : std::numeric_limits<double>::infinity();
  r.pass = r.on_pair_violations == 0 && r.off_pair_violations == 0;
  return r;
}

SandwichReport check_softmax_sandwich(const Matrix& s, const PairingMap& pairing, double delta) {
  if (pairing.col_of.size() != s.rows() || pairing.t() != s.cols()) {
    throw std::invalid_argument("check_softmax_sandwich: S must be d x t matching the pairing");
  }
  for (std::size_t m = 0; m < s.cols(); ++m) {
    const double total = pairwise_sum(s.column(m));
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("check_softmax_sandwich: column " + std::to_string(m) +
                                  " does not sum to 1");
    }
  }
  SandwichReport r;
  for (std::size_t m = 0; m < s.cols(); ++m) {
    for (std::size_t j : {pairing.c1[m], pairing.c2[m]}) {
      const double dev = std::abs(s(j, m) - 0.5);
      if (dev > r.worst_deviation) {
        r.worst_deviation = dev;
        r.worst_column = m;
      }
    }
  }
  r.pass = r.worst_deviation <= 2.0 * delta;
  return r;
}

}  // namespace boolattn
