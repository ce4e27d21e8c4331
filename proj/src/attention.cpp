#include "boolattn/attention.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "boolattn/rng.hpp"

namespace boolattn {
namespace {

constexpr std::uint64_t kOracleStream = 0x6f;

void check_shapes(const WeightMatrix& w, const Matrix& x, const Matrix& e, const char* who) {
  if (x.cols() != w.d()) {
    throw std::invalid_argument(std::string(who) + ": X has " + std::to_string(x.cols()) +
                                " columns, W has " + std::to_string(w.d()) + " rows");
  }
  if (e.rows() != x.rows() || e.cols() != w.t()) {
    throw std::invalid_argument(std::string(who) + ": E must be n x t");
  }
}

std::vector<double> transpose(const Matrix& m) {
  std::vector<double> out(m.rows() * m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[c * m.rows() + r] = m(r, c);
  }
  return out;
}

}  // namespace

Matrix forward(const WeightMatrix& w, const Matrix& x) {
  if (x.cols() != w.d()) throw std::invalid_argument("forward: X columns must equal W rows");
  return matmul(x, softmax_columns(w.values));
}

double surrogate_loss(const WeightMatrix& w, const Matrix& x, const Matrix& e) {
  check_shapes(w, x, e, "surrogate_loss");
  return frobenius_sq_diff(forward(w, x), e) / (2.0 * static_cast<double>(x.rows()));
}

Matrix analytic_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e) {
  check_shapes(w, x, e, "analytic_gradient");
  const std::size_t n = x.rows();
  const std::size_t d = w.d();
  const std::size_t t = w.t();
  const Matrix s = softmax_columns(w.values);
  const Matrix z = matmul(x, s);
  const std::vector<double> xt = transpose(x);  // d x n, column j of X contiguous

  std::vector<double> g(d * t);
  std::vector<double> resid(n), zm(n), terms(n);
  for (std::size_t m = 0; m < t; ++m) {
    for (std::size_t l = 0; l < n; ++l) {
      zm[l] = z(l, m);
      resid[l] = zm[l] - e(l, m);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double* xj = xt.data() + j * n;
      for (std::size_t l = 0; l < n; ++l) terms[l] = resid[l] * (xj[l] - zm[l]);
      g[j * t + m] = s(j, m) * pairwise_sum(terms) / static_cast<double>(n);
    }
  }
  return Matrix(d, t, std::move(g));
}

Matrix fd_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: step must be positive");
  check_shapes(w, x, e, "fd_gradient");
  const std::size_t d = w.d();
  const std::size_t t = w.t();
  std::vector<double> base(w.values.data().begin(), w.values.data().end());
  std::vector<double> g(d * t);
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> plus = base;
    std::vector<double> minus = base;
    plus[i] += h;
    minus[i] -= h;
    const double lp = surrogate_loss({Matrix(d, t, std::move(plus))}, x, e);
    const double lm = surrogate_loss({Matrix(d, t, std::move(minus))}, x, e);
    g[i] = (lp - lm) / (2.0 * h);
  }
  return Matrix(d, t, std::move(g));
}

Matrix oracle_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e,
                       const GradientOracleSpec& spec) {
  if (spec.rho < 0.0) throw std::invalid_argument("oracle_gradient: rho must be >= 0");
  if (spec.kind == OracleKind::Exact && spec.rho != 0.0) {
    throw std::invalid_argument("oracle_gradient: exact oracle takes rho = 0");
  }
  Matrix g = analytic_gradient(w, x, e);
  if (spec.kind == OracleKind::Exact || spec.rho == 0.0) return g;

  Engine rng(derive_seed({spec.seed, kOracleStream}));
  std::vector<double> noisy(g.data().begin(), g.data().end());
  for (double& v : noisy) v += uniform(rng, -spec.rho, spec.rho);
  return Matrix(g.rows(), g.cols(), std::move(noisy));
}

Matrix adversarial_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e, double rho,
                            const PairingMap& pairing) {
  if (rho < 0.0) throw std::invalid_argument("adversarial_gradient: rho must be >= 0");
  if (pairing.col_of.size() != w.d() || pairing.t() != w.t()) {
    throw std::invalid_argument("adversarial_gradient: pairing does not match W");
  }
  Matrix g = analytic_gradient(w, x, e);
  std::vector<double> out(g.data().begin(), g.data().end());
  for (std::size_t j = 0; j < w.d(); ++j) {
    for (std::size_t m = 0; m < w.t(); ++m) {
      out[j * w.t() + m] += pairing.on_pair(j, m) ? rho : -rho;
    }
  }
  return Matrix(g.rows(), g.cols(), std::move(out));
}

}  // namespace boolattn
