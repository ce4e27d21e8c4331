#pragma once

#include <cstddef>
#include <cstdint>

#include "boolattn/numerics.hpp"
#include "boolattn/taskgen.hpp"

namespace boolattn {

/// The d x t attention parameter (the product K^T Q collapsed into a single
/// matrix). Column m drives teacher column m.
struct WeightMatrix {
  Matrix values = Matrix::zeros(1, 1);

  static WeightMatrix zeros(std::size_t d, std::size_t t) { return {Matrix::zeros(d, t)}; }
  std::size_t d() const { return values.rows(); }
  std::size_t t() const { return values.cols(); }
  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;
};

enum class OracleKind { Exact, Perturbed };

/// Gradient access model. Perturbed adds i.i.d. uniform noise on [-rho, rho]
/// to every entry; rho must be 0 for Exact.
struct GradientOracleSpec {
  OracleKind kind = OracleKind::Exact;
  double rho = 0.0;
  std::uint64_t seed = 0;

  static GradientOracleSpec exact() { return {}; }
  static GradientOracleSpec perturbed(double rho, std::uint64_t seed) {
    return {OracleKind::Perturbed, rho, seed};
  }
};

/// Att_W(X) = X softmax(W), an n x t matrix.
Matrix forward(const WeightMatrix& w, const Matrix& x);

/// L(W) = ||Att_W(X) - E||_F^2 / (2n).
double surrogate_loss(const WeightMatrix& w, const Matrix& x, const Matrix& e);

/// Closed-form gradient of the surrogate loss at any W:
///
///   dL/dw(j,m) = sigma_j(w_m) / n * <zhat_m - e_m, x_j - zhat_m>
///
/// where zhat_m is column m of forward(W, X). Inner products over the n rows
/// use pairwise summation. At W = 0, zhat_m is the row mean of X for every m.
Matrix analytic_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e);

/// Central differences (L(W + h e_jm) - L(W - h e_jm)) / 2h.
Matrix fd_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e, double h);

Matrix oracle_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e,
                       const GradientOracleSpec& spec);

/// Worst case for a rho-bounded oracle: every on-pair entry is shifted by +rho
/// and every off-pair entry by -rho, narrowing the gap the one-step decode
/// relies on.
Matrix adversarial_gradient(const WeightMatrix& w, const Matrix& x, const Matrix& e, double rho,
                            const PairingMap& pairing);

}  // namespace boolattn
