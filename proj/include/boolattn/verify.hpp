#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "boolattn/numerics.hpp"
#include "boolattn/taskgen.hpp"

namespace boolattn {

/// kappa = 4 sqrt(ln(d/p) / n), natural log.
double kappa(std::size_t d, double p, std::size_t n);

struct ConcentrationReport {
  std::size_t d = 0;
  std::size_t n = 0;
  double failure_prob_target = 0.0;
  double kappa = 0.0;
  double max_deviation = 0.0;
  std::size_t n_terms_checked = 0;
  std::vector<std::size_t> argmax_tuple;  // column indices of the worst term
  bool pass = false;
};

/// Worst |<x_j1, ..., x_jr>/n - 2^-r| over r = 1 and r = 2 (j1 < j2) on a
/// {0,1} matrix; pass iff it is at most kappa(d, p, n). With include_triples
/// the r = 3 terms are scanned as well.
ConcentrationReport check_interaction_concentration(const Matrix& x, double p,
                                                    bool include_triples = false);

/// Worst |<x_c1, MAJ2(x_c1, x_c2)>/n - 1/2| over the pairs of a {-1,+1} matrix.
ConcentrationReport check_majority_concentration(const Matrix& x, const PairingMap& pairing,
                                                 double p);

/// `d,n,p,kappa,max_deviation,pass,argmax_tuple`; the tuple is `;`-joined.
std::string concentration_csv_header();
std::string to_csv_row(const ConcentrationReport& report);

struct GradientStructureReport {
  bool pass = false;
  double band_half_width = 0.0;  // 4 kappa / d
  double on_pair_centre = 0.0;   // -1 / (8d)
  double nominal_error_scale = 0.0;  // d^(-1 - eps/4), reported for comparison only
  std::size_t on_pair_violations = 0;
  std::size_t off_pair_violations = 0;
  double worst_on_pair_offset = 0.0;  // max |G(j,m) + 1/(8d)| over on-pair entries
  double worst_off_pair = 0.0;        // max |G(j,m)| over off-pair entries
  double separation_ratio = 0.0;      // median on-pair |G| / max off-pair |G|; +inf if the latter is 0
};

/// Checks the one-step gradient at W = 0 against its predicted shape: on-pair
/// entries inside -1/(8d) +- 4 kappa/d and off-pair entries inside +- 4 kappa/d.
GradientStructureReport check_gradient_structure(const Matrix& g, const PairingMap& pairing,
                                                 std::size_t d, double eps, double kappa_val);

struct SandwichReport {
  bool pass = false;
  double worst_deviation = 0.0;  // max |S(c, m) - 1/2| over on-pair scores
  std::size_t worst_column = 0;
};

/// Both on-pair scores of every column inside [1/2 - 2 delta, 1/2 + 2 delta].
/// S must be column-stochastic to within 1e-9.
SandwichReport check_softmax_sandwich(const Matrix& s, const PairingMap& pairing, double delta);

}  // namespace boolattn
