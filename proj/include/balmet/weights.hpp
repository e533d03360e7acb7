#pragma once

// Exact computation of Chow weights and Donaldson-Futaki invariants from
// test-configuration weight tables, with a toric lattice-point generator as
// the data source. No floating point anywhere in this module.

#include <vector>

#include "balmet/rational.hpp"

namespace balmet {

/// Dimension / total-weight data of a one-parameter degeneration over tensor
/// powers m = 1..m_max.
struct WeightTable {
  WeightTable(int dimension, std::vector<long long> dims, std::vector<Rational> weights);

  int dimension;                   // complex dimension n
  std::vector<long long> dims;     // N_m, index m-1
  std::vector<Rational> weights;   // w_m, index m-1

  int m_max() const { return static_cast<int>(dims.size()); }
  long long dim_at(int m) const;
  const Rational& weight_at(int m) const;
};

/// Leading coefficients of dim H0 = a0 m^n + a1 m^{n-1} + ... and
/// tr(A_m) = b0 m^{n+1} + b1 m^n + ...
struct ExpansionCoefficients {
  ExpansionCoefficients(Rational a0_, Rational a1_, Rational b0_, Rational b1_, int period);

  Rational a0, a1;
  Rational b0, b1;
  int fit_period;  // 1 for polynomial tables, 2 for parity quasi-polynomials
};

/// An affine piece slope . u + intercept of a convex piecewise-linear weight
/// function on the polytope.
struct AffinePiece {
  std::vector<Rational> slope;
  Rational intercept;
};

/// Box polytope prod_j [0, l_j] with a convex PL function g = max of affine
/// pieces. weight_sign fixes the generator orientation; -1 makes convex
/// degenerations destabilizing in the positive-weight convention.
struct ToricConfigData {
  ToricConfigData(std::vector<Rational> lengths_, std::vector<AffinePiece> pieces_,
                  int weight_sign_);

  int dim() const { return static_cast<int>(lengths.size()); }

  /// g evaluated by its max-of-pieces representation, scaled for the level-m
  /// dilation: returns m * g(u / m) for an integer lattice point u.
  Rational dilated_value(const std::vector<long long>& u, long long m) const;

  std::vector<Rational> lengths;
  std::vector<AffinePiece> pieces;
  int weight_sign;
};

/// N_m = #(mP cap Z^n), w_m = sign * sum_{u in mP cap Z^n} m g(u/m).
WeightTable toric_weight_table(const ToricConfigData& cfg, int m_max);

/// Exact interpolation of the dimension (degree n) and weight (degree n+1)
/// sequences per parity class; leading coefficients must agree across classes.
ExpansionCoefficients fit_expansion(const WeightTable& table);

/// Chow_k = k b0 - a0 w_k / N_k.
Rational chow_weight(int k, const ExpansionCoefficients& c, const WeightTable& table);

/// DF = (a1 b0 - a0 b1) / a0 = lim_m Chow_m.
Rational df_invariant(const ExpansionCoefficients& c);

struct ChowLimitReport {
  Rational df;
  Rational max_tail_error;     // max_{m in [m_max/2, m_max]} |Chow_m - DF|
  Rational envelope_constant;  // least K with |Chow_m - DF| <= K/m on the table
  bool decays;
};

/// Verifies O(1/m) convergence of Chow_m to DF; throws on a divergent table.
ChowLimitReport chow_limit_check(const ToricConfigData& cfg, int m_max);

}  // namespace balmet
