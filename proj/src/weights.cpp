#include "balmet/weights.hpp"

#include <algorithm>
#include <string>

namespace balmet {

namespace {

// Polynomials as ascending rational coefficient vectors.
using Poly = std::vector<Rational>;

Rational poly_eval(const Poly& p, const Rational& x) {
  Rational acc = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

Rational poly_coeff(const Poly& p, int degree) {
  if (degree < 0 || degree >= static_cast<int>(p.size())) return Rational(0);
  return p[degree];
}

/// Newton interpolation through (x_i, y_i), expanded to monomial form.
Poly interpolate(const std::vector<Rational>& xs, const std::vector<Rational>& ys) {
  const int n = static_cast<int>(xs.size());
  std::vector<Rational> dd = ys;  // divided differences, in place
  for (int level = 1; level < n; ++level) {
    for (int i = n - 1; i >= level; --i) {
      dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - level]);
    }
  }
  Poly result{dd[n - 1]};
  for (int i = n - 2; i >= 0; --i) {
    // result = result * (x - xs[i]) + dd[i]
    Poly next(result.size() + 1, Rational(0));
    for (size_t j = 0; j < result.size(); ++j) {
      next[j + 1] += result[j];
      next[j] -= result[j] * xs[i];
    }
    next[0] += dd[i];
    result = std::move(next);
  }
  return result;
}

struct ClassFit {
  Poly dims;
  Poly weights;
};

/// Fit one parity class: dims to degree n, weights to degree n+1, verifying
/// every point of the class against the interpolant.
ClassFit fit_class(const WeightTable& table, int parity) {
  const int n = table.dimension;
  std::vector<Rational> ms;
  std::vector<Rational> dims;
  std::vector<Rational> weights;
  for (int m = 1; m <= table.m_max(); ++m) {
    if (m % 2 != parity) continue;
    ms.emplace_back(m);
    dims.emplace_back(table.dim_at(m));
    weights.push_back(table.weight_at(m));
  }
  const int need = n + 2;  // weight interpolation needs n+2 points
  if (static_cast<int>(ms.size()) < need) {
    throw validation_error("fit_expansion: table too short for parity class " +
                           std::to_string(parity) + " (need " + std::to_string(need) +
                           " points, have " + std::to_string(ms.size()) + ")");
  }

  ClassFit fit;
  fit.dims = interpolate({ms.begin(), ms.begin() + n + 1}, {dims.begin(), dims.begin() + n + 1});
  fit.weights = interpolate({ms.begin(), ms.begin() + n + 2},
                            {weights.begin(), weights.begin() + n + 2});
  for (size_t i = 0; i < ms.size(); ++i) {
    if (poly_eval(fit.dims, ms[i]) != dims[i]) {
      throw validation_error("fit_expansion: dimensions are not polynomial of degree " +
                             std::to_string(n) + " on parity class " + std::to_string(parity));
    }
    if (poly_eval(fit.weights, ms[i]) != weights[i]) {
      throw validation_error("fit_expansion: weights are not polynomial of degree " +
                             std::to_string(n + 1) + " on parity class " + std::to_string(parity));
    }
  }
  return fit;
}

}  // namespace

WeightTable::WeightTable(int dimension_, std::vector<long long> dims_,
                         std::vector<Rational> weights_)
    : dimension(dimension_), dims(std::move(dims_)), weights(std::move(weights_)) {
  if (dimension < 1) {
    throw validation_error("WeightTable: dimension must be positive");
  }
  if (dims.size() != weights.size()) {
    throw validation_error("WeightTable: dimension and weight columns differ in length");
  }
  if (static_cast<int>(dims.size()) < dimension + 3) {
    throw validation_error("WeightTable: range must cover at least n + 3 levels");
  }
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i + 1] <= dims[i]) {
      throw validation_error("WeightTable: N_m must be strictly increasing");
    }
  }
  if (dims[0] < 1) {
    throw validation_error("WeightTable: N_m must be positive");
  }
}

long long WeightTable::dim_at(int m) const {
  if (m < 1 || m > m_max()) {
    throw validation_error("WeightTable: level " + std::to_string(m) + " out of range");
  }
  return dims[m - 1];
}

const Rational& WeightTable::weight_at(int m) const {
  if (m < 1 || m > m_max()) {
    throw validation_error("WeightTable: level " + std::to_string(m) + " out of range");
  }
  return weights[m - 1];
}

ExpansionCoefficients::ExpansionCoefficients(Rational a0_, Rational a1_, Rational b0_,
                                             Rational b1_, int period)
    : a0(a0_), a1(a1_), b0(b0_), b1(b1_), fit_period(period) {
  if (!(a0 > Rational(0))) {
    throw validation_error("ExpansionCoefficients: leading dimension coefficient must be positive");
  }
  if (period != 1 && period != 2) {
    throw validation_error("ExpansionCoefficients: only periods 1 and 2 are supported");
  }
}

ToricConfigData::ToricConfigData(std::vector<Rational> lengths_, std::vector<AffinePiece> pieces_,
                                 int weight_sign_)
    : lengths(std::move(lengths_)), pieces(std::move(pieces_)), weight_sign(weight_sign_) {
  if (lengths.empty()) {
    throw validation_error("ToricConfigData: polytope must have positive dimension");
  }
  for (const Rational& l : lengths) {
    if (!(l > Rational(0))) {
      throw validation_error("ToricConfigData: interval lengths must be positive");
    }
  }
  if (pieces.empty()) {
    throw validation_error("ToricConfigData: weight function needs at least one affine piece");
  }
  for (const AffinePiece& p : pieces) {
    if (p.slope.size() != lengths.size()) {
      throw validation_error("ToricConfigData: affine piece arity does not match the polytope");
    }
  }
  if (weight_sign != 1 && weight_sign != -1) {
    throw validation_error("ToricConfigData: weight_sign must be +1 or -1");
  }
}

Rational ToricConfigData::dilated_value(const std::vector<long long>& u, long long m) const {
  // m * g(u/m) = max over pieces of slope . u + m * intercept
  bool first = true;
  Rational best = 0;
  for (const AffinePiece& p : pieces) {
    Rational v = p.intercept * Rational(m);
    for (size_t j = 0; j < u.size(); ++j) {
      v += p.slope[j] * Rational(u[j]);
    }
    if (first || v > best) {
      best = v;
      first = false;
    }
  }
  return best;
}

WeightTable toric_weight_table(const ToricConfigData& cfg, int m_max) {
  const int n = cfg.dim();
  if (m_max < n + 3) {
    throw validation_error("toric_weight_table: m_max must be at least n + 3");
  }
  std::vector<long long> dims;
  std::vector<Rational> weights;
  dims.reserve(m_max);
  weights.reserve(m_max);

  for (int m = 1; m <= m_max; ++m) {
    std::vector<long long> tops(n);
    long long count = 1;
    for (int j = 0; j < n; ++j) {
      tops[j] = (cfg.lengths[j] * Rational(m)).floor();
      count *= tops[j] + 1;
    }
    Rational total = 0;
    std::vector<long long> u(n, 0);
    // odometer over the box lattice, fixed index order
    while (true) {
      total += cfg.dilated_value(u, m);
      int j = 0;
      while (j < n && u[j] == tops[j]) {
        u[j] = 0;
        ++j;
      }
      if (j == n) break;
      ++u[j];
    }
    dims.push_back(count);
    weights.push_back(Rational(cfg.weight_sign) * total);
  }
  return WeightTable(n, std::move(dims), std::move(weights));
}

ExpansionCoefficients fit_expansion(const WeightTable& table) {
  const int n = table.dimension;
  const ClassFit odd = fit_class(table, 1);
  const ClassFit even = fit_class(table, 0);

  const int period = (odd.dims == even.dims && odd.weights == even.weights) ? 1 : 2;

  const Rational a0 = poly_coeff(odd.dims, n);
  const Rational a1 = poly_coeff(odd.dims, n - 1);
  const Rational b0 = poly_coeff(odd.weights, n + 1);
  const Rational b1 = poly_coeff(odd.weights, n);
  if (a0 != poly_coeff(even.dims, n) || a1 != poly_coeff(even.dims, n - 1) ||
      b0 != poly_coeff(even.weights, n + 1) || b1 != poly_coeff(even.weights, n)) {
    throw validation_error(
        "fit_expansion: leading coefficients disagree across parity classes; invalid table");
  }
  return ExpansionCoefficients(a0, a1, b0, b1, period);
}

Rational chow_weight(int k, const ExpansionCoefficients& c, const WeightTable& table) {
  return Rational(k) * c.b0 - c.a0 * table.weight_at(k) / Rational(table.dim_at(k));
}

Rational df_invariant(const ExpansionCoefficients& c) {
  return (c.a1 * c.b0 - c.a0 * c.b1) / c.a0;
}

ChowLimitReport chow_limit_check(const ToricConfigData& cfg, int m_max) {
  if (m_max < 10) {
    throw validation_error("chow_limit_check: m_max must be at least 10");
  }
  const WeightTable table = toric_weight_table(cfg, m_max);
  const ExpansionCoefficients coeffs = fit_expansion(table);
  const Rational df = df_invariant(coeffs);

  const int tail_start = (m_max + 1) / 2;
  Rational head_max = 0;
  Rational tail_max = 0;
  Rational envelope = 0;
  for (int m = 1; m <= m_max; ++m) {
    const Rational err = (chow_weight(m, coeffs, table) - df).abs();
    const Rational scaled = err * Rational(m);
    if (scaled > envelope) envelope = scaled;
    if (m >= tail_start) {
      if (err > tail_max) tail_max = err;
    } else {
      if (err > head_max) head_max = err;
    }
  }

  ChowLimitReport report{df, tail_max, envelope, true};
  // O(1/m) decay: the tail of |Chow_m - DF| must drop below the head.
  if (!tail_max.is_zero()) {
    report.decays = (tail_max * Rational(4) <= head_max * Rational(3));
  }
  if (!report.decays) {
    throw numerical_error("chow_limit_check: Chow_m does not converge to DF at O(1/m); "
                          "table inconsistent");
  }
  return report;
}

}  // namespace balmet
