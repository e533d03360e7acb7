#include "balmet/weights.hpp"

#include <vector>

#include "doctest.h"

using namespace balmet;

namespace {

ToricConfigData product_config() {
  // P = [0,1], g(u) = u: the product direction
  return ToricConfigData({Rational(1)}, {AffinePiece{{Rational(1)}, Rational(0)}}, -1);
}

ToricConfigData breakpoint_config() {
  // P = [0,1], g(u) = max(0, 2u - 1)
  return ToricConfigData({Rational(1)},
                         {AffinePiece{{Rational(0)}, Rational(0)},
                          AffinePiece{{Rational(2)}, Rational(-1)}},
                         -1);
}

ToricConfigData zero_config() {
  return ToricConfigData({Rational(1)}, {AffinePiece{{Rational(0)}, Rational(0)}}, -1);
}

}  // namespace

TEST_CASE("Rational basics") {
  CHECK(Rational(6, -4) == Rational(-3, 2));
  CHECK((Rational(1, 3) + Rational(1, 6)).str() == "1/2");
  CHECK(Rational::parse("-3/4") == Rational(-3, 4));
  CHECK(Rational::parse("5") == Rational(5));
  CHECK(Rational(0).str() == "0/1");
  CHECK(Rational(-3, 2).floor() == -2);
  CHECK(Rational(3, 2).floor() == 1);
  CHECK(Rational(7, 1).floor() == 7);
  CHECK_THROWS_AS(Rational(1, 0), numerical_error);
  CHECK_THROWS_AS(Rational::parse("x/y"), validation_error);
  CHECK_THROWS_AS(Rational(INT64_MAX) * Rational(INT64_MAX), numerical_error);
}

TEST_CASE("toric_weight_table: closed-form rows") {
  // independent oracle: direct enumeration of the dilated values
  auto brute = [](const ToricConfigData& cfg, int m) {
    long long top = (cfg.lengths[0] * Rational(m)).floor();
    Rational total = 0;
    for (long long u = 0; u <= top; ++u) {
      total += cfg.dilated_value({u}, m);
    }
    return Rational(cfg.weight_sign) * total;
  };

  const WeightTable t1 = toric_weight_table(product_config(), 8);
  CHECK(t1.dim_at(2) == 3);
  CHECK(t1.weight_at(2) == Rational(-3));
  for (int m = 1; m <= 8; ++m) {
    CHECK(t1.weight_at(m) == brute(product_config(), m));
    CHECK(t1.weight_at(m) == Rational(-m * (m + 1), 2));  // arithmetic series
  }

  // square with trivial weights
  const ToricConfigData square({Rational(1), Rational(1)},
                               {AffinePiece{{Rational(0), Rational(0)}, Rational(0)}}, -1);
  const WeightTable t2 = toric_weight_table(square, 6);
  CHECK(t2.dim_at(1) == 4);
  CHECK(t2.weight_at(1) == Rational(0));
  CHECK(t2.dim_at(3) == 16);

  // dilated breakpoint values at m=2 are 0, 0, 2 at u = 0, 1, 2
  const WeightTable t3 = toric_weight_table(breakpoint_config(), 8);
  CHECK(t3.dim_at(2) == 3);
  CHECK(t3.weight_at(2) == Rational(-2));
  for (int m = 1; m <= 8; ++m) {
    CHECK(t3.weight_at(m) == brute(breakpoint_config(), m));
    const long long eps = (m % 2 == 0) ? 0 : 1;
    CHECK(t3.weight_at(m) == Rational(-(m * m + 2 * m + eps), 4));
  }
}

TEST_CASE("WeightTable validation") {
  CHECK_THROWS_AS(WeightTable(1, {1, 2}, {Rational(0), Rational(0)}), validation_error);
  CHECK_THROWS_AS(WeightTable(1, {2, 2, 3, 4}, std::vector<Rational>(4, Rational(0))),
                  validation_error);
  CHECK_THROWS_AS(toric_weight_table(product_config(), 2), validation_error);
}

TEST_CASE("fit_expansion: polynomial and quasi-polynomial tables") {
  const ExpansionCoefficients c1 = fit_expansion(toric_weight_table(product_config(), 12));
  CHECK(c1.a0 == Rational(1));
  CHECK(c1.a1 == Rational(1));
  CHECK(c1.b0 == Rational(-1, 2));
  CHECK(c1.b1 == Rational(-1, 2));
  CHECK(c1.fit_period == 1);

  const ExpansionCoefficients c2 = fit_expansion(toric_weight_table(breakpoint_config(), 12));
  CHECK(c2.b0 == Rational(-1, 4));
  CHECK(c2.b1 == Rational(-1, 2));
  CHECK(c2.fit_period == 2);

  // not a degree-(n+1) quasi-polynomial: cubic weights on a 1-d polytope
  std::vector<long long> dims;
  std::vector<Rational> w_bad;
  for (int m = 1; m <= 12; ++m) {
    dims.push_back(m + 1);
    w_bad.emplace_back(static_cast<long long>(m) * m * m);
  }
  CHECK_THROWS_AS(fit_expansion(WeightTable(1, dims, w_bad)), validation_error);

  // parity classes each polynomial but with different leading coefficients
  std::vector<Rational> w_split;
  for (int m = 1; m <= 12; ++m) {
    w_split.emplace_back((m % 2 == 0 ? 1 : 2) * static_cast<long long>(m) * m);
  }
  CHECK_THROWS_AS(fit_expansion(WeightTable(1, dims, w_split)), validation_error);
}

TEST_CASE("chow_weight and df_invariant: closed forms") {
  const WeightTable t_prod = toric_weight_table(product_config(), 50);
  const ExpansionCoefficients c_prod = fit_expansion(t_prod);
  for (int k = 1; k <= 50; ++k) {
    CHECK(chow_weight(k, c_prod, t_prod) == Rational(0));
  }
  CHECK(df_invariant(c_prod) == Rational(0));

  const WeightTable t_bp = toric_weight_table(breakpoint_config(), 50);
  const ExpansionCoefficients c_bp = fit_expansion(t_bp);
  CHECK(chow_weight(2, c_bp, t_bp) == Rational(1, 6));
  CHECK(df_invariant(c_bp) == Rational(1, 4));

  const WeightTable t_zero = toric_weight_table(zero_config(), 12);
  const ExpansionCoefficients c_zero = fit_expansion(t_zero);
  CHECK(chow_weight(5, c_zero, t_zero) == Rational(0));
  CHECK(df_invariant(c_zero) == Rational(0));

  CHECK_THROWS_AS(chow_weight(51, c_bp, t_bp), validation_error);
}

TEST_CASE("chow weights scale linearly in the weight function") {
  // replacing g by (3/2) g multiplies every Chow_m and DF by 3/2 exactly
  const Rational c(3, 2);
  ToricConfigData base = breakpoint_config();
  std::vector<AffinePiece> scaled_pieces;
  for (const AffinePiece& p : base.pieces) {
    scaled_pieces.push_back(AffinePiece{{p.slope[0] * c}, p.intercept * c});
  }
  const ToricConfigData scaled({Rational(1)}, scaled_pieces, -1);

  const WeightTable tb = toric_weight_table(base, 20);
  const WeightTable ts = toric_weight_table(scaled, 20);
  const ExpansionCoefficients cb = fit_expansion(tb);
  const ExpansionCoefficients cs = fit_expansion(ts);
  CHECK(df_invariant(cs) == c * df_invariant(cb));
  for (int m = 1; m <= 20; ++m) {
    CHECK(chow_weight(m, cs, ts) == c * chow_weight(m, cb, tb));
  }
}

TEST_CASE("chow_limit_check: O(1/m) convergence") {
  const ChowLimitReport r1 = chow_limit_check(product_config(), 50);
  CHECK(r1.df == Rational(0));
  CHECK(r1.max_tail_error == Rational(0));

  const ChowLimitReport r2 = chow_limit_check(breakpoint_config(), 50);
  CHECK(r2.df == Rational(1, 4));
  CHECK(r2.decays);
  // closed form |Chow_m - 1/4| = (1 - eps_m) / (4(m+1))
  const WeightTable t = toric_weight_table(breakpoint_config(), 50);
  const ExpansionCoefficients c = fit_expansion(t);
  for (int m = 1; m <= 50; ++m) {
    const long long eps = (m % 2 == 0) ? 0 : 1;
    CHECK((chow_weight(m, c, t) - Rational(1, 4)).abs() == Rational(1 - eps, 4 * (m + 1)));
  }

  // affine constant g: identically zero Chow weights
  const ToricConfigData affine({Rational(1)}, {AffinePiece{{Rational(0)}, Rational(2, 3)}}, -1);
  const ChowLimitReport r3 = chow_limit_check(affine, 20);
  CHECK(r3.df == Rational(0));
  CHECK(r3.max_tail_error == Rational(0));

  CHECK_THROWS_AS(chow_limit_check(product_config(), 5), validation_error);
}

TEST_CASE("convex non-affine weights have positive DF") {
  // a few convex PL functions with the destabilizing sign convention
  std::vector<ToricConfigData> cfgs;
  cfgs.push_back(breakpoint_config());
  cfgs.emplace_back(std::vector<Rational>{Rational(1)},
                    std::vector<AffinePiece>{AffinePiece{{Rational(-1)}, Rational(0)},
                                             AffinePiece{{Rational(1)}, Rational(-1)}},
                    -1);
  cfgs.emplace_back(std::vector<Rational>{Rational(2)},
                    std::vector<AffinePiece>{AffinePiece{{Rational(0)}, Rational(0)},
                                             AffinePiece{{Rational(3)}, Rational(-3)}},
                    -1);
  for (const auto& cfg : cfgs) {
    const ExpansionCoefficients c = fit_expansion(toric_weight_table(cfg, 16));
    CHECK(df_invariant(c) > Rational(0));
  }
}

TEST_CASE("toric results are reproducible bit for bit") {
  const WeightTable a = toric_weight_table(breakpoint_config(), 30);
  const WeightTable b = toric_weight_table(breakpoint_config(), 30);
  for (int m = 1; m <= 30; ++m) {
    CHECK(a.weight_at(m) == b.weight_at(m));
    CHECK(a.dim_at(m) == b.dim_at(m));
  }
}
