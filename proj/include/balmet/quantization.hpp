#pragma once

// The discrete polarized manifold: Bergman densities, the T-operator
// fixed-point iteration for balanced forms, the balancing energy with its
// gradient, anticanonical variants, and exact spectral slope formulas.
//
// The quadrature measure is held fixed; the anticanonical model recovers the
// metric-dependent measure through the -1/k power of the density.

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "balmet/hermitian.hpp"

namespace balmet {

// Relative support threshold for the eigen-coordinate min/max in the slope
// formulas; sample constructors emit exact zeros, so this only guards
// round-off.
inline constexpr double kSupportThreshold = 1e-12;

/// Evaluation vectors of a section basis at weighted sample points.
/// Column a of evals holds the section values at point a against the
/// reference metric.
struct PolarizedSample {
  PolarizedSample(Matrix evals_, RealVector weights_, int level_, int dim_,
                  std::string label_ = {}, bool allow_degenerate_ = false);

  int sections() const { return static_cast<int>(evals.rows()); }   // N
  int points() const { return static_cast<int>(evals.cols()); }     // M

  /// Reference Gram sum_a nu_a v_a v_a^dagger.
  Matrix reference_gram() const;

  Matrix evals;        // N x M
  RealVector weights;  // nu, M positive reals
  double total_mass;   // V = sum nu_a
  int level;           // k
  int dim;             // n
  std::string label;
  bool allow_degenerate;
};

/// Polarized sample with reference anticanonical density weights beta.
struct AnticanonicalSample {
  AnticanonicalSample(PolarizedSample sample_, RealVector base_);

  int sections() const { return sample.sections(); }
  int points() const { return sample.points(); }

  PolarizedSample sample;
  RealVector base;  // beta, M positive reals
};

enum class DensityNormalization { Internal, Paper };

/// rho_a = v_a^dagger H^{-1} v_a (internal), or rescaled so the weighted mean
/// is N/V (paper): the Bergman function of the sample at H.
RealVector bergman_density(const PolarizedSample& s, const HermitianForm& h,
                           DensityNormalization normalization = DensityNormalization::Internal);

/// T(H) = (N/V) sum_a nu_a v_a v_a^dagger / rho_a(H). Fixed points are
/// exactly the critical points of the balancing energy.
HermitianForm t_operator(const PolarizedSample& s, const HermitianForm& h);

/// Z(H) = sum_a nu_a log rho_a(H) + (V/N) log det H. Invariant under scaling.
double balancing_energy(const PolarizedSample& s, const HermitianForm& h);

/// G with d/dt Z(H^{1/2} e^{tA} H^{1/2})|_0 = tr(A G); traceless identically.
TangentDirection energy_gradient(const PolarizedSample& s, const HermitianForm& h);

/// Z^ac(H) = (1/N) log det H - k log F(H), F = sum_a beta_a rho_a^{-1/k}.
double ac_energy(const AnticanonicalSample& s, const HermitianForm& h);

/// T^ac(H) = (N/F) sum_a beta_a rho_a^{-(k+1)/k} v_a v_a^dagger.
HermitianForm ac_t_operator(const AnticanonicalSample& s, const HermitianForm& h);

/// Gradient of Z^ac in the same pairing convention as energy_gradient.
TangentDirection ac_energy_gradient(const AnticanonicalSample& s, const HermitianForm& h);

enum class BalanceStatus { Converged, Diverged, MaxIter };

struct BalanceResult {
  HermitianForm form;
  double residual;
  int iterations;
  BalanceStatus status;
  bool monotone;  // residual history decreased monotonically
  std::vector<double> residual_history;
  std::optional<TangentDirection> escape_direction;  // set when Diverged
};

struct BalanceOptions {
  double eps_bal = 1e-12;
  int max_iter = 2000;
  bool det_normalize = true;  // gauge: determinant 1 each step
  double cond_cap = 1e12;
};

/// Fixed-point iteration H <- T(H) (or T^ac), det-normalized each step.
/// Converged output is re-gauged so the weighted mean density is one, which
/// is the scaling where the paper density equals N/V.
BalanceResult balance_iterate(const PolarizedSample& s, const HermitianForm& h0,
                              const BalanceOptions& opts = {});
BalanceResult balance_iterate(const AnticanonicalSample& s, const HermitianForm& h0,
                              const BalanceOptions& opts = {});

/// Asymptotic slope lim_t Z(gamma(t))/t along gamma(t) = H0^{1/2}e^{tA}H0^{1/2},
/// in closed spectral form.
double exact_slope(const PolarizedSample& s, const HermitianForm& h0,
                   const TangentDirection& a);

/// Same for Z^ac.
double ac_exact_slope(const AnticanonicalSample& s, const HermitianForm& h0,
                      const TangentDirection& a);

/// The exact restriction t -> Z(gamma(t)) as a stably evaluable function,
/// with its slope oracle attached. Usable far beyond double overflow range.
struct EnergyRestriction {
  std::function<double(double)> eval;
  double slope_at_infinity;
};

EnergyRestriction energy_restriction(const PolarizedSample& s, const HermitianForm& h0,
                                     const TangentDirection& a);
EnergyRestriction ac_energy_restriction(const AnticanonicalSample& s, const HermitianForm& h0,
                                        const TangentDirection& a);

/// Energy adapters with the uniform surface the existence decision procedure
/// consumes: value, gradient, exact slope, dimension.
struct BalancingEnergy {
  explicit BalancingEnergy(const PolarizedSample& s_) : s(&s_) {}
  double value(const HermitianForm& h) const { return balancing_energy(*s, h); }
  TangentDirection gradient(const HermitianForm& h) const { return energy_gradient(*s, h); }
  double slope(const HermitianForm& h0, const TangentDirection& a) const {
    return exact_slope(*s, h0, a);
  }
  int dim() const { return s->sections(); }
  const PolarizedSample* s;
};

struct AnticanonicalEnergy {
  explicit AnticanonicalEnergy(const AnticanonicalSample& s_) : s(&s_) {}
  double value(const HermitianForm& h) const { return ac_energy(*s, h); }
  TangentDirection gradient(const HermitianForm& h) const { return ac_energy_gradient(*s, h); }
  double slope(const HermitianForm& h0, const TangentDirection& a) const {
    return ac_exact_slope(*s, h0, a);
  }
  int dim() const { return s->sections(); }
  const AnticanonicalSample* s;
};

}  // namespace balmet
