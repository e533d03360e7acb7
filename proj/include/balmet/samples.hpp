#pragma once

// Generators of concrete samples: exact-quadrature projective line at level
// k, products, S^1-invariant deformed metrics with scalar curvature for the
// Bergman expansion checks, and intentionally unstable degenerate samples.

#include <utility>
#include <vector>

#include "balmet/quantization.hpp"

namespace balmet {

/// Product quadrature: Gauss-Legendre nodes in the polar variable times
/// equispaced angles. Exact for the trigonometric-polynomial integrands in
/// the Gram entries when the thresholds hold.
struct QuadratureSpec {
  QuadratureSpec(int n_polar_, int n_angular_);

  /// Minimal exact rule for level k, optionally oversampled.
  static QuadratureSpec for_level(int k, int oversample = 1);

  int n_polar;
  int n_angular;
};

/// Gauss-Legendre rule on [-1, 1]; weights sum to 2.
void gauss_legendre(int n, RealVector& nodes, RealVector& weights);

/// Monomial sections z0^i z1^{k-i} against the round reference metric,
/// sampled on the product quadrature; weights normalized to total mass one.
/// The reference Gram is diag(C(k,i)^{-1} / (k+1)) up to round-off.
PolarizedSample build_p1_sample(int k, const QuadratureSpec& q);

/// Segre product: Kronecker sections over the product point set.
PolarizedSample product_sample(const PolarizedSample& s1, const PolarizedSample& s2);

/// S^1-invariant metric described through phi = (u'')^{-1} on the moment
/// interval, with u the symplectic potential: phi(tau) = tau(1-tau) +
/// tau^2(1-tau)^2 q(tau). The perturbation polynomial q keeps the boundary
/// slopes of phi pinned at +-1, which is what smooth compactification
/// requires; scalar curvature is S(tau) = -2 pi phi''(tau), so the round
/// profile (q = 0) has S = 4 pi and integral of S over the moment interval
/// is 4 pi for every admissible profile.
struct MetricProfile {
  explicit MetricProfile(std::vector<double> perturbation_);

  double phi(double tau) const;        // (u'')^{-1}
  double phi_prime(double tau) const;
  double phi_second(double tau) const;
  double scalar_curvature(double tau) const { return -2.0 * M_PI * phi_second(tau); }

  /// min over a dense grid of phi / (tau (1 - tau)); positive iff the metric
  /// is positive. Computed at construction; construction fails when <= 0.
  double convexity_margin;

  std::vector<double> perturbation;  // coefficients of q, ascending
};

struct CurvatureGrid {
  std::vector<double> nodes;   // tau in (0, 1)
  std::vector<double> values;  // S(tau)
};

/// Sample of level k against the reference metric e^{-k psi} with psi the
/// Legendre dual of the profile's symplectic potential, plus the exact
/// curvature grid at the quadrature nodes. Enforces a doubled-rule
/// quadrature-exactness check at tolerance 1e-10.
std::pair<PolarizedSample, CurvatureGrid> deformed_p1_sample(int k, const MetricProfile& profile,
                                                             const QuadratureSpec& q);

/// All evaluation vectors supported in the last N - hyperplane_dim
/// coordinates: a Chow-unstable configuration. Refuses construction unless
/// allow_degenerate is set, because the reference Gram is singular by design.
PolarizedSample degenerate_sample(int sections, int points, int hyperplane_dim,
                                  bool allow_degenerate = false);

/// Anticanonical model on the projective line at level k: sections of the
/// 2k-th power against the round reference, base density weights equal to
/// the quadrature weights.
AnticanonicalSample anticanonical_p1_sample(int k, const QuadratureSpec& q);

/// Legendre dual evaluation: solves u'(tau) = x for tau by safeguarded
/// Newton iteration to tolerance 1e-13 and returns psi(x) = tau x - u(tau).
double legendre_dual(const MetricProfile& profile, double x);

}  // namespace balmet
