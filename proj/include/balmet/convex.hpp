#pragma once

// Toolkit for geodesically convex functions on the space of positive
// definite Hermitian forms: one-sided derivatives, convexity reports,
// asymptotic slopes, properness certificates, geodesic descent, the
// existence decision procedure, and the liminf comparison harness.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "balmet/hermitian.hpp"

namespace balmet {

/// A restriction t -> f(gamma(t)) of a convex function to a ray, with an
/// optional exact-slope oracle. The evaluator must be pure.
struct RayFunction {
  std::function<double(double)> eval;
  std::optional<double> exact_slope;
};

/// Chord-slope estimate on a trailing window with a doubling-window drift
/// test. An infinite marker means chords keep growing past the cap.
struct SlopeEstimate {
  double value;
  bool infinite;
  double t1;
  double t2;
  double drift;
  bool converged;
};

struct ConvexityReport {
  double max_violation;  // max midpoint-over-chord excess (<= 0 for convex data)
  double strict_margin;  // min slope gap over consecutive triples
};

/// Left and right derivatives at tau from monotone difference quotients.
std::pair<double, double> one_sided_derivatives(const RayFunction& f, double tau, double h_min);

ConvexityReport convexity_report(const RayFunction& f, const std::vector<double>& grid);

SlopeEstimate asymptotic_slope(const RayFunction& f, double t_max, double tol,
                               double cap = 1e6);

/// Witnesses f(y) >= C d(y, y0) - D on every stored probe.
struct PropernessCertificate {
  double growth;  // C
  double offset;  // D
  struct Probe {
    double value;
    double dist;
  };
  std::vector<Probe> probes;
  double residual;  // min over probes of f - (C d - D); nonnegative
  double min_probe_slope;
};

/// A probed direction whose slope failed to be positive: a destabilizing
/// witness.
struct PropernessFailure {
  TangentDirection direction;
  double slope;
};

using PropernessResult = std::variant<PropernessCertificate, PropernessFailure>;

struct PropernessOptions {
  double slope_tol = 1e-6;
  double slope_cap = 1e6;
  int validation_points = 1000;
  std::uint64_t seed = 2024;
};

PropernessResult properness_certificate(const std::function<double(const HermitianForm&)>& f,
                                        const HermitianForm& y0,
                                        const std::vector<TangentDirection>& directions,
                                        double t_max, const PropernessOptions& opts = {});

struct MinimizerVerdict {
  HermitianForm point;
  double gradient_norm;
  double value;
};

struct DegenerateVerdict {
  TangentDirection direction;           // normalized traceless escape direction
  std::optional<double> certified_slope;  // filled by an exact oracle when available
  std::string witness;                  // iterate summary
};

using ExistenceVerdict = std::variant<MinimizerVerdict, DegenerateVerdict>;

inline bool found_minimizer(const ExistenceVerdict& v) {
  return std::holds_alternative<MinimizerVerdict>(v);
}

struct DescentOptions {
  double step = 1.0;
  int max_iter = 10000;
  double stat_tol = 1e-7;
  double cond_cap = 1e12;
  double divergence_radius = 1e3;
  bool det_normalize = false;
  double fd_check_tol = 1e-4;
  std::uint64_t fd_seed = 12345;
  /// Exact slope oracle (base, direction) -> slope used to certify escape
  /// directions.
  std::function<double(const HermitianForm&, const TangentDirection&)> slope_oracle;
};

/// Geodesic descent H <- H^{1/2} exp(-s G) H^{1/2} with Armijo backtracking.
/// Returns a Minimizer at stationarity, or Degenerate when the iterates blow
/// up in conditioning or distance.
ExistenceVerdict minimize_convex(const std::function<double(const HermitianForm&)>& f,
                                 const std::function<TangentDirection(const HermitianForm&)>& grad,
                                 const HermitianForm& h_init, const DescentOptions& opts = {});

struct DecideOptions {
  DescentOptions descent;
  int verification_directions = 100;
  std::uint64_t seed = 77;
  double scale_invariance_tol = 1e-9;
  DecideOptions() {
    descent.det_normalize = true;
    descent.stat_tol = 1e-7;
  }
};

/// Existence decision procedure for a scaling-invariant geodesically convex
/// energy exposing value / gradient / slope / dim. Exactly one of Minimizer
/// or Degenerate comes back, with its certificate verified; inconsistent
/// outcomes raise a contract error.
template <typename Energy>
ExistenceVerdict decide_existence(const Energy& energy, const HermitianForm& h_init,
                                  const DecideOptions& opts = {});

struct LiminfReport {
  double ratio_floor;  // min over tested i >= i0 of f(y_i) / tau_i
  double threshold;    // slope(limit ray) / 4
  double slope_star;
  bool passed;
  int first_index;
};

struct LiminfOptions {
  double slope_t_max = 200.0;
  double slope_tol = 1e-6;
  int first_index = -1;  // default: second half of the family
};

/// Checks the comparison bound behind the properness argument: rays
/// converging to a positive-slope limit ray keep f(y_i)/tau_i above a
/// quarter of the limit slope.
LiminfReport liminf_harness(const std::function<double(const HermitianForm&)>& f,
                            const std::vector<std::pair<GeodesicRay, double>>& family,
                            const GeodesicRay& limit_ray, const LiminfOptions& opts = {});

// --- implementation of the templated decision procedure ---

namespace detail {

ExistenceVerdict run_descent_for_decide(
    const std::function<double(const HermitianForm&)>& f,
    const std::function<TangentDirection(const HermitianForm&)>& grad,
    const std::function<double(const HermitianForm&, const TangentDirection&)>& oracle,
    const HermitianForm& h_init, const DecideOptions& opts);

void verify_minimizer_slopes(
    const std::function<double(const HermitianForm&, const TangentDirection&)>& oracle,
    const HermitianForm& at, int n, int count, std::uint64_t seed);

void check_scale_invariance(const std::function<double(const HermitianForm&)>& f,
                            const HermitianForm& h, double tol);

}  // namespace detail

template <typename Energy>
ExistenceVerdict decide_existence(const Energy& energy, const HermitianForm& h_init,
                                  const DecideOptions& opts) {
  const std::function<double(const HermitianForm&)> f =
      [&energy](const HermitianForm& h) { return energy.value(h); };
  const std::function<TangentDirection(const HermitianForm&)> grad =
      [&energy](const HermitianForm& h) { return energy.gradient(h); };
  const std::function<double(const HermitianForm&, const TangentDirection&)> oracle =
      [&energy](const HermitianForm& h, const TangentDirection& a) { return energy.slope(h, a); };

  detail::check_scale_invariance(f, h_init, opts.scale_invariance_tol);

  ExistenceVerdict verdict = detail::run_descent_for_decide(f, grad, oracle, h_init, opts);

  if (const auto* min = std::get_if<MinimizerVerdict>(&verdict)) {
    detail::verify_minimizer_slopes(oracle, min->point, energy.dim(),
                                    opts.verification_directions, opts.seed);
  } else {
    const auto& deg = std::get<DegenerateVerdict>(verdict);
    if (!deg.certified_slope.has_value() || *deg.certified_slope > 0.0) {
      throw contract_error(
          "decide_existence: divergence without a certified nonpositive slope; "
          "existence dichotomy violated");
    }
  }
  return verdict;
}

}  // namespace balmet
