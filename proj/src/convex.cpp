#include "balmet/convex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace balmet {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxBacktracks = 60;

double chord(const RayFunction& f, double a, double b) {
  return (f.eval(b) - f.eval(a)) / (b - a);
}

TangentDirection random_traceless_unit(int n, std::mt19937_64& rng) {
  if (n < 2) {
    throw validation_error("random_traceless_unit: no traceless directions in dimension one");
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (true) {
    Matrix b(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        b(i, j) = Complex(gauss(rng), gauss(rng));
      }
    }
    TangentDirection a(((b + b.adjoint()) / 2.0).eval());
    Matrix t = a.traceless();
    const double norm = t.norm();
    if (norm > 0.0) {
      return TangentDirection(t / norm);
    }
  }
}

Matrix det_normalized_entries(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  require_positive_spectrum(es.eigenvalues(), "det_normalize");
  const double log_det = es.eigenvalues().array().log().sum();
  return (h * std::exp(-log_det / static_cast<double>(h.rows()))).eval();
}

/// Normalized traceless log of H relative to base, with eigenvalues clamped
/// so collapsing iterates at the edge of double range still yield a
/// direction.
TangentDirection relative_escape_direction(const HermitianForm& base, const HermitianForm& h) {
  const Matrix w = spd_inv_sqrt(base.entries);
  Matrix rel = w * h.entries * w;
  rel = ((rel + rel.adjoint()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(rel);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0)) {
    throw numerical_error("relative_escape_direction: iterate lost every positive eigenvalue");
  }
  RealVector logs(es.eigenvalues().size());
  for (int i = 0; i < logs.size(); ++i) {
    logs[i] = std::log(std::max(es.eigenvalues()[i], top * 1e-18));
  }
  logs.array() -= logs.mean();
  Matrix a = es.eigenvectors() * logs.asDiagonal() * es.eigenvectors().adjoint();
  a = ((a + a.adjoint()) / 2.0).eval();
  const double norm = a.norm();
  if (!(norm > 0.0)) {
    throw numerical_error("relative_escape_direction: degenerate iterate direction");
  }
  return TangentDirection(a / norm);
}

}  // namespace

std::pair<double, double> one_sided_derivatives(const RayFunction& f, double tau, double h_min) {
  if (!(h_min > 0.0)) {
    throw validation_error("one_sided_derivatives: h_min must be positive");
  }
  const double f_tau = f.eval(tau);

  const auto ladder = [&](int side) {  // side = -1 for left, +1 for right
    double h = std::max(0.5, h_min);
    double prev_q =
        (side > 0) ? (f.eval(tau + h) - f_tau) / h : (f_tau - f.eval(tau - h)) / h;
    double prev_h = h;
    while (h / 2.0 >= h_min) {
      h /= 2.0;
      const double q =
          (side > 0) ? (f.eval(tau + h) - f_tau) / h : (f_tau - f.eval(tau - h)) / h;
      const double scale = std::max({1.0, std::abs(f_tau), std::abs(q) * h});
      const double tol = 1e-9 + 16.0 * std::numeric_limits<double>::epsilon() * scale / h;
      // left quotients rise as h falls, right quotients fall
      if (side < 0 && q < prev_q - tol) {
        throw convexity_error("one_sided_derivatives: left quotients decreased as h shrank",
                              tau - prev_h, tau - h, tau);
      }
      if (side > 0 && q > prev_q + tol) {
        throw convexity_error("one_sided_derivatives: right quotients increased as h shrank",
                              tau, tau + h, tau + prev_h);
      }
      if (std::abs(q - prev_q) < 1e-13 * (1.0 + std::abs(q))) {
        return q;  // stable: kink or exactly linear piece
      }
      prev_q = q;
      prev_h = h;
    }
    return prev_q;
  };

  const double left = ladder(-1);
  const double right = ladder(+1);
  if (left > right + 1e-9) {
    throw convexity_error("one_sided_derivatives: left derivative exceeds right derivative",
                          tau - h_min, tau, tau + h_min);
  }
  return {left, right};
}

ConvexityReport convexity_report(const RayFunction& f, const std::vector<double>& grid) {
  if (grid.size() < 3) {
    throw validation_error("convexity_report: grid needs at least three points");
  }
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i] < grid[i + 1])) {
      throw validation_error("convexity_report: grid must be strictly increasing");
    }
  }
  std::vector<double> values(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    values[i] = f.eval(grid[i]);
  }
  double max_violation = -std::numeric_limits<double>::infinity();
  double strict_margin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 2 < grid.size(); ++i) {
    const double a = grid[i], b = grid[i + 1], c = grid[i + 2];
    const double fa = values[i], fb = values[i + 1], fc = values[i + 2];
    const double chord_b = (fa * (c - b) + fc * (b - a)) / (c - a);
    max_violation = std::max(max_violation, fb - chord_b);
    strict_margin = std::min(strict_margin, (fc - fb) / (c - b) - (fb - fa) / (b - a));
  }
  return ConvexityReport{max_violation, strict_margin};
}

SlopeEstimate asymptotic_slope(const RayFunction& f, double t_max, double tol, double cap) {
  if (!(t_max > 0.0) || !(tol > 0.0) || !(cap > 0.0)) {
    throw validation_error("asymptotic_slope: t_max, tol and cap must all be positive");
  }
  const double t1 = 2.0 * t_max / 3.0;
  const double t2 = t_max;
  const double c_full = chord(f, t1, t2);
  const double c_half = chord(f, t1 / 2.0, t2 / 2.0);

  // convexity: chords move right, slopes cannot drop
  const double sanity = 1e-10 * std::max(1.0, std::abs(c_full));
  if (c_full < c_half - sanity) {
    throw convexity_error("asymptotic_slope: trailing chord fell below the leading one",
                          t1 / 2.0, t2 / 2.0, t2);
  }

  SlopeEstimate est{};
  est.t1 = t1;
  est.t2 = t2;
  est.drift = std::abs(c_full - c_half);
  if (c_full > cap && c_full > c_half + sanity) {
    est.value = std::numeric_limits<double>::infinity();
    est.infinite = true;
    est.converged = false;
    return est;
  }
  est.value = c_full;
  est.infinite = false;
  est.converged = est.drift <= tol;
  return est;
}

PropernessResult properness_certificate(const std::function<double(const HermitianForm&)>& f,
                                        const HermitianForm& y0,
                                        const std::vector<TangentDirection>& directions,
                                        double t_max, const PropernessOptions& opts) {
  if (directions.empty()) {
    throw validation_error("properness_certificate: need at least one probe direction");
  }
  if (!(t_max > 0.0)) {
    throw validation_error("properness_certificate: t_max must be positive");
  }

  std::vector<PropernessCertificate::Probe> probes;
  probes.reserve(directions.size() * 4 + opts.validation_points);

  double min_slope = std::numeric_limits<double>::infinity();
  const TangentDirection* worst = nullptr;
  for (const TangentDirection& d : directions) {
    if (std::abs(d.norm - 1.0) > 1e-9) {
      throw validation_error("properness_certificate: probe directions must be unit norm");
    }
    const RayFunction ray{[&](double t) { return f(geodesic_point(y0, d, t)); }, std::nullopt};
    const SlopeEstimate est = asymptotic_slope(ray, t_max, opts.slope_tol, opts.slope_cap);
    const double slope = est.infinite ? opts.slope_cap : est.value;
    if (slope < min_slope) {
      min_slope = slope;
      worst = &d;
    }
    for (double frac : {0.25, 0.5, 0.75, 1.0}) {
      const double t = frac * t_max;
      probes.push_back({ray.eval(t), t});
    }
  }

  if (!(min_slope > 0.0)) {
    return PropernessFailure{*worst, min_slope};
  }
  const double growth = min_slope / 2.0;

  // validation probes scattered through the ball of radius t_max
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> radius(0.0, t_max);
  const int n = y0.dim();
  for (int i = 0; i < opts.validation_points; ++i) {
    const TangentDirection a = random_traceless_unit(n, rng);
    const double r = radius(rng);
    probes.push_back({f(geodesic_point(y0, a, r)), r});
  }

  double offset = 1e-9;
  for (const auto& p : probes) {
    offset = std::max(offset, growth * p.dist - p.value);
  }
  double residual = std::numeric_limits<double>::infinity();
  for (const auto& p : probes) {
    residual = std::min(residual, p.value - (growth * p.dist - offset));
  }

  PropernessCertificate cert;
  cert.growth = growth;
  cert.offset = offset;
  cert.probes = std::move(probes);
  cert.residual = residual;
  cert.min_probe_slope = min_slope;
  return cert;
}

ExistenceVerdict minimize_convex(const std::function<double(const HermitianForm&)>& f,
                                 const std::function<TangentDirection(const HermitianForm&)>& grad,
                                 const HermitianForm& h_init, const DescentOptions& opts) {
  if (!(opts.step > 0.0) || !(opts.stat_tol > 0.0) || opts.max_iter < 1) {
    throw validation_error("minimize_convex: step, stat_tol and max_iter must be positive");
  }

  // gradient consistency against central differences at the initial point
  {
    std::mt19937_64 rng(opts.fd_seed);
    const TangentDirection probe =
        h_init.dim() == 1 ? TangentDirection(Matrix::Identity(1, 1))
                          : random_traceless_unit(h_init.dim(), rng);
    const double h_fd = 1e-5;
    const double fd = (f(geodesic_point(h_init, probe, h_fd)) -
                       f(geodesic_point(h_init, probe, -h_fd))) /
                      (2.0 * h_fd);
    const double pairing = hermitian_pairing(probe.entries, grad(h_init).entries);
    const double scale = std::max({1.0, std::abs(fd), std::abs(pairing)});
    if (std::abs(fd - pairing) > opts.fd_check_tol * scale) {
      throw contract_error("minimize_convex: gradient disagrees with finite differences (" +
                           std::to_string(fd) + " vs " + std::to_string(pairing) + ")");
    }
  }

  HermitianForm h = opts.det_normalize
                        ? HermitianForm(det_normalized_entries(h_init.entries),
                                        structurally_positive)
                        : h_init;
  double f_cur = f(h);
  double trial = opts.step;
  Matrix prev_grad;
  double prev_step = 0.0;
  int iter = 0;

  const auto degenerate = [&](const std::string& reason) {
    const TangentDirection escape = relative_escape_direction(h_init, h);
    std::optional<double> certified;
    if (opts.slope_oracle) {
      certified = opts.slope_oracle(h_init, escape);
    }
    std::ostringstream witness;
    witness << reason << " after " << iter << " iterations; f = " << f_cur;
    try {
      witness << ", distance from start = " << distance(h_init, h);
    } catch (const std::exception&) {
      witness << ", distance from start beyond double range";
    }
    return DegenerateVerdict{escape, certified, witness.str()};
  };

  for (iter = 0; iter < opts.max_iter; ++iter) {
    if (condition_number(h) > opts.cond_cap) {
      return degenerate("condition cap exceeded");
    }
    try {
      if (distance(h_init, h) > opts.divergence_radius) {
        return degenerate("divergence radius exceeded");
      }
    } catch (const std::exception&) {
      return degenerate("iterate left the representable cone");
    }

    const TangentDirection g = grad(h);
    if (g.norm <= opts.stat_tol) {
      return MinimizerVerdict{h, g.norm, f_cur};
    }
    const TangentDirection descent(Matrix(-g.entries));
    const double decrease_rate = g.norm * g.norm;

    // Barzilai-Borwein trial step: the inverse Rayleigh quotient of the last
    // gradient change sets the natural scale of the local bowl
    if (prev_step > 0.0) {
      const double denom = hermitian_pairing(prev_grad, (prev_grad - g.entries).eval());
      if (denom > 0.0) {
        const double bb = prev_step * prev_grad.squaredNorm() / denom;
        trial = std::min(std::max(bb, 1e-6 * opts.step), 1e6 * opts.step);
      } else {
        trial = std::min(prev_step * 2.0, 1e6 * opts.step);
      }
    }

    double s = trial;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      double f_next = std::numeric_limits<double>::quiet_NaN();
      bool feasible = true;
      try {
        const HermitianForm candidate = geodesic_point(h, descent, s);
        f_next = f(candidate);
        if (std::isfinite(f_next) && f_next < f_cur &&
            f_next <= f_cur - kArmijoSlope * s * decrease_rate) {
          h = opts.det_normalize
                  ? HermitianForm(det_normalized_entries(candidate.entries),
                                  structurally_positive)
                  : candidate;
          f_cur = opts.det_normalize ? f(h) : f_next;
          prev_grad = g.entries;
          prev_step = s;
          accepted = true;
          break;
        }
      } catch (const numerical_error&) {
        feasible = false;  // trial left the numerically representable cone
      } catch (const validation_error&) {
        feasible = false;
      }
      (void)feasible;
      s /= 2.0;
    }
    if (!accepted) {
      // no representable decrease left: stationarity must already hold
      throw numerical_error(
          "minimize_convex: no acceptable step along the negative gradient (|grad| = " +
          std::to_string(g.norm) + ", stat_tol = " + std::to_string(opts.stat_tol) + ")");
    }
  }
  throw numerical_error("minimize_convex: stationarity not reached within max_iter = " +
                        std::to_string(opts.max_iter));
}

namespace detail {

void check_scale_invariance(const std::function<double(const HermitianForm&)>& f,
                            const HermitianForm& h, double tol) {
  const double base = f(h);
  for (double c : {1e-3, 1e3}) {
    const HermitianForm scaled(Matrix(c * h.entries), structurally_positive);
    if (std::abs(f(scaled) - base) > tol) {
      throw contract_error("decide_existence: energy is not invariant under scalings");
    }
  }
}

ExistenceVerdict run_descent_for_decide(
    const std::function<double(const HermitianForm&)>& f,
    const std::function<TangentDirection(const HermitianForm&)>& grad,
    const std::function<double(const HermitianForm&, const TangentDirection&)>& oracle,
    const HermitianForm& h_init, const DecideOptions& opts) {
  DescentOptions descent = opts.descent;
  descent.det_normalize = true;
  descent.slope_oracle = oracle;
  return minimize_convex(f, grad, h_init, descent);
}

void verify_minimizer_slopes(
    const std::function<double(const HermitianForm&, const TangentDirection&)>& oracle,
    const HermitianForm& at, int n, int count, std::uint64_t seed) {
  if (n < 2) {
    return;  // all directions are scalings: nothing to probe
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < count; ++i) {
    const TangentDirection a = random_traceless_unit(n, rng);
    if (!(oracle(at, a) > 0.0)) {
      throw contract_error(
          "decide_existence: minimizer found but a probed direction has nonpositive slope; "
          "existence dichotomy violated");
    }
  }
}

}  // namespace detail

LiminfReport liminf_harness(const std::function<double(const HermitianForm&)>& f,
                            const std::vector<std::pair<GeodesicRay, double>>& family,
                            const GeodesicRay& limit_ray, const LiminfOptions& opts) {
  if (family.size() < 2) {
    throw validation_error("liminf_harness: family needs at least two rays");
  }
  const HermitianForm star_at_one = limit_ray.point(1.0);
  double prev_tau = 0.0;
  double prev_dist = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < family.size(); ++i) {
    const double tau = family[i].second;
    if (!(tau > prev_tau)) {
      throw validation_error("liminf_harness: parameters tau_i must be strictly increasing");
    }
    prev_tau = tau;
    const double d = distance(family[i].first.point(1.0), star_at_one);
    if (d > prev_dist + 1e-9) {
      throw validation_error("liminf_harness: rays do not converge to the limit ray at t = 1");
    }
    prev_dist = d;
  }

  const RayFunction star{[&](double t) { return f(limit_ray.point(t)); }, std::nullopt};
  const SlopeEstimate est = asymptotic_slope(star, opts.slope_t_max, opts.slope_tol);
  if (est.infinite) {
    throw validation_error("liminf_harness: limit ray slope is not finite");
  }
  if (!(est.value > 0.0)) {
    throw validation_error("liminf_harness: limit ray slope must be positive (got " +
                           std::to_string(est.value) + ")");
  }

  const int start = opts.first_index >= 0 ? opts.first_index
                                          : static_cast<int>(family.size()) / 2;
  if (start >= static_cast<int>(family.size())) {
    throw validation_error("liminf_harness: first index beyond the family");
  }
  double floor = std::numeric_limits<double>::infinity();
  for (size_t i = start; i < family.size(); ++i) {
    const double tau = family[i].second;
    floor = std::min(floor, f(family[i].first.point(tau)) / tau);
  }
  const double threshold = est.value / 4.0;
  return LiminfReport{floor, threshold, est.value, floor > threshold, start};
}

}  // namespace balmet
