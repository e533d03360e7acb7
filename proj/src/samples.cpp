#include "balmet/samples.hpp"

#include <cmath>
#include <random>

namespace balmet {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

/// Legendre P_n and its derivative by the three-term recurrence.
std::pair<double, double> legendre_pair(int n, double x) {
  double p0 = 1.0;
  double p1 = x;
  for (int j = 1; j < n; ++j) {
    const double p2 = ((2.0 * j + 1.0) * x * p1 - j * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

/// Coefficients (ascending) of the product of two polynomials.
std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) {
      c[i + j] += a[i] * b[j];
    }
  }
  return c;
}

std::vector<double> poly_derivative(const std::vector<double>& a) {
  if (a.size() <= 1) return {0.0};
  std::vector<double> d(a.size() - 1);
  for (size_t i = 1; i < a.size(); ++i) {
    d[i - 1] = static_cast<double>(i) * a[i];
  }
  return d;
}

double poly_eval(const std::vector<double>& a, double x) {
  double acc = 0.0;
  for (auto it = a.rbegin(); it != a.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

const RealVector& inner_nodes();
const RealVector& inner_weights();

/// integral_0^tau f(s) ds by a fixed 64-point rule; f analytic on [0, 1].
template <typename F>
double integrate_to(double tau, F&& f) {
  const RealVector& xs = inner_nodes();
  const RealVector& ws = inner_weights();
  double acc = 0.0;
  for (int i = 0; i < xs.size(); ++i) {
    const double s = 0.5 * tau * (xs[i] + 1.0);
    acc += ws[i] * f(s);
  }
  return 0.5 * tau * acc;
}

struct PotentialData {
  double x;    // u'(tau)
  double psi;  // Legendre dual value psi(x) = tau x - u(tau)
};

/// u' and psi at tau, splitting off the round part whose integrals are
/// closed-form; the remainder g1 = tau(1-tau) q / phi is smooth on [0,1].
PotentialData potential_at(const MetricProfile& profile, double tau) {
  const auto g1 = [&profile](double s) {
    return s * (1.0 - s) * poly_eval(profile.perturbation, s) / profile.phi(s);
  };
  const double delta_prime = -integrate_to(tau, g1);
  const double delta = -integrate_to(tau, [&](double s) { return (tau - s) * g1(s); });
  const double x = std::log(tau / (1.0 - tau)) + delta_prime;
  const double u_round = tau * std::log(tau) + (1.0 - tau) * std::log(1.0 - tau);
  const double u = u_round + delta;
  return {x, tau * x - u};
}

std::mt19937_64 degenerate_rng(int sections, int points, int hyperplane_dim) {
  const auto seed = static_cast<std::uint64_t>(sections) * 1000003ull +
                    static_cast<std::uint64_t>(points) * 1009ull +
                    static_cast<std::uint64_t>(hyperplane_dim);
  return std::mt19937_64(seed);
}

}  // namespace

void gauss_legendre(int n, RealVector& nodes, RealVector& weights) {
  if (n < 1) {
    throw validation_error("gauss_legendre: need at least one node");
  }
  nodes.resize(n);
  weights.resize(n);
  if (n == 1) {
    nodes[0] = 0.0;
    weights[0] = 2.0;
    return;
  }
  // Golub-Welsch seed: eigenvalues of the Jacobi matrix
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < n; ++j) {
    const double b = j / std::sqrt(4.0 * j * j - 1.0);
    jacobi(j, j - 1) = b;
    jacobi(j - 1, j) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi, Eigen::EigenvaluesOnly);
  nodes = es.eigenvalues();
  // Newton polish and weights from the derivative
  for (int i = 0; i < n; ++i) {
    double x = nodes[i];
    for (int it = 0; it < 3; ++it) {
      const auto [p, dp] = legendre_pair(n, x);
      x -= p / dp;
    }
    const auto [p, dp] = legendre_pair(n, x);
    (void)p;
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

namespace {

const RealVector& inner_nodes() {
  static const RealVector nodes = [] {
    RealVector n, w;
    gauss_legendre(64, n, w);
    return n;
  }();
  return nodes;
}

const RealVector& inner_weights() {
  static const RealVector weights = [] {
    RealVector n, w;
    gauss_legendre(64, n, w);
    return w;
  }();
  return weights;
}

}  // namespace

QuadratureSpec::QuadratureSpec(int n_polar_, int n_angular_)
    : n_polar(n_polar_), n_angular(n_angular_) {
  if (n_polar < 1 || n_angular < 1) {
    throw validation_error("QuadratureSpec: node counts must be positive");
  }
}

QuadratureSpec QuadratureSpec::for_level(int k, int oversample) {
  if (k < 0 || oversample < 1) {
    throw validation_error("QuadratureSpec: invalid level or oversampling factor");
  }
  return QuadratureSpec(oversample * (k + 1), std::max(1, oversample * (2 * k + 1)));
}

PolarizedSample build_p1_sample(int k, const QuadratureSpec& q) {
  if (k < 0) {
    throw validation_error("build_p1_sample: level must be nonnegative");
  }
  if (q.n_polar < k + 1 || q.n_angular < 2 * k + 1) {
    throw validation_error("build_p1_sample: quadrature below the exactness thresholds (need "
                           "n_polar >= k+1 and n_angular >= 2k+1)");
  }
  RealVector u, w;
  gauss_legendre(q.n_polar, u, w);

  const int n = k + 1;
  const int m = q.n_polar * q.n_angular;
  Matrix evals(n, m);
  RealVector weights(m);

  for (int qi = 0; qi < q.n_polar; ++qi) {
    const double p = 0.5 * (1.0 + u[qi]);  // |z0|^2 on the unit representative
    for (int r = 0; r < q.n_angular; ++r) {
      const int a = qi * q.n_angular + r;  // polar-major ordering
      const double phi = kTwoPi * r / q.n_angular;
      weights[a] = 0.5 * w[qi] / q.n_angular;
      for (int i = 0; i <= k; ++i) {
        const double radial =
            std::sqrt(std::pow(p, static_cast<double>(i)) *
                      std::pow(1.0 - p, static_cast<double>(k - i)));
        const double phase = (k - i) * phi;
        evals(i, a) = radial * Complex(std::cos(phase), std::sin(phase));
      }
    }
  }
  return PolarizedSample(std::move(evals), std::move(weights), k, 1,
                         "p1-k" + std::to_string(k));
}

PolarizedSample product_sample(const PolarizedSample& s1, const PolarizedSample& s2) {
  if (s1.level != s2.level && s1.level != 0 && s2.level != 0) {
    throw validation_error("product_sample: factors must share a level (or one be level 0)");
  }
  const int n = s1.sections() * s2.sections();
  const long long m = static_cast<long long>(s1.points()) * s2.points();
  if (n > 64) {
    throw validation_error("product_sample: section count " + std::to_string(n) +
                           " exceeds the cap of 64");
  }
  if (m > 20000) {
    throw validation_error("product_sample: point count exceeds the cap of 20000");
  }

  Matrix evals(n, m);
  RealVector weights(m);
  for (int a1 = 0; a1 < s1.points(); ++a1) {
    for (int a2 = 0; a2 < s2.points(); ++a2) {
      const int a = a1 * s2.points() + a2;
      weights[a] = s1.weights[a1] * s2.weights[a2];
      for (int i1 = 0; i1 < s1.sections(); ++i1) {
        for (int i2 = 0; i2 < s2.sections(); ++i2) {
          evals(i1 * s2.sections() + i2, a) = s1.evals(i1, a1) * s2.evals(i2, a2);
        }
      }
    }
  }
  return PolarizedSample(std::move(evals), std::move(weights), std::max(s1.level, s2.level),
                         s1.dim + s2.dim,
                         "product(" + s1.label + "," + s2.label + ")");
}

MetricProfile::MetricProfile(std::vector<double> perturbation_)
    : convexity_margin(0.0), perturbation(std::move(perturbation_)) {
  if (perturbation.empty()) {
    perturbation.push_back(0.0);
  }
  double margin = std::numeric_limits<double>::infinity();
  for (int j = 1; j < 2000; ++j) {
    const double tau = j / 2000.0;
    margin = std::min(margin, phi(tau) / (tau * (1.0 - tau)));
  }
  convexity_margin = margin;
  if (!(convexity_margin > 0.0)) {
    throw validation_error("MetricProfile: metric positivity lost (u'' <= 0 on the interval)");
  }
}

double MetricProfile::phi(double tau) const {
  const double b = tau * (1.0 - tau);
  return b + b * b * poly_eval(perturbation, tau);
}

double MetricProfile::phi_prime(double tau) const {
  const double b = tau * (1.0 - tau);
  const double db = 1.0 - 2.0 * tau;
  const double qv = poly_eval(perturbation, tau);
  const double dq = poly_eval(poly_derivative(perturbation), tau);
  return db + 2.0 * b * db * qv + b * b * dq;
}

double MetricProfile::phi_second(double tau) const {
  // exact differentiation of the full polynomial phi
  static const std::vector<double> base{0.0, 1.0, -1.0};           // tau(1-tau)
  static const std::vector<double> bump{0.0, 0.0, 1.0, -2.0, 1.0}; // tau^2(1-tau)^2
  std::vector<double> full = poly_mul(bump, perturbation);
  full.resize(std::max(full.size(), base.size()), 0.0);
  for (size_t i = 0; i < base.size(); ++i) full[i] += base[i];
  return poly_eval(poly_derivative(poly_derivative(full)), tau);
}

std::pair<PolarizedSample, CurvatureGrid> deformed_p1_sample(int k, const MetricProfile& profile,
                                                             const QuadratureSpec& q) {
  if (k < 1) {
    throw validation_error("deformed_p1_sample: level must be positive");
  }
  // oversampling factor 2 over the exact-round thresholds, enforced
  const int n_polar = std::max(q.n_polar, 2 * (k + 1));
  const int n_angular = std::max(q.n_angular, 2 * k + 1);

  const auto build = [&](int polar_nodes) {
    RealVector u, w;
    gauss_legendre(polar_nodes, u, w);
    const int n = k + 1;
    const int m = polar_nodes * n_angular;
    Matrix evals(n, m);
    RealVector weights(m);
    std::vector<double> taus(polar_nodes);
    for (int qi = 0; qi < polar_nodes; ++qi) {
      const double tau = 0.5 * (1.0 + u[qi]);
      taus[qi] = tau;
      const PotentialData pd = potential_at(profile, tau);
      for (int r = 0; r < n_angular; ++r) {
        const int a = qi * n_angular + r;
        const double phi_angle = kTwoPi * r / n_angular;
        weights[a] = 0.5 * w[qi] / n_angular;
        for (int i = 0; i <= k; ++i) {
          const double radial = std::exp(0.5 * (i * pd.x - k * pd.psi));
          const double phase = i * phi_angle;
          evals(i, a) = radial * Complex(std::cos(phase), std::sin(phase));
        }
      }
    }
    return std::make_pair(PolarizedSample(std::move(evals), std::move(weights), k, 1,
                                          "deformed-p1-k" + std::to_string(k)),
                          taus);
  };

  auto [sample, taus] = build(n_polar);
  {
    // precondition: the rule resolves the perturbed weight; verified by
    // doubling the polar rule
    auto [refined, taus2] = build(2 * n_polar);
    (void)taus2;
    const double drift =
        (sample.reference_gram() - refined.reference_gram()).cwiseAbs().maxCoeff();
    if (drift > 1e-10) {
      throw validation_error("deformed_p1_sample: quadrature not exact for the perturbed "
                             "weight (doubling drift " + std::to_string(drift) + ")");
    }
  }

  CurvatureGrid grid;
  grid.nodes = taus;
  grid.values.reserve(taus.size());
  for (double tau : taus) {
    grid.values.push_back(profile.scalar_curvature(tau));
  }
  return {std::move(sample), std::move(grid)};
}

PolarizedSample degenerate_sample(int sections, int points, int hyperplane_dim,
                                  bool allow_degenerate) {
  if (sections < 2 || points < 1) {
    throw validation_error("degenerate_sample: need at least two sections and one point");
  }
  if (hyperplane_dim < 1 || hyperplane_dim >= sections) {
    throw validation_error("degenerate_sample: hyperplane dimension must lie in [1, N-1]");
  }
  if (!allow_degenerate) {
    throw validation_error("degenerate_sample: construction intentionally violates the Gram "
                           "positivity invariant; pass allow_degenerate to proceed");
  }
  const int live = sections - hyperplane_dim;
  if (points < live) {
    throw validation_error("degenerate_sample: too few points to span the live subspace");
  }

  std::mt19937_64 rng = degenerate_rng(sections, points, hyperplane_dim);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix evals = Matrix::Zero(sections, points);
  while (true) {
    for (int a = 0; a < points; ++a) {
      for (int i = hyperplane_dim; i < sections; ++i) {
        evals(i, a) = Complex(gauss(rng), gauss(rng));
      }
    }
    // the live block must have full rank so the collapse direction is clean
    const Matrix block = evals.bottomRows(live);
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        (block * block.adjoint()).eval(), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() > 1e-8 * es.eigenvalues().maxCoeff()) {
      break;
    }
  }
  RealVector weights = RealVector::Constant(points, 1.0 / points);
  return PolarizedSample(std::move(evals), std::move(weights), 1, 1,
                         "degenerate-" + std::to_string(sections) + "x" +
                             std::to_string(points) + "-h" + std::to_string(hyperplane_dim),
                         /*allow_degenerate=*/true);
}

AnticanonicalSample anticanonical_p1_sample(int k, const QuadratureSpec& q) {
  if (k < 1) {
    throw validation_error("anticanonical_p1_sample: level must be positive");
  }
  // sections of the 2k-th power against the round reference
  PolarizedSample plain = build_p1_sample(2 * k, q);
  RealVector base = plain.weights;
  PolarizedSample relabeled(std::move(plain.evals), std::move(plain.weights), k, 1,
                            "ac-p1-k" + std::to_string(k));
  return AnticanonicalSample(std::move(relabeled), std::move(base));
}

double legendre_dual(const MetricProfile& profile, double x) {
  // solve u'(tau) = x; u' is increasing with range all of R
  const auto u_prime = [&profile](double tau) { return potential_at(profile, tau).x; };
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  double tau = 1.0 / (1.0 + std::exp(-x));  // round-metric seed
  tau = std::min(std::max(tau, lo), hi);
  for (int it = 0; it < 100; ++it) {
    const double f = u_prime(tau) - x;
    if (f > 0.0) {
      hi = tau;
    } else {
      lo = tau;
    }
    const double step = f * profile.phi(tau);  // Newton: 1/u'' = phi
    double next = tau - step;
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);  // bisection safeguard
    }
    if (std::abs(next - tau) < 1e-13 * std::max(1.0, std::abs(tau))) {
      tau = next;
      break;
    }
    tau = next;
  }
  return potential_at(profile, tau).psi;
}

}  // namespace balmet
