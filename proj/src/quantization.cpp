#include "balmet/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace balmet {

namespace {

void require_matching_dim(const PolarizedSample& s, const HermitianForm& h, const char* who) {
  if (h.dim() != s.sections()) {
    throw validation_error(std::string(who) + ": form dimension " + std::to_string(h.dim()) +
                           " does not match section count " + std::to_string(s.sections()));
  }
}

struct DensityData {
  RealVector rho;    // internal densities
  double log_det;    // log det H
};

/// Cholesky-based densities rho_a = ||L^{-1} v_a||^2 together with log det H.
DensityData internal_density(const PolarizedSample& s, const HermitianForm& h, const char* who) {
  require_matching_dim(s, h, who);
  Eigen::LLT<Matrix> llt(h.entries);
  if (llt.info() != Eigen::Success) {
    throw numerical_error(std::string(who) + ": form is numerically not positive definite");
  }
  const Matrix w = llt.matrixL().solve(s.evals);
  DensityData d;
  d.rho = w.colwise().squaredNorm().real().transpose();
  double log_det = 0.0;
  for (int i = 0; i < h.dim(); ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i).real());
  }
  d.log_det = log_det;
  for (int a = 0; a < d.rho.size(); ++a) {
    if (!(d.rho[a] > 0.0) || !std::isfinite(d.rho[a])) {
      throw numerical_error(std::string(who) + ": nonpositive density at sample point " +
                            std::to_string(a));
    }
  }
  return d;
}

/// (N/V) sum_a nu_a v_a v_a^dagger / rho_a, unvalidated.
Matrix t_operator_raw(const PolarizedSample& s, const RealVector& rho) {
  const RealVector scale = (s.weights.array() / rho.array()).matrix();
  Matrix m = s.evals * scale.asDiagonal() * s.evals.adjoint();
  m *= static_cast<double>(s.sections()) / s.total_mass;
  return ((m + m.adjoint()) / 2.0).eval();
}

struct AcDensityData {
  RealVector rho;
  RealVector rho_pow;  // rho^{-(k+1)/k}
  double f;            // F(H) = sum beta rho^{-1/k}
  double log_det;
};

AcDensityData ac_density(const AnticanonicalSample& s, const HermitianForm& h, const char* who) {
  const DensityData d = internal_density(s.sample, h, who);
  AcDensityData out;
  out.rho = d.rho;
  out.log_det = d.log_det;
  const double k = static_cast<double>(s.sample.level);
  out.rho_pow = d.rho.array().pow(-(k + 1.0) / k).matrix();
  out.f = (s.base.array() * d.rho.array().pow(-1.0 / k)).sum();
  if (!(out.f > 0.0) || !std::isfinite(out.f)) {
    throw numerical_error(std::string(who) + ": density functional overflowed");
  }
  return out;
}

Matrix ac_t_operator_raw(const AnticanonicalSample& s, const AcDensityData& d) {
  const RealVector scale = (s.base.array() * d.rho_pow.array()).matrix();
  Matrix m = s.sample.evals * scale.asDiagonal() * s.sample.evals.adjoint();
  m *= static_cast<double>(s.sections()) / d.f;
  return ((m + m.adjoint()) / 2.0).eval();
}

Matrix det_normalized(const Matrix& h, double log_det) {
  const double n = static_cast<double>(h.rows());
  return (h * std::exp(-log_det / n)).eval();
}

/// Traceless normalized log of a collapsing positive semidefinite matrix;
/// eigenvalues below relative floor are clamped so the escape direction
/// points along the collapse.
TangentDirection collapse_direction(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0)) {
    throw numerical_error("collapse_direction: matrix has no positive part");
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
    throw numerical_error("collapse_direction: degenerate direction");
  }
  return TangentDirection(a / norm);
}

struct SpectralRay {
  RealVector lambda;                  // eigenvalues of A
  std::vector<RealVector> coeffs;     // per point: masked |u_{i,a}|^2
  std::vector<RealVector> lambdas;    // per point: eigenvalues kept by the mask
  RealVector support_min;             // per point: min lambda on the support
  double trace_a;
  double log_det0;
};

/// Shared spectral data of a restriction t -> gamma(t) = H0^{1/2}e^{tA}H0^{1/2}:
/// rho_a(gamma(t)) = sum_i |u_{a,i}|^2 e^{-lambda_i t} with u = U* H0^{-1/2} v.
SpectralRay spectral_ray(const PolarizedSample& s, const HermitianForm& h0,
                         const TangentDirection& a, const char* who) {
  require_matching_dim(s, h0, who);
  if (a.dim() != s.sections()) {
    throw validation_error(std::string(who) + ": direction dimension mismatch");
  }
  SpectralRay ray;
  Eigen::SelfAdjointEigenSolver<Matrix> es_h(h0.entries);
  require_positive_spectrum(es_h.eigenvalues(), who);
  ray.log_det0 = es_h.eigenvalues().array().log().sum();

  const Matrix inv_sqrt = es_h.eigenvectors() *
                          es_h.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          es_h.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix> es_a(a.entries);
  ray.lambda = es_a.eigenvalues();
  ray.trace_a = a.entries.trace().real();

  const Matrix u = es_a.eigenvectors().adjoint() * (inv_sqrt * s.evals);
  const int m = s.points();
  ray.coeffs.reserve(m);
  ray.lambdas.reserve(m);
  ray.support_min.resize(m);
  for (int col = 0; col < m; ++col) {
    const RealVector c = u.col(col).cwiseAbs2();
    const double total = c.sum();
    if (!(total > 0.0)) {
      throw validation_error(std::string(who) + ": sample point " + std::to_string(col) +
                             " has empty support; sample invalid");
    }
    std::vector<double> kept_c;
    std::vector<double> kept_l;
    for (int i = 0; i < c.size(); ++i) {
      if (c[i] > kSupportThreshold * total) {
        kept_c.push_back(c[i]);
        kept_l.push_back(ray.lambda[i]);
      }
    }
    if (kept_c.empty()) {
      throw validation_error(std::string(who) + ": sample point " + std::to_string(col) +
                             " has empty support; sample invalid");
    }
    ray.coeffs.emplace_back(Eigen::Map<RealVector>(kept_c.data(), kept_c.size()));
    ray.lambdas.emplace_back(Eigen::Map<RealVector>(kept_l.data(), kept_l.size()));
    ray.support_min[col] = *std::min_element(kept_l.begin(), kept_l.end());
  }
  return ray;
}

/// log rho_a(gamma(t)), evaluated with the dominant exponent factored out.
double log_density_along(const SpectralRay& ray, int a, double t) {
  const RealVector& c = ray.coeffs[a];
  const RealVector& l = ray.lambdas[a];
  double q_max = -l[0] * t;
  for (int i = 1; i < l.size(); ++i) {
    q_max = std::max(q_max, -l[i] * t);
  }
  double acc = 0.0;
  for (int i = 0; i < l.size(); ++i) {
    acc += c[i] * std::exp(-l[i] * t - q_max);
  }
  return q_max + std::log(acc);
}

}  // namespace

PolarizedSample::PolarizedSample(Matrix evals_, RealVector weights_, int level_, int dim_,
                                 std::string label_, bool allow_degenerate_)
    : evals(std::move(evals_)), weights(std::move(weights_)), total_mass(0.0), level(level_),
      dim(dim_), label(std::move(label_)), allow_degenerate(allow_degenerate_) {
  if (evals.rows() < 1 || evals.cols() < 1) {
    throw validation_error("PolarizedSample: needs at least one section and one point");
  }
  if (weights.size() != evals.cols()) {
    throw validation_error("PolarizedSample: weight count does not match point count");
  }
  if (level < 0 || dim < 1) {
    throw validation_error("PolarizedSample: level must be >= 0 and dimension >= 1");
  }
  for (int a = 0; a < weights.size(); ++a) {
    if (!(weights[a] > 0.0)) {
      throw validation_error("PolarizedSample: quadrature weights must be positive");
    }
  }
  total_mass = weights.sum();
  if (!allow_degenerate) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(reference_gram(), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > hi * 1e-14)) {
      throw validation_error(
          "PolarizedSample: reference Gram is not positive definite (some section vanishes on "
          "the sample); pass allow_degenerate to construct anyway");
    }
  }
}

Matrix PolarizedSample::reference_gram() const {
  Matrix g = evals * weights.asDiagonal() * evals.adjoint();
  return ((g + g.adjoint()) / 2.0).eval();
}

AnticanonicalSample::AnticanonicalSample(PolarizedSample sample_, RealVector base_)
    : sample(std::move(sample_)), base(std::move(base_)) {
  if (base.size() != sample.points()) {
    throw validation_error("AnticanonicalSample: base weight count does not match point count");
  }
  if (sample.level < 1) {
    throw validation_error("AnticanonicalSample: level must be positive");
  }
  for (int a = 0; a < base.size(); ++a) {
    if (!(base[a] > 0.0)) {
      throw validation_error("AnticanonicalSample: base weights must be positive");
    }
  }
}

RealVector bergman_density(const PolarizedSample& s, const HermitianForm& h,
                           DensityNormalization normalization) {
  const DensityData d = internal_density(s, h, "bergman_density");
  if (normalization == DensityNormalization::Internal) {
    return d.rho;
  }
  // paper scaling: evaluated at the gauge where the weighted mean density is
  // one, i.e. rho -> N rho / sum_b nu_b rho_b; then sum_a nu_a rho_a = N.
  const double mean = s.weights.dot(d.rho);
  return (static_cast<double>(s.sections()) / mean) * d.rho;
}

HermitianForm t_operator(const PolarizedSample& s, const HermitianForm& h) {
  const DensityData d = internal_density(s, h, "t_operator");
  return HermitianForm(t_operator_raw(s, d.rho));
}

double balancing_energy(const PolarizedSample& s, const HermitianForm& h) {
  const DensityData d = internal_density(s, h, "balancing_energy");
  return s.weights.dot(d.rho.array().log().matrix()) +
         s.total_mass / static_cast<double>(s.sections()) * d.log_det;
}

TangentDirection energy_gradient(const PolarizedSample& s, const HermitianForm& h) {
  const DensityData d = internal_density(s, h, "energy_gradient");
  const Matrix m = t_operator_raw(s, d.rho);  // (N/V) sum nu v v^dag / rho
  const Matrix w = spd_inv_sqrt(h.entries);
  const double v_over_n = s.total_mass / static_cast<double>(s.sections());
  Matrix g = v_over_n * (Matrix::Identity(h.dim(), h.dim()) - w * m * w);
  return TangentDirection(((g + g.adjoint()) / 2.0).eval());
}

double ac_energy(const AnticanonicalSample& s, const HermitianForm& h) {
  const AcDensityData d = ac_density(s, h, "ac_energy");
  const double k = static_cast<double>(s.sample.level);
  return d.log_det / static_cast<double>(s.sections()) - k * std::log(d.f);
}

HermitianForm ac_t_operator(const AnticanonicalSample& s, const HermitianForm& h) {
  const AcDensityData d = ac_density(s, h, "ac_t_operator");
  return HermitianForm(ac_t_operator_raw(s, d));
}

TangentDirection ac_energy_gradient(const AnticanonicalSample& s, const HermitianForm& h) {
  const AcDensityData d = ac_density(s, h, "ac_energy_gradient");
  const Matrix m = ac_t_operator_raw(s, d);  // (N/F) sum beta rho^{-(k+1)/k} v v^dag
  const Matrix w = spd_inv_sqrt(h.entries);
  const double n = static_cast<double>(s.sections());
  Matrix g = (Matrix::Identity(h.dim(), h.dim()) - w * m * w) / n;
  return TangentDirection(((g + g.adjoint()) / 2.0).eval());
}

namespace {

template <typename Step>
BalanceResult balance_loop(const PolarizedSample& plain, const HermitianForm& h0,
                           const BalanceOptions& opts, Step step) {
  if (h0.dim() != plain.sections()) {
    throw validation_error("balance_iterate: form dimension does not match section count");
  }
  const int n = plain.sections();

  Matrix h = h0.entries;
  {
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) {
      throw validation_error("balance_iterate: initial form is not positive definite");
    }
    if (opts.det_normalize) {
      double log_det = 0.0;
      for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i).real());
      h = det_normalized(h, log_det);
    }
  }

  std::vector<double> history;
  history.reserve(64);
  bool monotone = true;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Matrix t = step(HermitianForm(h, structurally_positive));

    Eigen::SelfAdjointEigenSolver<Matrix> es(t, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > opts.cond_cap) {
      BalanceResult r{HermitianForm(h, structurally_positive),
                      history.empty() ? std::numeric_limits<double>::infinity() : history.back(),
                      iter,
                      BalanceStatus::Diverged,
                      monotone,
                      history,
                      collapse_direction(t)};
      return r;
    }

    const double residual = (t - h).norm() / h.norm();
    if (!history.empty() && residual > history.back()) {
      monotone = false;
    }
    history.push_back(residual);

    double log_det = 0.0;
    {
      Eigen::LLT<Matrix> llt(t);
      if (llt.info() != Eigen::Success) {
        BalanceResult r{HermitianForm(h, structurally_positive), residual, iter,
                        BalanceStatus::Diverged, monotone, history, collapse_direction(t)};
        return r;
      }
      for (int i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i).real());
    }
    h = opts.det_normalize ? det_normalized(t, log_det) : std::move(t);

    if (residual <= opts.eps_bal) {
      // output gauge: weighted mean density one, the scaling at which the
      // paper density equals N/V
      HermitianForm out(h, structurally_positive);
      const RealVector rho = bergman_density(plain, out, DensityNormalization::Internal);
      const double c = plain.weights.dot(rho) / plain.total_mass;
      return BalanceResult{HermitianForm((c * h).eval(), structurally_positive),
                           residual,
                           iter,
                           BalanceStatus::Converged,
                           monotone,
                           history,
                           std::nullopt};
    }
  }

  return BalanceResult{HermitianForm(h, structurally_positive),
                       history.empty() ? std::numeric_limits<double>::infinity() : history.back(),
                       opts.max_iter,
                       BalanceStatus::MaxIter,
                       monotone,
                       history,
                       std::nullopt};
}

}  // namespace

BalanceResult balance_iterate(const PolarizedSample& s, const HermitianForm& h0,
                              const BalanceOptions& opts) {
  return balance_loop(s, h0, opts, [&s](const HermitianForm& h) {
    const DensityData d = internal_density(s, h, "balance_iterate");
    return t_operator_raw(s, d.rho);
  });
}

BalanceResult balance_iterate(const AnticanonicalSample& s, const HermitianForm& h0,
                              const BalanceOptions& opts) {
  return balance_loop(s.sample, h0, opts, [&s](const HermitianForm& h) {
    const AcDensityData d = ac_density(s, h, "balance_iterate");
    return ac_t_operator_raw(s, d);
  });
}

double exact_slope(const PolarizedSample& s, const HermitianForm& h0,
                   const TangentDirection& a) {
  const SpectralRay ray = spectral_ray(s, h0, a, "exact_slope");
  const double v_over_n = s.total_mass / static_cast<double>(s.sections());
  return v_over_n * ray.trace_a - s.weights.dot(ray.support_min);
}

double ac_exact_slope(const AnticanonicalSample& s, const HermitianForm& h0,
                      const TangentDirection& a) {
  const SpectralRay ray = spectral_ray(s.sample, h0, a, "ac_exact_slope");
  return ray.trace_a / static_cast<double>(s.sections()) - ray.support_min.maxCoeff();
}

EnergyRestriction energy_restriction(const PolarizedSample& s, const HermitianForm& h0,
                                     const TangentDirection& a) {
  auto ray = std::make_shared<SpectralRay>(spectral_ray(s, h0, a, "energy_restriction"));
  const double v_over_n = s.total_mass / static_cast<double>(s.sections());
  const RealVector weights = s.weights;

  EnergyRestriction r;
  r.slope_at_infinity = v_over_n * ray->trace_a - weights.dot(ray->support_min);
  r.eval = [ray, weights, v_over_n](double t) {
    double acc = 0.0;
    for (int col = 0; col < weights.size(); ++col) {
      acc += weights[col] * log_density_along(*ray, col, t);
    }
    return acc + v_over_n * (t * ray->trace_a + ray->log_det0);
  };
  return r;
}

EnergyRestriction ac_energy_restriction(const AnticanonicalSample& s, const HermitianForm& h0,
                                        const TangentDirection& a) {
  auto ray = std::make_shared<SpectralRay>(spectral_ray(s.sample, h0, a, "ac_energy_restriction"));
  const double n = static_cast<double>(s.sections());
  const double k = static_cast<double>(s.sample.level);
  const RealVector beta = s.base;

  EnergyRestriction r;
  r.slope_at_infinity = ray->trace_a / n - ray->support_min.maxCoeff();
  r.eval = [ray, beta, n, k](double t) {
    // log F = log sum_a beta_a exp(-log rho_a / k), dominant term factored out
    const int m = static_cast<int>(beta.size());
    RealVector q(m);
    for (int col = 0; col < m; ++col) {
      q[col] = -log_density_along(*ray, col, t) / k;
    }
    const double q_max = q.maxCoeff();
    double acc = 0.0;
    for (int col = 0; col < m; ++col) {
      acc += beta[col] * std::exp(q[col] - q_max);
    }
    const double log_f = q_max + std::log(acc);
    return (t * ray->trace_a + ray->log_det0) / n - k * log_f;
  };
  return r;
}

}  // namespace balmet
