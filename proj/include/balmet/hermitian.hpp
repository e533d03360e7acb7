#pragma once

// Geometry of the symmetric space Y of positive definite Hermitian forms:
// spectral calculus, geodesics, distance, reduced distance modulo scalings,
// minimizing connections.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>

#include "balmet/errors.hpp"

namespace balmet {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

// Eigenvalues at or below this floor are treated as a positivity failure
// rather than clamped.
inline constexpr double kEigenvalueFloor = 1e-300;

template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).template lpNorm<Eigen::Infinity>();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-12) {
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return hermitian_defect(m) <= rel_tol * scale;
}

/// Spectral map f(A) = U f(Λ) U† of a Hermitian matrix. The result is
/// re-symmetrized so round-off cannot leak a non-Hermitian part.
template <typename Derived, typename Fn>
Matrix hermitian_apply(const Eigen::MatrixBase<Derived>& m, Fn&& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) {
    throw numerical_error("hermitian eigendecomposition failed");
  }
  const RealVector mapped = es.eigenvalues().unaryExpr(f);
  Matrix out = es.eigenvectors() * mapped.asDiagonal() * es.eigenvectors().adjoint();
  return ((out + out.adjoint()) / 2.0).eval();
}

template <typename Derived>
void require_positive_spectrum(const Eigen::MatrixBase<Derived>& eigenvalues,
                               const std::string& who) {
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i] > kEigenvalueFloor)) {
      throw validation_error(who + ": matrix is not positive definite (eigenvalue " +
                             std::to_string(eigenvalues[i]) + ")");
    }
  }
}

template <typename Derived>
Matrix spd_sqrt(const Eigen::MatrixBase<Derived>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  require_positive_spectrum(es.eigenvalues(), "spd_sqrt");
  const RealVector r = es.eigenvalues().cwiseSqrt();
  Matrix out = es.eigenvectors() * r.asDiagonal() * es.eigenvectors().adjoint();
  return ((out + out.adjoint()) / 2.0).eval();
}

template <typename Derived>
Matrix spd_inv_sqrt(const Eigen::MatrixBase<Derived>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  require_positive_spectrum(es.eigenvalues(), "spd_inv_sqrt");
  const RealVector r = es.eigenvalues().cwiseSqrt().cwiseInverse();
  Matrix out = es.eigenvectors() * r.asDiagonal() * es.eigenvectors().adjoint();
  return ((out + out.adjoint()) / 2.0).eval();
}

template <typename Derived>
Matrix spd_log(const Eigen::MatrixBase<Derived>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  require_positive_spectrum(es.eigenvalues(), "spd_log");
  const RealVector r = es.eigenvalues().array().log().matrix();
  Matrix out = es.eigenvectors() * r.asDiagonal() * es.eigenvectors().adjoint();
  return ((out + out.adjoint()) / 2.0).eval();
}

template <typename Derived>
Matrix hermitian_exp(const Eigen::MatrixBase<Derived>& m) {
  return hermitian_apply(m, [](double x) { return std::exp(x); });
}

/// Real Frobenius pairing tr(AB) of two Hermitian matrices.
template <typename DA, typename DB>
double hermitian_pairing(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b) {
  return (a * b).trace().real();
}

/// Tag for constructions that are positive definite in exact arithmetic
/// (congruences of positive forms, spectral exponentials). Skips the spectrum
/// check, which is meaningless past double dynamic range.
struct structurally_positive_t {
  explicit structurally_positive_t() = default;
};
inline constexpr structurally_positive_t structurally_positive{};

/// A positive definite Hermitian N x N form; a point of the symmetric space Y.
struct HermitianForm {
  explicit HermitianForm(Matrix m);
  HermitianForm(Matrix m, structurally_positive_t);

  int dim() const { return static_cast<int>(entries.rows()); }

  Matrix entries;

  static HermitianForm identity(int n) { return HermitianForm(Matrix::Identity(n, n)); }
};

/// A Hermitian matrix regarded as the generator of a geodesic.
struct TangentDirection {
  explicit TangentDirection(Matrix m);

  int dim() const { return static_cast<int>(entries.rows()); }
  bool is_zero(double tol = 0.0) const { return norm <= tol; }

  /// Traceless part, i.e. the component orthogonal to the scaling direction.
  Matrix traceless() const;

  Matrix entries;
  double norm;  // Frobenius norm of entries

  static TangentDirection zero(int n) { return TangentDirection(Matrix::Zero(n, n)); }
};

enum class RayParametrization { ArcLength, ReducedArcLength, Raw };

/// One-parameter family t -> H0^{1/2} exp(tA) H0^{1/2}.
struct GeodesicRay {
  GeodesicRay(HermitianForm base_, TangentDirection direction_,
              RayParametrization parametrization_ = RayParametrization::Raw);

  HermitianForm point(double t) const;

  HermitianForm base;
  TangentDirection direction;
  RayParametrization parametrization;
};

HermitianForm geodesic_point(const HermitianForm& base, const TangentDirection& direction,
                             double t);

/// Riemannian distance ||log(H1^{-1/2} H2 H1^{-1/2})||_F.
double distance(const HermitianForm& h1, const HermitianForm& h2);

/// min_{c>0} distance(H1, c H2): distance between scaling orbits.
double reduced_distance(const HermitianForm& h1, const HermitianForm& h2);

/// Generator A with geodesic_point(H1, A, 1) = H2 and ||A||_F = distance.
TangentDirection connecting_direction(const HermitianForm& h1, const HermitianForm& h2);

/// Ratio of extreme eigenvalues; +inf when the bottom hits the floor.
double condition_number(const HermitianForm& h);

}  // namespace balmet
