#include "balmet/hermitian.hpp"

#include <limits>

namespace balmet {

namespace {

void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw validation_error(std::string(who) + ": matrix must be square and nonempty");
  }
}

void require_same_dim(const HermitianForm& a, const HermitianForm& b, const char* who) {
  if (a.dim() != b.dim()) {
    throw validation_error(std::string(who) + ": dimension mismatch (" +
                           std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

HermitianForm::HermitianForm(Matrix m) : entries(std::move(m)) {
  require_square(entries, "HermitianForm");
  if (!is_hermitian(entries)) {
    throw validation_error("HermitianForm: entries are not Hermitian (defect " +
                           std::to_string(hermitian_defect(entries)) + ")");
  }
  entries = ((entries + entries.adjoint()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(entries, Eigen::EigenvaluesOnly);
  require_positive_spectrum(es.eigenvalues(), "HermitianForm");
}

HermitianForm::HermitianForm(Matrix m, structurally_positive_t) : entries(std::move(m)) {
  require_square(entries, "HermitianForm");
  entries = ((entries + entries.adjoint()) / 2.0).eval();
}

TangentDirection::TangentDirection(Matrix m) : entries(std::move(m)), norm(0.0) {
  require_square(entries, "TangentDirection");
  if (!is_hermitian(entries)) {
    throw validation_error("TangentDirection: entries are not Hermitian (defect " +
                           std::to_string(hermitian_defect(entries)) + ")");
  }
  entries = ((entries + entries.adjoint()) / 2.0).eval();
  norm = entries.norm();
}

Matrix TangentDirection::traceless() const {
  const Complex mean = entries.trace() / static_cast<double>(dim());
  return entries - mean * Matrix::Identity(dim(), dim());
}

GeodesicRay::GeodesicRay(HermitianForm base_, TangentDirection direction_,
                         RayParametrization parametrization_)
    : base(std::move(base_)), direction(std::move(direction_)),
      parametrization(parametrization_) {
  if (base.dim() != direction.dim()) {
    throw validation_error("GeodesicRay: base and direction dimensions differ");
  }
  constexpr double tol = 1e-12;
  if (parametrization == RayParametrization::ArcLength &&
      std::abs(direction.norm - 1.0) > tol) {
    throw validation_error("GeodesicRay: arc-length parametrization requires a unit direction");
  }
  if (parametrization == RayParametrization::ReducedArcLength &&
      std::abs(direction.traceless().norm() - 1.0) > tol) {
    throw validation_error(
        "GeodesicRay: reduced-arc-length parametrization requires a unit traceless part");
  }
}

HermitianForm GeodesicRay::point(double t) const { return geodesic_point(base, direction, t); }

HermitianForm geodesic_point(const HermitianForm& base, const TangentDirection& direction,
                             double t) {
  if (base.dim() != direction.dim()) {
    throw validation_error("geodesic_point: dimension mismatch");
  }
  if (!std::isfinite(t)) {
    throw validation_error("geodesic_point: parameter must be finite");
  }
  if (t == 0.0 || direction.is_zero()) {
    return base;
  }
  const Matrix s = spd_sqrt(base.entries);
  const Matrix e = hermitian_exp((t * direction.entries).eval());
  Matrix out = s * e * s;
  if (!out.allFinite()) {
    throw numerical_error("geodesic_point: overflow at t = " + std::to_string(t));
  }
  return HermitianForm(std::move(out), structurally_positive);
}

namespace {

// Eigenvalues of H1^{-1/2} H2 H1^{-1/2}; shared by the distance family.
RealVector relative_log_spectrum(const HermitianForm& h1, const HermitianForm& h2) {
  const Matrix w = spd_inv_sqrt(h1.entries);
  Matrix m = w * h2.entries * w;
  m = ((m + m.adjoint()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  require_positive_spectrum(es.eigenvalues(), "distance");
  return es.eigenvalues().array().log().matrix();
}

}  // namespace

double distance(const HermitianForm& h1, const HermitianForm& h2) {
  require_same_dim(h1, h2, "distance");
  return relative_log_spectrum(h1, h2).norm();
}

double reduced_distance(const HermitianForm& h1, const HermitianForm& h2) {
  require_same_dim(h1, h2, "reduced_distance");
  RealVector logs = relative_log_spectrum(h1, h2);
  logs.array() -= logs.mean();
  return logs.norm();
}

TangentDirection connecting_direction(const HermitianForm& h1, const HermitianForm& h2) {
  require_same_dim(h1, h2, "connecting_direction");
  const Matrix w = spd_inv_sqrt(h1.entries);
  Matrix m = w * h2.entries * w;
  m = ((m + m.adjoint()) / 2.0).eval();
  return TangentDirection(spd_log(m));
}

double condition_number(const HermitianForm& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.entries, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > kEigenvalueFloor)) {
    return std::numeric_limits<double>::infinity();
  }
  return hi / lo;
}

}  // namespace balmet
