#include "balmet/hermitian.hpp"

#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

using namespace balmet;
using balmet::testing::random_direction;
using balmet::testing::random_form;
using balmet::testing::random_unit_direction;

namespace {

Matrix diag2(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_CASE("geodesic_point: commuting diagonal cases") {
  const HermitianForm i2 = HermitianForm::identity(2);
  const TangentDirection a(diag2(1.0, -1.0));

  const HermitianForm g = geodesic_point(i2, a, 1.0);
  CHECK(std::abs(g.entries(0, 0).real() - std::exp(1.0)) < 1e-14);
  CHECK(std::abs(g.entries(1, 1).real() - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(g.entries(0, 1)) < 1e-15);

  // zero direction is the constant geodesic
  std::mt19937_64 rng(7);
  const HermitianForm h0 = random_form(3, rng);
  const HermitianForm g2 = geodesic_point(h0, TangentDirection::zero(3), 5.0);
  CHECK((g2.entries - h0.entries).norm() == 0.0);

  const HermitianForm h4(diag2(4.0, 1.0));
  const TangentDirection e11(diag2(1.0, 0.0));
  const HermitianForm g3 = geodesic_point(h4, e11, 1.0);
  CHECK(std::abs(g3.entries(0, 0).real() - 4.0 * std::exp(1.0)) < 1e-13);
  CHECK(std::abs(g3.entries(1, 1).real() - 1.0) < 1e-14);
}

TEST_CASE("geodesic_point rejects invalid input") {
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = Complex(1.0, 0.0);  // not Hermitian (asymmetric)
  bad(1, 0) = Complex(0.0, 0.0);
  CHECK_THROWS_AS(TangentDirection{bad}, validation_error);

  CHECK_THROWS_AS(HermitianForm{diag2(1.0, -2.0)}, validation_error);
  CHECK_THROWS_AS(geodesic_point(HermitianForm::identity(2), TangentDirection::zero(3), 1.0),
                  validation_error);
}

TEST_CASE("distance: closed forms") {
  std::mt19937_64 rng(11);
  const HermitianForm h = random_form(4, rng);
  CHECK(distance(h, h) == doctest::Approx(0.0).epsilon(1e-12));

  const HermitianForm i2 = HermitianForm::identity(2);
  const HermitianForm e_i2(Matrix(std::exp(1.0) * Matrix::Identity(2, 2)));
  CHECK(distance(i2, e_i2) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));

  const HermitianForm d(diag2(std::exp(2.0), 1.0));
  CHECK(distance(i2, d) == doctest::Approx(2.0).epsilon(1e-13));

  CHECK_THROWS_AS(distance(i2, HermitianForm::identity(3)), validation_error);
}

TEST_CASE("reduced_distance: scaling orbits and closed forms") {
  std::mt19937_64 rng(13);
  const HermitianForm h = random_form(5, rng);
  const HermitianForm h7(Matrix(7.0 * h.entries));
  CHECK(reduced_distance(h, h7) < 1e-12);

  const HermitianForm i2 = HermitianForm::identity(2);
  const HermitianForm a(diag2(std::exp(1.0), std::exp(-1.0)));
  CHECK(reduced_distance(i2, a) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));

  // log-eigenvalues (2, 0): subtracting the mean 1 leaves (1, -1)
  const HermitianForm b(diag2(std::exp(2.0), 1.0));
  CHECK(reduced_distance(i2, b) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-13));
}

TEST_CASE("connecting_direction round-trips") {
  const HermitianForm i2 = HermitianForm::identity(2);
  const TangentDirection z = connecting_direction(i2, i2);
  CHECK(z.norm < 1e-14);

  const HermitianForm a(diag2(std::exp(1.0), std::exp(-1.0)));
  const TangentDirection d = connecting_direction(i2, a);
  CHECK(std::abs(d.entries(0, 0).real() - 1.0) < 1e-13);
  CHECK(std::abs(d.entries(1, 1).real() + 1.0) < 1e-13);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);  // up to 6
    const HermitianForm h1 = random_form(n, rng);
    const HermitianForm h2 = random_form(n, rng);
    const TangentDirection c = connecting_direction(h1, h2);
    const HermitianForm back = geodesic_point(h1, c, 1.0);
    const double rel = (back.entries - h2.entries).norm() / h2.entries.norm();
    CHECK(rel < 1e-10);
    CHECK(std::abs(c.norm - distance(h1, h2)) < 1e-10);
  }
}

TEST_CASE("triangle inequality on random triples") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const HermitianForm h1 = random_form(n, rng);
    const HermitianForm h2 = random_form(n, rng);
    const HermitianForm h3 = random_form(n, rng);
    CHECK(distance(h1, h3) <= distance(h1, h2) + distance(h2, h3) + 1e-9);
  }
}

TEST_CASE("geodesics have unit speed globally") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const HermitianForm h = random_form(n, rng);
    const TangentDirection a = random_unit_direction(n, rng);
    for (double t : {-10.0, -3.5, -1.0, 0.25, 2.0, 10.0}) {
      const HermitianForm g = geodesic_point(h, a, t);
      CHECK(std::abs(distance(h, g) - std::abs(t) * a.norm) < 1e-9);
    }
  }
}

TEST_CASE("geodesics extend to |t| = 50 (completeness smoke test)") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const HermitianForm h = random_form(n, rng, 0.5);
    const TangentDirection a = random_unit_direction(n, rng);
    for (double t : {-50.0, -25.0, 25.0, 50.0}) {
      const HermitianForm g = geodesic_point(h, a, t);
      CHECK(g.entries.allFinite());
      // within the range where double spectra are trustworthy, confirm
      // positivity directly
      if (std::abs(t) <= 12.0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(g.entries, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > 0.0);
      }
    }
  }
}

TEST_CASE("distance is invariant under congruence") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const HermitianForm h1 = random_form(n, rng);
    const HermitianForm h2 = random_form(n, rng);
    Matrix g = balmet::testing::random_complex_matrix(n, n, rng);
    // keep the congruence well-conditioned
    g += 3.0 * Matrix::Identity(n, n);
    const HermitianForm t1(((g.adjoint() * h1.entries * g + (g.adjoint() * h1.entries * g).adjoint()) / 2.0).eval());
    const HermitianForm t2(((g.adjoint() * h2.entries * g + (g.adjoint() * h2.entries * g).adjoint()) / 2.0).eval());
    CHECK(std::abs(distance(t1, t2) - distance(h1, h2)) < 1e-9);
  }
}

TEST_CASE("reduced distance never exceeds distance") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const HermitianForm h1 = random_form(n, rng);
    const HermitianForm h2 = random_form(n, rng);
    const double d = distance(h1, h2);
    const double rd = reduced_distance(h1, h2);
    CHECK(rd <= d + 1e-12);
    const TangentDirection c = connecting_direction(h1, h2);
    if (std::abs(c.entries.trace().real()) < 1e-12) {
      CHECK(std::abs(rd - d) < 1e-9);
    }
  }
}

TEST_CASE("ray parametrization invariants") {
  const HermitianForm i2 = HermitianForm::identity(2);
  const TangentDirection unit(diag2(1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0)));
  CHECK_NOTHROW(GeodesicRay(i2, unit, RayParametrization::ArcLength));
  CHECK_THROWS_AS(GeodesicRay(i2, TangentDirection(diag2(1.0, -1.0)), RayParametrization::ArcLength),
                  validation_error);

  // direction = traceless unit + scaling component: valid in the reduced
  // parametrization, invalid in the plain one
  Matrix m = diag2(1.0 / std::sqrt(2.0) + 0.5, -1.0 / std::sqrt(2.0) + 0.5);
  CHECK_NOTHROW(GeodesicRay(i2, TangentDirection(m), RayParametrization::ReducedArcLength));
  CHECK_THROWS_AS(GeodesicRay(i2, TangentDirection(m), RayParametrization::ArcLength),
                  validation_error);
}
