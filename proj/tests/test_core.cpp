#include "invlab/core.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <tuple>

using namespace invlab;

TEST_CASE("grid endpoints and spacing") {
  const Grid1D g(-1.0, 1.0, 100);
  CHECK(g.size() == 101);
  CHECK(g.h() == doctest::Approx(0.02));
  CHECK(g.point(0) == -1.0);
  CHECK(g.point(100) == 1.0);
  CHECK(g.points()(50) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(Grid1D(1.0, 0.0, 10), DomainError);
  CHECK_THROWS_AS(Grid1D(0.0, 1.0, 0), DomainError);
}

TEST_CASE("tridiagonal solve matches dense LU on random diagonally dominant systems") {
  Rng rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> size(2, 50);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    Vector lo(n - 1), di(n), up(n - 1), b(n);
    for (int i = 0; i < n - 1; ++i) {
      lo(i) = u(rng);
      up(i) = u(rng);
    }
    for (int i = 0; i < n; ++i) {
      di(i) = 3.0 + u(rng);
      b(i) = u(rng);
    }
    Matrix a = Matrix::Zero(n, n);
    a.diagonal() = di;
    a.diagonal(-1) = lo;
    a.diagonal(1) = up;
    const Vector x = solve_tridiagonal(lo, di, up, b);
    const Vector ref = solve_dense(a, b);
    CHECK((a * x - b).norm() <= 1e-12 * b.norm());
    CHECK((x - ref).norm() <= 1e-10 * ref.norm());
  }
}

TEST_CASE("small tridiagonal systems by hand") {
  CHECK(solve_tridiagonal(Vector::Zero(2), Vector::Ones(3), Vector::Zero(2),
                          Vector{{4.0, 5.0, 6.0}}) == Vector{{4.0, 5.0, 6.0}});
  const Vector x = solve_tridiagonal(Vector::Ones(1), Vector::Constant(2, 2.0), Vector::Ones(1),
                                     Vector::Constant(2, 3.0));
  CHECK(x(0) == doctest::Approx(1.0));
  CHECK(x(1) == doctest::Approx(1.0));
}

TEST_CASE("singular systems are reported") {
  Matrix a(2, 2);
  a << 1, 2, 2, 4;
  CHECK_THROWS_AS(solve_dense(a, Vector::Ones(2)), SingularMatrixError);
  CHECK_THROWS_AS(solve_tridiagonal(Vector::Ones(1), Vector::Zero(2), Vector::Ones(1),
                                    Vector::Ones(2)),
                  SingularMatrixError);
}

TEST_CASE("error norms") {
  const Vector exact = Vector::LinSpaced(5, 1.0, 5.0);
  const Vector approx = exact * 1.01;
  CHECK(rel_l2_error(approx, exact) == doctest::Approx(0.01));
  CHECK(avg_rel_error(approx, exact, 4) == doctest::Approx(0.01 / 5.0));
  CHECK(rel_l2_error(exact, exact) == 0.0);
  CHECK(rel_l2_error(Vector{{1.0, 0.0}}, Vector{{0.0, 1.0}}) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(rel_l2_error(Vector::Ones(2), Vector::Zero(2)), DomainError);
  CHECK_THROWS_AS(rel_l2_error(Vector::Ones(3), Vector::Ones(2)), DomainError);
}

TEST_CASE("field construction checks shapes") {
  const Grid1D t(0, 1, 4), x(0, 1, 9);
  const Field2D f(t, x);
  CHECK(f.values.rows() == 5);
  CHECK(f.values.cols() == 10);
  CHECK_THROWS_AS(Field2D(t, x, Matrix::Zero(3, 3)), DomainError);
}

TEST_CASE("relative error is homogeneous in the deviation") {
  Rng rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector e(8), d(8);
    for (int i = 0; i < 8; ++i) {
      e(i) = n(rng);
      d(i) = n(rng);
    }
    const double c = 3.0 * n(rng);
    const Vector scaled = e + c * d;
    const Vector unit = e + d;
    CHECK(rel_l2_error(scaled, e) ==
          doctest::Approx(std::abs(c) * rel_l2_error(unit, e)).epsilon(1e-12));
  }
}

TEST_CASE("grid points are uniformly spaced") {
  for (auto [a, b, n] : {std::tuple{-1.0, 1.0, 100}, {0.0, 0.2, 2000}, {0.0, 1.0, 50}}) {
    const Grid1D g(a, b, n);
    const Vector p = g.points();
    CHECK(p(0) == a);
    CHECK(p(n) == b);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(p(i + 1) - p(i) - g.h()));
    CHECK(worst <= 1e-12 * std::abs(g.h()));
  }
}
