#include "invlab/core.hpp"

#include <algorithm>
#include <utility>

namespace invlab {

Grid1D::Grid1D(double a, double b, int n) : a_(a), b_(b), n_(n) {
  if (!(b > a)) {
    throw DomainError("Grid1D: requires b > a");
  }
  if (n < 1) {
    throw DomainError("Grid1D: requires n >= 1");
  }
  h_ = (b - a) / n;
}

double Grid1D::point(int i) const {
  // The last node is pinned to b so that endpoints are exact.
  if (i == n_) return b_;
  return a_ + i * h_;
}

Vector Grid1D::points() const {
  Vector p(size());
  for (int i = 0; i <= n_; ++i) p(i) = point(i);
  return p;
}

TimeSeries::TimeSeries(Vector t, Vector v) : times(std::move(t)), values(std::move(v)) {
  if (times.size() != values.size()) {
    throw DomainError("TimeSeries: times and values differ in length");
  }
  for (Eigen::Index i = 1; i < times.size(); ++i) {
    if (!(times(i) > times(i - 1))) {
      throw DomainError("TimeSeries: times must be strictly increasing");
    }
  }
}

Field2D::Field2D(Grid1D t, Grid1D x)
    : t_grid(t), x_grid(x), values(Matrix::Zero(t.size(), x.size())) {}

Field2D::Field2D(Grid1D t, Grid1D x, Matrix v)
    : t_grid(t), x_grid(x), values(std::move(v)) {
  if (values.rows() != t_grid.size() || values.cols() != x_grid.size()) {
    throw DomainError("Field2D: value matrix does not match grids");
  }
}

Vector solve_tridiagonal(const Vector& lower, const Vector& diag,
                         const Vector& upper, const Vector& rhs) {
  const Eigen::Index n = diag.size();
  if (n < 1) throw DomainError("solve_tridiagonal: empty system");
  if (lower.size() != n - 1 || upper.size() != n - 1 || rhs.size() != n) {
    throw DomainError("solve_tridiagonal: inconsistent band lengths");
  }
  const double pivot_floor = 1e-14 * diag.cwiseAbs().maxCoeff();

  Vector c(n);  // modified upper diagonal
  Vector d(n);  // modified rhs
  double pivot = diag(0);
  if (std::abs(pivot) < pivot_floor || pivot == 0.0) {
    throw SingularMatrixError("solve_tridiagonal: zero pivot at row 0");
  }
  c(0) = n > 1 ? upper(0) / pivot : 0.0;
  d(0) = rhs(0) / pivot;
  for (Eigen::Index i = 1; i < n; ++i) {
    pivot = diag(i) - lower(i - 1) * c(i - 1);
    if (std::abs(pivot) < pivot_floor || pivot == 0.0) {
      throw SingularMatrixError("solve_tridiagonal: zero pivot at row " + std::to_string(i));
    }
    c(i) = i < n - 1 ? upper(i) / pivot : 0.0;
    d(i) = (rhs(i) - lower(i - 1) * d(i - 1)) / pivot;
  }
  Vector x(n);
  x(n - 1) = d(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    x(i) = d(i) - c(i) * x(i + 1);
  }
  return x;
}

Vector solve_dense(const Matrix& a, const Vector& rhs) {
  Eigen::PartialPivLU<Matrix> lu(a);
  const auto u_diag = lu.matrixLU().diagonal().cwiseAbs();
  const double scale = u_diag.maxCoeff();
  if (!(scale > 0.0) || !(u_diag.minCoeff() > 1e-14 * scale)) {
    throw SingularMatrixError("solve_dense: matrix is numerically singular");
  }
  return lu.solve(rhs);
}

}  // namespace invlab
