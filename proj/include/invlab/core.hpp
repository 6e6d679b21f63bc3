#pragma once

// Shared value types, dense/tridiagonal solves and error metrics.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace invlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Objective value handed to optimizers when a forward model diverges.
inline constexpr double kDivergenceSentinel = 1e10;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Uniform grid on [a, b] with n intervals (n + 1 nodes).
class Grid1D {
 public:
  Grid1D(double a, double b, int n);

  double a() const { return a_; }
  double b() const { return b_; }
  int n() const { return n_; }
  double h() const { return h_; }
  int size() const { return n_ + 1; }

  double point(int i) const;
  Vector points() const;

  bool operator==(const Grid1D& other) const = default;

 private:
  double a_;
  double b_;
  int n_;
  double h_;
};

/// Samples of a scalar trajectory; times strictly increasing.
struct TimeSeries {
  Vector times;
  Vector values;

  TimeSeries() = default;
  TimeSeries(Vector t, Vector v);

  Eigen::Index size() const { return times.size(); }
};

/// u(t, x) on a tensor grid, one row per time level.
struct Field2D {
  Grid1D t_grid;
  Grid1D x_grid;
  Matrix values;
  bool diverged = false;
  // Time levels at which an inner nonlinear solve hit its iteration cap.
  std::vector<int> stalled_steps;

  Field2D(Grid1D t, Grid1D x);
  Field2D(Grid1D t, Grid1D x, Matrix v);

  bool all_finite() const { return values.allFinite(); }
};

/// Thomas algorithm. `lower` and `upper` hold the n-1 off-diagonals.
Vector solve_tridiagonal(const Vector& lower, const Vector& diag,
                         const Vector& upper, const Vector& rhs);

/// ||approx - exact||_2 / ||exact||_2
template <typename DerivedA, typename DerivedB>
double rel_l2_error(const Eigen::MatrixBase<DerivedA>& approx,
                    const Eigen::MatrixBase<DerivedB>& exact) {
  if (approx.size() != exact.size()) {
    throw DomainError("rel_l2_error: size mismatch");
  }
  const double denom = exact.norm();
  if (denom == 0.0) {
    throw DomainError("rel_l2_error: exact vector has zero norm");
  }
  return (approx - exact).norm() / denom;
}

// Two averaging conventions for the fixed-step and adaptive integrator
// comparisons; they are not interchangeable.

/// rel_l2_error / (n + 1), n the number of steps.
template <typename DerivedA, typename DerivedB>
double avg_rel_error(const Eigen::MatrixBase<DerivedA>& approx,
                     const Eigen::MatrixBase<DerivedB>& exact, int n) {
  return rel_l2_error(approx, exact) / static_cast<double>(n + 1);
}

/// ||approx - exact|| / (||approx|| * len).
template <typename DerivedA, typename DerivedB>
double avg_rel_error_by_length(const Eigen::MatrixBase<DerivedA>& approx,
                               const Eigen::MatrixBase<DerivedB>& exact) {
  if (approx.size() != exact.size()) {
    throw DomainError("avg_rel_error_by_length: size mismatch");
  }
  const double denom = approx.norm() * static_cast<double>(approx.size());
  if (denom == 0.0) {
    throw DomainError("avg_rel_error_by_length: zero denominator");
  }
  return (approx - exact).norm() / denom;
}

/// Dense LU with partial pivoting; throws when the factorization is singular.
Vector solve_dense(const Matrix& a, const Vector& rhs);

}  // namespace invlab
