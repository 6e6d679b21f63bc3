#pragma once

// Root finding and minimization: Newton, secant, steepest descent, BFGS,
// projected quasi-Newton for box bounds, Adam and L-BFGS.

#include "invlab/core.hpp"

#include <functional>
#include <string>
#include <vector>

namespace invlab {

/// Objective with optional analytic gradient.
struct ScalarFn {
  std::function<double(const Vector&)> f;
  std::function<Vector(const Vector&)> grad;                 // optional
  std::function<double(const Vector&, Vector&)> value_grad;  // optional, fills gradient
  double fd_step = 1e-6;  // central-difference step when no gradient is supplied

  /// f(x), with non-finite values mapped to kDivergenceSentinel.
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  double value_and_gradient(const Vector& x, Vector& g) const;
};

struct IterationRecord {
  int iteration = 0;
  Vector x;
  double f = 0.0;
  double step = 0.0;  // relative step or line-search length, per method
};

struct SolveOutcome {
  Vector solution;
  int iterations = 0;
  bool converged = false;
  double f_final = 0.0;
  int evaluations = 0;
  std::string message;
  std::vector<IterationRecord> trace;
};

/// Summary row for a parameter-recovery run.
struct OptimizerReport {
  Vector params_hat;
  Vector rel_errors;  // empty unless ground truth was supplied
  double feval = 0.0;
  double interp_error = 0.0;
  double extrap_error = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
  double wall_time_s = 0.0;
};

struct ArmijoParams {
  double alpha0 = 1.0;
  double beta = 0.5;
  double c = 0.1;
  int max_backtracks = 60;

  void validate() const;
};

class LineSearchError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

/// Component i = (f(x + h e_i) - f(x - h e_i)) / (2h).
Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                        double h = 1e-6);

/// Scalar Newton iteration. Stops on |dx|/|x| < tol.
SolveOutcome newton_root(const std::function<double(double)>& f,
                         const std::function<double(double)>& df, double x0,
                         int n_max = 200, double tol = 1e-8);

/// Newton iteration for grad(x) = 0 given the Hessian. Stops on ||dx||/||x|| < tol.
SolveOutcome newton_system(const std::function<Vector(const Vector&)>& grad,
                           const std::function<Matrix(const Vector&)>& hess,
                           const Vector& x0, int n_max = 200, double tol = 1e-8);

SolveOutcome secant_root(const std::function<double(double)>& f, double x0, double x1,
                         int n_max = 200, double tol = 1e-8);

/// Largest alpha0*beta^k with f(x - alpha g) <= f(x) - c alpha ||g||^2.
double armijo_line_search(const ScalarFn& f, const Vector& x, const Vector& g,
                          const ArmijoParams& params = {});

SolveOutcome steepest_descent(const ScalarFn& f, const Vector& x0, int n_max = 200,
                              double tol = 1e-8, const ArmijoParams& params = {});

SolveOutcome bfgs_minimize(const ScalarFn& f, const Vector& x0, int n_max = 200,
                           double tol = 1e-8);

SolveOutcome box_minimize(const ScalarFn& f, const Vector& x0, const Vector& lb,
                          const Vector& ub, int n_max = 200, double tol = 1e-8);

struct AdamOptions {
  double lr = 1e-3;
  int epochs = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Single Adam update state, reusable inside custom training loops.
class AdamStepper {
 public:
  AdamStepper(Eigen::Index n, const AdamOptions& options);
  void step(Vector& theta, const Vector& grad);
  int steps_taken() const { return t_; }

 private:
  AdamOptions opt_;
  Vector m_;
  Vector v_;
  int t_ = 0;
};

/// Returns false to stop early.
using EpochCallback = std::function<bool(int epoch, double loss, const Vector& theta)>;

/// `fg` returns the loss and writes the gradient. trace holds one record per epoch.
SolveOutcome adam(const std::function<double(const Vector&, Vector&)>& fg,
                  const Vector& theta0, const AdamOptions& options,
                  const EpochCallback& on_epoch = {});

struct LbfgsOptions {
  int memory = 10;
  int n_max = 200;
  double tol = 1e-8;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 30;
};

SolveOutcome lbfgs(const ScalarFn& f, const Vector& x0, const LbfgsOptions& options = {},
                   const EpochCallback& on_iteration = {});

}  // namespace invlab
