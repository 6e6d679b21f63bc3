#include "invlab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace invlab {

namespace {

double rel_step(const Vector& x_new, const Vector& x_old) {
  const double d = (x_new - x_old).norm();
  const double n = x_old.norm();
  return n > 0.0 ? d / n : d;
}

double rel_step(double x_new, double x_old) {
  const double d = std::abs(x_new - x_old);
  return x_old != 0.0 ? d / std::abs(x_old) : d;
}

}  // namespace

// ---------------------------------------------------------------------------

double ScalarFn::value(const Vector& x) const {
  const double v = f(x);
  return std::isfinite(v) ? v : kDivergenceSentinel;
}

Vector ScalarFn::gradient(const Vector& x) const {
  if (grad) return grad(x);
  if (value_grad) {
    Vector g;
    value_grad(x, g);
    return g;
  }
  return numeric_gradient([this](const Vector& z) { return value(z); }, x, fd_step);
}

double ScalarFn::value_and_gradient(const Vector& x, Vector& g) const {
  if (value_grad) {
    const double v = value_grad(x, g);
    return std::isfinite(v) ? v : kDivergenceSentinel;
  }
  g = gradient(x);
  return value(x);
}

void ArmijoParams::validate() const {
  if (!(c > 0.0 && c < 1.0)) throw DomainError("ArmijoParams: c must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("ArmijoParams: beta must lie in (0, 1)");
  if (!(alpha0 > 0.0)) throw DomainError("ArmijoParams: alpha0 must be positive");
}

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                        double h) {
  if (!(h > 0.0)) throw DomainError("numeric_gradient: h must be positive");
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NonFiniteError("numeric_gradient: non-finite evaluation at coordinate " +
                           std::to_string(i));
    }
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------

SolveOutcome newton_root(const std::function<double(double)>& f,
                         const std::function<double(double)>& df, double x0, int n_max,
                         double tol) {
  if (!(tol > 0.0)) throw DomainError("newton_root: tol must be positive");
  SolveOutcome out;
  double x = x0;
  double err = 1.0 + tol;
  for (int k = 1; k <= n_max; ++k) {
    const double fx = f(x);
    ++out.evaluations;
    if (fx == 0.0) {  // landed exactly on a root
      err = 0.0;
      break;
    }
    const double dfx = df(x);
    if (!(std::abs(dfx) > 1e-300)) {
      throw ConvergenceError("newton_root: derivative vanished at x=" + std::to_string(x));
    }
    const double x_new = x - fx / dfx;
    err = rel_step(x_new, x);
    x = x_new;
    out.iterations = k;
    out.trace.push_back({k, Vector::Constant(1, x), fx, err});
    if (!std::isfinite(x)) break;
    if (err < tol) break;
  }
  out.solution = Vector::Constant(1, x);
  out.converged = err < tol && std::isfinite(x);
  out.f_final = std::isfinite(x) ? f(x) : std::numeric_limits<double>::quiet_NaN();
  if (!out.converged) out.message = "No convergence";
  return out;
}

SolveOutcome newton_system(const std::function<Vector(const Vector&)>& grad,
                           const std::function<Matrix(const Vector&)>& hess,
                           const Vector& x0, int n_max, double tol) {
  if (!(tol > 0.0)) throw DomainError("newton_system: tol must be positive");
  SolveOutcome out;
  Vector x = x0;
  double err = 1.0 + tol;
  for (int k = 1; k <= n_max; ++k) {
    const Vector g = grad(x);
    ++out.evaluations;
    if (g.isZero(0.0)) {
      err = 0.0;
      break;
    }
    Vector dx;
    try {
      dx = solve_dense(hess(x), g);
    } catch (const SingularMatrixError&) {
      out.message = "singular Hessian";
      break;
    }
    const Vector x_new = x - dx;
    err = rel_step(x_new, x);
    x = x_new;
    out.iterations = k;
    out.trace.push_back({k, x, g.norm(), err});
    if (!x.allFinite() || err < tol) break;
  }
  out.solution = x;
  out.converged = err < tol && x.allFinite();
  out.f_final = x.allFinite() ? grad(x).norm() : std::numeric_limits<double>::quiet_NaN();
  if (!out.converged && out.message.empty()) out.message = "No convergence";
  return out;
}

SolveOutcome secant_root(const std::function<double(double)>& f, double x0, double x1,
                         int n_max, double tol) {
  if (!(tol > 0.0)) throw DomainError("secant_root: tol must be positive");
  if (x0 == x1) throw DomainError("secant_root: starting points must differ");
  SolveOutcome out;
  double x_prev = x0;
  double x = x1;
  double f_prev = f(x_prev);
  double fx = f(x);
  out.evaluations = 2;
  double err = 1.0 + tol;
  for (int k = 1; k <= n_max; ++k) {
    if (fx == 0.0) {
      err = 0.0;
      break;
    }
    const double denom = fx - f_prev;
    if (!(std::abs(denom) > 1e-300)) {
      throw ConvergenceError("secant_root: flat secant at x=" + std::to_string(x));
    }
    const double x_new = x - fx * (x - x_prev) / denom;
    err = rel_step(x_new, x);
    x_prev = x;
    f_prev = fx;
    x = x_new;
    out.iterations = k;
    out.trace.push_back({k, Vector::Constant(1, x), f_prev, err});
    if (!std::isfinite(x) || err < tol) break;
    fx = f(x);
    ++out.evaluations;
  }
  out.solution = Vector::Constant(1, x);
  out.converged = err < tol && std::isfinite(x);
  out.f_final = std::isfinite(x) ? f(x) : std::numeric_limits<double>::quiet_NaN();
  if (!out.converged) out.message = "No convergence";
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Backtracks along x - alpha*d, requiring f <= fx - c*alpha*slope.
double backtrack(const ScalarFn& f, const Vector& x, double fx, const Vector& d,
                 double slope, const ArmijoParams& p, int& evals) {
  double alpha = p.alpha0;
  for (int k = 0; k <= p.max_backtracks; ++k) {
    const double trial = f.value(x - alpha * d);
    ++evals;
    if (trial <= fx - p.c * alpha * slope) return alpha;
    alpha *= p.beta;
  }
  throw LineSearchError("Armijo line search: no sufficient decrease after " +
                        std::to_string(p.max_backtracks) + " backtracks");
}

}  // namespace

double armijo_line_search(const ScalarFn& f, const Vector& x, const Vector& g,
                          const ArmijoParams& params) {
  params.validate();
  int evals = 0;
  return backtrack(f, x, f.value(x), g, g.squaredNorm(), params, evals);
}

SolveOutcome steepest_descent(const ScalarFn& f, const Vector& x0, int n_max, double tol,
                              const ArmijoParams& params) {
  if (!(tol > 0.0)) throw DomainError("steepest_descent: tol must be positive");
  params.validate();
  SolveOutcome out;
  Vector x = x0;
  double fx = f.value(x);
  out.evaluations = 1;
  double err = 1.0 + tol;
  int iter = 1;
  while (iter < n_max && err >= tol) {
    const Vector g = f.gradient(x);
    const double alpha = backtrack(f, x, fx, g, g.squaredNorm(), params, out.evaluations);
    const Vector x_new = x - alpha * g;
    err = rel_step(x_new, x);
    x = x_new;
    fx = f.value(x);
    ++out.evaluations;
    out.trace.push_back({iter, x, fx, err});
    ++iter;
  }
  out.iterations = iter - 1;
  out.solution = x;
  out.f_final = fx;
  out.converged = err < tol;
  if (!out.converged) out.message = "No convergence";
  return out;
}

// ---------------------------------------------------------------------------

SolveOutcome bfgs_minimize(const ScalarFn& f, const Vector& x0, int n_max, double tol) {
  const double inf = std::numeric_limits<double>::infinity();
  return box_minimize(f, x0, Vector::Constant(x0.size(), -inf),
                      Vector::Constant(x0.size(), inf), n_max, tol);
}

SolveOutcome box_minimize(const ScalarFn& f, const Vector& x0, const Vector& lb,
                          const Vector& ub, int n_max, double tol) {
  const Eigen::Index n = x0.size();
  if (lb.size() != n || ub.size() != n) throw DomainError("box_minimize: bound size mismatch");
  if (!(tol > 0.0)) throw DomainError("box_minimize: tol must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(lb(i) <= x0(i) && x0(i) <= ub(i))) {
      throw DomainError("box_minimize: infeasible start at coordinate " + std::to_string(i));
    }
  }
  const ArmijoParams armijo;
  const auto project = [&](const Vector& z) { return z.cwiseMax(lb).cwiseMin(ub); };
  // Coordinates pinned at a bound with the gradient pointing outward.
  const auto active = [&](const Vector& z, const Vector& g, Eigen::Index i) {
    return (z(i) <= lb(i) && g(i) > 0.0) || (z(i) >= ub(i) && g(i) < 0.0);
  };

  SolveOutcome out;
  Vector x = x0;
  double fx = f.value(x);
  Vector g = f.gradient(x);
  out.evaluations = 1;
  Matrix H = Matrix::Identity(n, n);
  bool scaled = false;

  const auto projected_grad_norm = [&]() {
    double m = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!active(x, g, i)) m = std::max(m, std::abs(g(i)));
    }
    return m;
  };

  for (int k = 1; k <= n_max; ++k) {
    if (projected_grad_norm() < tol) {
      out.converged = true;
      break;
    }

    Vector d = Vector::Zero(n);
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!active(x, g, i)) free.push_back(i);
    }
    for (Eigen::Index a : free) {
      for (Eigen::Index b : free) d(a) += H(a, b) * g(b);
    }

    // Projected Armijo search; falls back to the gradient direction once.
    auto search = [&](const Vector& dir, double& alpha, Vector& x_trial, double& f_trial) {
      alpha = armijo.alpha0;
      for (int j = 0; j <= armijo.max_backtracks; ++j) {
        x_trial = project(x - alpha * dir);
        f_trial = f.value(x_trial);
        ++out.evaluations;
        if (f_trial <= fx - armijo.c * g.dot(x - x_trial)) return true;
        alpha *= armijo.beta;
      }
      return false;
    };

    double alpha = 0.0;
    double f_new = 0.0;
    Vector x_new;
    if (!(g.dot(d) > 0.0) || !search(d, alpha, x_new, f_new)) {
      H.setIdentity();
      scaled = false;
      d = g;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (active(x, g, i)) d(i) = 0.0;
      }
      if (!search(d, alpha, x_new, f_new)) {
        throw LineSearchError("box_minimize: line search failed along the gradient");
      }
    }

    const Vector g_new = f.gradient(x_new);
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (!scaled) {
        H = Matrix::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Vector Hy = H * y;
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded.
      H += rho * ((1.0 + rho * y.dot(Hy)) * (s * s.transpose()) - Hy * s.transpose() -
                  s * Hy.transpose());
    }

    const double err = rel_step(x_new, x);
    x = x_new;
    fx = f_new;
    g = g_new;
    out.iterations = k;
    out.trace.push_back({k, x, fx, err});
    if (err < tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged && projected_grad_norm() < tol) out.converged = true;
  out.solution = x;
  out.f_final = fx;
  if (!out.converged) out.message = "No convergence";
  return out;
}

// ---------------------------------------------------------------------------

AdamStepper::AdamStepper(Eigen::Index n, const AdamOptions& options)
    : opt_(options), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {
  if (!(opt_.lr > 0.0)) throw DomainError("adam: lr must be positive");
}

void AdamStepper::step(Vector& theta, const Vector& grad) {
  ++t_;
  m_ = opt_.beta1 * m_ + (1.0 - opt_.beta1) * grad;
  v_ = opt_.beta2 * v_ + (1.0 - opt_.beta2) * grad.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(opt_.beta1, t_);
  const double bc2 = 1.0 - std::pow(opt_.beta2, t_);
  theta.array() -= opt_.lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + opt_.eps);
}

SolveOutcome adam(const std::function<double(const Vector&, Vector&)>& fg,
                  const Vector& theta0, const AdamOptions& options,
                  const EpochCallback& on_epoch) {
  if (options.epochs < 1) throw DomainError("adam: epochs must be >= 1");
  AdamStepper stepper(theta0.size(), options);
  SolveOutcome out;
  Vector theta = theta0;
  Vector g(theta.size());
  out.trace.reserve(static_cast<size_t>(options.epochs));
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const double loss = fg(theta, g);
    ++out.evaluations;
    if (!std::isfinite(loss) || !g.allFinite()) {
      throw NonFiniteError("adam: non-finite loss or gradient at epoch " +
                           std::to_string(epoch));
    }
    out.trace.push_back({epoch, Vector(), loss, 0.0});
    out.f_final = loss;
    stepper.step(theta, g);
    out.iterations = epoch;
    if (on_epoch && !on_epoch(epoch, loss, theta)) break;
  }
  out.solution = theta;
  out.converged = true;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct WolfePoint {
  double alpha = 0.0;
  double f = 0.0;
  Vector g;
};

// Strong Wolfe search along p from x (bracketing + zoom with cubic steps).
bool strong_wolfe(const ScalarFn& fn, const Vector& x, double f0, double dphi0,
                  const Vector& p, double alpha_init, const LbfgsOptions& opt,
                  WolfePoint& result, int& evals) {
  auto eval = [&](double a, WolfePoint& pt) {
    pt.alpha = a;
    pt.f = fn.value_and_gradient(x + a * p, pt.g);
    if (!pt.g.allFinite()) pt.f = kDivergenceSentinel;
    ++evals;
    return pt.g.allFinite() ? pt.g.dot(p) : std::numeric_limits<double>::quiet_NaN();
  };
  auto cubic_min = [](double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (disc < 0.0) return 0.5 * (a + b);
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
  };

  WolfePoint lo{0.0, f0, Vector()};
  double dlo = dphi0;
  WolfePoint hi;
  double dhi = 0.0;
  bool bracketed = false;

  double a = alpha_init;
  WolfePoint prev = lo;
  double dprev = dphi0;
  int iter = 0;
  for (; iter < opt.max_line_search; ++iter) {
    WolfePoint cur;
    const double dcur = eval(a, cur);
    if (cur.f > f0 + opt.c1 * a * dphi0 || (iter > 0 && cur.f >= prev.f) ||
        !std::isfinite(dcur)) {
      lo = prev;
      dlo = dprev;
      hi = cur;
      dhi = std::isfinite(dcur) ? dcur : 0.0;
      bracketed = true;
      break;
    }
    if (std::abs(dcur) <= -opt.c2 * dphi0) {
      result = cur;
      return true;
    }
    if (dcur >= 0.0) {
      lo = cur;
      dlo = dcur;
      hi = prev;
      dhi = dprev;
      bracketed = true;
      break;
    }
    prev = cur;
    dprev = dcur;
    a *= 2.0;
  }
  if (!bracketed) return false;

  for (; iter < opt.max_line_search; ++iter) {
    const double left = std::min(lo.alpha, hi.alpha);
    const double right = std::max(lo.alpha, hi.alpha);
    const double width = right - left;
    if (width <= 1e-16 * std::max(1.0, right)) break;
    double trial = cubic_min(lo.alpha, lo.f, dlo, hi.alpha, hi.f, dhi);
    if (!std::isfinite(trial) || trial < left + 0.1 * width || trial > right - 0.1 * width) {
      trial = 0.5 * (left + right);
    }
    WolfePoint cur;
    const double dcur = eval(trial, cur);
    if (cur.f > f0 + opt.c1 * trial * dphi0 || cur.f >= lo.f || !std::isfinite(dcur)) {
      hi = cur;
      dhi = std::isfinite(dcur) ? dcur : 0.0;
    } else {
      if (std::abs(dcur) <= -opt.c2 * dphi0) {
        result = cur;
        return true;
      }
      if (dcur * (hi.alpha - lo.alpha) >= 0.0) {
        hi = lo;
        dhi = dlo;
      }
      lo = cur;
      dlo = dcur;
    }
  }
  // Accept a point with sufficient decrease even if curvature was not met.
  if (lo.alpha > 0.0 && lo.f < f0) {
    result = lo;
    return true;
  }
  return false;
}

}  // namespace

SolveOutcome lbfgs(const ScalarFn& f, const Vector& x0, const LbfgsOptions& options,
                   const EpochCallback& on_iteration) {
  if (options.memory < 1) throw DomainError("lbfgs: memory must be >= 1");
  SolveOutcome out;
  Vector x = x0;
  Vector g;
  double fx = f.value_and_gradient(x, g);
  out.evaluations = 1;
  std::deque<Vector> S;
  std::deque<Vector> Y;
  std::deque<double> rho;
  bool restarted = false;

  for (int k = 1; k <= options.n_max; ++k) {
    if (g.lpNorm<Eigen::Infinity>() < options.tol) {
      out.converged = true;
      break;
    }
    // Two-loop recursion.
    Vector q = g;
    const size_t m = S.size();
    std::vector<double> alpha(m);
    for (size_t i = m; i-- > 0;) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    const double gamma = m > 0 ? S.back().dot(Y.back()) / Y.back().squaredNorm() : 1.0;
    Vector p = gamma * q;
    for (size_t i = 0; i < m; ++i) {
      const double b = rho[i] * Y[i].dot(p);
      p += S[i] * (alpha[i] - b);
    }
    p = -p;
    double dphi0 = g.dot(p);
    if (!(dphi0 < 0.0)) {
      S.clear();
      Y.clear();
      rho.clear();
      p = -g;
      dphi0 = -g.squaredNorm();
    }
    const double a0 = m > 0 ? 1.0 : std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>());

    WolfePoint next;
    if (!strong_wolfe(f, x, fx, dphi0, p, a0, options, next, out.evaluations)) {
      if (restarted || m == 0) {
        out.message = "line search failed";
        break;
      }
      restarted = true;
      S.clear();
      Y.clear();
      rho.clear();
      --k;
      continue;
    }
    restarted = false;

    const Vector s = next.alpha * p;
    const Vector y = next.g - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (static_cast<int>(S.size()) == options.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
      S.push_back(s);
      Y.push_back(y);
      rho.push_back(1.0 / sy);
    }
    x += s;
    fx = next.f;
    g = next.g;
    out.iterations = k;
    out.trace.push_back({k, Vector(), fx, next.alpha});
    if (on_iteration && !on_iteration(k, fx, x)) break;
  }
  if (!out.converged && g.lpNorm<Eigen::Infinity>() < options.tol) out.converged = true;
  out.solution = x;
  out.f_final = fx;
  if (!out.converged && out.message.empty()) out.message = "No convergence";
  return out;
}

}  // namespace invlab
