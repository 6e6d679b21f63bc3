#include "invlab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace invlab {

namespace {

void check_problem(const OdeProblem& p) {
  if (!p.rhs) throw DomainError("OdeProblem: rhs not set");
  if (!(p.t_end > p.t0)) throw DomainError("OdeProblem: requires t_end > t0");
}

}  // namespace

void AdaptiveSettings::validate() const {
  if (!(rtol >= 1e-14)) throw DomainError("AdaptiveSettings: rtol must be >= 1e-14");
  if (!(atol > 0.0)) throw DomainError("AdaptiveSettings: atol must be positive");
  if (!(h_init >= 0.0)) throw DomainError("AdaptiveSettings: h_init must be positive");
  if (!(h_min > 0.0)) throw DomainError("AdaptiveSettings: h_min must be positive");
  if (h_init > 0.0 && h_min > h_init) throw DomainError("AdaptiveSettings: h_min > h_init");
  if (max_steps < 1) throw DomainError("AdaptiveSettings: max_steps must be >= 1");
}

TimeSeries rk4_integrate(const OdeProblem& problem, int n_steps) {
  check_problem(problem);
  if (n_steps < 1) throw DomainError("rk4_integrate: n_steps must be >= 1");
  const Grid1D grid(problem.t0, problem.t_end, n_steps);
  const double h = grid.h();
  Vector t = grid.points();
  Vector y(n_steps + 1);
  y(0) = problem.y0;
  const auto& f = problem.rhs;
  for (int i = 0; i < n_steps; ++i) {
    const double ti = t(i);
    const double yi = y(i);
    const double k1 = f(ti, yi);
    const double k2 = f(ti + h / 2, yi + h * k1 / 2);
    const double k3 = f(ti + h / 2, yi + h * k2 / 2);
    const double k4 = f(ti + h, yi + h * k3);
    y(i + 1) = yi + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (!std::isfinite(k1) || !std::isfinite(k2) || !std::isfinite(k3) ||
        !std::isfinite(k4) || !std::isfinite(y(i + 1))) {
      throw NonFiniteError("rk4_integrate: non-finite state at step " + std::to_string(i + 1));
    }
  }
  return TimeSeries(std::move(t), std::move(y));
}

TimeSeries dp45_integrate(const OdeProblem& problem, const AdaptiveSettings& settings,
                          Dp45Stats* stats) {
  check_problem(problem);
  settings.validate();

  // Dormand-Prince 5(4) tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b_hat, used for the embedded error estimate.
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const auto& f = problem.rhs;
  const double span = problem.t_end - problem.t0;
  double h = settings.h_init > 0.0 ? settings.h_init : span / 100.0;
  h = std::min(h, span);

  std::vector<double> ts{problem.t0};
  std::vector<double> ys{problem.y0};
  double t = problem.t0;
  double y = problem.y0;
  double k1 = f(t, y);
  Dp45Stats local;

  int steps = 0;
  while (t < problem.t_end) {
    if (++steps > settings.max_steps) {
      throw ConvergenceError("dp45_integrate: max_steps exceeded");
    }
    bool last = false;
    if (t + h >= problem.t_end) {
      h = problem.t_end - t;
      last = true;
    }
    const double k2 = f(t + c2 * h, y + h * a21 * k1);
    const double k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const double k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = f(t + h, y_new);
    const double err =
        std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    const double tol = settings.atol + settings.rtol * std::max(std::abs(y), std::abs(y_new));

    if (!std::isfinite(y_new) || !std::isfinite(err)) {
      throw NonFiniteError("dp45_integrate: non-finite state near t=" + std::to_string(t));
    }

    const double ratio = err / tol;
    double factor = ratio > 0.0 ? 0.9 * std::pow(1.0 / ratio, 0.2) : 5.0;
    factor = std::clamp(factor, 0.2, 5.0);

    if (ratio <= 1.0) {
      t = last ? problem.t_end : t + h;
      y = y_new;
      k1 = k7;  // FSAL
      ts.push_back(t);
      ys.push_back(y);
      ++local.accepted;
      local.max_accepted_ratio = std::max(local.max_accepted_ratio, ratio);
      if (last) break;
      h *= factor;
    } else {
      ++local.rejected;
      h *= std::min(factor, 1.0);
      if (h < settings.h_min) {
        throw ConvergenceError("dp45_integrate: step size underflow near t=" +
                               std::to_string(t));
      }
    }
  }

  if (stats) *stats = local;
  return TimeSeries(Eigen::Map<Vector>(ts.data(), static_cast<Eigen::Index>(ts.size())),
                    Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(ys.size())));
}

}  // namespace invlab
