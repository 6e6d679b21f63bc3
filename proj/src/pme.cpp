#include "invlab/pme.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace invlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int step_count(double span, double dt, const char* who) {
  if (!(dt > 0.0)) throw DomainError(std::string(who) + ": time step must be positive");
  if (!(span > 0.0)) throw DomainError(std::string(who) + ": final time must exceed start");
  const long n = std::lround(span / dt);
  if (n < 1 || std::abs(static_cast<double>(n) * dt - span) > 1e-9 * std::max(1.0, span)) {
    throw DomainError(std::string(who) + ": time span is not a whole number of steps");
  }
  return static_cast<int>(n);
}

constexpr double kHeatGrowthLimit = 10.0;

void mark_diverged(Field2D& f, int from_row) {
  f.diverged = true;
  for (int k = from_row; k < f.values.rows(); ++k) f.values.row(k).setConstant(kNaN);
}

// Second difference of the full vector `u` at interior nodes, scaled by 1/h^2.
Vector laplacian_interior(const Vector& u, double h) {
  const Eigen::Index n = u.size() - 2;
  return (u.segment(0, n) - 2.0 * u.segment(1, n) + u.segment(2, n)) / (h * h);
}

}  // namespace

double barenblatt(double t, double x, const BarenblattParams& params) {
  const double s = t + params.delta;
  if (!(s > 0.0)) throw DomainError("barenblatt: requires t + delta > 0");
  const double core = 1.0 - x * x / (12.0 * std::sqrt(s));
  return std::pow(s, -0.25) * std::sqrt(std::max(0.0, core));
}

Field2D barenblatt_field(const Grid1D& t_grid, const Grid1D& x_grid,
                         const BarenblattParams& params) {
  Field2D f(t_grid, x_grid);
  for (int k = 0; k < t_grid.size(); ++k) {
    for (int i = 0; i < x_grid.size(); ++i) {
      f.values(k, i) = barenblatt(t_grid.point(k), x_grid.point(i), params);
    }
  }
  return f;
}

// ---------------------------------------------------------------------------

Field2D heat_solve(HeatScheme scheme, const Vector& ic, const Grid1D& x_grid, double tau,
                   double t_end, const BoundaryFn& bc, const HeatOptions& options) {
  if (ic.size() != x_grid.size()) throw DomainError("heat_solve: ic does not match grid");
  if (x_grid.n() < 2) throw DomainError("heat_solve: need at least one interior node");
  const int nt = step_count(t_end, tau, "heat_solve");
  const double h = x_grid.h();
  const double lam = tau / (h * h);
  if (scheme == HeatScheme::forward_euler && lam > 0.5 && !options.allow_unstable) {
    throw DomainError("heat_solve: forward Euler with tau > h^2/2 requires allow_unstable");
  }

  Field2D field(Grid1D(0.0, nt * tau, nt), x_grid);
  const Eigen::Index m = x_grid.n() - 1;  // interior unknowns
  Vector u = ic;
  {
    const auto [l, r] = bc(0.0);
    u(0) = l;
    u(m + 1) = r;
  }
  field.values.row(0) = u.transpose();
  // The exact solution obeys the maximum principle; growth well past the data
  // bound is instability, not physics.
  double bound = u.cwiseAbs().maxCoeff();

  // Implicit schemes: constant tridiagonal system.
  Vector lower, diag, upper;
  if (scheme == HeatScheme::backward_euler) {
    diag = Vector::Constant(m, 1.0 + 2.0 * lam);
    lower = upper = Vector::Constant(m - 1, -lam);
  } else if (scheme == HeatScheme::crank_nicolson) {
    diag = Vector::Constant(m, 1.0 + lam);
    lower = upper = Vector::Constant(m - 1, -0.5 * lam);
  }

  for (int k = 1; k <= nt; ++k) {
    const double t_old = (k - 1) * tau;
    const double t_new = k * tau;
    const auto [l_new, r_new] = bc(t_new);
    Vector next(m + 2);
    next(0) = l_new;
    next(m + 1) = r_new;

    switch (scheme) {
      case HeatScheme::forward_euler:
        next.segment(1, m) = u.segment(1, m) + tau * laplacian_interior(u, h);
        break;
      case HeatScheme::backward_euler: {
        Vector rhs = u.segment(1, m);
        rhs(0) += lam * l_new;
        rhs(m - 1) += lam * r_new;
        next.segment(1, m) = solve_tridiagonal(lower, diag, upper, rhs);
        break;
      }
      case HeatScheme::crank_nicolson: {
        Vector rhs = u.segment(1, m) + 0.5 * tau * laplacian_interior(u, h);
        rhs(0) += 0.5 * lam * l_new;
        rhs(m - 1) += 0.5 * lam * r_new;
        next.segment(1, m) = solve_tridiagonal(lower, diag, upper, rhs);
        break;
      }
      case HeatScheme::method_of_lines_rk4: {
        const auto [l_mid, r_mid] = bc(t_old + 0.5 * tau);
        auto rhs = [&](const Vector& interior, double left, double right) {
          Vector full(m + 2);
          full(0) = left;
          full(m + 1) = right;
          full.segment(1, m) = interior;
          return laplacian_interior(full, h);
        };
        const Vector y = u.segment(1, m);
        const Vector k1 = rhs(y, u(0), u(m + 1));
        const Vector k2 = rhs(y + 0.5 * tau * k1, l_mid, r_mid);
        const Vector k3 = rhs(y + 0.5 * tau * k2, l_mid, r_mid);
        const Vector k4 = rhs(y + tau * k3, l_new, r_new);
        next.segment(1, m) = y + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        break;
      }
    }
    bound = std::max({bound, std::abs(l_new), std::abs(r_new)});
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kHeatGrowthLimit * std::max(bound, 1e-300)) {
      mark_diverged(field, k);
      return field;
    }
    u = std::move(next);
    field.values.row(k) = u.transpose();
  }
  return field;
}

// ---------------------------------------------------------------------------

void PmeConfig::validate() const {
  if (!(beta > 0.0)) throw DomainError("PmeConfig: beta must be positive");
  if (!(newton_tol > 0.0)) throw DomainError("PmeConfig: newton_tol must be positive");
  if (newton_max_iter < 1) throw DomainError("PmeConfig: newton_max_iter must be >= 1");
  if (!(jac_h > 0.0)) throw DomainError("PmeConfig: jac_h must be positive");
  if (x_grid.n() < 2) throw DomainError("PmeConfig: need at least one interior node");
  step_count(t_end - t0, dt, "PmeConfig");
}

Grid1D PmeConfig::t_grid() const {
  return Grid1D(t0, t_end, step_count(t_end - t0, dt, "PmeConfig"));
}

Vector pme_residual(const Vector& u_new, const Vector& u_old, double beta, double dt,
                    double dx, double left, double right) {
  const Eigen::Index m = u_new.size();
  const double c = beta * dt / (dx * dx);
  const double e = beta - 1.0;
  Vector F(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ui = u_new(i);
    const double up = i + 1 < m ? u_new(i + 1) : right;
    const double um = i > 0 ? u_new(i - 1) : left;
    const double flux_p = std::pow(0.5 * (up + ui), e) * (up - ui);
    const double flux_m = std::pow(0.5 * (ui + um), e) * (ui - um);
    F(i) = ui - u_old(i) - c * (flux_p - flux_m);
  }
  return F;
}

Matrix pme_jacobian_fd(const Vector& u, const std::function<Vector(const Vector&)>& residual,
                       double h) {
  if (!(h > 0.0)) throw DomainError("pme_jacobian_fd: h must be positive");
  const Vector F0 = residual(u);
  Matrix J(F0.size(), u.size());
  Vector up = u;
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    up(j) = u(j) + h;
    J.col(j) = (residual(up) - F0) / h;
    up(j) = u(j);
  }
  return J;
}

namespace {

// Shared implicit loop; boundary values per time level are passed in.
Field2D implicit_pme(const PmeConfig& cfg, const Vector& u0, const Vector& left,
                     const Vector& right, PmeSolveStats* stats) {
  const Grid1D tg = cfg.t_grid();
  Field2D field(tg, cfg.x_grid);
  const Eigen::Index m = cfg.x_grid.n() - 1;
  const double dx = cfg.x_grid.h();
  field.values.row(0) = u0.transpose();
  Vector u = u0.segment(1, m);
  PmeSolveStats local;

  for (int k = 1; k < tg.size(); ++k) {
    const Vector u_old = u;
    const double l = left(k), r = right(k);
    const auto F = [&](const Vector& v) {
      return pme_residual(v, u_old, cfg.beta, cfg.dt, dx, l, r);
    };
    bool converged = false;
    double res_norm = kNaN;
    for (int it = 0; it < cfg.newton_max_iter; ++it) {
      const Vector Fu = F(u);
      res_norm = Fu.lpNorm<Eigen::Infinity>();
      if (!std::isfinite(res_norm)) break;
      if (res_norm < cfg.newton_tol) {
        converged = true;
        break;
      }
      Vector du;
      try {
        du = solve_dense(pme_jacobian_fd(u, F, cfg.jac_h), -Fu);
      } catch (const SingularMatrixError&) {
        res_norm = kNaN;
        break;
      }
      u += du;
      ++local.newton_iterations;
    }
    if (!converged && std::isfinite(res_norm)) {
      // Iteration cap reached: check the state actually handed on.
      res_norm = F(u).lpNorm<Eigen::Infinity>();
      if (res_norm < cfg.newton_tol) {
        converged = true;
      } else {
        field.stalled_steps.push_back(k);
      }
    }
    if (!std::isfinite(res_norm) || !u.allFinite()) {
      mark_diverged(field, k);
      break;
    }
    local.max_final_residual = std::max(local.max_final_residual, res_norm);
    field.values(k, 0) = l;
    field.values.row(k).segment(1, m) = u.transpose();
    field.values(k, m + 1) = r;
  }
  if (stats) *stats = local;
  return field;
}

}  // namespace

Field2D pme_solve_direct(const PmeConfig& config, const InitialFn& ic, const BoundaryFn& bc,
                         PmeSolveStats* stats) {
  config.validate();
  const Grid1D tg = config.t_grid();
  const Grid1D& xg = config.x_grid;
  Vector u0(xg.size());
  for (int i = 0; i < xg.size(); ++i) u0(i) = ic(xg.point(i));
  Vector left(tg.size()), right(tg.size());
  for (int k = 0; k < tg.size(); ++k) {
    const auto [l, r] = bc(tg.point(k));
    left(k) = l;
    right(k) = r;
  }
  if (!u0.allFinite() || !left.allFinite() || !right.allFinite()) {
    throw DomainError("pme_solve_direct: initial or boundary data not finite");
  }
  return implicit_pme(config, u0, left, right, stats);
}

Field2D pme_solve_direct_like(const PmeConfig& config, const Field2D& reference,
                              PmeSolveStats* stats) {
  PmeConfig cfg = config;
  cfg.x_grid = reference.x_grid;
  cfg.t0 = reference.t_grid.a();
  cfg.t_end = reference.t_grid.b();
  cfg.dt = reference.t_grid.h();
  cfg.validate();
  const Matrix& v = reference.values;
  return implicit_pme(cfg, v.row(0).transpose(), v.col(0), v.col(v.cols() - 1), stats);
}

// ---------------------------------------------------------------------------

namespace {

Field2D ftcs(double beta, const Grid1D& tg, const Grid1D& xg, const Vector& u0,
             const Vector& left, const Vector& right) {
  Field2D field(tg, xg);
  const double lam = tg.h() / (xg.h() * xg.h());
  const Eigen::Index n = xg.size();
  Vector u = u0;
  Vector w(n);
  field.values.row(0) = u.transpose();
  for (int k = 1; k < tg.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) w(i) = std::pow(std::max(u(i), 0.0), beta);
    Vector next(n);
    next.segment(1, n - 2) =
        u.segment(1, n - 2) + lam * (w.segment(0, n - 2) - 2.0 * w.segment(1, n - 2) +
                                     w.segment(2, n - 2));
    next(0) = left(k);
    next(n - 1) = right(k);
    if (!next.allFinite()) {
      mark_diverged(field, k);
      return field;
    }
    u = std::move(next);
    field.values.row(k) = u.transpose();
  }
  return field;
}

}  // namespace

Field2D pme_ftcs_solve(double beta, const Grid1D& x_grid, double dt, double t_end,
                       const InitialFn& ic, const BoundaryFn& bc) {
  if (!(beta > 0.0)) throw DomainError("pme_ftcs_solve: beta must be positive");
  if (x_grid.n() < 2) throw DomainError("pme_ftcs_solve: need at least one interior node");
  const int nt = step_count(t_end, dt, "pme_ftcs_solve");
  const Grid1D tg(0.0, nt * dt, nt);
  Vector u0(x_grid.size());
  for (int i = 0; i < x_grid.size(); ++i) u0(i) = ic(x_grid.point(i));
  Vector left(tg.size()), right(tg.size());
  for (int k = 0; k < tg.size(); ++k) {
    const auto [l, r] = bc(tg.point(k));
    left(k) = l;
    right(k) = r;
  }
  return ftcs(beta, tg, x_grid, u0, left, right);
}

Field2D pme_ftcs_solve_like(double beta, const Field2D& reference) {
  if (!(beta > 0.0)) throw DomainError("pme_ftcs_solve: beta must be positive");
  const Matrix& v = reference.values;
  return ftcs(beta, reference.t_grid, reference.x_grid, v.row(0).transpose(), v.col(0),
              v.col(v.cols() - 1));
}

// ---------------------------------------------------------------------------

double field_misfit(const Field2D& a, const Field2D& b, int row_begin, int row_end) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw DomainError("field_misfit: grid mismatch");
  }
  const int rows = row_end - row_begin;
  if (rows <= 0) return 0.0;
  return (a.values.middleRows(row_begin, rows) - b.values.middleRows(row_begin, rows))
      .squaredNorm();
}

namespace {

Field2D run_solver(double beta, const Field2D& reference, const PmeInverseSetup& setup) {
  if (setup.solver == PmeSolver::ftcs) return pme_ftcs_solve_like(beta, reference);
  PmeConfig cfg = setup.config;
  cfg.beta = beta;
  return pme_solve_direct_like(cfg, reference);
}

}  // namespace

double pme_inverse_objective(double beta, const Field2D& reference,
                             const PmeInverseSetup& setup) {
  if (setup.solver == PmeSolver::newton_implicit && !(reference.x_grid == setup.config.x_grid)) {
    throw DomainError("pme_inverse_objective: reference grid does not match solver grid");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) return kDivergenceSentinel;
  Field2D num = run_solver(beta, reference, setup);
  if (num.diverged || !num.all_finite()) return kDivergenceSentinel;
  const double j = field_misfit(num, reference, 0, static_cast<int>(reference.values.rows()));
  return std::isfinite(j) ? j : kDivergenceSentinel;
}

OptimizerReport estimate_beta(const Field2D& reference, double beta0,
                              const PmeInverseSetup& setup,
                              const BetaEstimateOptions& options) {
  if (options.method == BetaMethod::box && !(options.lb <= beta0 && beta0 <= options.ub)) {
    throw DomainError("estimate_beta: beta0 outside bounds");
  }
  const auto start = std::chrono::steady_clock::now();
  ScalarFn fn;
  fn.f = [&](const Vector& b) { return pme_inverse_objective(b(0), reference, setup); };
  fn.fd_step = options.fd_step;

  const Vector x0 = Vector::Constant(1, beta0);
  SolveOutcome out;
  out.solution = x0;
  OptimizerReport report;
  try {
    switch (options.method) {
      case BetaMethod::box:
        out = box_minimize(fn, x0, Vector::Constant(1, options.lb),
                           Vector::Constant(1, options.ub), options.n_max, options.tol);
        break;
      case BetaMethod::bfgs:
        out = bfgs_minimize(fn, x0, options.n_max, options.tol);
        break;
      case BetaMethod::steepest:
        out = steepest_descent(fn, x0, options.n_max, options.tol);
        break;
    }
  } catch (const DomainError&) {
    throw;
  } catch (const Error& e) {
    out.converged = false;
    out.message = e.what();
  }

  const double beta_hat = out.solution(0);
  report.params_hat = Vector::Constant(1, beta_hat);
  const Field2D num = run_solver(beta_hat, reference, setup);
  const int rows = static_cast<int>(reference.values.rows());
  const int mid = (rows + 1) / 2;
  if (num.diverged || !num.all_finite()) {
    report.feval = kDivergenceSentinel;
    report.interp_error = report.extrap_error = kNaN;
    out.converged = false;
    if (out.message.empty()) out.message = "forward solver diverged at the returned beta";
  } else {
    report.interp_error = field_misfit(num, reference, 0, mid);
    report.extrap_error = field_misfit(num, reference, mid, rows);
    report.feval = field_misfit(num, reference, 0, rows);
  }
  if (options.truth > 0.0) {
    report.rel_errors = Vector::Constant(1, std::abs(beta_hat - options.truth) / options.truth);
  }
  report.iterations = out.iterations;
  report.evaluations = out.evaluations;
  report.converged = out.converged;
  report.message = out.message;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Field2D add_field_noise(const Field2D& f, double pct, std::uint64_t seed) {
  Field2D g = f;
  const double sigma = pct * f.values.cwiseAbs().maxCoeff();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < g.values.rows(); ++k) {
    for (Eigen::Index i = 0; i < g.values.cols(); ++i) g.values(k, i) += sigma * normal(rng);
  }
  return g;
}

// ---------------------------------------------------------------------------

void write_field_csv(const std::string& path, const Field2D& field) {
  std::ofstream out(path);
  if (!out) throw Error("write_field_csv: cannot open " + path);
  out << std::setprecision(17) << "t\\x";
  for (int i = 0; i < field.x_grid.size(); ++i) out << ',' << field.x_grid.point(i);
  out << '\n';
  for (int k = 0; k < field.t_grid.size(); ++k) {
    out << field.t_grid.point(k);
    for (int i = 0; i < field.x_grid.size(); ++i) out << ',' << field.values(k, i);
    out << '\n';
  }
}

Field2D read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_field_csv: cannot open " + path);
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  std::getline(in, line);
  const auto head = split(line);
  if (head.size() < 3) throw DomainError("read_field_csv: header needs at least two x values");
  std::vector<double> xs;
  for (size_t i = 1; i < head.size(); ++i) xs.push_back(std::stod(head[i]));
  std::vector<double> ts;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != head.size()) throw DomainError("read_field_csv: ragged row");
    ts.push_back(std::stod(cells[0]));
    std::vector<double> row;
    for (size_t i = 1; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
    rows.push_back(std::move(row));
  }
  if (ts.size() < 2) throw DomainError("read_field_csv: need at least two time levels");
  Grid1D tg(ts.front(), ts.back(), static_cast<int>(ts.size()) - 1);
  Grid1D xg(xs.front(), xs.back(), static_cast<int>(xs.size()) - 1);
  Field2D f(tg, xg);
  for (size_t k = 0; k < rows.size(); ++k) {
    for (size_t i = 0; i < xs.size(); ++i) f.values(k, i) = rows[k][i];
  }
  f.diverged = !f.all_finite();
  return f;
}

std::string to_string(HeatScheme s) {
  switch (s) {
    case HeatScheme::method_of_lines_rk4: return "method_of_lines_rk4";
    case HeatScheme::forward_euler: return "forward_euler";
    case HeatScheme::backward_euler: return "backward_euler";
    case HeatScheme::crank_nicolson: return "crank_nicolson";
  }
  return "?";
}

std::string to_string(PmeSolver s) {
  return s == PmeSolver::ftcs ? "ftcs" : "newton_implicit";
}

std::string to_string(BetaMethod m) {
  switch (m) {
    case BetaMethod::box: return "box";
    case BetaMethod::bfgs: return "bfgs";
    case BetaMethod::steepest: return "steepest";
  }
  return "?";
}

HeatScheme heat_scheme_from_string(const std::string& s) {
  for (auto v : {HeatScheme::method_of_lines_rk4, HeatScheme::forward_euler,
                 HeatScheme::backward_euler, HeatScheme::crank_nicolson}) {
    if (to_string(v) == s) return v;
  }
  throw DomainError("unknown heat scheme '" + s + "'");
}

PmeSolver pme_solver_from_string(const std::string& s) {
  for (auto v : {PmeSolver::newton_implicit, PmeSolver::ftcs}) {
    if (to_string(v) == s) return v;
  }
  throw DomainError("unknown PME solver '" + s + "'");
}

BetaMethod beta_method_from_string(const std::string& s) {
  for (auto v : {BetaMethod::box, BetaMethod::bfgs, BetaMethod::steepest}) {
    if (to_string(v) == s) return v;
  }
  throw DomainError("unknown beta method '" + s + "'");
}

}  // namespace invlab
