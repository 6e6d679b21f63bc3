#pragma once

// Heat-equation reference schemes and the porous medium equation
// u_t = (u^beta)_xx: implicit Newton solver, explicit FTCS solver,
// Barenblatt profile and the beta-recovery objective.

#include "invlab/core.hpp"
#include "invlab/optimize.hpp"

#include <functional>
#include <string>
#include <utility>

namespace invlab {

using InitialFn = std::function<double(double x)>;
/// Dirichlet values (left, right) at time t.
using BoundaryFn = std::function<std::pair<double, double>(double t)>;

struct BarenblattParams {
  double delta = 1.0;
};

/// (t+delta)^(-1/4) * sqrt(max(0, 1 - x^2 / (12 sqrt(t+delta)))).
double barenblatt(double t, double x, const BarenblattParams& params = {});
Field2D barenblatt_field(const Grid1D& t_grid, const Grid1D& x_grid,
                         const BarenblattParams& params = {});

enum class HeatScheme { method_of_lines_rk4, forward_euler, backward_euler, crank_nicolson };

struct HeatOptions {
  // forward_euler refuses tau > h^2/2 unless this is set.
  bool allow_unstable = false;
};

/// u_t = u_xx on x_grid for t in [0, n*tau], n = round(t_end / tau).
Field2D heat_solve(HeatScheme scheme, const Vector& ic, const Grid1D& x_grid, double tau,
                   double t_end, const BoundaryFn& bc, const HeatOptions& options = {});

struct PmeConfig {
  double beta = 3.0;
  Grid1D x_grid{-1.0, 1.0, 100};
  double dt = 0.01;
  double t0 = 0.0;
  double t_end = 1.0;
  double newton_tol = 1e-6;
  int newton_max_iter = 20;
  double jac_h = 1e-6;

  void validate() const;
  Grid1D t_grid() const;
};

/// Interior residual for one implicit step. `left`/`right` are the Dirichlet values.
Vector pme_residual(const Vector& u_new, const Vector& u_old, double beta, double dt,
                    double dx, double left, double right);

/// Forward-difference Jacobian: column j = (F(u + h e_j) - F(u)) / h.
Matrix pme_jacobian_fd(const Vector& u, const std::function<Vector(const Vector&)>& residual,
                       double h = 1e-6);

struct PmeSolveStats {
  int newton_iterations = 0;  // total over all steps
  double max_final_residual = 0.0;
};

Field2D pme_solve_direct(const PmeConfig& config, const InitialFn& ic, const BoundaryFn& bc,
                         PmeSolveStats* stats = nullptr);

/// Same solver with initial row and boundary columns taken from `reference`.
Field2D pme_solve_direct_like(const PmeConfig& config, const Field2D& reference,
                              PmeSolveStats* stats = nullptr);

/// Explicit update u += dt/dx^2 * delta^2(max(u,0)^beta). Sets `diverged` on overflow.
Field2D pme_ftcs_solve(double beta, const Grid1D& x_grid, double dt, double t_end,
                       const InitialFn& ic, const BoundaryFn& bc);
Field2D pme_ftcs_solve_like(double beta, const Field2D& reference);

enum class PmeSolver { newton_implicit, ftcs };

struct PmeInverseSetup {
  PmeSolver solver = PmeSolver::newton_implicit;
  PmeConfig config;  // tolerances and Newton settings; grids come from the reference
};

/// Sum of squared differences over the full grid; 1e10 if the solver diverges.
double pme_inverse_objective(double beta, const Field2D& reference,
                             const PmeInverseSetup& setup);

/// Squared misfit restricted to rows [row_begin, row_end).
double field_misfit(const Field2D& a, const Field2D& b, int row_begin, int row_end);

enum class BetaMethod { box, bfgs, steepest };

struct BetaEstimateOptions {
  BetaMethod method = BetaMethod::box;
  double lb = 1.1;
  double ub = 10.0;
  int n_max = 200;
  double tol = 1e-8;
  double fd_step = 1e-5;
  double truth = 0.0;  // > 0 enables rel_errors
};

/// interp/extrap errors are the misfit over the first/second half of the time levels.
OptimizerReport estimate_beta(const Field2D& reference, double beta0,
                              const PmeInverseSetup& setup,
                              const BetaEstimateOptions& options = {});

/// Adds N(0, (pct * max|u|)^2) noise to every entry.
Field2D add_field_noise(const Field2D& f, double pct, std::uint64_t seed);

/// First row x coordinates, first column t, one row per time level.
void write_field_csv(const std::string& path, const Field2D& field);
Field2D read_field_csv(const std::string& path);

std::string to_string(HeatScheme s);
std::string to_string(PmeSolver s);
std::string to_string(BetaMethod m);
HeatScheme heat_scheme_from_string(const std::string& s);
PmeSolver pme_solver_from_string(const std::string& s);
BetaMethod beta_method_from_string(const std::string& s);

}  // namespace invlab
