#pragma once

// Scalar ODE integrators: classical RK4 and adaptive Dormand-Prince 4(5).

#include "invlab/core.hpp"

#include <functional>

namespace invlab {

struct OdeProblem {
  std::function<double(double, double)> rhs;
  double t0 = 0.0;
  double t_end = 1.0;
  double y0 = 0.0;
};

struct AdaptiveSettings {
  double rtol = 1e-6;
  double atol = 1e-9;
  double h_init = 0.0;  // 0 selects (t_end - t0) / 100
  double h_min = 1e-14;
  int max_steps = 1000000;

  void validate() const;
};

/// Counters filled in by dp45_integrate.
struct Dp45Stats {
  int accepted = 0;
  int rejected = 0;
  // Largest err / (atol + rtol*|y|) over accepted steps; <= 1 by construction.
  double max_accepted_ratio = 0.0;
};

/// n_steps uniform steps; returns n_steps + 1 samples including t0.
TimeSeries rk4_integrate(const OdeProblem& problem, int n_steps);

/// Samples at every accepted step. The last step is shortened to land on t_end.
TimeSeries dp45_integrate(const OdeProblem& problem,
                          const AdaptiveSettings& settings = {},
                          Dp45Stats* stats = nullptr);

}  // namespace invlab
