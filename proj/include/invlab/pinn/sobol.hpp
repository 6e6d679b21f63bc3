#pragma once

// Two-dimensional Sobol points (Gray-code order, 32-bit direction numbers).

#include "invlab/core.hpp"

namespace invlab::pinn {

/// n x 2 matrix of points in [0,1)^2. Row 0 is the origin unless skipped.
Matrix sobol_2d(int n, int skip = 0);

}  // namespace invlab::pinn
