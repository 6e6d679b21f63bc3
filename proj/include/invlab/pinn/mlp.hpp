#pragma once

// Fully connected tanh network with forward-mode input derivatives
// (u, u_t, u_x, u_xx) and a reverse pass for parameter gradients.

#include "invlab/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace invlab::pinn {

enum class OutputActivation { linear, sigmoid };

struct MlpParams {
  std::vector<Matrix> weights;  // n_out x n_in
  std::vector<Vector> biases;
  OutputActivation output = OutputActivation::linear;

  /// Layer widths, input first.
  std::vector<int> sizes() const;
  Eigen::Index num_params() const;

  /// Concatenation of (W row-major, b) per layer.
  Vector flatten() const;
  void unflatten(const Vector& theta);

  /// Same shapes, all zeros.
  MlpParams zeros_like() const;
  void validate() const;
};

/// Weights U(-sqrt(6/(n_in+n_out)), +sqrt(...)), biases zero.
MlpParams xavier_init(const std::vector<int>& sizes, std::uint64_t seed,
                      OutputActivation output = OutputActivation::linear);

/// Which input derivatives the forward pass carries.
/// `time`: u and u_t (input column 0). `space`: additionally u_x, u_xx (input column 1).
enum class JetOrder { value, time, space };

/// Per-point network output and input derivatives.
struct Jet {
  Vector u, u_t, u_x, u_xx;
};

/// Intermediate values kept for the reverse pass.
struct Tape {
  JetOrder order = JetOrder::value;
  // For each layer l: a[l] is the layer input; z[l] the pre-activation.
  std::vector<Matrix> a, a_t, a_x, a_xx;
  std::vector<Matrix> z, z_t, z_x, z_xx;
};

/// `inputs` is d x N (row 0 = t, row 1 = x when present).
Jet mlp_forward(const MlpParams& params, const Matrix& inputs, JetOrder order,
                Tape* tape = nullptr);

/// Loss sensitivities with respect to the Jet channels; unused channels may be empty.
struct JetAdjoint {
  Vector u, u_t, u_x, u_xx;
};

/// Accumulates dLoss/dparams into `grad` (which must have the shapes of `params`).
void mlp_backward(const MlpParams& params, const Tape& tape, const JetAdjoint& adj,
                  MlpParams& grad);

struct PointDerivs {
  double u = 0.0, u_t = 0.0, u_x = 0.0, u_xx = 0.0;
};

/// Single-point convenience wrapper; x is ignored for one-input networks.
PointDerivs mlp_eval_with_derivs(const MlpParams& params, double t, double x = 0.0);

std::string to_string(OutputActivation a);
OutputActivation output_activation_from_string(const std::string& s);

}  // namespace invlab::pinn
