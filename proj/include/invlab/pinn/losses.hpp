#pragma once

// PINN losses for the logistic ODE (direct and inverse) and the porous
// medium equation (direct and inverse), with exact parameter gradients.

#include "invlab/core.hpp"
#include "invlab/pinn/mlp.hpp"
#include "invlab/pme.hpp"

#include <string>
#include <utility>
#include <vector>

namespace invlab::pinn {

double softplus(double x);
double softplus_inverse(double y);

/// Named loss components from the last evaluation, for reporting.
using LossTerms = std::vector<std::pair<std::string, double>>;

/// A loss over network parameters plus a few trainable scalars ("raw" values,
/// possibly mapped through softplus before use).
class PinnLoss {
 public:
  virtual ~PinnLoss() = default;

  virtual std::vector<std::string> scalar_names() const { return {}; }
  Eigen::Index num_scalars() const { return static_cast<Eigen::Index>(scalar_names().size()); }
  /// Physical values of the raw scalars.
  virtual Vector scalar_values(const Vector& raw) const { return raw; }

  /// Loss value; when g_net / g_raw are non-null they receive the gradient
  /// (g_net must be shaped like `net`). Throws NonFiniteError naming the term.
  virtual double evaluate(const MlpParams& net, const Vector& raw, MlpParams* g_net,
                          Vector* g_raw, LossTerms* terms = nullptr) const = 0;

  /// Flat-vector view: theta = [net.flatten(), raw].
  double evaluate_flat(const MlpParams& shape, const Vector& theta, Vector* grad) const;
};

/// mean (u_t - r u (1 - u/K))^2 + (u(t0) - p0)^2. With `normalized`, the
/// network represents p/K and the equation becomes u' = r u (1 - u), u(t0) = p0/K.
class LogisticDirectLoss : public PinnLoss {
 public:
  LogisticDirectLoss(double r, double K, double p0, double t0, Vector colloc, bool normalized);
  double evaluate(const MlpParams& net, const Vector& raw, MlpParams* g_net, Vector* g_raw,
                  LossTerms* terms = nullptr) const override;

 private:
  double r_, K_, p0_, t0_;
  Matrix colloc_;
  bool normalized_;
};

enum class LogisticUnknowns { r, r_and_K };

/// Direct loss plus lambda_data * mean (p(t_i) - p_i)^2 with r (raw) or
/// r and K (both through softplus) trainable.
class LogisticInverseLoss : public PinnLoss {
 public:
  LogisticInverseLoss(LogisticUnknowns unknowns, double K_known, double p0, double t0,
                      Vector colloc, TimeSeries data, double lambda_data, bool normalized);
  std::vector<std::string> scalar_names() const override;
  Vector scalar_values(const Vector& raw) const override;
  /// Raw vector for given physical (r) or (r, K).
  Vector raw_from_values(const Vector& values) const;
  double evaluate(const MlpParams& net, const Vector& raw, MlpParams* g_net, Vector* g_raw,
                  LossTerms* terms = nullptr) const override;

 private:
  LogisticUnknowns unknowns_;
  double K_known_, p0_, t0_;
  Matrix colloc_;
  TimeSeries data_;
  double lambda_data_;
  bool normalized_;
};

/// Training points on [0,1] x [-1,1]; each matrix is 2 x n with rows (t, x).
struct CollocationSets {
  Matrix interior;
  Matrix boundary;
  Vector boundary_values;
  Matrix initial;
  Vector initial_values;
  Matrix measurements;  // may be empty
  Vector measurement_values;
};

struct PmeCollocationSpec {
  int n_int = 256;
  int n_sb = 64;  // per side
  int n_tb = 64;
  int n_meas_per_axis = 0;  // tensor grid of measurements; 0 disables
  BarenblattParams barenblatt;
};

/// Sobol points mapped to the domain; boundary and initial data from Barenblatt.
CollocationSets make_pme_collocation(const PmeCollocationSpec& spec);

/// log10(lambda_u (L_b + L_t) + L_PDE + lambda_s L_meas + 1e-30), with
/// PDE residual u_t - d/dx(beta |u|^(beta-1) u_x).
class PmeLoss : public PinnLoss {
 public:
  /// beta_trainable: beta is a raw scalar initialised by the caller; otherwise fixed at `beta`.
  /// log10_output = false returns the physics sum itself.
  PmeLoss(CollocationSets sets, double beta, bool beta_trainable, double lambda_u,
          double lambda_s, bool log10_output = true);
  std::vector<std::string> scalar_names() const override;
  double evaluate(const MlpParams& net, const Vector& raw, MlpParams* g_net, Vector* g_raw,
                  LossTerms* terms = nullptr) const override;

 private:
  CollocationSets sets_;
  double beta_;
  bool beta_trainable_;
  double lambda_u_, lambda_s_;
  bool log10_output_;
};

/// Relative L2 error of the network against `exact` over the columns of `points` (d x N).
double network_rel_l2(const MlpParams& net, const Matrix& points,
                      const std::function<double(double t, double x)>& exact,
                      double output_scale = 1.0);

}  // namespace invlab::pinn
