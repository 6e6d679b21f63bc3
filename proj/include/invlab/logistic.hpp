#pragma once

// Logistic growth model: closed form, rate recovery, normalized misfit and
// parameter fitting on synthetic or imported data.

#include "invlab/core.hpp"
#include "invlab/optimize.hpp"

#include <optional>
#include <string>

namespace invlab {

struct LogisticParams {
  double r = 0.0;
  double K = 1.0;
  double p0 = 1.0;
  double t0 = 0.0;
};

enum class NoiseKind { none, awgn_snr, gaussian_pct_of_max };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double snr = 100.0 / 3.0;  // dB
  double pct = 0.03;

  void validate() const;
};

struct LogisticDataset {
  TimeSeries series;
  double train_fraction = 0.5;
  NoiseSpec noise;

  /// ceil(train_fraction * m), clamped to [1, m].
  Eigen::Index train_size() const;
  TimeSeries train() const;
  TimeSeries test() const;
};

enum class FitMode { r_only, r_and_K, r_and_logK };
enum class FitMethod { newton, newton_fd, secant, steepest, bfgs, box };
enum class Split { train, test, all };

double logistic_exact(double t, const LogisticParams& p);
double logistic_rhs(double t, double y, const LogisticParams& p);

/// r_i = ln(p_i (K - p0) / (p0 (K - p_i))) / (t_i - t0) at every sample.
TimeSeries analytic_r_series(const TimeSeries& data, double K, double p0, double t0);

/// max_i |p(t_i; r_i) - p_i| / |p_i|.
double analytic_r_reconstruction_error(const TimeSeries& data, const TimeSeries& rates,
                                       double K, double p0, double t0);

/// Maps an optimizer vector to model parameters; `known` supplies p0, t0 and K in r_only mode.
LogisticParams params_from_vector(const Vector& theta, FitMode mode, const LogisticParams& known);
Vector vector_from_params(const LogisticParams& p, FitMode mode);

/// Sum (p(t_i) - P_i)^2 / (m max|P|^2) over a split; 1e10 when the model is non-finite.
double normalized_loss(const Vector& theta, const LogisticDataset& data, FitMode mode,
                       const LogisticParams& known, Split split = Split::train);
Vector normalized_loss_gradient(const Vector& theta, const LogisticDataset& data,
                                FitMode mode, const LogisticParams& known,
                                Split split = Split::train);
Matrix normalized_loss_hessian(const Vector& theta, const LogisticDataset& data,
                               FitMode mode, const LogisticParams& known,
                               Split split = Split::train);

LogisticDataset generate_logistic_data(const LogisticParams& params, double t_start,
                                       double t_end, int m, const NoiseSpec& noise,
                                       std::uint64_t seed);

/// Two-column CSV with a `time,population` header.
void write_logistic_csv(const std::string& path, const TimeSeries& series);
TimeSeries read_logistic_csv(const std::string& path);

struct FitOptions {
  int n_max = 200;
  double tol = 1e-8;
  double secant_offset = 0.01;  // second secant start = init + offset
  double fd_step = 1e-7;        // newton_fd derivative step (relative)
  Vector lb;                    // box bounds; defaults depend on mode
  Vector ub;
  std::optional<LogisticParams> truth;
};

/// Default box bounds for the box method.
void default_logistic_bounds(FitMode mode, Vector& lb, Vector& ub);

/// params_hat holds (r) or (r, K) regardless of mode. Optimizer failures are
/// recorded in the report rather than thrown.
OptimizerReport fit_logistic(const LogisticDataset& data, FitMode mode, FitMethod method,
                             const Vector& init, const LogisticParams& known,
                             const FitOptions& options = {});

std::string to_string(FitMode m);
std::string to_string(FitMethod m);
std::string to_string(NoiseKind k);
FitMode fit_mode_from_string(const std::string& s);
FitMethod fit_method_from_string(const std::string& s);
NoiseKind noise_kind_from_string(const std::string& s);

}  // namespace invlab
