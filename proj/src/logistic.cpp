#include "invlab/logistic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace invlab {

namespace {

constexpr double kExpGuard = 700.0;

// Model value and derivatives with respect to (r, K) at one time.
struct Jet {
  double p = 0.0;
  double p_r = 0.0, p_K = 0.0;
  double p_rr = 0.0, p_rK = 0.0, p_KK = 0.0;
};

Jet logistic_jet(double t, const LogisticParams& q) {
  Jet j;
  const double tau = t - q.t0;
  const double x = q.r * tau;
  if (x > kExpGuard) {
    j.p = q.K;
    return j;
  }
  const double E = std::exp(x);
  const double D = q.K - q.p0 + q.p0 * E;
  const double D2 = D * D;
  const double D3 = D2 * D;
  const double km = q.K - q.p0;
  j.p = q.K * q.p0 * E / D;
  j.p_r = q.K * q.p0 * tau * km * E / D2;
  j.p_K = q.p0 * q.p0 * E * (E - 1.0) / D2;
  j.p_rr = q.K * q.p0 * km * tau * tau * E * (km - q.p0 * E) / D3;
  j.p_rK = q.p0 * tau * E * ((2.0 * q.K - q.p0) * D - 2.0 * q.K * km) / D3;
  j.p_KK = -2.0 * q.p0 * q.p0 * E * (E - 1.0) / D3;
  return j;
}

struct SplitView {
  Eigen::Index begin = 0;
  Eigen::Index count = 0;
};

SplitView split_view(const LogisticDataset& data, Split split) {
  const Eigen::Index m = data.series.size();
  const Eigen::Index n_train = data.train_size();
  switch (split) {
    case Split::train: return {0, n_train};
    case Split::test: return {n_train, m - n_train};
    case Split::all: return {0, m};
  }
  return {0, m};
}

double split_scale(const LogisticDataset& data, const SplitView& v) {
  if (v.count == 0) throw DomainError("normalized_loss: empty data split");
  const double peak = data.series.values.segment(v.begin, v.count).cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw DomainError("normalized_loss: split has zero magnitude");
  return 1.0 / (static_cast<double>(v.count) * peak * peak);
}

int dim(FitMode mode) { return mode == FitMode::r_only ? 1 : 2; }

void check_theta(const Vector& theta, FitMode mode) {
  if (theta.size() != dim(mode)) {
    throw DomainError("logistic: parameter vector has size " + std::to_string(theta.size()) +
                      ", mode " + to_string(mode) + " expects " + std::to_string(dim(mode)));
  }
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(pct >= 0.0 && pct <= 1.0)) throw DomainError("NoiseSpec: pct must lie in [0, 1]");
  if (kind == NoiseKind::awgn_snr && !std::isfinite(snr)) {
    throw DomainError("NoiseSpec: snr must be finite");
  }
}

Eigen::Index LogisticDataset::train_size() const {
  const Eigen::Index m = series.size();
  const auto n = static_cast<Eigen::Index>(std::ceil(train_fraction * static_cast<double>(m)));
  return std::clamp<Eigen::Index>(n, std::min<Eigen::Index>(1, m), m);
}

TimeSeries LogisticDataset::train() const {
  const Eigen::Index n = train_size();
  return TimeSeries(series.times.head(n), series.values.head(n));
}

TimeSeries LogisticDataset::test() const {
  const Eigen::Index n = series.size() - train_size();
  return TimeSeries(series.times.tail(n), series.values.tail(n));
}

double logistic_exact(double t, const LogisticParams& p) {
  const double x = p.r * (t - p.t0);
  if (x > kExpGuard) return p.K;
  const double E = std::exp(x);
  return p.K * p.p0 * E / (p.K - p.p0 + p.p0 * E);
}

double logistic_rhs(double /*t*/, double y, const LogisticParams& p) {
  return p.r * y * (1.0 - y / p.K);
}

TimeSeries analytic_r_series(const TimeSeries& data, double K, double p0, double t0) {
  Vector r(data.size());
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double dt = data.times(i) - t0;
    if (dt == 0.0) throw DomainError("analytic_r_series: sample at t0 has no defined rate");
    const double arg = data.values(i) * (K - p0) / (p0 * (K - data.values(i)));
    if (!(arg > 0.0) || !std::isfinite(arg)) {
      throw DomainError("analytic_r_series: logarithm argument not positive at sample " +
                        std::to_string(i));
    }
    r(i) = std::log(arg) / dt;
  }
  return TimeSeries(data.times, r);
}

double analytic_r_reconstruction_error(const TimeSeries& data, const TimeSeries& rates,
                                       double K, double p0, double t0) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double p = logistic_exact(data.times(i), {rates.values(i), K, p0, t0});
    worst = std::max(worst, std::abs(p - data.values(i)) / std::abs(data.values(i)));
  }
  return worst;
}

LogisticParams params_from_vector(const Vector& theta, FitMode mode,
                                  const LogisticParams& known) {
  check_theta(theta, mode);
  LogisticParams p = known;
  p.r = theta(0);
  if (mode == FitMode::r_and_K) p.K = theta(1);
  if (mode == FitMode::r_and_logK) p.K = std::exp(theta(1));
  return p;
}

Vector vector_from_params(const LogisticParams& p, FitMode mode) {
  switch (mode) {
    case FitMode::r_only: return Vector::Constant(1, p.r);
    case FitMode::r_and_K: return Vector{{p.r, p.K}};
    case FitMode::r_and_logK: return Vector{{p.r, std::log(p.K)}};
  }
  return Vector();
}

double normalized_loss(const Vector& theta, const LogisticDataset& data, FitMode mode,
                       const LogisticParams& known, Split split) {
  const LogisticParams q = params_from_vector(theta, mode, known);
  const SplitView v = split_view(data, split);
  const double c = split_scale(data, v);
  double sum = 0.0;
  for (Eigen::Index i = v.begin; i < v.begin + v.count; ++i) {
    const double p = logistic_exact(data.series.times(i), q);
    if (!std::isfinite(p)) return kDivergenceSentinel;
    const double d = p - data.series.values(i);
    sum += d * d;
  }
  const double loss = c * sum;
  return std::isfinite(loss) ? loss : kDivergenceSentinel;
}

namespace {

// Gradient and Hessian in the optimizer's coordinates.
void loss_derivatives(const Vector& theta, const LogisticDataset& data, FitMode mode,
                      const LogisticParams& known, Split split, Vector* grad, Matrix* hess) {
  const LogisticParams q = params_from_vector(theta, mode, known);
  const SplitView v = split_view(data, split);
  const double c = split_scale(data, v);
  const int n = dim(mode);
  Vector g = Vector::Zero(n);
  Matrix h = Matrix::Zero(n, n);
  for (Eigen::Index i = v.begin; i < v.begin + v.count; ++i) {
    const Jet j = logistic_jet(data.series.times(i), q);
    const double res = j.p - data.series.values(i);
    Vector dp(n);
    Matrix ddp(n, n);
    dp(0) = j.p_r;
    ddp(0, 0) = j.p_rr;
    if (mode == FitMode::r_and_K) {
      dp(1) = j.p_K;
      ddp(0, 1) = ddp(1, 0) = j.p_rK;
      ddp(1, 1) = j.p_KK;
    } else if (mode == FitMode::r_and_logK) {
      dp(1) = q.K * j.p_K;
      ddp(0, 1) = ddp(1, 0) = q.K * j.p_rK;
      ddp(1, 1) = q.K * j.p_K + q.K * q.K * j.p_KK;
    }
    g += res * dp;
    if (hess) h += dp * dp.transpose() + res * ddp;
  }
  if (grad) *grad = 2.0 * c * g;
  if (hess) *hess = 2.0 * c * h;
}

}  // namespace

Vector normalized_loss_gradient(const Vector& theta, const LogisticDataset& data,
                                FitMode mode, const LogisticParams& known, Split split) {
  Vector g;
  loss_derivatives(theta, data, mode, known, split, &g, nullptr);
  return g;
}

Matrix normalized_loss_hessian(const Vector& theta, const LogisticDataset& data,
                               FitMode mode, const LogisticParams& known, Split split) {
  Matrix h;
  loss_derivatives(theta, data, mode, known, split, nullptr, &h);
  return h;
}

LogisticDataset generate_logistic_data(const LogisticParams& params, double t_start,
                                       double t_end, int m, const NoiseSpec& noise,
                                       std::uint64_t seed) {
  if (m < 2) throw DomainError("generate_logistic_data: m must be >= 2");
  noise.validate();
  const Grid1D grid(t_start, t_end, m - 1);
  Vector t = grid.points();
  Vector p(m);
  for (int i = 0; i < m; ++i) p(i) = logistic_exact(t(i), params);

  double sigma = 0.0;
  if (noise.kind == NoiseKind::gaussian_pct_of_max) {
    sigma = noise.pct * p.cwiseAbs().maxCoeff();
  } else if (noise.kind == NoiseKind::awgn_snr) {
    const double signal_power = p.squaredNorm() / m;
    sigma = std::sqrt(signal_power / std::pow(10.0, noise.snr / 10.0));
  }
  if (noise.kind != NoiseKind::none) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < m; ++i) p(i) += sigma * normal(rng);
  }
  LogisticDataset data;
  data.series = TimeSeries(std::move(t), std::move(p));
  data.noise = noise;
  return data;
}

void write_logistic_csv(const std::string& path, const TimeSeries& series) {
  std::ofstream out(path);
  if (!out) throw Error("write_logistic_csv: cannot open " + path);
  out << "time,population\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < series.size(); ++i) {
    out << series.times(i) << ',' << series.values(i) << '\n';
  }
}

TimeSeries read_logistic_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_logistic_csv: cannot open " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> t, v;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b)) {
      throw DomainError("read_logistic_csv: malformed line " + std::to_string(lineno));
    }
    try {
      t.push_back(std::stod(a));
      v.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw DomainError("read_logistic_csv: non-numeric value on line " +
                        std::to_string(lineno));
    }
  }
  const auto n = static_cast<Eigen::Index>(t.size());
  return TimeSeries(Eigen::Map<Vector>(t.data(), n), Eigen::Map<Vector>(v.data(), n));
}

void default_logistic_bounds(FitMode mode, Vector& lb, Vector& ub) {
  switch (mode) {
    case FitMode::r_only:
      lb = Vector::Constant(1, 1e-6);
      ub = Vector::Constant(1, 10.0);
      break;
    case FitMode::r_and_K:
      lb = Vector{{1e-6, 1.0}};
      ub = Vector{{10.0, 1e12}};
      break;
    case FitMode::r_and_logK:
      lb = Vector{{1e-6, 0.0}};
      ub = Vector{{10.0, std::log(1e12)}};
      break;
  }
}

OptimizerReport fit_logistic(const LogisticDataset& data, FitMode mode, FitMethod method,
                             const Vector& init, const LogisticParams& known,
                             const FitOptions& options) {
  check_theta(init, mode);
  const auto start = std::chrono::steady_clock::now();

  const auto loss = [&](const Vector& th) { return normalized_loss(th, data, mode, known); };
  const auto grad = [&](const Vector& th) {
    return normalized_loss_gradient(th, data, mode, known);
  };
  const auto hess = [&](const Vector& th) {
    return normalized_loss_hessian(th, data, mode, known);
  };
  // Hessian by central differences of the analytic gradient.
  const auto hess_fd = [&](const Vector& th) {
    const Eigen::Index n = th.size();
    Matrix h(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double step = options.fd_step * std::max(std::abs(th(j)), 1.0);
      Vector a = th, b = th;
      a(j) += step;
      b(j) -= step;
      h.col(j) = (grad(a) - grad(b)) / (2.0 * step);
    }
    return Matrix(0.5 * (h + h.transpose()));
  };

  ScalarFn fn;
  fn.f = loss;
  fn.grad = grad;

  OptimizerReport report;
  SolveOutcome out;
  out.solution = init;
  try {
    switch (method) {
      case FitMethod::newton:
      case FitMethod::newton_fd:
        if (mode == FitMode::r_only) {
          const auto d1 = [&](double r) { return grad(Vector::Constant(1, r))(0); };
          std::function<double(double)> d2;
          if (method == FitMethod::newton) {
            d2 = [&](double r) { return hess(Vector::Constant(1, r))(0, 0); };
          } else {
            d2 = [&](double r) { return hess_fd(Vector::Constant(1, r))(0, 0); };
          }
          out = newton_root(d1, d2, init(0), options.n_max, options.tol);
        } else if (method == FitMethod::newton) {
          out = newton_system(grad, hess, init, options.n_max, options.tol);
        } else {
          out = newton_system(grad, hess_fd, init, options.n_max, options.tol);
        }
        break;
      case FitMethod::secant: {
        if (mode != FitMode::r_only) {
          throw DomainError("fit_logistic: secant supports the r_only mode only");
        }
        const auto d1 = [&](double r) { return grad(Vector::Constant(1, r))(0); };
        out = secant_root(d1, init(0), init(0) + options.secant_offset, options.n_max,
                          options.tol);
        break;
      }
      case FitMethod::steepest:
        out = steepest_descent(fn, init, options.n_max, options.tol);
        break;
      case FitMethod::bfgs:
        out = bfgs_minimize(fn, init, options.n_max, options.tol);
        break;
      case FitMethod::box: {
        Vector lb = options.lb, ub = options.ub;
        if (lb.size() == 0 || ub.size() == 0) default_logistic_bounds(mode, lb, ub);
        out = box_minimize(fn, init, lb, ub, options.n_max, options.tol);
        break;
      }
    }
  } catch (const DomainError&) {
    throw;
  } catch (const Error& e) {
    out.converged = false;
    out.message = e.what();
    if (!out.trace.empty()) out.solution = out.trace.back().x;
  }

  const Vector& th = out.solution;
  const LogisticParams hat = params_from_vector(th, mode, known);
  report.params_hat = mode == FitMode::r_only ? Vector::Constant(1, hat.r)
                                              : Vector{{hat.r, hat.K}};
  report.feval = th.allFinite() ? normalized_loss(th, data, mode, known, Split::train)
                                : kDivergenceSentinel;
  report.interp_error = report.feval;
  report.extrap_error = th.allFinite() && data.train_size() < data.series.size()
                            ? normalized_loss(th, data, mode, known, Split::test)
                            : std::numeric_limits<double>::quiet_NaN();
  if (options.truth) {
    const Vector truth = mode == FitMode::r_only ? Vector::Constant(1, options.truth->r)
                                                 : Vector{{options.truth->r, options.truth->K}};
    report.rel_errors = ((report.params_hat - truth).array().abs() / truth.array().abs()).matrix();
  }
  report.iterations = out.iterations;
  report.evaluations = out.evaluations;
  report.converged = out.converged;
  report.message = out.message;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::string to_string(FitMode m) {
  switch (m) {
    case FitMode::r_only: return "r_only";
    case FitMode::r_and_K: return "r_and_K";
    case FitMode::r_and_logK: return "r_and_logK";
  }
  return "?";
}

std::string to_string(FitMethod m) {
  switch (m) {
    case FitMethod::newton: return "newton";
    case FitMethod::newton_fd: return "newton_fd";
    case FitMethod::secant: return "secant";
    case FitMethod::steepest: return "steepest";
    case FitMethod::bfgs: return "bfgs";
    case FitMethod::box: return "box";
  }
  return "?";
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::none: return "none";
    case NoiseKind::awgn_snr: return "awgn_snr";
    case NoiseKind::gaussian_pct_of_max: return "gaussian_pct_of_max";
  }
  return "?";
}

FitMode fit_mode_from_string(const std::string& s) {
  for (auto m : {FitMode::r_only, FitMode::r_and_K, FitMode::r_and_logK}) {
    if (to_string(m) == s) return m;
  }
  throw DomainError("unknown fit mode '" + s + "'");
}

FitMethod fit_method_from_string(const std::string& s) {
  for (auto m : {FitMethod::newton, FitMethod::newton_fd, FitMethod::secant,
                 FitMethod::steepest, FitMethod::bfgs, FitMethod::box}) {
    if (to_string(m) == s) return m;
  }
  throw DomainError("unknown fit method '" + s + "'");
}

NoiseKind noise_kind_from_string(const std::string& s) {
  for (auto k : {NoiseKind::none, NoiseKind::awgn_snr, NoiseKind::gaussian_pct_of_max}) {
    if (to_string(k) == s) return k;
  }
  throw DomainError("unknown noise kind '" + s + "'");
}

}  // namespace invlab
