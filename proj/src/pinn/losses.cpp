#include "invlab/pinn/losses.hpp"

#include "invlab/pinn/sobol.hpp"

#include <cmath>

namespace invlab::pinn {

namespace {

void check_finite(double v, const char* loss, const char* term) {
  if (!std::isfinite(v)) {
    throw NonFiniteError(std::string(loss) + ": non-finite " + term + " term");
  }
}

Matrix as_row(const Vector& t) { return t.transpose(); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw DomainError("softplus_inverse: argument must be positive");
  return y > 30.0 ? y : std::log(std::expm1(y));
}

double PinnLoss::evaluate_flat(const MlpParams& shape, const Vector& theta, Vector* grad) const {
  const Eigen::Index np = shape.num_params();
  const Eigen::Index ns = num_scalars();
  if (theta.size() != np + ns) throw DomainError("PinnLoss: parameter vector length mismatch");
  MlpParams net = shape;
  net.unflatten(theta.head(np));
  const Vector raw = theta.tail(ns);
  if (!grad) return evaluate(net, raw, nullptr, nullptr);
  MlpParams g_net = net.zeros_like();
  Vector g_raw = Vector::Zero(ns);
  const double v = evaluate(net, raw, &g_net, &g_raw);
  grad->resize(np + ns);
  grad->head(np) = g_net.flatten();
  grad->tail(ns) = g_raw;
  return v;
}

// ---------------------------------------------------------------------------

LogisticDirectLoss::LogisticDirectLoss(double r, double K, double p0, double t0, Vector colloc,
                                       bool normalized)
    : r_(r), K_(K), p0_(p0), t0_(t0), colloc_(as_row(colloc)), normalized_(normalized) {
  if (colloc_.cols() == 0) throw DomainError("LogisticDirectLoss: empty collocation set");
  if (!(K > 0.0)) throw DomainError("LogisticDirectLoss: K must be positive");
}

double LogisticDirectLoss::evaluate(const MlpParams& net, const Vector&, MlpParams* g_net,
                                    Vector*, LossTerms* terms) const {
  const Eigen::Index n = colloc_.cols();
  const double cap = normalized_ ? 1.0 : K_;
  const double ic_target = normalized_ ? p0_ / K_ : p0_;

  Tape tape;
  const Jet j = mlp_forward(net, colloc_, JetOrder::time, g_net ? &tape : nullptr);
  const Vector R = j.u_t - r_ * j.u.cwiseProduct((1.0 - j.u.array() / cap).matrix());
  const double l_ode = R.squaredNorm() / n;
  check_finite(l_ode, "logistic direct loss", "ODE");

  Tape tape0;
  const Jet j0 = mlp_forward(net, Matrix::Constant(1, 1, t0_), JetOrder::value,
                             g_net ? &tape0 : nullptr);
  const double e0 = j0.u(0) - ic_target;
  const double l_ic = e0 * e0;
  check_finite(l_ic, "logistic direct loss", "IC");

  if (g_net) {
    JetAdjoint adj;
    adj.u_t = 2.0 * R / n;
    adj.u = adj.u_t.cwiseProduct((-r_ * (1.0 - 2.0 * j.u.array() / cap)).matrix());
    mlp_backward(net, tape, adj, *g_net);
    JetAdjoint adj0;
    adj0.u = Vector::Constant(1, 2.0 * e0);
    mlp_backward(net, tape0, adj0, *g_net);
  }
  if (terms) *terms = {{"ode", l_ode}, {"ic", l_ic}};
  return l_ode + l_ic;
}

// ---------------------------------------------------------------------------

LogisticInverseLoss::LogisticInverseLoss(LogisticUnknowns unknowns, double K_known, double p0,
                                         double t0, Vector colloc, TimeSeries data,
                                         double lambda_data, bool normalized)
    : unknowns_(unknowns),
      K_known_(K_known),
      p0_(p0),
      t0_(t0),
      colloc_(as_row(colloc)),
      data_(std::move(data)),
      lambda_data_(lambda_data),
      normalized_(normalized) {
  if (colloc_.cols() == 0) throw DomainError("LogisticInverseLoss: empty collocation set");
  if (data_.size() == 0) throw DomainError("LogisticInverseLoss: empty data set");
  if (unknowns == LogisticUnknowns::r && !(K_known > 0.0)) {
    throw DomainError("LogisticInverseLoss: K must be positive");
  }
  if (!(lambda_data >= 0.0)) throw DomainError("LogisticInverseLoss: lambda_data must be >= 0");
}

std::vector<std::string> LogisticInverseLoss::scalar_names() const {
  if (unknowns_ == LogisticUnknowns::r) return {"r"};
  return {"r", "K"};
}

Vector LogisticInverseLoss::scalar_values(const Vector& raw) const {
  if (unknowns_ == LogisticUnknowns::r) return raw;
  return Vector{{softplus(raw(0)), softplus(raw(1))}};
}

Vector LogisticInverseLoss::raw_from_values(const Vector& values) const {
  if (unknowns_ == LogisticUnknowns::r) return values.head(1);
  return Vector{{softplus_inverse(values(0)), softplus_inverse(values(1))}};
}

double LogisticInverseLoss::evaluate(const MlpParams& net, const Vector& raw, MlpParams* g_net,
                                     Vector* g_raw, LossTerms* terms) const {
  const bool two = unknowns_ == LogisticUnknowns::r_and_K;
  if (raw.size() != (two ? 2 : 1)) throw DomainError("LogisticInverseLoss: wrong scalar count");
  const double r = two ? softplus(raw(0)) : raw(0);
  const double K = two ? softplus(raw(1)) : K_known_;
  const double dr = two ? sigmoid(raw(0)) : 1.0;  // dr/draw
  const double dK = two ? sigmoid(raw(1)) : 0.0;
  const Eigen::Index n = colloc_.cols();
  const Eigen::Index m = data_.size();

  // ODE residual: u_t - r u (1 - u/c), c = K (raw) or 1 (normalized).
  Tape tape;
  const Jet j = mlp_forward(net, colloc_, JetOrder::time, g_net ? &tape : nullptr);
  const double c = normalized_ ? 1.0 : K;
  const Vector growth = j.u.cwiseProduct((1.0 - j.u.array() / c).matrix());
  const Vector R = j.u_t - r * growth;
  const double l_ode = R.squaredNorm() / n;
  check_finite(l_ode, "logistic inverse loss", "ODE");

  // Initial condition.
  Tape tape0;
  const Jet j0 = mlp_forward(net, Matrix::Constant(1, 1, t0_), JetOrder::value,
                             g_net ? &tape0 : nullptr);
  const double ic_target = normalized_ ? p0_ / K : p0_;
  const double e0 = j0.u(0) - ic_target;
  const double l_ic = e0 * e0;
  check_finite(l_ic, "logistic inverse loss", "IC");

  // Data misfit in population units.
  Tape tape_d;
  const Jet jd = mlp_forward(net, as_row(data_.times), JetOrder::value,
                             g_net ? &tape_d : nullptr);
  const double scale = normalized_ ? K : 1.0;
  const Vector ed = scale * jd.u - data_.values;
  const double l_data = ed.squaredNorm() / m;
  check_finite(l_data, "logistic inverse loss", "data");

  if (g_net) {
    JetAdjoint adj;
    adj.u_t = 2.0 * R / n;
    adj.u = adj.u_t.cwiseProduct((-r * (1.0 - 2.0 * j.u.array() / c)).matrix());
    mlp_backward(net, tape, adj, *g_net);
    JetAdjoint adj0;
    adj0.u = Vector::Constant(1, 2.0 * e0);
    mlp_backward(net, tape0, adj0, *g_net);
    JetAdjoint adjd;
    adjd.u = (2.0 * lambda_data_ * scale / m) * ed;
    mlp_backward(net, tape_d, adjd, *g_net);
  }
  if (g_raw) {
    g_raw->setZero(raw.size());
    const Vector dR = 2.0 * R / n;
    (*g_raw)(0) = -dR.dot(growth) * dr;
    if (two) {
      double gK = 0.0;
      if (!normalized_) {
        gK -= dR.dot(j.u.cwiseAbs2()) * r / (K * K);
      } else {
        gK += 2.0 * e0 * p0_ / (K * K);
        gK += 2.0 * lambda_data_ / m * ed.dot(jd.u);
      }
      (*g_raw)(1) = gK * dK;
    }
  }
  if (terms) *terms = {{"ode", l_ode}, {"ic", l_ic}, {"data", l_data}};
  return l_ode + l_ic + lambda_data_ * l_data;
}

// ---------------------------------------------------------------------------

CollocationSets make_pme_collocation(const PmeCollocationSpec& spec) {
  if (spec.n_int < 1 || spec.n_sb < 1 || spec.n_tb < 1 || spec.n_meas_per_axis < 0) {
    throw DomainError("make_pme_collocation: point counts must be positive");
  }
  CollocationSets s;
  // Consecutive Sobol blocks after the origin: interior, spatial boundary, initial line.
  int skip = 1;
  const Matrix pi = sobol_2d(spec.n_int, skip);
  skip += spec.n_int;
  s.interior.resize(2, spec.n_int);
  s.interior.row(0) = pi.col(0).transpose();
  s.interior.row(1) = (2.0 * pi.col(1).array() - 1.0).matrix().transpose();

  const Matrix pb = sobol_2d(spec.n_sb, skip);
  skip += spec.n_sb;
  s.boundary.resize(2, 2 * spec.n_sb);
  s.boundary_values.resize(2 * spec.n_sb);
  for (int i = 0; i < spec.n_sb; ++i) {
    const double t = pb(i, 0);
    s.boundary.col(i) << t, -1.0;
    s.boundary.col(spec.n_sb + i) << t, 1.0;
    s.boundary_values(i) = barenblatt(t, -1.0, spec.barenblatt);
    s.boundary_values(spec.n_sb + i) = barenblatt(t, 1.0, spec.barenblatt);
  }

  const Matrix pt = sobol_2d(spec.n_tb, skip);
  s.initial.resize(2, spec.n_tb);
  s.initial_values.resize(spec.n_tb);
  for (int i = 0; i < spec.n_tb; ++i) {
    const double x = 2.0 * pt(i, 1) - 1.0;
    s.initial.col(i) << 0.0, x;
    s.initial_values(i) = barenblatt(0.0, x, spec.barenblatt);
  }

  const int nm = spec.n_meas_per_axis;
  if (nm > 0) {
    if (nm < 2) throw DomainError("make_pme_collocation: measurement grid needs >= 2 per axis");
    s.measurements.resize(2, nm * nm);
    s.measurement_values.resize(nm * nm);
    for (int a = 0; a < nm; ++a) {
      for (int b = 0; b < nm; ++b) {
        const double t = static_cast<double>(a) / (nm - 1);
        const double x = -1.0 + 2.0 * b / (nm - 1);
        s.measurements.col(a * nm + b) << t, x;
        s.measurement_values(a * nm + b) = barenblatt(t, x, spec.barenblatt);
      }
    }
  }
  return s;
}

PmeLoss::PmeLoss(CollocationSets sets, double beta, bool beta_trainable, double lambda_u,
                 double lambda_s, bool log10_output)
    : sets_(std::move(sets)),
      beta_(beta),
      beta_trainable_(beta_trainable),
      lambda_u_(lambda_u),
      lambda_s_(lambda_s),
      log10_output_(log10_output) {
  if (sets_.interior.cols() == 0 || sets_.boundary.cols() == 0 || sets_.initial.cols() == 0) {
    throw DomainError("PmeLoss: interior, boundary and initial sets must be non-empty");
  }
  if (sets_.boundary_values.size() != sets_.boundary.cols() ||
      sets_.initial_values.size() != sets_.initial.cols() ||
      sets_.measurement_values.size() != sets_.measurements.cols()) {
    throw DomainError("PmeLoss: target values do not match point sets");
  }
  if (!(lambda_u >= 0.0) || !(lambda_s >= 0.0)) {
    throw DomainError("PmeLoss: weights must be non-negative");
  }
  if (!beta_trainable && !(beta > 0.0)) throw DomainError("PmeLoss: beta must be positive");
}

std::vector<std::string> PmeLoss::scalar_names() const {
  if (beta_trainable_) return {"beta"};
  return {};
}

double PmeLoss::evaluate(const MlpParams& net, const Vector& raw, MlpParams* g_net,
                         Vector* g_raw, LossTerms* terms) const {
  const double beta = beta_trainable_ ? raw(0) : beta_;
  const bool want = g_net != nullptr;
  const bool use_meas = sets_.measurements.cols() > 0 && lambda_s_ > 0.0;

  // PDE residual R = u_t - beta A u_xx - beta (beta-1) B u_x^2,
  // A = |u|^(beta-1), B = |u|^(beta-2) sgn(u).
  Tape tape_i;
  const Jet j = mlp_forward(net, sets_.interior, JetOrder::space, want ? &tape_i : nullptr);
  const Eigen::Index ni = j.u.size();
  Vector R(ni), dR_du(ni), dR_dux(ni), dR_duxx(ni), dR_dbeta(ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    const double u = j.u(i), ux = j.u_x(i), uxx = j.u_xx(i);
    const double au = std::abs(u);
    const double sg = u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    const double A = std::pow(au, beta - 1.0);
    const double B = au > 0.0 ? A / au * sg : 0.0;
    const double C = au > 0.0 ? A / (au * au) : 0.0;  // |u|^(beta-3)
    const double lg = au > 0.0 ? std::log(au) : 0.0;
    const double k1 = beta * (beta - 1.0);
    R(i) = j.u_t(i) - beta * A * uxx - k1 * B * ux * ux;
    dR_duxx(i) = -beta * A;
    dR_dux(i) = -2.0 * k1 * B * ux;
    dR_du(i) = -k1 * B * uxx - k1 * (beta - 2.0) * C * ux * ux;
    dR_dbeta(i) = -(A + beta * A * lg) * uxx - ((2.0 * beta - 1.0) * B + k1 * B * lg) * ux * ux;
  }
  const double l_pde = R.squaredNorm() / ni;
  check_finite(l_pde, "PME loss", "PDE");

  Tape tape_b, tape_t, tape_m;
  const Jet jb = mlp_forward(net, sets_.boundary, JetOrder::value, want ? &tape_b : nullptr);
  const Vector eb = jb.u - sets_.boundary_values;
  const double l_b = eb.squaredNorm() / eb.size();
  check_finite(l_b, "PME loss", "boundary");

  const Jet jt = mlp_forward(net, sets_.initial, JetOrder::value, want ? &tape_t : nullptr);
  const Vector et = jt.u - sets_.initial_values;
  const double l_t = et.squaredNorm() / et.size();
  check_finite(l_t, "PME loss", "initial");

  double l_meas = 0.0;
  Vector em;
  if (use_meas) {
    const Jet jm = mlp_forward(net, sets_.measurements, JetOrder::value, want ? &tape_m : nullptr);
    em = jm.u - sets_.measurement_values;
    l_meas = em.squaredNorm() / em.size();
    check_finite(l_meas, "PME loss", "measurement");
  }

  const double S = lambda_u_ * (l_b + l_t) + l_pde + lambda_s_ * l_meas;
  const double floor_s = S + 1e-30;
  const double value = log10_output_ ? std::log10(floor_s) : S;
  // d value / d S
  const double w = log10_output_ ? 1.0 / (floor_s * std::log(10.0)) : 1.0;

  const Vector dR = (2.0 * w / ni) * R;
  if (g_net) {
    JetAdjoint adj;
    adj.u_t = dR;
    adj.u = dR.cwiseProduct(dR_du);
    adj.u_x = dR.cwiseProduct(dR_dux);
    adj.u_xx = dR.cwiseProduct(dR_duxx);
    mlp_backward(net, tape_i, adj, *g_net);
    JetAdjoint ab;
    ab.u = (2.0 * w * lambda_u_ / eb.size()) * eb;
    mlp_backward(net, tape_b, ab, *g_net);
    JetAdjoint at;
    at.u = (2.0 * w * lambda_u_ / et.size()) * et;
    mlp_backward(net, tape_t, at, *g_net);
    if (use_meas) {
      JetAdjoint am;
      am.u = (2.0 * w * lambda_s_ / em.size()) * em;
      mlp_backward(net, tape_m, am, *g_net);
    }
  }
  if (g_raw) {
    g_raw->setZero(raw.size());
    if (beta_trainable_) (*g_raw)(0) = dR.dot(dR_dbeta);
  }
  if (terms) {
    *terms = {{"pde", l_pde}, {"boundary", l_b}, {"initial", l_t}};
    if (use_meas) terms->push_back({"measurement", l_meas});
  }
  return value;
}

double network_rel_l2(const MlpParams& net, const Matrix& points,
                      const std::function<double(double, double)>& exact, double output_scale) {
  const Jet j = mlp_forward(net, points, JetOrder::value);
  Vector ex(points.cols());
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    ex(i) = exact(points(0, i), points.rows() > 1 ? points(1, i) : 0.0);
  }
  return rel_l2_error(output_scale * j.u, ex);
}

}  // namespace invlab::pinn
