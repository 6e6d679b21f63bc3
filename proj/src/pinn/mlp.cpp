#include "invlab/pinn/mlp.hpp"

#include <cmath>
#include <random>

namespace invlab::pinn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Array = Eigen::ArrayXXd;

// Activation value and first three derivatives, elementwise.
struct Act {
  Array f, f1, f2, f3;
};

Act tanh_act(const Matrix& z) {
  Act r;
  r.f = z.array().tanh();
  r.f1 = 1.0 - r.f.square();
  r.f2 = -2.0 * r.f * r.f1;
  r.f3 = -2.0 * (r.f1.square() + r.f * r.f2);
  return r;
}

Act sigmoid_act(const Matrix& z) {
  Act r;
  r.f = 1.0 / (1.0 + (-z.array()).exp());
  r.f1 = r.f * (1.0 - r.f);
  r.f2 = r.f1 * (1.0 - 2.0 * r.f);
  r.f3 = r.f2 * (1.0 - 2.0 * r.f) - 2.0 * r.f1.square();
  return r;
}

Act linear_act(const Matrix& z) {
  Act r;
  r.f = z.array();
  r.f1 = Array::Ones(z.rows(), z.cols());
  r.f2 = Array::Zero(z.rows(), z.cols());
  r.f3 = r.f2;
  return r;
}

Act activate(const MlpParams& p, size_t layer, const Matrix& z) {
  if (layer + 1 < p.weights.size()) return tanh_act(z);
  return p.output == OutputActivation::sigmoid ? sigmoid_act(z) : linear_act(z);
}

bool has_t(JetOrder o) { return o != JetOrder::value; }
bool has_x(JetOrder o) { return o == JetOrder::space; }

}  // namespace

std::vector<int> MlpParams::sizes() const {
  std::vector<int> s;
  if (weights.empty()) return s;
  s.push_back(static_cast<int>(weights.front().cols()));
  for (const auto& w : weights) s.push_back(static_cast<int>(w.rows()));
  return s;
}

Eigen::Index MlpParams::num_params() const {
  Eigen::Index n = 0;
  for (size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

Vector MlpParams::flatten() const {
  Vector theta(num_params());
  Eigen::Index k = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    Eigen::Map<RowMajor>(theta.data() + k, w.rows(), w.cols()) = w;
    k += w.size();
    theta.segment(k, biases[l].size()) = biases[l];
    k += biases[l].size();
  }
  return theta;
}

void MlpParams::unflatten(const Vector& theta) {
  if (theta.size() < num_params()) throw DomainError("MlpParams::unflatten: vector too short");
  Eigen::Index k = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    auto& w = weights[l];
    w = Eigen::Map<const RowMajor>(theta.data() + k, w.rows(), w.cols());
    k += w.size();
    biases[l] = theta.segment(k, biases[l].size());
    k += biases[l].size();
  }
}

MlpParams MlpParams::zeros_like() const {
  MlpParams z = *this;
  for (auto& w : z.weights) w.setZero();
  for (auto& b : z.biases) b.setZero();
  return z;
}

void MlpParams::validate() const {
  if (weights.empty() || weights.size() != biases.size()) {
    throw DomainError("MlpParams: need matching, non-empty weight and bias lists");
  }
  for (size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows()) {
      throw DomainError("MlpParams: bias length mismatch at layer " + std::to_string(l));
    }
    if (l > 0 && weights[l].cols() != weights[l - 1].rows()) {
      throw DomainError("MlpParams: layer " + std::to_string(l) + " does not chain");
    }
  }
  if (weights.back().rows() != 1) throw DomainError("MlpParams: output must be scalar");
}

MlpParams xavier_init(const std::vector<int>& sizes, std::uint64_t seed,
                      OutputActivation output) {
  if (sizes.size() < 2) throw DomainError("xavier_init: need at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw DomainError("xavier_init: layer widths must be positive");
  }
  MlpParams p;
  p.output = output;
  Rng rng(seed);
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int n_in = sizes[l], n_out = sizes[l + 1];
    const double bound = std::sqrt(6.0 / (n_in + n_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(n_out, n_in);
    for (int i = 0; i < n_out; ++i) {
      for (int j = 0; j < n_in; ++j) w(i, j) = dist(rng);
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(n_out));
  }
  p.validate();
  return p;
}

Jet mlp_forward(const MlpParams& params, const Matrix& inputs, JetOrder order, Tape* tape) {
  const Eigen::Index n = inputs.cols();
  if (inputs.rows() != params.weights.front().cols()) {
    throw DomainError("mlp_forward: input dimension does not match the network");
  }
  if (has_x(order) && inputs.rows() < 2) {
    throw DomainError("mlp_forward: spatial derivatives need a two-input network");
  }
  const Eigen::Index d = inputs.rows();
  Matrix a = inputs, a_t, a_x, a_xx;
  if (has_t(order)) {
    a_t = Matrix::Zero(d, n);
    a_t.row(0).setOnes();
  }
  if (has_x(order)) {
    a_x = Matrix::Zero(d, n);
    a_x.row(1).setOnes();
    a_xx = Matrix::Zero(d, n);
  }
  if (tape) {
    *tape = Tape{};
    tape->order = order;
  }

  for (size_t l = 0; l < params.weights.size(); ++l) {
    const Matrix& W = params.weights[l];
    Matrix z = W * a;
    z.colwise() += params.biases[l];
    Matrix z_t, z_x, z_xx;
    if (has_t(order)) z_t = W * a_t;
    if (has_x(order)) {
      z_x = W * a_x;
      z_xx = W * a_xx;
    }
    const Act s = activate(params, l, z);
    if (tape) {
      tape->a.push_back(a);
      tape->z.push_back(z);
      if (has_t(order)) {
        tape->a_t.push_back(a_t);
        tape->z_t.push_back(z_t);
      }
      if (has_x(order)) {
        tape->a_x.push_back(a_x);
        tape->a_xx.push_back(a_xx);
        tape->z_x.push_back(z_x);
        tape->z_xx.push_back(z_xx);
      }
    }
    a = s.f.matrix();
    if (has_t(order)) a_t = (s.f1 * z_t.array()).matrix();
    if (has_x(order)) {
      a_xx = (s.f2 * z_x.array().square() + s.f1 * z_xx.array()).matrix();
      a_x = (s.f1 * z_x.array()).matrix();
    }
  }

  Jet jet;
  jet.u = a.row(0).transpose();
  if (has_t(order)) jet.u_t = a_t.row(0).transpose();
  if (has_x(order)) {
    jet.u_x = a_x.row(0).transpose();
    jet.u_xx = a_xx.row(0).transpose();
  }
  return jet;
}

void mlp_backward(const MlpParams& params, const Tape& tape, const JetAdjoint& adj,
                  MlpParams& grad) {
  const JetOrder order = tape.order;
  const Eigen::Index n = tape.a.front().cols();
  auto row_or_zero = [n](const Vector& v) {
    return v.size() == n ? Matrix(v.transpose()) : Matrix(Matrix::Zero(1, n));
  };
  if (adj.u.size() != n) throw DomainError("mlp_backward: adjoint length mismatch");
  Matrix g = adj.u.transpose();
  Matrix g_t, g_x, g_xx;
  if (has_t(order)) g_t = row_or_zero(adj.u_t);
  if (has_x(order)) {
    g_x = row_or_zero(adj.u_x);
    g_xx = row_or_zero(adj.u_xx);
  }

  for (size_t l = params.weights.size(); l-- > 0;) {
    const Act s = activate(params, l, tape.z[l]);
    Array zb = g.array() * s.f1;
    Matrix zb_t, zb_x, zb_xx;
    if (has_t(order)) {
      zb += g_t.array() * s.f2 * tape.z_t[l].array();
      zb_t = (g_t.array() * s.f1).matrix();
    }
    if (has_x(order)) {
      const Array zx = tape.z_x[l].array();
      zb += g_x.array() * s.f2 * zx +
            g_xx.array() * (s.f3 * zx.square() + s.f2 * tape.z_xx[l].array());
      zb_x = (g_x.array() * s.f1 + 2.0 * g_xx.array() * s.f2 * zx).matrix();
      zb_xx = (g_xx.array() * s.f1).matrix();
    }
    const Matrix zbm = zb.matrix();
    Matrix& gW = grad.weights[l];
    gW.noalias() += zbm * tape.a[l].transpose();
    grad.biases[l] += zbm.rowwise().sum();
    if (has_t(order)) gW.noalias() += zb_t * tape.a_t[l].transpose();
    if (has_x(order)) {
      gW.noalias() += zb_x * tape.a_x[l].transpose();
      gW.noalias() += zb_xx * tape.a_xx[l].transpose();
    }
    if (l == 0) break;
    const Matrix& W = params.weights[l];
    g = W.transpose() * zbm;
    if (has_t(order)) g_t = W.transpose() * zb_t;
    if (has_x(order)) {
      g_x = W.transpose() * zb_x;
      g_xx = W.transpose() * zb_xx;
    }
  }
}

PointDerivs mlp_eval_with_derivs(const MlpParams& params, double t, double x) {
  const Eigen::Index d = params.weights.front().cols();
  Matrix in(d, 1);
  in(0, 0) = t;
  if (d > 1) in(1, 0) = x;
  const Jet j = mlp_forward(params, in, d > 1 ? JetOrder::space : JetOrder::time);
  PointDerivs r;
  r.u = j.u(0);
  r.u_t = j.u_t(0);
  if (d > 1) {
    r.u_x = j.u_x(0);
    r.u_xx = j.u_xx(0);
  }
  return r;
}

std::string to_string(OutputActivation a) {
  return a == OutputActivation::sigmoid ? "sigmoid" : "linear";
}

OutputActivation output_activation_from_string(const std::string& s) {
  if (s == "linear") return OutputActivation::linear;
  if (s == "sigmoid") return OutputActivation::sigmoid;
  throw DomainError("unknown output activation '" + s + "'");
}

}  // namespace invlab::pinn
