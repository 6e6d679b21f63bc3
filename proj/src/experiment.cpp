#include "invlab/experiment.hpp"

#include "invlab/logistic.hpp"
#include "invlab/ode.hpp"
#include "invlab/pinn/checkpoint.hpp"
#include "invlab/pinn/losses.hpp"
#include "invlab/pinn/sobol.hpp"
#include "invlab/pinn/train.hpp"
#include "invlab/pme.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

namespace invlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Schema reader: every key must be consumed, otherwise finish() rejects it.

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double num(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    if (!v->is_number()) throw ConfigError(at(key) + ": expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key) + ": must be finite");
    return d;
  }

  double positive(const std::string& key, std::optional<double> def = std::nullopt) {
    const double d = num(key, def);
    if (!(d > 0.0)) throw ConfigError(at(key) + ": must be > 0");
    return d;
  }

  int integer(const std::string& key, std::optional<int> def = std::nullopt, int min = 0) {
    const json* v = get(key, def.has_value());
    int n;
    if (!v) {
      n = *def;
    } else {
      if (!v->is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
      n = v->get<int>();
    }
    if (n < min) throw ConfigError(at(key) + ": must be >= " + std::to_string(min));
    return n;
  }

  std::uint64_t seed(const std::string& key) {
    const json* v = get(key, true);
    if (!v) return 0;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      throw ConfigError(at(key) + ": expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = get(key, true);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(at(key) + ": expected true or false");
    return v->get<bool>();
  }

  std::string str(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
    return v->get<std::string>();
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     std::optional<std::string> def = std::nullopt) {
    const std::string s = str(key, def);
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(at(key) + ": '" + s + "' is not one of {" + list + "}");
    }
    return s;
  }

  std::vector<double> num_list(const std::string& key,
                               std::optional<std::vector<double>> def = std::nullopt) {
    const json* v = get(key, def.has_value());
    if (!v) return *def;
    if (!v->is_array()) throw ConfigError(at(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) {
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]: expected a number");
      }
      out.push_back((*v)[i].get<double>());
    }
    return out;
  }

  std::vector<int> int_list(const std::string& key, std::vector<int> def) {
    const json* v = get(key, true);
    if (!v) return def;
    if (!v->is_array() || v->empty()) throw ConfigError(at(key) + ": expected a non-empty array");
    std::vector<int> out;
    for (size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number_integer() || (*v)[i].get<int>() < 1) {
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]: expected a positive integer");
      }
      out.push_back((*v)[i].get<int>());
    }
    return out;
  }

  /// Nested object; an absent optional object reads as {}.
  Obj sub(const std::string& key, bool required = false) {
    const json* v = get(key, !required);
    if (!v) return Obj(empty_, at(key));
    return Obj(*v, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError(at(it.key()) + ": unknown key");
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* get(const std::string& key, bool optional) {
    used_.insert(key);
    if (!j_.contains(key)) {
      if (optional) return nullptr;
      throw ConfigError(at(key) + ": missing required field");
    }
    return &j_.at(key);
  }
  std::string where() const { return path_.empty() ? "<config>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
  static inline const json empty_ = json::object();
};

// ---------------------------------------------------------------------------
// Typed specs.

struct Common {
  std::string problem;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::string label;
};

LogisticParams read_logistic_params(Obj o) {
  LogisticParams p;
  p.r = o.num("r");
  p.K = o.positive("K");
  p.p0 = o.positive("p0");
  p.t0 = o.num("t0", 0.0);
  o.finish();
  return p;
}

Grid1D read_grid(Obj o, double a, double b, int n) {
  const double ga = o.num("a", a);
  const double gb = o.num("b", b);
  const int gn = o.integer("n", n, 1);
  o.finish();
  if (!(gb > ga)) throw ConfigError(o.at("b") + ": must exceed a");
  return Grid1D(ga, gb, gn);
}

json to_json(const Grid1D& g) { return {{"a", g.a()}, {"b", g.b()}, {"n", g.n()}}; }

pinn::TrainSchedule read_schedule(Obj o, std::uint64_t seed, int adam_epochs, bool es) {
  pinn::TrainSchedule s;
  s.adam_epochs = o.integer("adam_epochs", adam_epochs, 0);
  s.adam_lr = o.positive("adam_lr", 1e-3);
  s.lbfgs_max_iter = o.integer("lbfgs_max_iter", 0, 0);
  s.lbfgs_memory = o.integer("lbfgs_memory", 10, 1);
  s.early_stopping = o.boolean("early_stopping", es);
  s.patience = o.integer("patience", 50, 1);
  s.min_delta = o.num("min_delta", 1e-6);
  if (s.min_delta < 0.0) throw ConfigError(o.at("min_delta") + ": must be >= 0");
  o.finish();
  s.seed = seed;
  return s;
}

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::vector<int> with_io(const std::vector<int>& hidden, int n_in) {
  std::vector<int> s{n_in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(1);
  return s;
}

// --- logistic_direct --------------------------------------------------------

struct LogisticDirectSpec {
  LogisticParams params;
  double t_end = 0.0;
  int n_steps = 100;
  AdaptiveSettings adaptive;
};

LogisticDirectSpec parse_logistic_direct(Obj& o) {
  LogisticDirectSpec s;
  s.params = read_logistic_params(o.sub("params", true));
  s.t_end = o.num("t_end");
  if (!(s.t_end > s.params.t0)) throw ConfigError(o.at("t_end") + ": must exceed params.t0");
  s.n_steps = o.integer("n_steps", 100, 1);
  Obj a = o.sub("dp45");
  s.adaptive.rtol = a.positive("rtol", 1e-6);
  s.adaptive.atol = a.positive("atol", 1e-9);
  s.adaptive.h_init = a.num("h_init", 0.0);
  s.adaptive.max_steps = a.integer("max_steps", 1000000, 1);
  a.finish();
  return s;
}

// --- logistic_inverse -------------------------------------------------------

struct LogisticInverseSpec {
  LogisticParams truth;
  double t_start = 0.0, t_end = 0.0;
  int m = 0;
  double train_fraction = 0.5;
  NoiseSpec noise;
  std::string data_csv;  // optional import instead of synthetic data
  std::string mode;      // r_only | r_and_K | r_and_logK | analytic_r
  FitMethod method = FitMethod::bfgs;
  std::optional<Vector> init;
  double init_scale = 1.0;
  FitOptions options;
};

LogisticInverseSpec parse_logistic_inverse(Obj& o) {
  LogisticInverseSpec s;
  s.truth = read_logistic_params(o.sub("truth", true));
  Obj d = o.sub("data", true);
  s.data_csv = d.str("csv", "");
  s.t_start = d.num("t_start", s.truth.t0);
  s.t_end = d.num("t_end", 0.0);
  s.m = d.integer("m", 0, 0);
  s.train_fraction = d.num("train_fraction", 0.5);
  if (!(s.train_fraction > 0.0 && s.train_fraction <= 1.0)) {
    throw ConfigError(d.at("train_fraction") + ": must be in (0, 1]");
  }
  Obj n = d.sub("noise");
  s.noise.kind = noise_kind_from_string(
      n.choice("kind", {"none", "awgn_snr", "gaussian_pct_of_max"}, "none"));
  s.noise.snr = n.num("snr", 100.0 / 3.0);
  s.noise.pct = n.num("pct", 0.03);
  n.finish();
  d.finish();
  if (s.data_csv.empty()) {
    if (s.m < 2) throw ConfigError(d.at("m") + ": need at least 2 samples");
    if (!(s.t_end > s.t_start)) throw ConfigError(d.at("t_end") + ": must exceed t_start");
  }
  try {
    s.noise.validate();
  } catch (const DomainError& e) {
    throw ConfigError(d.at("noise") + ": " + e.what());
  }

  s.mode = o.choice("mode", {"r_only", "r_and_K", "r_and_logK", "analytic_r"});
  if (s.mode != "analytic_r") {
    s.method = fit_method_from_string(
        o.choice("method", {"newton", "newton_fd", "secant", "steepest", "bfgs", "box"}));
    if (o.has("init")) {
      const auto v = o.num_list("init");
      s.init = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    s.init_scale = o.positive("init_scale", 1.0);
    Obj opt = o.sub("options");
    s.options.n_max = opt.integer("n_max", 200, 1);
    s.options.tol = opt.positive("tol", 1e-8);
    s.options.secant_offset = opt.num("secant_offset", 0.01);
    s.options.fd_step = opt.positive("fd_step", 1e-7);
    if (opt.has("lb")) {
      const auto v = opt.num_list("lb");
      s.options.lb = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    if (opt.has("ub")) {
      const auto v = opt.num_list("ub");
      s.options.ub = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    opt.finish();
    const Eigen::Index dim = s.mode == "r_only" ? 1 : 2;
    if (s.init && s.init->size() != dim) {
      throw ConfigError(o.at("init") + ": expected " + std::to_string(dim) + " values");
    }
    if (s.options.lb.size() && s.options.lb.size() != dim) {
      throw ConfigError(o.at("options.lb") + ": expected " + std::to_string(dim) + " values");
    }
    if (s.options.ub.size() && s.options.ub.size() != dim) {
      throw ConfigError(o.at("options.ub") + ": expected " + std::to_string(dim) + " values");
    }
  }
  return s;
}

// --- pme_direct -------------------------------------------------------------

struct PmeDirectSpec {
  PmeConfig config;
  BarenblattParams barenblatt;
};

PmeConfig read_pme_config(Obj& o, PmeConfig c) {
  c.beta = o.positive("beta", c.beta);
  c.x_grid = read_grid(o.sub("x_grid"), c.x_grid.a(), c.x_grid.b(), c.x_grid.n());
  c.dt = o.positive("dt", c.dt);
  c.t0 = o.num("t0", c.t0);
  c.t_end = o.num("t_end", c.t_end);
  c.newton_tol = o.positive("newton_tol", c.newton_tol);
  c.newton_max_iter = o.integer("newton_max_iter", c.newton_max_iter, 1);
  c.jac_h = o.positive("jac_h", c.jac_h);
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw ConfigError(o.at("dt") + ": " + e.what());
  }
  return c;
}

PmeDirectSpec parse_pme_direct(Obj& o) {
  PmeDirectSpec s;
  s.config = read_pme_config(o, PmeConfig{});
  s.barenblatt.delta = o.positive("delta", 1.0);
  return s;
}

// --- pme_inverse ------------------------------------------------------------

struct PmeInverseSpec {
  PmeSolver solver = PmeSolver::newton_implicit;
  PmeConfig config;              // newton_implicit reference grid and settings
  BarenblattParams barenblatt;   // newton_implicit reference
  double ftcs_beta = 2.0;        // ftcs reference exponent
  Grid1D ftcs_grid{0.0, 1.0, 50};
  double ftcs_dt = 1e-4;
  double ftcs_t_end = 0.2;
  double noise_pct = 0.0;
  double beta0 = 2.0;
  BetaEstimateOptions options;
};

PmeInverseSpec parse_pme_inverse(Obj& o) {
  PmeInverseSpec s;
  s.solver = pme_solver_from_string(o.choice("solver", {"newton_implicit", "ftcs"}));
  Obj ref = o.sub("reference");
  if (s.solver == PmeSolver::newton_implicit) {
    PmeConfig c;
    s.config = read_pme_config(ref, c);
    s.barenblatt.delta = ref.positive("delta", 1.0);
    s.options.truth = s.config.beta;
  } else {
    s.ftcs_beta = ref.positive("beta", 2.0);
    s.ftcs_grid = read_grid(ref.sub("x_grid"), 0.0, 1.0, 50);
    s.ftcs_dt = ref.positive("dt", 1e-4);
    s.ftcs_t_end = ref.positive("t_end", 0.2);
    s.options.truth = s.ftcs_beta;
  }
  s.noise_pct = ref.num("noise_pct", 0.0);
  if (s.noise_pct < 0.0) throw ConfigError(ref.at("noise_pct") + ": must be >= 0");
  ref.finish();
  s.beta0 = o.positive("beta0");
  s.options.method = beta_method_from_string(o.choice("method", {"box", "bfgs", "steepest"}, "box"));
  Obj opt = o.sub("options");
  s.options.lb = opt.num("lb", 1.1);
  s.options.ub = opt.num("ub", 10.0);
  s.options.n_max = opt.integer("n_max", 200, 1);
  s.options.tol = opt.positive("tol", 1e-8);
  s.options.fd_step = opt.positive("fd_step", 1e-5);
  opt.finish();
  if (!(s.options.ub > s.options.lb)) throw ConfigError(o.at("options.ub") + ": must exceed lb");
  if (s.options.method == BetaMethod::box &&
      !(s.beta0 >= s.options.lb && s.beta0 <= s.options.ub)) {
    throw ConfigError(o.at("beta0") + ": outside [options.lb, options.ub]");
  }
  return s;
}

// The FTCS benchmark: u0 = 0.9 - 0.8 sin(pi x), u = 0.9 at both ends.
double ftcs_ic(double x) { return 0.9 - 0.8 * std::sin(std::numbers::pi * x); }
std::pair<double, double> ftcs_bc(double) { return {0.9, 0.9}; }

// --- heat_bench -------------------------------------------------------------

struct HeatSpec {
  HeatScheme scheme = HeatScheme::crank_nicolson;
  int n = 100;  // spatial intervals on [0, 1]
  double tau = 1e-3;
  double t_end = 0.1;
  bool allow_unstable = false;
  int refinements = 0;  // extra runs with tau/2, tau/4, ...
};

HeatSpec parse_heat(Obj& o) {
  HeatSpec s;
  s.scheme = heat_scheme_from_string(o.choice(
      "scheme", {"method_of_lines_rk4", "forward_euler", "backward_euler", "crank_nicolson"}));
  s.n = o.integer("n", 100, 2);
  s.tau = o.positive("tau");
  s.t_end = o.positive("t_end");
  s.allow_unstable = o.boolean("allow_unstable", false);
  s.refinements = o.integer("refinements", 0, 0);
  return s;
}

// --- PINN problems ----------------------------------------------------------

struct PinnLogisticDirectSpec {
  LogisticParams params;
  double t_end = 5.0;
  int n_colloc = 100;
  std::string colloc = "uniform";
  bool normalized = false;
  pinn::OutputActivation output = pinn::OutputActivation::linear;
  std::vector<int> hidden{32, 32};
  int n_eval = 200;
  pinn::TrainSchedule schedule;
};

Vector collocation_1d(const std::string& kind, int n, double a, double b) {
  if (kind == "uniform") return Vector::LinSpaced(n, a, b);
  const Matrix p = pinn::sobol_2d(n, 1);
  return (a + (b - a) * p.col(0).array()).matrix();
}

PinnLogisticDirectSpec parse_pinn_logistic_direct(Obj& o, std::uint64_t seed) {
  PinnLogisticDirectSpec s;
  s.params = read_logistic_params(o.sub("params", true));
  s.t_end = o.num("t_end", 5.0);
  if (!(s.t_end > s.params.t0)) throw ConfigError(o.at("t_end") + ": must exceed params.t0");
  s.n_colloc = o.integer("n_colloc", 100, 1);
  s.colloc = o.choice("colloc", {"uniform", "sobol"}, "uniform");
  s.normalized = o.boolean("normalized", false);
  s.output = pinn::output_activation_from_string(
      o.choice("output_activation", {"linear", "sigmoid"}, "linear"));
  s.hidden = o.int_list("hidden", {32, 32});
  s.n_eval = o.integer("n_eval", 200, 2);
  s.schedule = read_schedule(o.sub("schedule"), seed, 5000, false);
  if (s.output == pinn::OutputActivation::sigmoid && !s.normalized) {
    throw ConfigError(o.at("output_activation") + ": sigmoid output requires normalized = true");
  }
  return s;
}

struct PinnLogisticInverseSpec {
  LogisticParams truth;
  std::string unknowns = "r";
  double r_init = 0.5;
  double K_init = 0.0;
  double data_t_end = 10.0;
  int data_m = 30;
  int n_colloc = 100;
  std::string colloc = "uniform";
  double lambda_data = 1.0;
  bool normalized = false;
  pinn::OutputActivation output = pinn::OutputActivation::linear;
  std::vector<int> hidden{32, 32};
  int n_eval = 200;
  pinn::TrainSchedule schedule;
};

PinnLogisticInverseSpec parse_pinn_logistic_inverse(Obj& o, std::uint64_t seed) {
  PinnLogisticInverseSpec s;
  s.truth = read_logistic_params(o.sub("truth", true));
  s.unknowns = o.choice("unknowns", {"r", "r_and_K"}, "r");
  s.r_init = o.positive("r_init", 0.5);
  s.K_init = o.num("K_init", s.truth.K);
  if (s.unknowns == "r_and_K" && !(s.K_init > 0.0)) {
    throw ConfigError(o.at("K_init") + ": must be > 0");
  }
  Obj d = o.sub("data");
  s.data_t_end = d.num("t_end", 10.0);
  s.data_m = d.integer("m", 30, 1);
  d.finish();
  if (!(s.data_t_end > s.truth.t0)) throw ConfigError(d.at("t_end") + ": must exceed truth.t0");
  s.n_colloc = o.integer("n_colloc", 100, 1);
  s.colloc = o.choice("colloc", {"uniform", "sobol"}, "uniform");
  s.lambda_data = o.num("lambda_data", 1.0);
  if (s.lambda_data < 0.0) throw ConfigError(o.at("lambda_data") + ": must be >= 0");
  s.normalized = o.boolean("normalized", false);
  s.output = pinn::output_activation_from_string(
      o.choice("output_activation", {"linear", "sigmoid"}, "linear"));
  if (s.output == pinn::OutputActivation::sigmoid && !s.normalized) {
    throw ConfigError(o.at("output_activation") + ": sigmoid output requires normalized = true");
  }
  s.hidden = o.int_list("hidden", {32, 32});
  s.n_eval = o.integer("n_eval", 200, 2);
  s.schedule = read_schedule(o.sub("schedule"), seed, 10000, false);
  return s;
}

struct PinnPmeSpec {
  bool inverse = false;
  double beta = 3.0;   // direct: equation exponent
  double beta0 = 2.0;  // inverse: initial guess
  pinn::PmeCollocationSpec colloc;
  double lambda_u = 10.0;
  double lambda_s = 10.0;
  std::vector<int> hidden{20, 20, 20, 20};
  int n_eval = 50000;
  int field_nt = 51, field_nx = 101;
  pinn::TrainSchedule schedule;
};

PinnPmeSpec parse_pinn_pme(Obj& o, std::uint64_t seed, bool inverse) {
  PinnPmeSpec s;
  s.inverse = inverse;
  if (inverse) {
    s.beta0 = o.positive("beta0");
    s.colloc.n_meas_per_axis = o.integer("n_meas_per_axis", 40, 2);
    s.lambda_s = o.num("lambda_s", 10.0);
    if (s.lambda_s < 0.0) throw ConfigError(o.at("lambda_s") + ": must be >= 0");
  } else {
    s.beta = o.positive("beta", 3.0);
  }
  s.colloc.n_int = o.integer("n_int", 256, 1);
  s.colloc.n_sb = o.integer("n_sb", 64, 1);
  s.colloc.n_tb = o.integer("n_tb", 64, 1);
  s.colloc.barenblatt.delta = o.positive("delta", 1.0);
  s.lambda_u = o.num("lambda_u", 10.0);
  if (s.lambda_u < 0.0) throw ConfigError(o.at("lambda_u") + ": must be >= 0");
  s.hidden = o.int_list("hidden", {20, 20, 20, 20});
  s.n_eval = o.integer("n_eval", 50000, 1);
  Obj f = o.sub("field");
  s.field_nt = f.integer("nt", 51, 2);
  s.field_nx = f.integer("nx", 101, 2);
  f.finish();
  s.schedule = read_schedule(o.sub("schedule"), seed, 10000, true);
  return s;
}

// ---------------------------------------------------------------------------

const std::vector<std::string> kProblems = {
    "logistic_direct",      "logistic_inverse",      "pme_direct",
    "pme_inverse",          "pinn_logistic_direct",  "pinn_logistic_inverse",
    "pinn_pme_direct",      "pinn_pme_inverse",      "heat_bench"};

struct Parsed {
  Common common;
  std::optional<LogisticDirectSpec> logistic_direct;
  std::optional<LogisticInverseSpec> logistic_inverse;
  std::optional<PmeDirectSpec> pme_direct;
  std::optional<PmeInverseSpec> pme_inverse;
  std::optional<HeatSpec> heat;
  std::optional<PinnLogisticDirectSpec> pinn_logistic_direct;
  std::optional<PinnLogisticInverseSpec> pinn_logistic_inverse;
  std::optional<PinnPmeSpec> pinn_pme;
};

Parsed parse(const json& config) {
  Obj o(config, "");
  Parsed p;
  p.common.problem = o.choice("problem", kProblems);
  p.common.seed = o.seed("seed");
  p.common.output_dir = o.str("output_dir", "out/" + p.common.problem);
  p.common.label = o.str("label", "");
  o.str("description", "");  // free text, ignored
  const std::string& prob = p.common.problem;
  try {
    if (prob == "logistic_direct") {
      p.logistic_direct = parse_logistic_direct(o);
    } else if (prob == "logistic_inverse") {
      p.logistic_inverse = parse_logistic_inverse(o);
    } else if (prob == "pme_direct") {
      p.pme_direct = parse_pme_direct(o);
    } else if (prob == "pme_inverse") {
      p.pme_inverse = parse_pme_inverse(o);
    } else if (prob == "heat_bench") {
      p.heat = parse_heat(o);
    } else if (prob == "pinn_logistic_direct") {
      p.pinn_logistic_direct = parse_pinn_logistic_direct(o, p.common.seed);
    } else if (prob == "pinn_logistic_inverse") {
      p.pinn_logistic_inverse = parse_pinn_logistic_inverse(o, p.common.seed);
    } else {
      p.pinn_pme = parse_pinn_pme(o, p.common.seed, prob == "pinn_pme_inverse");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const DomainError& e) {
    throw ConfigError(std::string("<config>: ") + e.what());
  }
  o.finish();
  return p;
}

// ---------------------------------------------------------------------------
// Output helpers.

fs::path resolve_output(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) p = fs::path(root) / p;
  }
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  // Write to a temporary name first so readers never see a partial file.
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string str() const {
    std::ostringstream s;
    auto line = [&s](const std::vector<std::string>& cells) {
      for (size_t i = 0; i < cells.size(); ++i) s << (i ? "," : "") << cells[i];
      s << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return s.str();
  }
};

std::string fmt_int(long v) { return std::to_string(v); }

json report_json(const OptimizerReport& r) {
  return {{"params_hat", vec_json(r.params_hat)},
          {"rel_errors", vec_json(r.rel_errors)},
          {"feval", r.feval},
          {"interp_error", r.interp_error},
          {"extrap_error", r.extrap_error},
          {"iterations", r.iterations},
          {"evaluations", r.evaluations},
          {"converged", r.converged},
          {"message", r.message},
          {"wall_time_s", r.wall_time_s}};
}

void optimizer_row(Table& t, const std::vector<std::string>& names, const Vector& init,
                   const OptimizerReport& r) {
  if (t.header.empty()) {
    for (const auto& n : names) t.header.push_back(n + "_init");
    t.header.push_back("iter");
    for (const auto& n : names) t.header.push_back(n + "_hat");
    for (const auto& n : names) t.header.push_back(n + "_rel_err");
    t.header.insert(t.header.end(), {"feval", "interp_error", "extrap_error", "converged"});
  }
  std::vector<std::string> row;
  for (Eigen::Index i = 0; i < init.size(); ++i) row.push_back(format_sci(init(i)));
  row.push_back(fmt_int(r.iterations));
  for (Eigen::Index i = 0; i < r.params_hat.size(); ++i) row.push_back(format_sci(r.params_hat(i)));
  for (size_t i = 0; i < names.size(); ++i) {
    row.push_back(static_cast<Eigen::Index>(i) < r.rel_errors.size()
                      ? format_sci(r.rel_errors(static_cast<Eigen::Index>(i)))
                      : "");
  }
  row.push_back(format_sci(r.feval));
  row.push_back(format_sci(r.interp_error));
  row.push_back(format_sci(r.extrap_error));
  row.push_back(r.converged ? "true" : "false");
  t.rows.push_back(std::move(row));
}

void write_field(const fs::path& dir, const Field2D& f, json meta) {
  write_field_csv((dir / "field.csv").string(), f);
  meta["t_grid"] = to_json(f.t_grid);
  meta["x_grid"] = to_json(f.x_grid);
  meta["diverged"] = f.diverged;
  write_json(dir / "field.json", meta);
}

// ---------------------------------------------------------------------------
// Runners. Each fills `report` and `table`, returns the convergence flag.

bool run_logistic_direct(const LogisticDirectSpec& s, json& report, Table& table) {
  const LogisticParams& p = s.params;
  OdeProblem prob{[p](double t, double y) { return logistic_rhs(t, y, p); }, p.t0, s.t_end, p.p0};
  auto exact_of = [&](const TimeSeries& ts) {
    Vector e(ts.size());
    for (Eigen::Index i = 0; i < ts.size(); ++i) e(i) = logistic_exact(ts.times(i), p);
    return e;
  };
  const TimeSeries rk = rk4_integrate(prob, s.n_steps);
  const double rk_err = avg_rel_error(rk.values, exact_of(rk), s.n_steps);
  Dp45Stats stats;
  const TimeSeries dp = dp45_integrate(prob, s.adaptive, &stats);
  const double dp_err = avg_rel_error_by_length(dp.values, exact_of(dp));
  report["results"] = {
      {"rk4", {{"n_steps", s.n_steps}, {"avg_rel_error", rk_err}}},
      {"dp45",
       {{"avg_rel_error", dp_err},
        {"accepted_steps", stats.accepted},
        {"rejected_steps", stats.rejected},
        {"rtol", s.adaptive.rtol},
        {"atol", s.adaptive.atol}}}};
  table.header = {"method", "steps", "avg_rel_error"};
  table.rows.push_back({"rk4", fmt_int(s.n_steps), format_sci(rk_err)});
  table.rows.push_back({"dp45", fmt_int(stats.accepted), format_sci(dp_err)});
  return true;
}

bool run_logistic_inverse(const LogisticInverseSpec& s, std::uint64_t seed, const fs::path& dir,
                          json& report, Table& table) {
  LogisticDataset data;
  if (!s.data_csv.empty()) {
    data.series = read_logistic_csv(s.data_csv);
    data.noise = s.noise;
  } else {
    data = generate_logistic_data(s.truth, s.t_start, s.t_end, s.m, s.noise, seed);
  }
  data.train_fraction = s.train_fraction;
  write_logistic_csv((dir / "data.csv").string(), data.series);

  if (s.mode == "analytic_r") {
    const TimeSeries rates = analytic_r_series(data.series, s.truth.K, s.truth.p0, s.truth.t0);
    const double err =
        analytic_r_reconstruction_error(data.series, rates, s.truth.K, s.truth.p0, s.truth.t0);
    const double mean_r = rates.values.size() ? rates.values.mean() : std::nan("");
    report["results"] = {{"n_rates", rates.size()},
                         {"mean_r", mean_r},
                         {"interp_error", err}};
    table.header = {"n_rates", "mean_r", "interp_error"};
    table.rows.push_back({fmt_int(rates.size()), format_sci(mean_r), format_sci(err)});
    write_logistic_csv((dir / "rates.csv").string(), rates);
    return std::isfinite(err);
  }

  const FitMode mode = fit_mode_from_string(s.mode);
  Vector init;
  if (s.init) {
    init = *s.init;
  } else {
    init = vector_from_params(s.truth, mode);
    init(0) *= s.init_scale;  // K (or ln K) stays at the truth
  }
  FitOptions opt = s.options;
  opt.truth = s.truth;
  const OptimizerReport r = fit_logistic(data, mode, s.method, init, s.truth, opt);
  report["results"] = report_json(r);
  report["results"]["init"] = vec_json(init);
  std::vector<std::string> names{"r"};
  if (mode != FitMode::r_only) names.push_back("K");
  Vector init_natural = init;
  if (mode == FitMode::r_and_logK) init_natural(1) = std::exp(init(1));
  optimizer_row(table, names, init_natural, r);
  return r.converged;
}

bool run_pme_direct(const PmeDirectSpec& s, const fs::path& dir, json& report, Table& table) {
  const BarenblattParams bp = s.barenblatt;
  const PmeConfig& c = s.config;
  PmeSolveStats stats;
  const Field2D f = pme_solve_direct(
      c, [bp, &c](double x) { return barenblatt(c.t0, x, bp); },
      [bp, &c](double t) {
        return std::make_pair(barenblatt(t, c.x_grid.a(), bp), barenblatt(t, c.x_grid.b(), bp));
      },
      &stats);
  const Field2D ex = barenblatt_field(c.t_grid(), c.x_grid, bp);
  const double rel = f.all_finite() ? rel_l2_error(f.values.reshaped(), ex.values.reshaped())
                                    : std::nan("");
  report["results"] = {{"rel_l2_error", rel},
                       {"newton_iterations", stats.newton_iterations},
                       {"max_final_residual", stats.max_final_residual},
                       {"stalled_steps", f.stalled_steps},
                       {"diverged", f.diverged},
                       {"min_value", f.all_finite() ? f.values.minCoeff() : std::nan("")}};
  table.header = {"beta", "rel_l2_error", "newton_iterations", "stalled_steps"};
  table.rows.push_back({format_sci(c.beta), format_sci(rel), fmt_int(stats.newton_iterations),
                        fmt_int(static_cast<long>(f.stalled_steps.size()))});
  write_field(dir, f, {{"solver", "newton_implicit"}, {"beta", c.beta}, {"delta", bp.delta},
                       {"dt", c.dt}});
  return !f.diverged && f.stalled_steps.empty();
}

Field2D pme_reference(const PmeInverseSpec& s, std::uint64_t seed) {
  Field2D ref = [&] {
    if (s.solver == PmeSolver::ftcs) {
      return pme_ftcs_solve(s.ftcs_beta, s.ftcs_grid, s.ftcs_dt, s.ftcs_t_end, ftcs_ic, ftcs_bc);
    }
    return barenblatt_field(s.config.t_grid(), s.config.x_grid, s.barenblatt);
  }();
  if (ref.diverged) throw Error("pme_inverse: reference solution diverged");
  if (s.noise_pct > 0.0) ref = add_field_noise(ref, s.noise_pct, seed);
  return ref;
}

bool run_pme_inverse(const PmeInverseSpec& s, std::uint64_t seed, const fs::path& dir,
                     json& report, Table& table) {
  const Field2D ref = pme_reference(s, seed);
  PmeInverseSetup setup;
  setup.solver = s.solver;
  setup.config = s.config;
  const OptimizerReport r = estimate_beta(ref, s.beta0, setup, s.options);
  report["results"] = report_json(r);
  report["results"]["beta0"] = s.beta0;
  optimizer_row(table, {"beta"}, Vector::Constant(1, s.beta0), r);
  json meta = {{"role", "reference"}, {"noise_pct", s.noise_pct}};
  if (s.solver == PmeSolver::ftcs) {
    meta["solver"] = "ftcs";
    meta["beta"] = s.ftcs_beta;
    meta["dt"] = s.ftcs_dt;
  } else {
    meta["solver"] = "barenblatt";
    meta["beta"] = s.config.beta;
    meta["delta"] = s.barenblatt.delta;
    meta["dt"] = s.config.dt;
  }
  write_field(dir, ref, meta);
  return r.converged;
}

bool run_heat(const HeatSpec& s, const fs::path& dir, json& report, Table& table) {
  const Grid1D xg(0.0, 1.0, s.n);
  const double h = xg.h();
  const double pi = std::numbers::pi;
  Vector ic(xg.size());
  for (int i = 0; i < xg.size(); ++i) ic(i) = std::sin(pi * xg.point(i));
  ic(0) = 0.0;
  ic(s.n) = 0.0;
  // Semi-discrete decay rate of the sin(pi x) mode isolates the temporal error.
  const double lam_h = 4.0 / (h * h) * std::pow(std::sin(pi * h / 2.0), 2);
  HeatOptions opt;
  opt.allow_unstable = s.allow_unstable;

  table.header = {"scheme", "tau", "tau_over_h2", "rel_l2_exact", "temporal_error", "ratio",
                  "max_abs", "diverged"};
  json runs = json::array();
  bool ok = true;
  double prev = std::nan("");
  double tau = s.tau;
  for (int k = 0; k <= s.refinements; ++k, tau /= 2.0) {
    const Field2D f = heat_solve(s.scheme, ic, xg, tau, s.t_end, [](double) {
      return std::make_pair(0.0, 0.0);
    }, opt);
    const double T = f.t_grid.b();
    const Vector last = f.values.row(f.values.rows() - 1).transpose();
    double rel_exact = std::nan(""), temporal = std::nan(""), max_abs = std::nan("");
    if (!f.diverged) {
      const Vector exact = std::exp(-pi * pi * T) * ic;
      const Vector semi = std::exp(-lam_h * T) * ic;
      rel_exact = rel_l2_error(last, exact);
      temporal = rel_l2_error(last, semi);
      max_abs = f.values.cwiseAbs().maxCoeff();
    }
    const double ratio = k > 0 ? prev / temporal : std::nan("");
    prev = temporal;
    ok = ok && !f.diverged;
    runs.push_back({{"tau", tau},
                    {"tau_over_h2", tau / (h * h)},
                    {"rel_l2_exact", rel_exact},
                    {"temporal_error", temporal},
                    {"ratio", ratio},
                    {"max_abs", max_abs},
                    {"diverged", f.diverged}});
    table.rows.push_back({to_string(s.scheme), format_sci(tau), format_sci(tau / (h * h)),
                          format_sci(rel_exact), format_sci(temporal), format_sci(ratio),
                          format_sci(max_abs), f.diverged ? "true" : "false"});
    if (k == 0) {
      write_field(dir, f, {{"scheme", to_string(s.scheme)}, {"tau", tau}, {"ic", "sin(pi x)"}});
    }
  }
  report["results"] = {{"runs", runs}};
  return ok;
}

json history_summary(const pinn::TrainResult& r) {
  return {{"best_loss", r.best_loss},
          {"adam_epochs_run", r.adam_epochs_run},
          {"lbfgs_iterations", r.lbfgs_iterations},
          {"stopped_early", r.stopped_early},
          {"aborted", r.aborted},
          {"message", r.message}};
}

void write_pinn_artifacts(const fs::path& dir, const pinn::TrainResult& r,
                          const pinn::PinnLoss& loss, const pinn::TrainSchedule& schedule) {
  pinn::write_loss_history((dir / "loss_history.csv").string(), r.history);
  pinn::Checkpoint ck;
  ck.net = r.net;
  ck.schedule = schedule;
  const auto names = loss.scalar_names();
  const Vector vals = loss.scalar_values(r.scalars_raw);
  for (size_t i = 0; i < names.size(); ++i) ck.scalars[names[i]] = vals(static_cast<Eigen::Index>(i));
  pinn::write_checkpoint((dir / "checkpoint.json").string(), ck);
}

bool run_pinn_logistic_direct(const PinnLogisticDirectSpec& s, const fs::path& dir,
                              json& report, Table& table) {
  const LogisticParams& p = s.params;
  const Vector colloc = collocation_1d(s.colloc, s.n_colloc, p.t0, s.t_end);
  const pinn::LogisticDirectLoss loss(p.r, p.K, p.p0, p.t0, colloc, s.normalized);
  const auto net0 = pinn::xavier_init(with_io(s.hidden, 1), s.schedule.seed, s.output);
  const auto res = pinn::train_pinn(loss, net0, Vector(), s.schedule);
  const Matrix ev = Vector::LinSpaced(s.n_eval, p.t0, s.t_end).transpose();
  const double scale = s.normalized ? p.K : 1.0;
  const double rel = pinn::network_rel_l2(
      res.net, ev, [&p](double t, double) { return logistic_exact(t, p); }, scale);
  report["results"] = history_summary(res);
  report["results"]["rel_l2_error"] = rel;
  table.header = {"r", "K", "p0", "normalized", "epochs", "final_loss", "rel_l2_error"};
  table.rows.push_back({format_sci(p.r), format_sci(p.K), format_sci(p.p0),
                        s.normalized ? "true" : "false", fmt_int(res.adam_epochs_run),
                        format_sci(res.best_loss), format_sci(rel)});
  write_pinn_artifacts(dir, res, loss, s.schedule);
  return !res.aborted;
}

bool run_pinn_logistic_inverse(const PinnLogisticInverseSpec& s, const fs::path& dir,
                               json& report, Table& table) {
  const LogisticParams& p = s.truth;
  Vector td = Vector::LinSpaced(s.data_m, p.t0, s.data_t_end);
  Vector pd(s.data_m);
  for (int i = 0; i < s.data_m; ++i) pd(i) = logistic_exact(td(i), p);
  const TimeSeries data(td, pd);
  write_logistic_csv((dir / "data.csv").string(), data);
  const Vector colloc = collocation_1d(s.colloc, s.n_colloc, p.t0, s.data_t_end);
  const bool two = s.unknowns == "r_and_K";
  const pinn::LogisticInverseLoss loss(two ? pinn::LogisticUnknowns::r_and_K
                                           : pinn::LogisticUnknowns::r,
                                       p.K, p.p0, p.t0, colloc, data, s.lambda_data,
                                       s.normalized);
  const Vector raw0 = loss.raw_from_values(two ? Vector{{s.r_init, s.K_init}}
                                               : Vector::Constant(1, s.r_init));
  const auto net0 = pinn::xavier_init(with_io(s.hidden, 1), s.schedule.seed, s.output);
  const auto res = pinn::train_pinn(loss, net0, raw0, s.schedule);
  const Vector vals = loss.scalar_values(res.scalars_raw);
  const double K_hat = two ? vals(1) : p.K;
  const Matrix ev = Vector::LinSpaced(s.n_eval, p.t0, s.data_t_end).transpose();
  const double rel =
      pinn::network_rel_l2(res.net, ev, [&p](double t, double) { return logistic_exact(t, p); },
                           s.normalized ? K_hat : 1.0);
  Vector rel_err(vals.size());
  rel_err(0) = std::abs(vals(0) - p.r) / std::abs(p.r);
  if (two) rel_err(1) = std::abs(vals(1) - p.K) / p.K;
  report["results"] = history_summary(res);
  report["results"]["params_hat"] = vec_json(vals);
  report["results"]["rel_errors"] = vec_json(rel_err);
  report["results"]["rel_l2_error"] = rel;
  table.header = {"r_true", "r_hat", "r_rel_err"};
  if (two) table.header.insert(table.header.end(), {"K_true", "K_hat", "K_rel_err"});
  table.header.insert(table.header.end(), {"final_loss", "rel_l2_error"});
  std::vector<std::string> row{format_sci(p.r), format_sci(vals(0)), format_sci(rel_err(0))};
  if (two) row.insert(row.end(), {format_sci(p.K), format_sci(vals(1)), format_sci(rel_err(1))});
  row.insert(row.end(), {format_sci(res.best_loss), format_sci(rel)});
  table.rows.push_back(std::move(row));
  write_pinn_artifacts(dir, res, loss, s.schedule);
  return !res.aborted;
}

Matrix pme_eval_points(int n) {
  // Offset past the training blocks so evaluation points are fresh.
  Matrix p = pinn::sobol_2d(n, 2000).transpose();
  p.row(1) = (2.0 * p.row(1).array() - 1.0).matrix();
  return p;
}

bool run_pinn_pme(const PinnPmeSpec& s, const fs::path& dir, json& report, Table& table) {
  const pinn::CollocationSets sets = pinn::make_pme_collocation(s.colloc);
  const pinn::PmeLoss loss(sets, s.beta, s.inverse, s.lambda_u, s.inverse ? s.lambda_s : 0.0);
  const Vector raw0 = s.inverse ? Vector::Constant(1, s.beta0) : Vector();
  const auto net0 = pinn::xavier_init(with_io(s.hidden, 2), s.schedule.seed);
  const auto res = pinn::train_pinn(loss, net0, raw0, s.schedule);
  const BarenblattParams bp = s.colloc.barenblatt;
  const auto exact = [bp](double t, double x) { return barenblatt(t, x, bp); };
  const double rel = pinn::network_rel_l2(res.net, pme_eval_points(s.n_eval), exact);
  report["results"] = history_summary(res);
  report["results"]["rel_l2_error"] = rel;
  table.header = {"optimizer", "adam_epochs", "lbfgs_iterations", "final_loss", "rel_l2_error"};
  std::vector<std::string> row{s.schedule.lbfgs_max_iter > 0 ? "adam+lbfgs" : "adam",
                               fmt_int(res.adam_epochs_run), fmt_int(res.lbfgs_iterations),
                               format_sci(res.best_loss), format_sci(rel)};
  if (s.inverse) {
    const double b = res.scalars_raw(0);
    report["results"]["beta0"] = s.beta0;
    report["results"]["beta_hat"] = b;
    report["results"]["beta_rel_error"] = std::abs(b - 3.0) / 3.0;
    table.header.insert(table.header.begin(), "beta0");
    table.header.insert(table.header.end(), {"beta_hat", "beta_rel_err"});
    row.insert(row.begin(), format_sci(s.beta0));
    row.insert(row.end(), {format_sci(b), format_sci(std::abs(b - 3.0) / 3.0)});
  }
  table.rows.push_back(std::move(row));

  // Predicted field on a tensor grid for plotting.
  const Grid1D tg(0.0, 1.0, s.field_nt - 1), xg(-1.0, 1.0, s.field_nx - 1);
  Matrix pts(2, static_cast<Eigen::Index>(tg.size()) * xg.size());
  for (int k = 0; k < tg.size(); ++k) {
    for (int i = 0; i < xg.size(); ++i) pts.col(k * xg.size() + i) << tg.point(k), xg.point(i);
  }
  const pinn::Jet j = pinn::mlp_forward(res.net, pts, pinn::JetOrder::value);
  Field2D f(tg, xg);
  for (int k = 0; k < tg.size(); ++k) {
    for (int i = 0; i < xg.size(); ++i) f.values(k, i) = j.u(k * xg.size() + i);
  }
  write_field(dir, f, {{"solver", "pinn"}, {"beta", s.inverse ? res.scalars_raw(0) : s.beta},
                       {"delta", bp.delta}});
  write_pinn_artifacts(dir, res, loss, s.schedule);
  return !res.aborted;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string format_sci(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

void validate_config(const json& config) { parse(config); }

ExperimentOutcome run_experiment(const json& config) {
  const Parsed p = parse(config);
  const auto start = std::chrono::steady_clock::now();
  ExperimentOutcome out;
  const fs::path dir = resolve_output(p.common.output_dir);
  out.output_dir = dir.string();

  json report = {{"problem", p.common.problem}, {"seed", p.common.seed}, {"config", config}};
  if (!p.common.label.empty()) report["label"] = p.common.label;
  Table table;
  bool ok = true;
  try {
    if (p.logistic_direct) {
      ok = run_logistic_direct(*p.logistic_direct, report, table);
    } else if (p.logistic_inverse) {
      ok = run_logistic_inverse(*p.logistic_inverse, p.common.seed, dir, report, table);
    } else if (p.pme_direct) {
      ok = run_pme_direct(*p.pme_direct, dir, report, table);
    } else if (p.pme_inverse) {
      ok = run_pme_inverse(*p.pme_inverse, p.common.seed, dir, report, table);
    } else if (p.heat) {
      ok = run_heat(*p.heat, dir, report, table);
    } else if (p.pinn_logistic_direct) {
      ok = run_pinn_logistic_direct(*p.pinn_logistic_direct, dir, report, table);
    } else if (p.pinn_logistic_inverse) {
      ok = run_pinn_logistic_inverse(*p.pinn_logistic_inverse, dir, report, table);
    } else {
      ok = run_pinn_pme(*p.pinn_pme, dir, report, table);
    }
  } catch (const DomainError&) {
    throw;
  } catch (const Error& e) {
    ok = false;
    report["error"] = e.what();
  }
  report["converged"] = ok;
  report["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(dir / "report.json", report);
  if (!table.header.empty()) write_text(dir / "table.csv", table.str());
  out.report = std::move(report);
  out.converged = ok;
  return out;
}

std::pair<std::string, std::vector<json>> parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ConfigError("--axis: expected name=v1,v2,...");
  }
  const std::string name = spec.substr(0, eq);
  std::vector<json> values;
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw ConfigError("--axis: empty value");
    try {
      values.push_back(json::parse(item));
    } catch (const json::parse_error&) {
      values.push_back(item);  // bare word, e.g. a method name
    }
  }
  return {name, values};
}

void set_path(json& config, const std::string& dotted, const json& value) {
  json* node = &config;
  std::stringstream ss(dotted);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  if (keys.empty()) throw ConfigError("--axis: empty key path");
  for (size_t i = 0; i + 1 < keys.size(); ++i) {
    json& next = (*node)[keys[i]];
    if (next.is_null()) next = json::object();
    if (!next.is_object()) throw ConfigError(keys[i] + ": not an object");
    node = &next;
  }
  (*node)[keys.back()] = value;
}

SweepOutcome run_sweep(const json& base, const std::string& axis, const std::vector<json>& values) {
  if (values.empty()) throw ConfigError("--axis: no values");
  const Parsed p = parse(base);
  const fs::path root = resolve_output(p.common.output_dir);

  // Numeric axes are reported in ascending order.
  std::vector<json> sorted = values;
  if (std::all_of(sorted.begin(), sorted.end(), [](const json& v) { return v.is_number(); })) {
    std::stable_sort(sorted.begin(), sorted.end(), [](const json& a, const json& b) {
      return a.get<double>() < b.get<double>();
    });
  }
  std::vector<json> configs;
  for (const auto& v : sorted) {
    json c = base;
    set_path(c, axis, v);
    const std::string tag = axis + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
    c["output_dir"] = (fs::path(p.common.output_dir) / tag).string();
    validate_config(c);  // type-check every row before running any
    configs.push_back(std::move(c));
  }

  SweepOutcome out;
  out.output_dir = root.string();
  Table summary;
  json rows = json::array();
  for (size_t i = 0; i < configs.size(); ++i) {
    ExperimentOutcome r;
    try {
      r = run_experiment(configs[i]);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      r.converged = false;
      r.report = {{"error", e.what()}};
    }
    out.all_converged = out.all_converged && r.converged;
    // Merge the row's table under a leading axis column.
    std::ifstream in(fs::path(r.output_dir) / "table.csv");
    std::string header, line;
    std::getline(in, header);
    if (summary.header.empty() && !header.empty()) {
      summary.header.push_back(axis);
      std::stringstream hs(header);
      std::string cell;
      while (std::getline(hs, cell, ',')) summary.header.push_back(cell);
    }
    const std::string v = sorted[i].is_string() ? sorted[i].get<std::string>() : sorted[i].dump();
    bool any = false;
    while (std::getline(in, line)) {
      std::vector<std::string> row{v};
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) row.push_back(cell);
      if (!line.empty() && line.back() == ',') row.push_back("");
      summary.rows.push_back(std::move(row));
      any = true;
    }
    if (!any) summary.rows.push_back({v});
    json row = r.report;
    row["axis_value"] = sorted[i];
    rows.push_back(std::move(row));
    out.rows.push_back(std::move(r));
  }
  write_text(root / "table.csv", summary.str());
  write_json(root / "report.json", {{"axis", axis}, {"rows", rows}});
  return out;
}

}  // namespace invlab
