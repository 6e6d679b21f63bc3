#include "invlab/pinn/train.hpp"

#include "invlab/optimize.hpp"

#include <cmath>
#include <limits>

namespace invlab::pinn {

void TrainSchedule::validate() const {
  if (adam_epochs < 0) throw DomainError("TrainSchedule: adam_epochs must be >= 0");
  if (adam_epochs > 0 && !(adam_lr > 0.0)) throw DomainError("TrainSchedule: adam_lr must be > 0");
  if (lbfgs_max_iter < 0) throw DomainError("TrainSchedule: lbfgs_max_iter must be >= 0");
  if (lbfgs_memory < 1) throw DomainError("TrainSchedule: lbfgs_memory must be >= 1");
  if (early_stopping && patience < 1) {
    throw DomainError("TrainSchedule: patience must be >= 1 when early stopping is enabled");
  }
  if (!(min_delta >= 0.0)) throw DomainError("TrainSchedule: min_delta must be >= 0");
}

namespace {

// Best-so-far bookkeeping shared by both phases.
class Monitor {
 public:
  Monitor(const TrainSchedule& s, std::vector<HistoryRow>& history)
      : s_(s), history_(history) {}

  void start_phase() {
    stall_ = 0;
    mark_ = best_;
  }

  /// Records one loss evaluation at theta; returns false when patience runs out.
  bool record(const std::string& phase, double loss, const Vector& theta) {
    history_.push_back({static_cast<int>(history_.size()) + 1, phase, loss});
    if (loss < best_) {
      best_ = loss;
      best_theta_ = theta;
    }
    if (loss < mark_ - s_.min_delta) {
      mark_ = loss;
      stall_ = 0;
    } else {
      ++stall_;
    }
    return !(s_.early_stopping && stall_ >= s_.patience);
  }

  double best() const { return best_; }
  const Vector& best_theta() const { return best_theta_; }
  bool has_best() const { return best_theta_.size() > 0; }

 private:
  const TrainSchedule& s_;
  std::vector<HistoryRow>& history_;
  double best_ = std::numeric_limits<double>::infinity();
  double mark_ = std::numeric_limits<double>::infinity();
  Vector best_theta_;
  int stall_ = 0;
};

}  // namespace

TrainResult train_pinn(const PinnLoss& loss, const MlpParams& net0, const Vector& raw0,
                       const TrainSchedule& schedule) {
  schedule.validate();
  net0.validate();
  if (raw0.size() != loss.num_scalars()) {
    throw DomainError("train_pinn: expected " + std::to_string(loss.num_scalars()) +
                      " trainable scalars");
  }
  const Eigen::Index np = net0.num_params();
  Vector theta(np + raw0.size());
  theta.head(np) = net0.flatten();
  theta.tail(raw0.size()) = raw0;

  TrainResult res;
  Monitor mon(schedule, res.history);

  if (schedule.adam_epochs > 0) {
    AdamOptions opt;
    opt.lr = schedule.adam_lr;
    AdamStepper stepper(theta.size(), opt);
    Vector g;
    mon.start_phase();
    for (int epoch = 1; epoch <= schedule.adam_epochs; ++epoch) {
      double f;
      try {
        f = loss.evaluate_flat(net0, theta, &g);
      } catch (const NonFiniteError& e) {
        res.aborted = true;
        res.message = std::string(e.what()) + " at Adam epoch " + std::to_string(epoch);
        break;
      }
      if (!g.allFinite()) {
        res.aborted = true;
        res.message = "non-finite gradient at Adam epoch " + std::to_string(epoch);
        break;
      }
      res.adam_epochs_run = epoch;
      const bool keep_going = mon.record("adam", f, theta);
      if (!keep_going) {
        res.stopped_early = true;
        break;
      }
      stepper.step(theta, g);
    }
    if (mon.has_best()) theta = mon.best_theta();
  }

  if (!res.aborted && schedule.lbfgs_max_iter > 0) {
    ScalarFn fn;
    fn.f = [&](const Vector& th) { return loss.evaluate_flat(net0, th, nullptr); };
    fn.value_grad = [&](const Vector& th, Vector& g) {
      try {
        return loss.evaluate_flat(net0, th, &g);
      } catch (const NonFiniteError&) {
        g = Vector::Zero(th.size());
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    LbfgsOptions lo;
    lo.memory = schedule.lbfgs_memory;
    lo.n_max = schedule.lbfgs_max_iter;
    lo.tol = 1e-12;
    // The starting point counts as the first L-BFGS evaluation.
    mon.start_phase();
    const double f0 = loss.evaluate_flat(net0, theta, nullptr);
    mon.record("lbfgs", f0, theta);
    bool stopped = false;
    const SolveOutcome out = lbfgs(fn, theta, lo, [&](int, double f, const Vector& th) {
      if (!std::isfinite(f)) return true;
      if (!mon.record("lbfgs", f, th)) {
        stopped = true;
        return false;
      }
      return true;
    });
    res.lbfgs_iterations = out.iterations;
    if (stopped) res.stopped_early = true;
    if (!out.message.empty() && !stopped && !out.converged) res.message = "L-BFGS: " + out.message;
    theta = mon.best_theta();
  }

  res.net = net0;
  res.net.unflatten(theta.head(np));
  res.scalars_raw = theta.tail(raw0.size());
  res.best_loss = mon.best();
  return res;
}

}  // namespace invlab::pinn
