#pragma once

// Adam followed by optional L-BFGS, with patience-based early stopping and
// restoration of the best parameters seen.

#include "invlab/pinn/losses.hpp"
#include "invlab/pinn/mlp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace invlab::pinn {

struct TrainSchedule {
  int adam_epochs = 1000;
  double adam_lr = 1e-3;
  int lbfgs_max_iter = 0;
  int lbfgs_memory = 10;
  bool early_stopping = true;
  int patience = 50;
  double min_delta = 1e-6;
  std::uint64_t seed = 0;  // recorded with checkpoints; initialization uses it

  void validate() const;
};

struct HistoryRow {
  int epoch = 0;  // counts Adam epochs then L-BFGS iterations
  std::string phase;
  double loss = 0.0;
};

struct TrainResult {
  MlpParams net;
  Vector scalars_raw;
  std::vector<HistoryRow> history;
  double best_loss = 0.0;
  int adam_epochs_run = 0;
  int lbfgs_iterations = 0;
  bool stopped_early = false;
  bool aborted = false;  // non-finite loss; history up to that point is kept
  std::string message;
};

/// Minimizes `loss` from (net0, raw0). Returns the best parameters seen.
TrainResult train_pinn(const PinnLoss& loss, const MlpParams& net0, const Vector& raw0,
                       const TrainSchedule& schedule);

}  // namespace invlab::pinn
