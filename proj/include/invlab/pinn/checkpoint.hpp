#pragma once

// JSON model checkpoints and loss-history CSV.

#include "invlab/pinn/mlp.hpp"
#include "invlab/pinn/train.hpp"

#include <map>
#include <string>
#include <vector>

namespace invlab::pinn {

struct Checkpoint {
  MlpParams net;
  std::map<std::string, double> scalars;  // physical values
  TrainSchedule schedule;
};

/// Layer shapes, row-major weights, biases, scalars, seed and schedule.
void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

/// Columns: epoch, loss.
void write_loss_history(const std::string& path, const std::vector<HistoryRow>& history);

}  // namespace invlab::pinn
