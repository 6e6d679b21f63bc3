#include "invlab/pinn/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <iomanip>

namespace invlab::pinn {

using nlohmann::json;

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json layers = json::array();
  for (size_t l = 0; l < ckpt.net.weights.size(); ++l) {
    const Matrix& w = ckpt.net.weights[l];
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(w.size()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) flat.push_back(w(i, j));
    }
    const Vector& b = ckpt.net.biases[l];
    layers.push_back({{"n_out", w.rows()},
                      {"n_in", w.cols()},
                      {"weights", flat},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  const TrainSchedule& s = ckpt.schedule;
  json j = {
      {"layers", layers},
      {"output_activation", to_string(ckpt.net.output)},
      {"scalars", ckpt.scalars},
      {"seed", s.seed},
      {"schedule",
       {{"adam_epochs", s.adam_epochs},
        {"adam_lr", s.adam_lr},
        {"lbfgs_max_iter", s.lbfgs_max_iter},
        {"lbfgs_memory", s.lbfgs_memory},
        {"early_stopping", s.early_stopping},
        {"patience", s.patience},
        {"min_delta", s.min_delta}}},
  };
  std::ofstream out(path);
  if (!out) throw Error("write_checkpoint: cannot open " + path);
  out << j.dump(2) << '\n';
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_checkpoint: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
    Checkpoint c;
    for (const auto& layer : j.at("layers")) {
      const int n_out = layer.at("n_out").get<int>();
      const int n_in = layer.at("n_in").get<int>();
      const auto flat = layer.at("weights").get<std::vector<double>>();
      const auto bias = layer.at("bias").get<std::vector<double>>();
      if (flat.size() != static_cast<size_t>(n_out) * n_in ||
          bias.size() != static_cast<size_t>(n_out)) {
        throw DomainError("read_checkpoint: layer arrays do not match their shapes");
      }
      Matrix w(n_out, n_in);
      for (int i = 0; i < n_out; ++i) {
        for (int k = 0; k < n_in; ++k) w(i, k) = flat[static_cast<size_t>(i) * n_in + k];
      }
      c.net.weights.push_back(std::move(w));
      c.net.biases.push_back(Eigen::Map<const Vector>(bias.data(), n_out));
    }
    c.net.output = output_activation_from_string(j.at("output_activation").get<std::string>());
    c.net.validate();
    c.scalars = j.at("scalars").get<std::map<std::string, double>>();
    const json& s = j.at("schedule");
    c.schedule.seed = j.at("seed").get<std::uint64_t>();
    c.schedule.adam_epochs = s.at("adam_epochs").get<int>();
    c.schedule.adam_lr = s.at("adam_lr").get<double>();
    c.schedule.lbfgs_max_iter = s.at("lbfgs_max_iter").get<int>();
    c.schedule.lbfgs_memory = s.at("lbfgs_memory").get<int>();
    c.schedule.early_stopping = s.at("early_stopping").get<bool>();
    c.schedule.patience = s.at("patience").get<int>();
    c.schedule.min_delta = s.at("min_delta").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw DomainError(std::string("read_checkpoint: ") + e.what());
  }
}

void write_loss_history(const std::string& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path);
  if (!out) throw Error("write_loss_history: cannot open " + path);
  out << "epoch,loss\n" << std::setprecision(17);
  for (const auto& row : history) out << row.epoch << ',' << row.loss << '\n';
}

}  // namespace invlab::pinn
