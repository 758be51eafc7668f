#include "moodkit/training.hpp"

#include <cmath>

#include <ATen/CPUGeneratorImpl.h>

#include "moodkit/errors.hpp"

namespace moodkit {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 2) throw ConfigError("train: batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (lr_decay_every < 1) throw ConfigError("train: lr_decay_every must be >= 1");
  if (!(lr_decay_factor > 0.0) || lr_decay_factor > 1.0) {
    throw ConfigError("train: lr_decay_factor must lie in (0, 1]");
  }
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw ConfigError("train: holdout_fraction must lie in [0, 1)");
  }
}

double TrainConfig::learning_rate_at(std::int64_t epoch) const {
  return learning_rate * std::pow(lr_decay_factor, static_cast<double>(epoch / lr_decay_every));
}

nlohmann::json to_json(const TrainConfig& config) {
  return {{"epochs", config.epochs},
          {"batch_size", config.batch_size},
          {"learning_rate", config.learning_rate},
          {"lr_decay_every", config.lr_decay_every},
          {"lr_decay_factor", config.lr_decay_factor},
          {"seed", config.seed},
          {"holdout_fraction", config.holdout_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_decay_every = j.value("lr_decay_every", c.lr_decay_every);
  c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
  c.seed = j.value("seed", c.seed);
  c.holdout_fraction = j.value("holdout_fraction", c.holdout_fraction);
  return c;
}

void seed_everything(std::uint64_t seed) {
  torch::manual_seed(seed);
  at::set_num_threads(1);
}

torch::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

namespace {

std::vector<torch::Tensor> split_batches(const torch::Tensor& order, std::int64_t batch_size) {
  const auto size = order.size(0);
  std::vector<torch::Tensor> batches;
  for (std::int64_t start = 0; start < size; start += batch_size) {
    auto end = std::min(size, start + batch_size);
    if (size - end == 1) end = size;
    batches.push_back(order.slice(0, start, end));
    if (end == size) break;
  }
  return batches;
}

}  // namespace

std::vector<torch::Tensor> shuffled_batches(std::int64_t size, std::int64_t batch_size,
                                            torch::Generator& generator) {
  return split_batches(torch::randperm(size, generator, torch::kLong), batch_size);
}

std::vector<torch::Tensor> ordered_batches(std::int64_t size, std::int64_t batch_size) {
  return split_batches(torch::arange(size, torch::kLong), batch_size);
}

void set_learning_rate(torch::optim::Adam& optimizer, double lr) {
  for (auto& group : optimizer.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

double accuracy(const torch::Tensor& predictions, const torch::Tensor& targets) {
  if (predictions.numel() == 0) return 0.0;
  return predictions.eq(targets).to(torch::kDouble).mean().item<double>();
}

}  // namespace moodkit
