#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

namespace moodkit {

// Optimiser schedule shared by every trainer: Adam with a step decay.
struct TrainConfig {
  std::int64_t epochs = 30;
  std::int64_t batch_size = 128;
  double learning_rate = 1e-4;
  std::int64_t lr_decay_every = 10;
  double lr_decay_factor = 0.1;
  std::uint64_t seed = 7;
  /// Fraction of samples (or videos, for clip data) held out for validation.
  double holdout_fraction = 0.25;

  void validate() const;
  /// Learning rate in effect during `epoch` (0-based).
  double learning_rate_at(std::int64_t epoch) const;
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Seeds torch's global generator. Call before building a model so that
/// initial weights and dropout masks are reproducible.
void seed_everything(std::uint64_t seed);

/// Independent CPU generator used for data ordering.
torch::Generator make_generator(std::uint64_t seed);

/// Deterministic per-epoch permutation of [0, size) split into batches of
/// `batch_size`. A trailing batch of one sample is folded into the previous
/// batch, since batch standardisation needs at least two rows.
std::vector<torch::Tensor> shuffled_batches(std::int64_t size, std::int64_t batch_size,
                                            torch::Generator& generator);
std::vector<torch::Tensor> ordered_batches(std::int64_t size, std::int64_t batch_size);

void set_learning_rate(torch::optim::Adam& optimizer, double lr);

/// Fraction of equal entries between two integer tensors.
double accuracy(const torch::Tensor& predictions, const torch::Tensor& targets);

}  // namespace moodkit
