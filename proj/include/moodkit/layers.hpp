#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

namespace moodkit {

/// Fully connected projection head. Every hidden layer is
/// Linear -> BatchNorm1d -> ReLU -> Dropout; the final layer is a bare Linear
/// that emits logits. `widths` lists the output width of each Linear.
class MlpHeadImpl : public torch::nn::Module {
 public:
  MlpHeadImpl(std::int64_t input_dim, std::vector<std::int64_t> widths, double dropout);

  torch::Tensor forward(const torch::Tensor& x);

  std::int64_t input_dim() const { return input_dim_; }
  std::int64_t output_dim() const { return widths_.back(); }

 private:
  std::int64_t input_dim_;
  std::vector<std::int64_t> widths_;
  torch::nn::Sequential layers_{nullptr};
};
TORCH_MODULE(MlpHead);

/// Total number of scalar parameters.
std::int64_t parameter_count(const torch::nn::Module& module);

}  // namespace moodkit
