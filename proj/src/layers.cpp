#include "moodkit/layers.hpp"

#include "moodkit/errors.hpp"

namespace moodkit {

MlpHeadImpl::MlpHeadImpl(std::int64_t input_dim, std::vector<std::int64_t> widths, double dropout)
    : input_dim_(input_dim), widths_(std::move(widths)) {
  if (widths_.empty()) throw StructuralError("mlp head needs at least one layer");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  torch::nn::Sequential seq;
  std::int64_t in = input_dim_;
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    seq->push_back(torch::nn::Linear(in, widths_[i]));
    seq->push_back(torch::nn::BatchNorm1d(widths_[i]));
    seq->push_back(torch::nn::ReLU());
    if (dropout > 0.0) seq->push_back(torch::nn::Dropout(dropout));
    in = widths_[i];
  }
  seq->push_back(torch::nn::Linear(in, widths_.back()));
  layers_ = register_module("layers", seq);
}

torch::Tensor MlpHeadImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 2 || x.size(1) != input_dim_) {
    throw StructuralError("mlp head expects [N, " + std::to_string(input_dim_) + "] input");
  }
  return layers_->forward(x);
}

std::int64_t parameter_count(const torch::nn::Module& module) {
  std::int64_t count = 0;
  for (const auto& p : module.parameters()) count += p.numel();
  return count;
}

}  // namespace moodkit
