#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>
#include <torch/torch.h>

namespace moodkit {

enum class BackboneFamily { toy3d, resnet3d_18, resnet3d_34, resnet3d_50 };

std::string to_string(BackboneFamily family);
BackboneFamily parse_backbone_family(const std::string& name);

struct BackboneSpec {
  BackboneFamily family = BackboneFamily::toy3d;
  /// Width of the clip representation; 0 selects the family default
  /// (128 for toy3d, 1024 for the residual networks).
  std::int64_t output_dim = 0;
  /// Channels of the first stage; 0 selects 8 for toy3d and 64 otherwise.
  std::int64_t base_width = 0;

  std::int64_t resolved_output_dim() const;
  std::int64_t resolved_base_width() const;
};

nlohmann::json to_json(const BackboneSpec& spec);
BackboneSpec backbone_spec_from_json(const nlohmann::json& j);

/// Maps clips laid out frames-first, [N, n, 3, H, W], to [N, output_dim()].
class BackboneImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& clips) = 0;
  virtual std::int64_t output_dim() const = 0;
};
using Backbone = std::shared_ptr<BackboneImpl>;

Backbone make_backbone(const BackboneSpec& spec);

/// Frames-first [N, n, 3, H, W] to the channels-first [N, 3, n, H, W] that
/// Conv3d expects. Throws StructuralError on any other rank or channel count.
torch::Tensor to_conv3d_layout(const torch::Tensor& clips);

/// Four Conv3d-BN-ReLU blocks that halve the spatial size, global average
/// pooling, then a linear map to the output width.
class Toy3dBackboneImpl : public BackboneImpl {
 public:
  Toy3dBackboneImpl(std::int64_t base_width, std::int64_t output_dim);
  torch::Tensor forward(const torch::Tensor& clips) override;
  std::int64_t output_dim() const override { return output_dim_; }

 private:
  std::int64_t output_dim_;
  torch::nn::Sequential features_{nullptr};
  torch::nn::Linear project_{nullptr};
};

/// 3D residual network (18/34 with basic blocks, 50 with bottlenecks).
class ResNet3dBackboneImpl : public BackboneImpl {
 public:
  ResNet3dBackboneImpl(int depth, std::int64_t base_width, std::int64_t output_dim);
  torch::Tensor forward(const torch::Tensor& clips) override;
  std::int64_t output_dim() const override { return output_dim_; }

 private:
  std::int64_t output_dim_;
  torch::nn::Sequential stem_{nullptr};
  torch::nn::Sequential stages_{nullptr};
  torch::nn::Linear project_{nullptr};
};

}  // namespace moodkit
