#include "moodkit/backbone.hpp"

#include <array>

#include "moodkit/errors.hpp"

namespace moodkit {

namespace nn = torch::nn;

std::string to_string(BackboneFamily family) {
  switch (family) {
    case BackboneFamily::toy3d: return "toy3d";
    case BackboneFamily::resnet3d_18: return "resnet3d-18";
    case BackboneFamily::resnet3d_34: return "resnet3d-34";
    case BackboneFamily::resnet3d_50: return "resnet3d-50";
  }
  return "?";
}

BackboneFamily parse_backbone_family(const std::string& name) {
  if (name == "toy3d") return BackboneFamily::toy3d;
  if (name == "resnet3d-18" || name == "18") return BackboneFamily::resnet3d_18;
  if (name == "resnet3d-34" || name == "34") return BackboneFamily::resnet3d_34;
  if (name == "resnet3d-50" || name == "50") return BackboneFamily::resnet3d_50;
  throw ConfigError("unknown backbone '" + name + "'");
}

std::int64_t BackboneSpec::resolved_output_dim() const {
  if (output_dim > 0) return output_dim;
  return family == BackboneFamily::toy3d ? 128 : 1024;
}

std::int64_t BackboneSpec::resolved_base_width() const {
  if (base_width > 0) return base_width;
  return family == BackboneFamily::toy3d ? 8 : 64;
}

nlohmann::json to_json(const BackboneSpec& spec) {
  return {{"family", to_string(spec.family)},
          {"output_dim", spec.resolved_output_dim()},
          {"base_width", spec.resolved_base_width()}};
}

BackboneSpec backbone_spec_from_json(const nlohmann::json& j) {
  BackboneSpec spec;
  spec.family = parse_backbone_family(j.value("family", std::string("toy3d")));
  spec.output_dim = j.value("output_dim", std::int64_t{0});
  spec.base_width = j.value("base_width", std::int64_t{0});
  return spec;
}

torch::Tensor to_conv3d_layout(const torch::Tensor& clips) {
  if (!clips.defined() || clips.dim() != 5 || clips.size(2) != 3) {
    throw StructuralError("backbone: expected clips of shape [N, frames, 3, H, W]");
  }
  return clips.permute({0, 2, 1, 3, 4}).contiguous();
}

// ---------------------------------------------------------------------------

Toy3dBackboneImpl::Toy3dBackboneImpl(std::int64_t base_width, std::int64_t output_dim)
    : output_dim_(output_dim) {
  nn::Sequential seq;
  std::int64_t in = 3;
  for (const auto mult : {1, 2, 4, 8}) {
    const auto out = base_width * mult;
    seq->push_back(nn::Conv3d(
        nn::Conv3dOptions(in, out, 3).stride({1, 2, 2}).padding(1).bias(false)));
    seq->push_back(nn::BatchNorm3d(out));
    seq->push_back(nn::ReLU());
    in = out;
  }
  seq->push_back(nn::AdaptiveAvgPool3d(nn::AdaptiveAvgPool3dOptions(1)));
  seq->push_back(nn::Flatten());
  features_ = register_module("features", seq);
  project_ = register_module("project", nn::Linear(in, output_dim));
}

torch::Tensor Toy3dBackboneImpl::forward(const torch::Tensor& clips) {
  return project_->forward(features_->forward(to_conv3d_layout(clips)));
}

// ---------------------------------------------------------------------------

namespace {

nn::Conv3d conv3d(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride,
                  std::int64_t pad) {
  return nn::Conv3d(nn::Conv3dOptions(in, out, k).stride(stride).padding(pad).bias(false));
}

class BasicBlock3dImpl : public nn::Module {
 public:
  static constexpr std::int64_t expansion = 1;

  BasicBlock3dImpl(std::int64_t in, std::int64_t planes, std::int64_t stride) {
    conv1_ = register_module("conv1", conv3d(in, planes, 3, stride, 1));
    bn1_ = register_module("bn1", nn::BatchNorm3d(planes));
    conv2_ = register_module("conv2", conv3d(planes, planes, 3, 1, 1));
    bn2_ = register_module("bn2", nn::BatchNorm3d(planes));
    if (stride != 1 || in != planes) {
      shortcut_ = register_module(
          "shortcut", nn::Sequential(conv3d(in, planes, 1, stride, 0), nn::BatchNorm3d(planes)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto out = torch::relu(bn1_(conv1_(x)));
    out = bn2_(conv2_(out));
    return torch::relu(out + (shortcut_.is_empty() ? x : shortcut_->forward(x)));
  }

 private:
  nn::Conv3d conv1_{nullptr}, conv2_{nullptr};
  nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr};
  nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(BasicBlock3d);

class Bottleneck3dImpl : public nn::Module {
 public:
  static constexpr std::int64_t expansion = 4;

  Bottleneck3dImpl(std::int64_t in, std::int64_t planes, std::int64_t stride) {
    const auto out = planes * expansion;
    conv1_ = register_module("conv1", conv3d(in, planes, 1, 1, 0));
    bn1_ = register_module("bn1", nn::BatchNorm3d(planes));
    conv2_ = register_module("conv2", conv3d(planes, planes, 3, stride, 1));
    bn2_ = register_module("bn2", nn::BatchNorm3d(planes));
    conv3_ = register_module("conv3", conv3d(planes, out, 1, 1, 0));
    bn3_ = register_module("bn3", nn::BatchNorm3d(out));
    if (stride != 1 || in != out) {
      shortcut_ = register_module(
          "shortcut", nn::Sequential(conv3d(in, out, 1, stride, 0), nn::BatchNorm3d(out)));
    }
  }

  torch::Tensor forward(const torch::Tensor& x) {
    auto out = torch::relu(bn1_(conv1_(x)));
    out = torch::relu(bn2_(conv2_(out)));
    out = bn3_(conv3_(out));
    return torch::relu(out + (shortcut_.is_empty() ? x : shortcut_->forward(x)));
  }

 private:
  nn::Conv3d conv1_{nullptr}, conv2_{nullptr}, conv3_{nullptr};
  nn::BatchNorm3d bn1_{nullptr}, bn2_{nullptr}, bn3_{nullptr};
  nn::Sequential shortcut_{nullptr};
};
TORCH_MODULE(Bottleneck3d);

template <typename Block>
std::int64_t add_stage(nn::Sequential& seq, std::int64_t in, std::int64_t planes, int blocks,
                       std::int64_t stride) {
  for (int i = 0; i < blocks; ++i) {
    seq->push_back(Block(in, planes, i == 0 ? stride : 1));
    in = planes * Block::ContainedType::expansion;
  }
  return in;
}

}  // namespace

ResNet3dBackboneImpl::ResNet3dBackboneImpl(int depth, std::int64_t base_width,
                                           std::int64_t output_dim)
    : output_dim_(output_dim) {
  std::array<int, 4> blocks{};
  bool bottleneck = false;
  switch (depth) {
    case 18: blocks = {2, 2, 2, 2}; break;
    case 34: blocks = {3, 4, 6, 3}; break;
    case 50: blocks = {3, 4, 6, 3}; bottleneck = true; break;
    default: throw ConfigError("resnet3d: unsupported depth " + std::to_string(depth));
  }

  stem_ = register_module(
      "stem", nn::Sequential(
                  nn::Conv3d(nn::Conv3dOptions(3, base_width, {3, 7, 7})
                                 .stride({1, 2, 2})
                                 .padding({1, 3, 3})
                                 .bias(false)),
                  nn::BatchNorm3d(base_width), nn::ReLU(),
                  nn::MaxPool3d(nn::MaxPool3dOptions({1, 3, 3}).stride({1, 2, 2}).padding({0, 1, 1}))));

  nn::Sequential stages;
  std::int64_t in = base_width;
  for (int stage = 0; stage < 4; ++stage) {
    const auto planes = base_width << stage;
    const std::int64_t stride = stage == 0 ? 1 : 2;
    in = bottleneck ? add_stage<Bottleneck3d>(stages, in, planes, blocks[stage], stride)
                    : add_stage<BasicBlock3d>(stages, in, planes, blocks[stage], stride);
  }
  stages->push_back(nn::AdaptiveAvgPool3d(nn::AdaptiveAvgPool3dOptions(1)));
  stages->push_back(nn::Flatten());
  stages_ = register_module("stages", stages);
  project_ = register_module("project", nn::Linear(in, output_dim));
}

torch::Tensor ResNet3dBackboneImpl::forward(const torch::Tensor& clips) {
  return project_->forward(stages_->forward(stem_->forward(to_conv3d_layout(clips))));
}

// ---------------------------------------------------------------------------

Backbone make_backbone(const BackboneSpec& spec) {
  const auto width = spec.resolved_base_width();
  const auto dim = spec.resolved_output_dim();
  if (width < 1 || dim < 1) throw ConfigError("backbone: widths must be >= 1");
  switch (spec.family) {
    case BackboneFamily::toy3d: return std::make_shared<Toy3dBackboneImpl>(width, dim);
    case BackboneFamily::resnet3d_18: return std::make_shared<ResNet3dBackboneImpl>(18, width, dim);
    case BackboneFamily::resnet3d_34: return std::make_shared<ResNet3dBackboneImpl>(34, width, dim);
    case BackboneFamily::resnet3d_50: return std::make_shared<ResNet3dBackboneImpl>(50, width, dim);
  }
  throw ConfigError("backbone: unknown family");
}

}  // namespace moodkit
