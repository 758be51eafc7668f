#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "moodkit/annotations.hpp"
#include "moodkit/layers.hpp"
#include "moodkit/training.hpp"

namespace moodkit {

// ---------------------------------------------------------------------------
// Image encoders
// ---------------------------------------------------------------------------

/// Maps a batch of images [N, 3, H, W] to embeddings [N, output_dim()].
/// Any module with this shape contract can be plugged into the twin network,
/// including an externally trained face encoder.
class EncoderImpl : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& images) = 0;
  virtual std::int64_t output_dim() const = 0;
  virtual std::string name() const = 0;
};
using Encoder = std::shared_ptr<EncoderImpl>;

/// Four Conv-BN-ReLU-MaxPool blocks, global average pooling, then a linear
/// map to the embedding width.
class ConvEncoderImpl : public EncoderImpl {
 public:
  ConvEncoderImpl(std::int64_t embedding_dim, std::int64_t base_width);
  torch::Tensor forward(const torch::Tensor& images) override;
  std::int64_t output_dim() const override { return embedding_dim_; }
  std::string name() const override { return "conv4"; }

 private:
  std::int64_t embedding_dim_;
  torch::nn::Sequential features_{nullptr};
  torch::nn::Linear project_{nullptr};
};

/// Single linear layer over flattened pixels (small toy used in tests).
class LinearEncoderImpl : public EncoderImpl {
 public:
  LinearEncoderImpl(std::int64_t input_pixels, std::int64_t embedding_dim);
  torch::Tensor forward(const torch::Tensor& images) override;
  std::int64_t output_dim() const override { return embedding_dim_; }
  std::string name() const override { return "linear"; }

 private:
  std::int64_t input_pixels_;
  std::int64_t embedding_dim_;
  torch::nn::Linear project_{nullptr};
};

/// Flattens the image: the embedding is the pixels themselves.
class IdentityEncoderImpl : public EncoderImpl {
 public:
  explicit IdentityEncoderImpl(std::int64_t input_pixels) : input_pixels_(input_pixels) {}
  torch::Tensor forward(const torch::Tensor& images) override;
  std::int64_t output_dim() const override { return input_pixels_; }
  std::string name() const override { return "identity"; }

 private:
  std::int64_t input_pixels_;
};

// ---------------------------------------------------------------------------
// Twin network
// ---------------------------------------------------------------------------

/// How `d` enters the contrastive hinge. `similarity` treats d as cosine
/// similarity: similar pairs are pulled to d = 1, dissimilar pairs pushed
/// below the margin. `distance` uses d = 1 - cos with hinge max(0, m - d).
enum class ContrastiveReading { similarity, distance };

struct SiameseSpec {
  std::string encoder = "conv4";
  std::int64_t encoder_width = 16;
  std::int64_t embedding_dim = 256;
  std::vector<std::int64_t> head_widths{256, 128, 2};
  double dropout = 0.3;
  double margin = 0.25;
  double lambda = 0.5;
  ContrastiveReading reading = ContrastiveReading::similarity;
  std::int64_t image_size = 32;

  std::int64_t concat_dim() const { return 2 * embedding_dim; }
  void validate() const;
};

nlohmann::json to_json(const SiameseSpec& spec);
SiameseSpec siamese_spec_from_json(const nlohmann::json& j);

Encoder make_encoder(const SiameseSpec& spec);

struct SiameseOutput {
  torch::Tensor logits;      // [N, 2]; index 1 = similar
  torch::Tensor similarity;  // [N] cosine similarity of the two embeddings
  torch::Tensor embedding_a;
  torch::Tensor embedding_b;
};

class SiameseNetImpl : public torch::nn::Module {
 public:
  SiameseNetImpl(Encoder encoder, std::vector<std::int64_t> head_widths, double dropout);

  SiameseOutput forward(const torch::Tensor& image_a, const torch::Tensor& image_b);

  const Encoder& encoder() const { return encoder_; }
  MlpHead& head() { return head_; }

 private:
  Encoder encoder_;
  MlpHead head_{nullptr};
};
TORCH_MODULE(SiameseNet);

SiameseNet build_siamese(const SiameseSpec& spec);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean over the batch of y(1 - d) + (1 - y) max(0, d - m), with d the cosine
/// similarity. Under the distance reading d is 1 - cos and the hinge is
/// max(0, m - d). `d` holds cos values in both cases.
torch::Tensor contrastive_loss(const torch::Tensor& cosine, const torch::Tensor& targets,
                               double margin,
                               ContrastiveReading reading = ContrastiveReading::similarity);
double contrastive_loss(const std::vector<double>& cosine, const std::vector<int>& targets,
                        double margin);

/// lambda * L_B + (1 - lambda) * L_C. lambda must lie in [0, 1].
torch::Tensor total_siamese_loss(const torch::Tensor& bce, const torch::Tensor& contrastive,
                                 double lambda);
double total_siamese_loss(double bce, double contrastive, double lambda);

/// Binary cross-entropy over the two logits, combined with the contrastive
/// term on the embeddings' cosine.
torch::Tensor siamese_objective(const SiameseOutput& out, const torch::Tensor& targets,
                                const SiameseSpec& spec);

// ---------------------------------------------------------------------------
// Training and labeling
// ---------------------------------------------------------------------------

/// Pairs of images [N, 3, H, W] with targets [N] (1 = same emotion category).
struct PairSet {
  torch::Tensor image_a;
  torch::Tensor image_b;
  torch::Tensor targets;

  std::int64_t size() const { return targets.defined() ? targets.size(0) : 0; }
  PairSet select(const torch::Tensor& indices) const;
};

/// Trained twin network plus the spec it was built from.
class SiameseModel {
 public:
  SiameseModel() = default;
  SiameseModel(SiameseSpec spec, SiameseNet net, bool trained)
      : spec_(std::move(spec)), net_(std::move(net)), trained_(trained) {}

  const SiameseSpec& spec() const { return spec_; }
  SiameseNet& net() { return net_; }
  bool trained() const { return trained_ && !net_.is_empty(); }

 private:
  SiameseSpec spec_;
  SiameseNet net_{nullptr};
  bool trained_ = false;
};

struct SiameseTrainResult {
  SiameseModel model;
  double heldout_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::int64_t train_pairs = 0;
  std::int64_t heldout_pairs = 0;
  std::vector<double> epoch_loss;
};

/// Adam with step decay over `config`. Refuses single-class data.
SiameseTrainResult train_siamese(const PairSet& pairs, const SiameseSpec& spec,
                                 const TrainConfig& config);

/// Argmax over the two logits; index 1 = similar.
Delta delta_from_logits(const torch::Tensor& logits);

/// Emotion-change label for a pair of frames [3, H, W], in inference mode.
Delta pseudo_label(SiameseModel& model, const torch::Tensor& frame_a, const torch::Tensor& frame_b);
/// Batched form over [N, 3, H, W] pairs.
std::vector<Delta> pseudo_label_batch(SiameseModel& model, const torch::Tensor& frames_a,
                                      const torch::Tensor& frames_b);

/// Pair accuracy of the model in inference mode.
double pair_accuracy(SiameseModel& model, const PairSet& pairs);

nlohmann::json save_siamese(const std::filesystem::path& path, SiameseModel& model,
                            const std::string& config_hash);
SiameseModel load_siamese(const std::filesystem::path& path);

}  // namespace moodkit
