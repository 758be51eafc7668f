#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "moodkit/annotations.hpp"
#include "moodkit/backbone.hpp"
#include "moodkit/layers.hpp"
#include "moodkit/sampler.hpp"
#include "moodkit/training.hpp"

namespace moodkit {

/// resmood: backbone + mood head. resmoodemo: shared backbone feeding a mood
/// head and an emotion-change head, trained on the summed loss.
enum class MoodModelKind { resmood, resmoodemo };

std::string to_string(MoodModelKind kind);
MoodModelKind parse_mood_model_kind(const std::string& name);

struct HeadSpec {
  std::vector<std::int64_t> mood_widths{512, 256, 3};
  std::vector<std::int64_t> delta_widths{512, 256, 2};
  double dropout = 0.5;
};

struct ModelSpec {
  MoodModelKind kind = MoodModelKind::resmood;
  BackboneSpec backbone;
  HeadSpec heads;
  /// Square frame resolution fed to the backbone.
  std::int64_t input_size = 112;
  std::int64_t frames = 5;

  void validate() const;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

struct MoodOutput {
  torch::Tensor mood_logits;   // [N, 3]
  torch::Tensor delta_logits;  // [N, 2]; undefined for resmood
};

class MoodNetImpl : public torch::nn::Module {
 public:
  explicit MoodNetImpl(const ModelSpec& spec);

  MoodOutput forward(const torch::Tensor& clips);
  /// Mood logits only; skips the delta head.
  torch::Tensor mood_logits(const torch::Tensor& clips);

  const ModelSpec& spec() const { return spec_; }
  bool has_delta_head() const { return !delta_head_.is_empty(); }
  const Backbone& backbone() const { return backbone_; }
  MlpHead& mood_head() { return mood_head_; }
  MlpHead& delta_head() { return delta_head_; }

 private:
  void check_input(const torch::Tensor& clips) const;

  ModelSpec spec_;
  Backbone backbone_;
  MlpHead mood_head_{nullptr};
  MlpHead delta_head_{nullptr};
};
TORCH_MODULE(MoodNet);

MoodNet build_mood_net(const ModelSpec& spec);

/// Cross-entropy of the mood head, plus cross-entropy of the delta head when
/// `delta_logits` is defined. The two terms are summed without weights.
torch::Tensor joint_loss(const torch::Tensor& mood_logits, const torch::Tensor& mood_targets,
                         const torch::Tensor& delta_logits = {},
                         const torch::Tensor& delta_targets = {});

// ---------------------------------------------------------------------------
// Clip data
// ---------------------------------------------------------------------------

/// Supplies frames as float tensors [3, H, W] in [0, 1].
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual torch::Tensor frame(const std::string& video_id, std::int64_t index) = 0;
};

/// Clips stacked frames-first: clips [N, n, 3, H, W], moods [N] as class
/// indices, deltas [N] as class indices with -1 for a missing label.
struct ClipTensorSet {
  torch::Tensor clips;
  torch::Tensor moods;
  torch::Tensor deltas;
  std::vector<ClipSpec> specs;

  std::int64_t size() const { return moods.defined() ? moods.size(0) : 0; }
  bool all_deltas_present() const;
  ClipTensorSet select(const torch::Tensor& indices) const;
};

ClipTensorSet load_clip_tensors(const std::vector<ClipSpec>& clips, FrameSource& frames);

/// Deterministic split by video id so no video contributes to both halves.
/// At least one video stays in the training half.
std::pair<std::vector<ClipSpec>, std::vector<ClipSpec>> split_by_video(
    const std::vector<ClipSpec>& clips, double holdout_fraction, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Per-epoch record of a training run.
struct EpochStats {
  double learning_rate = 0.0;
  double loss = 0.0;
  double val_f1 = 0.0;
};

struct MoodTrainResult {
  MoodNet model{nullptr};
  std::vector<EpochStats> history;
  double best_val_f1 = 0.0;
  std::int64_t best_epoch = 0;
  double final_val_f1 = 0.0;
  double train_f1 = 0.0;
};

/// Loss for one batch given the model in training mode. `rows` holds the
/// batch's row indices into the training set. Shared by the supervised and
/// the distillation trainers.
using BatchLoss =
    std::function<torch::Tensor(MoodNet&, const ClipTensorSet& batch, const torch::Tensor& rows)>;

/// Generic loop: seeds, builds the model from `spec`, runs Adam with the step
/// schedule, evaluates weighted F1 on `val` after every epoch.
MoodTrainResult train_with_loss(const ClipTensorSet& train, const ClipTensorSet& val,
                                const ModelSpec& spec, const TrainConfig& config,
                                const BatchLoss& batch_loss);

/// Trains ResMood or ResMoodEmo. ResMoodEmo requires a delta label on every
/// training clip.
MoodTrainResult train_mood_model(const ClipTensorSet& train, const ClipTensorSet& val,
                                 const ModelSpec& spec, const TrainConfig& config);

/// Predicted mood class per clip, model in inference mode.
std::vector<int> predict_moods(MoodNet& model, const ClipTensorSet& set);
std::vector<int> predict_deltas(MoodNet& model, const ClipTensorSet& set);
std::vector<int> target_classes(const torch::Tensor& labels);

nlohmann::json save_mood_net(const std::filesystem::path& path, MoodNet& model,
                             const std::string& kind, const std::string& config_hash);
MoodNet load_mood_net(const std::filesystem::path& path, std::string* kind = nullptr);

}  // namespace moodkit
