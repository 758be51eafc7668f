#include "moodkit/moodnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "moodkit/checkpoint.hpp"
#include "moodkit/errors.hpp"
#include "moodkit/log.hpp"
#include "moodkit/metrics.hpp"

namespace moodkit {

namespace F = torch::nn::functional;

std::string to_string(MoodModelKind kind) {
  return kind == MoodModelKind::resmood ? "resmood" : "resmoodemo";
}

MoodModelKind parse_mood_model_kind(const std::string& name) {
  if (name == "resmood") return MoodModelKind::resmood;
  if (name == "resmoodemo") return MoodModelKind::resmoodemo;
  throw ConfigError("unknown model '" + name + "' (expected resmood or resmoodemo)");
}

void ModelSpec::validate() const {
  if (heads.mood_widths.empty() || heads.mood_widths.back() != kMoodClasses) {
    throw ConfigError("model: the mood head must end in 3 logits");
  }
  if (kind == MoodModelKind::resmoodemo &&
      (heads.delta_widths.empty() || heads.delta_widths.back() != kDeltaClasses)) {
    throw ConfigError("model: the delta head must end in 2 logits");
  }
  if (heads.dropout < 0.0 || heads.dropout >= 1.0) throw ConfigError("model: dropout must lie in [0, 1)");
  if (input_size < 8) throw ConfigError("model: input_size must be >= 8");
  if (frames < 2) throw ConfigError("model: frames must be >= 2");
}

nlohmann::json to_json(const ModelSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"backbone", to_json(spec.backbone)},
          {"mood_widths", spec.heads.mood_widths},
          {"delta_widths", spec.heads.delta_widths},
          {"dropout", spec.heads.dropout},
          {"input_size", spec.input_size},
          {"frames", spec.frames}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  spec.kind = parse_mood_model_kind(j.value("kind", std::string("resmood")));
  if (j.contains("backbone")) spec.backbone = backbone_spec_from_json(j.at("backbone"));
  spec.heads.mood_widths = j.value("mood_widths", spec.heads.mood_widths);
  spec.heads.delta_widths = j.value("delta_widths", spec.heads.delta_widths);
  spec.heads.dropout = j.value("dropout", spec.heads.dropout);
  spec.input_size = j.value("input_size", spec.input_size);
  spec.frames = j.value("frames", spec.frames);
  return spec;
}

// ---------------------------------------------------------------------------

MoodNetImpl::MoodNetImpl(const ModelSpec& spec) : spec_(spec) {
  spec_.validate();
  backbone_ = make_backbone(spec_.backbone);
  register_module("backbone", backbone_);
  mood_head_ = register_module(
      "mood_head", MlpHead(backbone_->output_dim(), spec_.heads.mood_widths, spec_.heads.dropout));
  if (spec_.kind == MoodModelKind::resmoodemo) {
    delta_head_ = register_module(
        "delta_head", MlpHead(backbone_->output_dim(), spec_.heads.delta_widths, spec_.heads.dropout));
  }
}

void MoodNetImpl::check_input(const torch::Tensor& clips) const {
  if (!clips.defined() || clips.dim() != 5 || clips.size(1) != spec_.frames || clips.size(2) != 3 ||
      clips.size(3) != spec_.input_size || clips.size(4) != spec_.input_size) {
    throw StructuralError("mood net: expected clips [N, " + std::to_string(spec_.frames) + ", 3, " +
                          std::to_string(spec_.input_size) + ", " +
                          std::to_string(spec_.input_size) + "]");
  }
}

MoodOutput MoodNetImpl::forward(const torch::Tensor& clips) {
  check_input(clips);
  const auto features = backbone_->forward(clips);
  MoodOutput out;
  out.mood_logits = mood_head_->forward(features);
  if (!delta_head_.is_empty()) out.delta_logits = delta_head_->forward(features);
  return out;
}

torch::Tensor MoodNetImpl::mood_logits(const torch::Tensor& clips) {
  check_input(clips);
  return mood_head_->forward(backbone_->forward(clips));
}

MoodNet build_mood_net(const ModelSpec& spec) { return MoodNet(spec); }

torch::Tensor joint_loss(const torch::Tensor& mood_logits, const torch::Tensor& mood_targets,
                         const torch::Tensor& delta_logits, const torch::Tensor& delta_targets) {
  if (!mood_logits.defined() || mood_logits.dim() != 2 || mood_logits.size(1) != kMoodClasses) {
    throw StructuralError("joint_loss: mood logits must be [N, 3]");
  }
  auto loss = F::cross_entropy(mood_logits, mood_targets.to(torch::kLong));
  if (!delta_logits.defined()) return loss;
  if (delta_logits.dim() != 2 || delta_logits.size(1) != kDeltaClasses) {
    throw StructuralError("joint_loss: delta logits must be [N, 2]");
  }
  if (!delta_targets.defined() || (delta_targets < 0).any().item<bool>()) {
    throw DataError("joint_loss: every clip needs a delta label when the delta head is trained");
  }
  return loss + F::cross_entropy(delta_logits, delta_targets.to(torch::kLong));
}

// ---------------------------------------------------------------------------

bool ClipTensorSet::all_deltas_present() const {
  return size() > 0 && (deltas >= 0).all().item<bool>();
}

ClipTensorSet ClipTensorSet::select(const torch::Tensor& indices) const {
  ClipTensorSet out;
  out.clips = clips.index_select(0, indices);
  out.moods = moods.index_select(0, indices);
  out.deltas = deltas.index_select(0, indices);
  const auto* idx = indices.data_ptr<std::int64_t>();
  out.specs.reserve(static_cast<std::size_t>(indices.numel()));
  for (std::int64_t i = 0; i < indices.numel(); ++i) out.specs.push_back(specs.at(idx[i]));
  return out;
}

ClipTensorSet load_clip_tensors(const std::vector<ClipSpec>& clips, FrameSource& frames) {
  ClipTensorSet set;
  set.specs = clips;
  if (clips.empty()) {
    set.moods = torch::empty({0}, torch::kLong);
    set.deltas = torch::empty({0}, torch::kLong);
    return set;
  }
  std::vector<torch::Tensor> stacked;
  std::vector<std::int64_t> moods;
  std::vector<std::int64_t> deltas;
  stacked.reserve(clips.size());
  for (const auto& clip : clips) {
    std::vector<torch::Tensor> clip_frames;
    clip_frames.reserve(clip.frame_indices.size());
    for (const auto index : clip.frame_indices) clip_frames.push_back(frames.frame(clip.video_id, index));
    stacked.push_back(torch::stack(clip_frames));
    moods.push_back(mood_class(clip.mood));
    deltas.push_back(clip.delta ? delta_class(*clip.delta) : -1);
  }
  set.clips = torch::stack(stacked);
  set.moods = torch::tensor(moods, torch::kLong);
  set.deltas = torch::tensor(deltas, torch::kLong);
  return set;
}

std::pair<std::vector<ClipSpec>, std::vector<ClipSpec>> split_by_video(
    const std::vector<ClipSpec>& clips, double holdout_fraction, std::uint64_t seed) {
  // Stratified by video mood so every class that has at least two videos
  // appears on both sides.
  std::map<int, std::vector<std::string>> by_mood;
  {
    std::map<std::string, int> video_mood;
    for (const auto& clip : clips) video_mood.emplace(clip.video_id, mood_value(clip.mood));
    for (const auto& [video, mood] : video_mood) by_mood[mood].push_back(video);
  }
  std::set<std::string> heldout;
  auto gen = make_generator(seed ^ 0x51u);
  for (auto& [mood, videos] : by_mood) {
    const auto count = static_cast<std::int64_t>(videos.size());
    auto take = static_cast<std::int64_t>(std::llround(holdout_fraction * static_cast<double>(count)));
    if (holdout_fraction > 0.0 && count >= 2) take = std::max<std::int64_t>(take, 1);
    take = std::min(take, count - 1);
    const auto order = torch::randperm(count, gen, torch::kLong);
    for (std::int64_t i = 0; i < take; ++i) heldout.insert(videos[order[i].item<std::int64_t>()]);
  }
  std::pair<std::vector<ClipSpec>, std::vector<ClipSpec>> out;
  for (const auto& clip : clips) {
    (heldout.count(clip.video_id) ? out.second : out.first).push_back(clip);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<int> target_classes(const torch::Tensor& labels) {
  const auto flat = labels.to(torch::kLong).contiguous();
  const auto* p = flat.data_ptr<std::int64_t>();
  return std::vector<int>(p, p + flat.numel());
}

namespace {

std::vector<int> predict(MoodNet& model, const ClipTensorSet& set, bool delta) {
  std::vector<int> out;
  if (set.size() == 0) return out;
  torch::NoGradGuard no_grad;
  model->eval();
  for (const auto& batch : ordered_batches(set.size(), 64)) {
    const auto clips = set.clips.index_select(0, batch);
    torch::Tensor logits;
    if (delta) {
      logits = model->forward(clips).delta_logits;
      if (!logits.defined()) throw StructuralError("predict_deltas: model has no delta head");
    } else {
      logits = model->mood_logits(clips);
    }
    const auto classes = target_classes(logits.argmax(1));
    out.insert(out.end(), classes.begin(), classes.end());
  }
  return out;
}

double f1_on(MoodNet& model, const ClipTensorSet& set) {
  if (set.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const auto predicted = predict(model, set, false);
  const auto truth = target_classes(set.moods);
  return evaluate_predictions(predicted, truth, kMoodClasses).weighted_f1;
}

}  // namespace

std::vector<int> predict_moods(MoodNet& model, const ClipTensorSet& set) {
  return predict(model, set, false);
}

std::vector<int> predict_deltas(MoodNet& model, const ClipTensorSet& set) {
  return predict(model, set, true);
}

MoodTrainResult train_with_loss(const ClipTensorSet& train, const ClipTensorSet& val,
                                const ModelSpec& spec, const TrainConfig& config,
                                const BatchLoss& batch_loss) {
  spec.validate();
  config.validate();
  if (train.size() < 2) throw DataError("train: need at least two training clips");

  seed_everything(config.seed);
  MoodTrainResult result;
  result.model = build_mood_net(spec);
  auto& model = result.model;
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(config.learning_rate));
  auto order_gen = make_generator(config.seed);

  result.best_val_f1 = -1.0;
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochStats stats;
    stats.learning_rate = config.learning_rate_at(epoch);
    set_learning_rate(optimizer, stats.learning_rate);
    model->train();
    double loss_sum = 0.0;
    for (const auto& batch : shuffled_batches(train.size(), config.batch_size, order_gen)) {
      const auto b = train.select(batch);
      optimizer.zero_grad();
      const auto loss = batch_loss(model, b, batch);
      loss.backward();
      optimizer.step();
      loss_sum += loss.item<double>() * static_cast<double>(b.size());
    }
    stats.loss = loss_sum / static_cast<double>(train.size());
    stats.val_f1 = f1_on(model, val);
    if (!std::isnan(stats.val_f1) && stats.val_f1 > result.best_val_f1) {
      result.best_val_f1 = stats.val_f1;
      result.best_epoch = epoch + 1;
    }
    log::debug(to_string(spec.kind), " epoch ", epoch + 1, "/", config.epochs, " loss ", stats.loss,
               " val f1 ", stats.val_f1);
    result.history.push_back(stats);
  }
  if (result.best_val_f1 < 0.0) result.best_val_f1 = std::numeric_limits<double>::quiet_NaN();
  result.final_val_f1 = result.history.back().val_f1;
  result.train_f1 = f1_on(model, train);
  return result;
}

MoodTrainResult train_mood_model(const ClipTensorSet& train, const ClipTensorSet& val,
                                 const ModelSpec& spec, const TrainConfig& config) {
  const bool with_delta = spec.kind == MoodModelKind::resmoodemo;
  if (with_delta && !train.all_deltas_present()) {
    throw ConfigError("resmoodemo needs a delta label on every training clip");
  }
  return train_with_loss(train, val, spec, config, [with_delta](MoodNet& model, const ClipTensorSet& b, const torch::Tensor&) {
    if (!with_delta) return joint_loss(model->mood_logits(b.clips), b.moods);
    const auto out = model->forward(b.clips);
    return joint_loss(out.mood_logits, b.moods, out.delta_logits, b.deltas);
  });
}

nlohmann::json save_mood_net(const std::filesystem::path& path, MoodNet& model,
                             const std::string& kind, const std::string& config_hash) {
  return save_checkpoint(path, *model, kind, to_json(model->spec()), config_hash);
}

MoodNet load_mood_net(const std::filesystem::path& path, std::string* kind) {
  const auto meta = read_checkpoint_meta(path);
  if (kind) *kind = meta.value("kind", std::string{});
  auto model = build_mood_net(model_spec_from_json(meta.at("spec")));
  load_checkpoint_weights(path, *model);
  model->eval();
  return model;
}

}  // namespace moodkit
