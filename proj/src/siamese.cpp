#include "moodkit/siamese.hpp"

#include <cmath>

#include "moodkit/checkpoint.hpp"
#include "moodkit/errors.hpp"
#include "moodkit/log.hpp"

namespace moodkit {
namespace {

void check_images(const torch::Tensor& images, const char* who) {
  if (!images.defined() || images.dim() != 4 || images.size(1) != 3) {
    throw StructuralError(std::string(who) + ": expected images of shape [N, 3, H, W]");
  }
}

const char* reading_name(ContrastiveReading reading) {
  return reading == ContrastiveReading::similarity ? "similarity" : "distance";
}

// dot / sqrt(|a|^2 |b|^2). For bitwise-equal rows this is exactly 1.
torch::Tensor cosine(const torch::Tensor& a, const torch::Tensor& b) {
  const auto dot = (a * b).sum(1);
  const auto norms = (a * a).sum(1) * (b * b).sum(1);
  return (dot / norms.clamp_min(1e-24).sqrt()).clamp(-1.0, 1.0);
}

}  // namespace

// ---------------------------------------------------------------------------

ConvEncoderImpl::ConvEncoderImpl(std::int64_t embedding_dim, std::int64_t base_width)
    : embedding_dim_(embedding_dim) {
  if (embedding_dim < 1 || base_width < 1) throw ConfigError("conv encoder: widths must be >= 1");
  const std::vector<std::int64_t> widths{base_width, 2 * base_width, 4 * base_width, 4 * base_width};
  torch::nn::Sequential seq;
  std::int64_t in = 3;
  for (const auto w : widths) {
    seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, w, 3).padding(1).bias(false)));
    seq->push_back(torch::nn::BatchNorm2d(w));
    seq->push_back(torch::nn::ReLU());
    seq->push_back(torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2).ceil_mode(true)));
    in = w;
  }
  seq->push_back(torch::nn::AdaptiveAvgPool2d(torch::nn::AdaptiveAvgPool2dOptions(1)));
  seq->push_back(torch::nn::Flatten());
  features_ = register_module("features", seq);
  project_ = register_module("project", torch::nn::Linear(in, embedding_dim));
}

torch::Tensor ConvEncoderImpl::forward(const torch::Tensor& images) {
  check_images(images, "conv encoder");
  return project_->forward(features_->forward(images));
}

LinearEncoderImpl::LinearEncoderImpl(std::int64_t input_pixels, std::int64_t embedding_dim)
    : input_pixels_(input_pixels), embedding_dim_(embedding_dim) {
  project_ = register_module("project", torch::nn::Linear(input_pixels, embedding_dim));
}

torch::Tensor LinearEncoderImpl::forward(const torch::Tensor& images) {
  check_images(images, "linear encoder");
  auto flat = images.flatten(1);
  if (flat.size(1) != input_pixels_) throw StructuralError("linear encoder: wrong image size");
  return project_->forward(flat);
}

torch::Tensor IdentityEncoderImpl::forward(const torch::Tensor& images) {
  check_images(images, "identity encoder");
  auto flat = images.flatten(1);
  if (flat.size(1) != input_pixels_) throw StructuralError("identity encoder: wrong image size");
  return flat;
}

// ---------------------------------------------------------------------------

void SiameseSpec::validate() const {
  if (head_widths.empty() || head_widths.back() != 2) {
    throw ConfigError("siamese: the head must end in 2 logits");
  }
  if (embedding_dim < 1) throw ConfigError("siamese: embedding_dim must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("siamese: dropout must lie in [0, 1)");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("siamese: lambda must lie in [0, 1]");
  if (image_size < 1) throw ConfigError("siamese: image_size must be >= 1");
}

nlohmann::json to_json(const SiameseSpec& spec) {
  return {{"encoder", spec.encoder},
          {"encoder_width", spec.encoder_width},
          {"embedding_dim", spec.embedding_dim},
          {"head_widths", spec.head_widths},
          {"dropout", spec.dropout},
          {"margin", spec.margin},
          {"lambda", spec.lambda},
          {"reading", reading_name(spec.reading)},
          {"image_size", spec.image_size}};
}

SiameseSpec siamese_spec_from_json(const nlohmann::json& j) {
  SiameseSpec s;
  s.encoder = j.value("encoder", s.encoder);
  s.encoder_width = j.value("encoder_width", s.encoder_width);
  s.embedding_dim = j.value("embedding_dim", s.embedding_dim);
  s.head_widths = j.value("head_widths", s.head_widths);
  s.dropout = j.value("dropout", s.dropout);
  s.margin = j.value("margin", s.margin);
  s.lambda = j.value("lambda", s.lambda);
  const auto reading = j.value("reading", std::string("similarity"));
  if (reading == "similarity") {
    s.reading = ContrastiveReading::similarity;
  } else if (reading == "distance") {
    s.reading = ContrastiveReading::distance;
  } else {
    throw ConfigError("siamese: unknown contrastive reading '" + reading + "'");
  }
  s.image_size = j.value("image_size", s.image_size);
  return s;
}

Encoder make_encoder(const SiameseSpec& spec) {
  const auto pixels = 3 * spec.image_size * spec.image_size;
  if (spec.encoder == "conv4") {
    return std::make_shared<ConvEncoderImpl>(spec.embedding_dim, spec.encoder_width);
  }
  if (spec.encoder == "linear") return std::make_shared<LinearEncoderImpl>(pixels, spec.embedding_dim);
  if (spec.encoder == "identity") return std::make_shared<IdentityEncoderImpl>(pixels);
  throw ConfigError("siamese: unknown encoder '" + spec.encoder + "'");
}

SiameseNetImpl::SiameseNetImpl(Encoder encoder, std::vector<std::int64_t> head_widths,
                               double dropout)
    : encoder_(std::move(encoder)) {
  if (!encoder_) throw StructuralError("siamese: missing encoder");
  register_module("encoder", encoder_);
  head_ = register_module("head", MlpHead(2 * encoder_->output_dim(), std::move(head_widths), dropout));
}

SiameseOutput SiameseNetImpl::forward(const torch::Tensor& image_a, const torch::Tensor& image_b) {
  check_images(image_a, "siamese");
  check_images(image_b, "siamese");
  if (image_a.sizes() != image_b.sizes()) {
    throw StructuralError("siamese: the two images of a pair must share one shape");
  }
  SiameseOutput out;
  out.embedding_a = encoder_->forward(image_a);
  out.embedding_b = encoder_->forward(image_b);
  out.logits = head_->forward(torch::cat({out.embedding_a, out.embedding_b}, 1));
  out.similarity = cosine(out.embedding_a, out.embedding_b);
  return out;
}

SiameseNet build_siamese(const SiameseSpec& spec) {
  spec.validate();
  return SiameseNet(make_encoder(spec), spec.head_widths, spec.dropout);
}

// ---------------------------------------------------------------------------

torch::Tensor contrastive_loss(const torch::Tensor& cosine_values, const torch::Tensor& targets,
                               double margin, ContrastiveReading reading) {
  if (!cosine_values.defined() || cosine_values.numel() == 0) {
    throw DataError("contrastive loss: empty batch");
  }
  if (cosine_values.numel() != targets.numel()) {
    throw StructuralError("contrastive loss: similarity and target counts differ");
  }
  const auto d = cosine_values.reshape({-1});
  const auto y = targets.reshape({-1}).to(d.scalar_type());
  if (reading == ContrastiveReading::similarity) {
    return (y * (1.0 - d) + (1.0 - y) * torch::relu(d - margin)).mean();
  }
  const auto distance = 1.0 - d;
  return (y * distance + (1.0 - y) * torch::relu(margin - distance)).mean();
}

double contrastive_loss(const std::vector<double>& cosine_values, const std::vector<int>& targets,
                        double margin) {
  if (cosine_values.empty()) throw DataError("contrastive loss: empty batch");
  if (cosine_values.size() != targets.size()) {
    throw StructuralError("contrastive loss: similarity and target counts differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < cosine_values.size(); ++i) {
    const double y = targets[i];
    sum += y * (1.0 - cosine_values[i]) + (1.0 - y) * std::max(0.0, cosine_values[i] - margin);
  }
  return sum / static_cast<double>(cosine_values.size());
}

namespace {
void check_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
}
}  // namespace

torch::Tensor total_siamese_loss(const torch::Tensor& bce, const torch::Tensor& contrastive,
                                 double lambda) {
  check_lambda(lambda);
  return lambda * bce + (1.0 - lambda) * contrastive;
}

double total_siamese_loss(double bce, double contrastive, double lambda) {
  check_lambda(lambda);
  return lambda * bce + (1.0 - lambda) * contrastive;
}

torch::Tensor siamese_objective(const SiameseOutput& out, const torch::Tensor& targets,
                                const SiameseSpec& spec) {
  const auto bce = torch::nn::functional::cross_entropy(out.logits, targets.to(torch::kLong));
  const auto contrastive = contrastive_loss(out.similarity, targets, spec.margin, spec.reading);
  return total_siamese_loss(bce, contrastive, spec.lambda);
}

// ---------------------------------------------------------------------------

PairSet PairSet::select(const torch::Tensor& indices) const {
  return {image_a.index_select(0, indices), image_b.index_select(0, indices),
          targets.index_select(0, indices)};
}

SiameseTrainResult train_siamese(const PairSet& pairs, const SiameseSpec& spec,
                                 const TrainConfig& config) {
  spec.validate();
  config.validate();
  const auto total = pairs.size();
  if (total < 4) throw DataError("train_siamese: need at least 4 pairs");
  const auto positives = pairs.targets.sum().item<std::int64_t>();
  if (positives == 0 || positives == total) {
    throw DataError("train_siamese: pair set contains a single class; the contrastive objective "
                    "needs both similar and dissimilar pairs");
  }

  auto split_gen = make_generator(config.seed ^ 0x5eedULL);
  const auto order = torch::randperm(total, split_gen, torch::kLong);
  const auto holdout = static_cast<std::int64_t>(std::llround(config.holdout_fraction * total));
  const auto train_set = pairs.select(order.slice(0, holdout));
  const auto heldout_set = pairs.select(order.slice(0, 0, holdout));

  seed_everything(config.seed);
  auto net = build_siamese(spec);
  torch::optim::Adam optimizer(net->parameters(), torch::optim::AdamOptions(config.learning_rate));
  auto order_gen = make_generator(config.seed);

  SiameseTrainResult result;
  result.train_pairs = train_set.size();
  result.heldout_pairs = heldout_set.size();
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    set_learning_rate(optimizer, config.learning_rate_at(epoch));
    net->train();
    double loss_sum = 0.0;
    std::int64_t seen = 0;
    for (const auto& batch : shuffled_batches(train_set.size(), config.batch_size, order_gen)) {
      const auto b = train_set.select(batch);
      optimizer.zero_grad();
      const auto out = net->forward(b.image_a, b.image_b);
      const auto loss = siamese_objective(out, b.targets, spec);
      loss.backward();
      optimizer.step();
      loss_sum += loss.item<double>() * static_cast<double>(b.size());
      seen += b.size();
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(seen));
    log::debug("siamese epoch ", epoch + 1, "/", config.epochs, " loss ", result.epoch_loss.back());
  }

  result.model = SiameseModel(spec, net, true);
  result.train_accuracy = pair_accuracy(result.model, train_set);
  result.heldout_accuracy =
      heldout_set.size() > 0 ? pair_accuracy(result.model, heldout_set) : result.train_accuracy;
  log::info("siamese: train accuracy ", result.train_accuracy, ", held-out accuracy ",
            result.heldout_accuracy, " (", result.heldout_pairs, " pairs)");
  return result;
}

Delta delta_from_logits(const torch::Tensor& logits) {
  if (logits.numel() != 2) throw StructuralError("delta_from_logits: expected 2 logits");
  return delta_from_class(static_cast<int>(logits.reshape({-1}).argmax().item<std::int64_t>()));
}

std::vector<Delta> pseudo_label_batch(SiameseModel& model, const torch::Tensor& frames_a,
                                      const torch::Tensor& frames_b) {
  if (!model.trained()) throw StructuralError("pseudo_label: model is not trained");
  torch::NoGradGuard no_grad;
  model.net()->eval();
  const auto logits = model.net()->forward(frames_a, frames_b).logits;
  const auto classes = logits.argmax(1);
  std::vector<Delta> labels;
  labels.reserve(static_cast<std::size_t>(classes.size(0)));
  for (std::int64_t i = 0; i < classes.size(0); ++i) {
    labels.push_back(delta_from_class(static_cast<int>(classes[i].item<std::int64_t>())));
  }
  return labels;
}

Delta pseudo_label(SiameseModel& model, const torch::Tensor& frame_a, const torch::Tensor& frame_b) {
  if (frame_a.dim() != 3 || frame_b.dim() != 3) {
    throw StructuralError("pseudo_label: expected single frames of shape [3, H, W]");
  }
  return pseudo_label_batch(model, frame_a.unsqueeze(0), frame_b.unsqueeze(0)).front();
}

double pair_accuracy(SiameseModel& model, const PairSet& pairs) {
  if (!model.trained()) throw StructuralError("pair_accuracy: model is not trained");
  if (pairs.size() == 0) return 0.0;
  torch::NoGradGuard no_grad;
  model.net()->eval();
  std::int64_t correct = 0;
  for (const auto& batch : ordered_batches(pairs.size(), 256)) {
    const auto b = pairs.select(batch);
    const auto predicted = model.net()->forward(b.image_a, b.image_b).logits.argmax(1);
    correct += predicted.eq(b.targets.to(torch::kLong)).sum().item<std::int64_t>();
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

nlohmann::json save_siamese(const std::filesystem::path& path, SiameseModel& model,
                            const std::string& config_hash) {
  if (!model.trained()) throw StructuralError("save_siamese: model is not trained");
  return save_checkpoint(path, *model.net(), "siamese", to_json(model.spec()), config_hash);
}

SiameseModel load_siamese(const std::filesystem::path& path) {
  const auto meta = read_checkpoint_meta(path, "siamese");
  auto spec = siamese_spec_from_json(meta.at("spec"));
  auto net = build_siamese(spec);
  load_checkpoint_weights(path, *net);
  net->eval();
  return SiameseModel(std::move(spec), std::move(net), true);
}

}  // namespace moodkit
