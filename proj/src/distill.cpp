#include "moodkit/distill.hpp"

#include <algorithm>
#include <cmath>

#include "moodkit/errors.hpp"

namespace moodkit {

namespace F = torch::nn::functional;

namespace {

void check_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("temperature must be a positive finite number");
  }
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
}

}  // namespace

void DistillConfig::validate() const {
  check_temperature(temperature);
  check_alpha(alpha);
}

nlohmann::json to_json(const DistillConfig& config) {
  return {{"temperature", config.temperature}, {"alpha", config.alpha}};
}

torch::Tensor soft_targets(const torch::Tensor& logits, double temperature) {
  check_temperature(temperature);
  return torch::softmax(logits / temperature, -1);
}

std::vector<double> soft_targets(const std::vector<double>& logits, double temperature) {
  check_temperature(temperature);
  if (logits.empty()) throw StructuralError("soft_targets: empty logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / temperature);
    sum += out[i];
  }
  for (auto& p : out) p /= sum;
  return out;
}

torch::Tensor distillation_loss(const torch::Tensor& student_logits,
                                const torch::Tensor& teacher_logits, double temperature) {
  check_temperature(temperature);
  if (!student_logits.defined() || !teacher_logits.defined() ||
      student_logits.sizes() != teacher_logits.sizes()) {
    throw StructuralError("distillation_loss: student and teacher logits differ in shape");
  }
  const auto student = student_logits.dim() == 1 ? student_logits.unsqueeze(0) : student_logits;
  const auto teacher = teacher_logits.dim() == 1 ? teacher_logits.unsqueeze(0) : teacher_logits;
  const auto log_p_student = torch::log_softmax(student / temperature, -1);
  const auto log_p_teacher = torch::log_softmax(teacher / temperature, -1);
  const auto kl = (log_p_teacher.exp() * (log_p_teacher - log_p_student)).sum(-1).mean();
  return kl * (temperature * temperature);
}

torch::Tensor ts_total_loss(const torch::Tensor& student_loss, const torch::Tensor& distill_loss,
                            double alpha) {
  check_alpha(alpha);
  return alpha * student_loss + (1.0 - alpha) * distill_loss;
}

double ts_total_loss(double student_loss, double distill_loss, double alpha) {
  check_alpha(alpha);
  return alpha * student_loss + (1.0 - alpha) * distill_loss;
}

torch::Tensor teacher_logits(MoodNet& teacher, const ClipTensorSet& set) {
  torch::NoGradGuard no_grad;
  teacher->eval();
  std::vector<torch::Tensor> parts;
  for (const auto& batch : ordered_batches(set.size(), 64)) {
    parts.push_back(teacher->mood_logits(set.clips.index_select(0, batch)));
  }
  return parts.empty() ? torch::empty({0, kMoodClasses}) : torch::cat(parts);
}

MoodTrainResult train_student(MoodNet& teacher, const ClipTensorSet& train, const ClipTensorSet& val,
                              const ModelSpec& student_spec, const DistillConfig& distill,
                              const TrainConfig& config) {
  distill.validate();
  if (teacher.is_empty()) throw StructuralError("train_student: missing teacher");
  if (student_spec.kind != MoodModelKind::resmood) {
    throw ConfigError("train_student: the student must be a resmood model");
  }
  if (teacher->spec().heads.mood_widths.back() != student_spec.heads.mood_widths.back()) {
    throw StructuralError("train_student: teacher and student class counts differ");
  }
  if (teacher->spec().frames != student_spec.frames ||
      teacher->spec().input_size != student_spec.input_size) {
    throw StructuralError("train_student: teacher and student expect different clip shapes");
  }
  for (auto& p : teacher->parameters()) p.set_requires_grad(false);

  // Soft targets are computed once, aligned with `train` by row.
  const auto targets = teacher_logits(teacher, train);

  const double temperature = distill.temperature;
  const double alpha = distill.alpha;
  return train_with_loss(
      train, val, student_spec, config,
      [&targets, temperature, alpha](MoodNet& student, const ClipTensorSet& b,
                                     const torch::Tensor& rows) {
        const auto logits = student->mood_logits(b.clips);
        const auto student_loss = F::cross_entropy(logits, b.moods);
        const auto soft = targets.index_select(0, rows);
        return ts_total_loss(student_loss, distillation_loss(logits, soft, temperature), alpha);
      });
}

}  // namespace moodkit
