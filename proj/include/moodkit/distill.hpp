#pragma once

#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "moodkit/moodnet.hpp"

namespace moodkit {

struct DistillConfig {
  double temperature = 3.0;
  double alpha = 0.05;

  void validate() const;
};

nlohmann::json to_json(const DistillConfig& config);

/// softmax(logits / T) along the last dimension.
torch::Tensor soft_targets(const torch::Tensor& logits, double temperature);
std::vector<double> soft_targets(const std::vector<double>& logits, double temperature);

/// T^2 * KL(softmax(teacher/T) || softmax(student/T)), averaged over the
/// batch. Accepts a single logit vector or a batch [N, k].
torch::Tensor distillation_loss(const torch::Tensor& student_logits,
                                const torch::Tensor& teacher_logits, double temperature);

/// alpha * L_S + (1 - alpha) * L_D.
torch::Tensor ts_total_loss(const torch::Tensor& student_loss, const torch::Tensor& distill_loss,
                            double alpha);
double ts_total_loss(double student_loss, double distill_loss, double alpha);

/// Mood logits of a frozen teacher for every clip, in inference mode.
torch::Tensor teacher_logits(MoodNet& teacher, const ClipTensorSet& set);

/// Trains a ResMood student against hard mood labels and the teacher's
/// softened mood logits. Delta labels in the data are ignored. The teacher is
/// frozen and never updated.
MoodTrainResult train_student(MoodNet& teacher, const ClipTensorSet& train, const ClipTensorSet& val,
                              const ModelSpec& student_spec, const DistillConfig& distill,
                              const TrainConfig& config);

}  // namespace moodkit
