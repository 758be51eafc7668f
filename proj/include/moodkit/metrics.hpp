#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace moodkit {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

/// Per-class metrics, confusion matrix (rows = true class, columns =
/// predicted class) and the support-weighted F1.
struct EvalReport {
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::int64_t>> confusion;
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::int64_t total = 0;
};

/// `num_classes` = 0 infers the class count from the largest id seen.
/// Class ids must be non-negative. A class with no true and no predicted
/// members scores F1 = 0 and carries zero weight.
EvalReport evaluate_predictions(std::span<const int> predictions, std::span<const int> labels,
                                int num_classes = 0);

double weighted_f1(std::span<const int> predictions, std::span<const int> labels);

/// 100 * (cell - base) / base. Zero base gives 0 when the cell is also 0.
double percent_change(double cell, double base);

nlohmann::json to_json(const EvalReport& report, const std::vector<std::string>& class_names);

/// Aligned text table: one row per class, then the weighted F1 and the
/// confusion matrix.
std::string format_report(const EvalReport& report, const std::vector<std::string>& class_names,
                          const std::string& title);

std::vector<std::string> mood_class_names();
std::vector<std::string> delta_class_names();

}  // namespace moodkit
