#include "moodkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "moodkit/errors.hpp"

namespace moodkit {

EvalReport evaluate_predictions(std::span<const int> predictions, std::span<const int> labels,
                                int num_classes) {
  if (predictions.size() != labels.size()) {
    throw StructuralError("evaluate: predictions and labels differ in length");
  }
  if (labels.empty()) throw DataError("evaluate: no samples");
  int max_id = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predictions[i] < 0) throw StructuralError("evaluate: negative class id");
    max_id = std::max({max_id, labels[i], predictions[i]});
  }
  const int classes = std::max(num_classes, max_id + 1);

  EvalReport report;
  report.total = static_cast<std::int64_t>(labels.size());
  report.confusion.assign(classes, std::vector<std::int64_t>(classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++report.confusion[labels[i]][predictions[i]];

  std::int64_t correct = 0;
  report.per_class.resize(classes);
  for (int c = 0; c < classes; ++c) {
    std::int64_t predicted = 0;
    std::int64_t actual = 0;
    for (int k = 0; k < classes; ++k) {
      predicted += report.confusion[k][c];
      actual += report.confusion[c][k];
    }
    const auto tp = report.confusion[c][c];
    correct += tp;
    auto& m = report.per_class[c];
    m.support = actual;
    m.precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    m.recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                          : 0.0;
    report.weighted_f1 += static_cast<double>(actual) * m.f1;
  }
  report.weighted_f1 /= static_cast<double>(report.total);
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.total);
  return report;
}

double weighted_f1(std::span<const int> predictions, std::span<const int> labels) {
  return evaluate_predictions(predictions, labels).weighted_f1;
}

double percent_change(double cell, double base) {
  if (base == 0.0) return cell == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (cell - base) / base;
}

nlohmann::json to_json(const EvalReport& report, const std::vector<std::string>& class_names) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    classes.push_back({{"class", c < class_names.size() ? class_names[c] : std::to_string(c)},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support}});
  }
  return {{"per_class", classes},
          {"confusion", report.confusion},
          {"weighted_f1", report.weighted_f1},
          {"accuracy", report.accuracy},
          {"total", report.total}};
}

std::string format_report(const EvalReport& report, const std::vector<std::string>& class_names,
                          const std::string& title) {
  std::ostringstream os;
  os << title << '\n';
  os << std::left << std::setw(12) << "class" << std::right << std::setw(11) << "precision"
     << std::setw(9) << "recall" << std::setw(9) << "f1" << std::setw(10) << "support" << '\n';
  os << std::fixed << std::setprecision(4);
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    os << std::left << std::setw(12) << (c < class_names.size() ? class_names[c] : std::to_string(c))
       << std::right << std::setw(11) << m.precision << std::setw(9) << m.recall << std::setw(9)
       << m.f1 << std::setw(10) << m.support << '\n';
  }
  os << "weighted f1 " << report.weighted_f1 << "  accuracy " << report.accuracy << "  n "
     << report.total << '\n';
  os << "confusion (rows = true, columns = predicted)\n";
  for (const auto& row : report.confusion) {
    for (const auto v : row) os << std::setw(8) << v;
    os << '\n';
  }
  return os.str();
}

std::vector<std::string> mood_class_names() { return {"negative", "neutral", "positive"}; }
std::vector<std::string> delta_class_names() { return {"dissimilar", "similar"}; }

}  // namespace moodkit
