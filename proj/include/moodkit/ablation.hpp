#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace moodkit {

/// One cell of an ablation grid. `baseline` indexes the cell whose F1 the
/// percent change is measured against; a cell without one is a baseline.
struct AblationCellSpec {
  std::string axis_value;
  std::string model;
  std::optional<std::size_t> baseline;
};

struct AblationCell {
  AblationCellSpec spec;
  std::optional<double> f1;
  /// 100 (f1 - base) / base; 0 for baseline cells, empty when either failed.
  std::optional<double> pct_change;
  std::string error;
};

struct AblationResult {
  std::string axis;
  std::vector<AblationCell> cells;
};

/// Trains/evaluates one cell and returns its weighted F1.
using CellRunner = std::function<double(const AblationCellSpec& cell)>;

/// Runs every cell in order. A cell that throws is recorded with its message
/// and the grid carries on.
AblationResult run_ablation(const std::string& axis, const std::vector<AblationCellSpec>& cells,
                            const CellRunner& runner);

/// Pairs each axis value with a ResMood baseline and a ResMoodEmo cell.
std::vector<AblationCellSpec> paired_cells(const std::vector<std::string>& axis_values);

/// CSV `axis_value,model,f1,pct_change`; failed entries are left blank.
std::string ablation_csv(const AblationResult& result);
std::string format_ablation(const AblationResult& result);
nlohmann::json to_json(const AblationResult& result);

struct GridPoint {
  double temperature = 0.0;
  double alpha = 0.0;
  std::optional<double> f1;
};

/// CSV `T,alpha,f1`.
std::string grid_csv(const std::vector<GridPoint>& points);

/// Fixed-precision decimal used in every report.
std::string format_metric(double value);

}  // namespace moodkit
