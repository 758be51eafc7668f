#include "moodkit/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "moodkit/log.hpp"
#include "moodkit/metrics.hpp"

namespace moodkit {

std::string format_metric(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

AblationResult run_ablation(const std::string& axis, const std::vector<AblationCellSpec>& cells,
                            const CellRunner& runner) {
  AblationResult result;
  result.axis = axis;
  for (const auto& spec : cells) {
    AblationCell cell;
    cell.spec = spec;
    try {
      log::info("ablate ", axis, ": ", spec.axis_value, " / ", spec.model);
      cell.f1 = runner(spec);
    } catch (const std::exception& e) {
      cell.error = e.what();
      log::warn("ablate ", axis, ": cell ", spec.axis_value, " / ", spec.model, " failed: ", e.what());
    }
    result.cells.push_back(std::move(cell));
  }
  for (auto& cell : result.cells) {
    if (!cell.f1) continue;
    if (!cell.spec.baseline) {
      cell.pct_change = 0.0;
      continue;
    }
    const auto& base = result.cells.at(*cell.spec.baseline);
    if (!base.f1) continue;
    const double pct = percent_change(*cell.f1, *base.f1);
    if (std::isfinite(pct)) cell.pct_change = pct;
  }
  return result;
}

std::vector<AblationCellSpec> paired_cells(const std::vector<std::string>& axis_values) {
  std::vector<AblationCellSpec> cells;
  for (const auto& value : axis_values) {
    const auto base = cells.size();
    cells.push_back({value, "resmood", std::nullopt});
    cells.push_back({value, "resmoodemo", base});
  }
  return cells;
}

std::string ablation_csv(const AblationResult& result) {
  std::ostringstream os;
  os << "axis_value,model,f1,pct_change\n";
  for (const auto& c : result.cells) {
    os << c.spec.axis_value << ',' << c.spec.model << ',' << (c.f1 ? format_metric(*c.f1) : "") << ','
       << (c.pct_change ? format_metric(*c.pct_change) : "") << '\n';
  }
  return os.str();
}

std::string format_ablation(const AblationResult& result) {
  std::size_t value_w = 10;
  std::size_t model_w = 5;
  for (const auto& c : result.cells) {
    value_w = std::max(value_w, c.spec.axis_value.size());
    model_w = std::max(model_w, c.spec.model.size());
  }
  std::ostringstream os;
  os << "ablation: " << result.axis << '\n';
  const auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size(), ' '); };
  os << pad("axis_value", value_w) << "  " << pad("model", model_w) << "  " << "      f1" << "  "
     << "  % change\n";
  for (const auto& c : result.cells) {
    char f1[32] = "  failed";
    char pct[32] = "         -";
    if (c.f1) std::snprintf(f1, sizeof(f1), "%8.4f", *c.f1);
    if (c.pct_change) std::snprintf(pct, sizeof(pct), "%+10.2f", *c.pct_change);
    os << pad(c.spec.axis_value, value_w) << "  " << pad(c.spec.model, model_w) << "  " << f1 << "  " << pct;
    if (!c.error.empty()) os << "  (" << c.error << ')';
    os << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const AblationResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json j{{"axis_value", c.spec.axis_value}, {"model", c.spec.model}};
    j["f1"] = c.f1 ? nlohmann::json(*c.f1) : nlohmann::json(nullptr);
    j["pct_change"] = c.pct_change ? nlohmann::json(*c.pct_change) : nlohmann::json(nullptr);
    if (!c.error.empty()) j["error"] = c.error;
    cells.push_back(std::move(j));
  }
  return {{"axis", result.axis}, {"cells", cells}};
}

std::string grid_csv(const std::vector<GridPoint>& points) {
  std::ostringstream os;
  os << "T,alpha,f1\n";
  for (const auto& p : points) {
    char head[64];
    std::snprintf(head, sizeof(head), "%g,%g,", p.temperature, p.alpha);
    os << head << (p.f1 ? format_metric(*p.f1) : "") << '\n';
  }
  return os.str();
}

}  // namespace moodkit
