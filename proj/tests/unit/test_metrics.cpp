#include <doctest.h>

#include <algorithm>
#include <random>

#include "../oracles.hpp"
#include "printers.hpp"
#include "moodkit/ablation.hpp"
#include "moodkit/errors.hpp"
#include "moodkit/metrics.hpp"

using namespace moodkit;

TEST_CASE("weighted f1 examples") {
  const std::vector<int> labels{0, 0, 0, 1, 1, 2};
  CHECK(weighted_f1(labels, labels) == doctest::Approx(1.0));
  CHECK(weighted_f1(std::vector<int>{0, 0, 1, 1}, std::vector<int>{1, 1, 0, 0}) == doctest::Approx(0.0));
  const std::vector<int> pred{0, 0, 1, 1, 1, 2};
  const auto report = evaluate_predictions(pred, labels);
  CHECK(report.per_class[0].f1 == doctest::Approx(0.8));
  CHECK(report.per_class[1].f1 == doctest::Approx(0.8));
  CHECK(report.per_class[2].f1 == doctest::Approx(1.0));
  CHECK(report.weighted_f1 == doctest::Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(report.weighted_f1 == doctest::Approx(0.8333).epsilon(1e-4));
}

TEST_CASE("weighted f1 errors") {
  CHECK_THROWS_AS(weighted_f1(std::vector<int>{0, 1}, std::vector<int>{0}), StructuralError);
  CHECK_THROWS_AS(weighted_f1(std::vector<int>{}, std::vector<int>{}), DataError);
  CHECK_THROWS_AS(weighted_f1(std::vector<int>{-1}, std::vector<int>{0}), StructuralError);
}

TEST_CASE("confusion rows sum to the class supports") {
  const std::vector<int> labels{0, 2, 2, 1, 0, 2};
  const std::vector<int> pred{1, 2, 0, 1, 0, 2};
  const auto r = evaluate_predictions(pred, labels, 3);
  for (int c = 0; c < 3; ++c) {
    std::int64_t row = 0;
    for (const auto v : r.confusion[c]) row += v;
    CHECK(row == r.per_class[c].support);
  }
  CHECK(r.total == 6);
}

TEST_CASE("a class with no members carries zero weight") {
  // class 2 only appears among predictions
  const auto r = evaluate_predictions(std::vector<int>{0, 2, 1}, std::vector<int>{0, 1, 1}, 3);
  CHECK(r.per_class[2].support == 0);
  CHECK(r.per_class[2].f1 == 0.0);
  CHECK(r.weighted_f1 == doctest::Approx(oracle::weighted_f1({0, 2, 1}, {0, 1, 1})));
}

TEST_CASE("weighted f1 matches the oracle on random vectors") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    const auto n = 1 + rng() % 40;
    std::vector<int> pred(n);
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng() % k);
      truth[i] = static_cast<int>(rng() % k);
    }
    const auto got = weighted_f1(pred, truth);
    REQUIRE(std::abs(got - oracle::weighted_f1(pred, truth)) <= 1e-9);
    REQUIRE((got >= 0.0 && got <= 1.0));
  }
}

TEST_CASE("jointly permuting pairs leaves the metrics unchanged") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> pred(30);
    std::vector<int> truth(30);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] = static_cast<int>(rng() % 3);
      truth[i] = static_cast<int>(rng() % 3);
    }
    std::vector<std::size_t> perm(pred.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> p2;
    std::vector<int> t2;
    for (const auto i : perm) {
      p2.push_back(pred[i]);
      t2.push_back(truth[i]);
    }
    const auto a = evaluate_predictions(pred, truth, 3);
    const auto b = evaluate_predictions(p2, t2, 3);
    CHECK(a.weighted_f1 == b.weighted_f1);
    CHECK(a.confusion == b.confusion);
    CHECK(a.accuracy == b.accuracy);
  }
}

TEST_CASE("percent change") {
  CHECK(percent_change(0.78, 0.65) == doctest::Approx(20.0));
  CHECK(percent_change(0.5, 0.5) == 0.0);
  CHECK(percent_change(0.0, 0.0) == 0.0);
  CHECK(percent_change(0.3, 0.6) == doctest::Approx(-50.0));
}

TEST_CASE("report rendering") {
  const auto r = evaluate_predictions(std::vector<int>{0, 1, 2, 2}, std::vector<int>{0, 1, 2, 1}, 3);
  const auto j = to_json(r, mood_class_names());
  CHECK(j.at("weighted_f1").get<double>() == doctest::Approx(r.weighted_f1));
  CHECK(j.at("confusion").size() == 3);
  const auto text = format_report(r, mood_class_names(), "val");
  CHECK(text.find("negative") != std::string::npos);
  CHECK(text.find("positive") != std::string::npos);
}

TEST_CASE("one-cell ablation equals the single run") {
  int calls = 0;
  const auto result = run_ablation("n", {{"5", "resmood", std::nullopt}}, [&](const AblationCellSpec&) {
    ++calls;
    return 0.625;
  });
  CHECK(calls == 1);
  REQUIRE(result.cells.size() == 1);
  CHECK(*result.cells[0].f1 == 0.625);
  CHECK(*result.cells[0].pct_change == 0.0);
}

TEST_CASE("a failing cell is recorded and the grid continues") {
  const auto cells = paired_cells({"3", "5"});
  REQUIRE(cells.size() == 4);
  const auto result = run_ablation("n", cells, [](const AblationCellSpec& c) {
    if (c.axis_value == "3" && c.model == "resmoodemo") throw DataError("boom");
    return c.model == "resmood" ? 0.5 : 0.6;
  });
  CHECK_FALSE(result.cells[1].f1.has_value());
  CHECK(result.cells[1].error.find("boom") != std::string::npos);
  CHECK(*result.cells[3].pct_change == doctest::Approx(20.0));
  CHECK(ablation_csv(result) ==
        "axis_value,model,f1,pct_change\n3,resmood,0.500000,0.000000\n3,resmoodemo,,\n"
        "5,resmood,0.500000,0.000000\n5,resmoodemo,0.600000,20.000000\n");
  CHECK(format_ablation(result).find("failed") != std::string::npos);
  CHECK(to_json(result).at("cells")[1].at("f1").is_null());
}

TEST_CASE("identical f1 gives zero percent change in a grid") {
  const auto result = run_ablation("t", paired_cells({"100"}), [](const AblationCellSpec&) { return 0.4; });
  CHECK(*result.cells[1].pct_change == 0.0);
}

TEST_CASE("grid csv") {
  CHECK(grid_csv({{3, 0.05, 0.75}, {5, 0.1, std::nullopt}}) == "T,alpha,f1\n3,0.05,0.750000\n5,0.1,\n");
}
