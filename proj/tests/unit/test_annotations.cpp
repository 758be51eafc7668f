#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "../oracles.hpp"
#include "printers.hpp"
#include "moodkit/annotations.hpp"
#include "moodkit/errors.hpp"

using namespace moodkit;

namespace {

AnnotationTrack track_of(const std::vector<double>& valence) {
  AnnotationTrack t;
  t.video_id = "v";
  for (std::size_t i = 0; i < valence.size(); ++i) t.records.push_back({static_cast<std::int64_t>(i), valence[i], {}, {}});
  return t;
}

std::vector<double> repeat(std::initializer_list<std::pair<double, int>> parts) {
  std::vector<double> out;
  for (const auto& [v, n] : parts) out.insert(out.end(), static_cast<std::size_t>(n), v);
  return out;
}

std::string csv(const std::vector<std::string>& rows) {
  std::string s = "frame,valence,arousal,emotion\n";
  for (const auto& r : rows) s += r + "\n";
  return s;
}

}  // namespace

TEST_CASE("bins follow the printed brackets") {
  CHECK(valence_bin(-0.3) == Mood::neutral);
  CHECK(valence_bin(0.3) == Mood::neutral);
  CHECK(valence_bin(0.31) == Mood::positive);
  CHECK(valence_bin(-0.31) == Mood::negative);
  CHECK(valence_bin(-1.0) == Mood::negative);
  CHECK(valence_bin(1.0) == Mood::positive);
  CHECK(valence_bin(std::nextafter(-0.3, -1.0)) == Mood::negative);
  CHECK(valence_bin(std::nextafter(0.3, 1.0)) == Mood::positive);
}

TEST_CASE("parse keeps in-range rows") {
  const auto t = parse_annotations_text(csv({"0,0.5,,", "1,0.6,0.1,happy"}), "a");
  CHECK(t.records.size() == 2);
  CHECK(t.dropped_frames == 0);
  CHECK(t.records[1].emotion == Emotion::happy);
  CHECK(t.records[1].arousal.value() == doctest::Approx(0.1));
  CHECK_FALSE(t.records[0].emotion.has_value());
}

TEST_CASE("parse drops out-of-range valence and counts it") {
  const auto t = parse_annotations_text(csv({"0,0.5,,", "1,1.7,,", "2,-0.2,,"}), "a");
  REQUIRE(t.records.size() == 2);
  CHECK(t.dropped_frames == 1);
  CHECK(t.records[0].frame_index == 0);
  CHECK(t.records[1].frame_index == 2);
  // dropped, never clamped
  CHECK(t.records[1].valence == doctest::Approx(-0.2));
}

TEST_CASE("parse drops rows with out-of-range arousal") {
  const auto t = parse_annotations_text(csv({"0,0.5,2.0,", "1,0.5,-0.5,"}), "a");
  CHECK(t.records.size() == 1);
  CHECK(t.dropped_frames == 1);
}

TEST_CASE("empty input is a rejected track") {
  CHECK_THROWS_AS(parse_annotations_text("", "a"), RejectedTrackError);
  CHECK_THROWS_AS(parse_annotations_text(csv({}), "a"), RejectedTrackError);
  CHECK_THROWS_AS(parse_annotations_text(csv({"0,-1.5,,", "1,3,,"}), "a"), RejectedTrackError);
}

TEST_CASE("malformed rows name their line") {
  const auto line_of = [](const std::string& text) {
    try {
      parse_annotations_text(text, "a");
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of(csv({"0,0.5,,", "1,abc,,"})) == 3);
  CHECK(line_of(csv({"0,0.5,,", "1,0.5"})) == 3);
  CHECK(line_of(csv({"0,0.5,,", "1,0.5,,grumpy"})) == 3);
  CHECK(line_of(csv({"3,0.5,,", "2,0.5,,"})) == 3);
  CHECK(line_of("frame,valence\n0,0.1\n") == 1);
  CHECK(line_of(csv({"-1,0.5,,"})) == 2);
}

TEST_CASE("frame order is checked across dropped rows") {
  CHECK_THROWS_AS(parse_annotations_text(csv({"0,0.5,,", "5,9,,", "4,0.1,,"}), "a"), ParseError);
}

TEST_CASE("mood examples") {
  CHECK(derive_mood_label(track_of(repeat({{0.5, 10}}))) == Mood::positive);
  CHECK(derive_mood_label(track_of(repeat({{0.5, 5}, {0.0, 7}, {-0.5, 3}}))) == Mood::neutral);
  CHECK(derive_mood_label(track_of(repeat({{-0.3, 4}, {0.31, 4}}))) == Mood::neutral);
}

TEST_CASE("ties resolve neutral, then negative, then positive") {
  CHECK(derive_mood_label(track_of(repeat({{0.9, 3}, {-0.9, 3}}))) == Mood::negative);
  CHECK(derive_mood_label(track_of(repeat({{-0.9, 3}, {0.9, 3}}))) == Mood::negative);
  CHECK(derive_mood_label(track_of(repeat({{0.9, 3}, {0.0, 3}}))) == Mood::neutral);
  CHECK(derive_mood_label(track_of(repeat({{0.9, 2}, {0.0, 1}, {0.9, 2}}))) == Mood::positive);
}

TEST_CASE("runs are counted over bins, not raw values") {
  // 0.35, 0.5, 0.9 all sit in the positive bin.
  CHECK(derive_mood_label(track_of({0.35, 0.5, 0.9, 0.0, 0.0})) == Mood::positive);
}

TEST_CASE("dropped rows neither break nor extend a run") {
  const auto t = parse_annotations_text(csv({"0,0.5,,", "1,0.6,,", "2,5,,", "3,0.7,,", "4,0,,", "5,0,,"}), "a");
  CHECK(t.dropped_frames == 1);
  CHECK(derive_mood_label(t) == Mood::positive);
}

TEST_CASE("mood matches the brute-force run oracle") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 60);
  std::uniform_int_distribution<int> pick(0, 6);
  const double levels[] = {-1.0, -0.31, -0.3, 0.0, 0.3, 0.31, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    // sticky random walk over the boundary values to create runs
    int cur = pick(rng);
    for (auto& x : v) {
      if (rng() % 3 == 0) cur = pick(rng);
      x = levels[cur];
    }
    REQUIRE(mood_value(derive_mood_label(track_of(v))) == oracle::mood_label(v));
  }
}

TEST_CASE("reversal keeps the multiset of run lengths") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = u(rng);
    auto r = v;
    std::reverse(r.begin(), r.end());
    std::vector<std::size_t> a;
    std::vector<std::size_t> b;
    for (const auto& run : bin_runs(track_of(v))) a.push_back(run.length);
    for (const auto& run : bin_runs(track_of(r))) b.push_back(run.length);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(a == oracle::run_lengths(v));
  }
}

TEST_CASE("derive_delta_gt") {
  CHECK(derive_delta_gt(Emotion::happy, Emotion::happy) == Delta::similar);
  CHECK(derive_delta_gt(Emotion::happy, Emotion::sad) == Delta::dissimilar);
  CHECK(derive_delta_gt(Emotion::neutral, Emotion::neutral) == Delta::similar);
  CHECK(delta_class(Delta::similar) == 1);
  CHECK(delta_class(Delta::dissimilar) == 0);
  CHECK_FALSE(derive_delta_gt(std::optional<Emotion>{}, std::optional<Emotion>{Emotion::sad}).has_value());
  CHECK_FALSE(derive_delta_gt(std::optional<Emotion>{Emotion::sad}, std::optional<Emotion>{}).has_value());
  CHECK(derive_delta_gt(std::optional<Emotion>{Emotion::sad}, std::optional<Emotion>{Emotion::sad}) ==
        Delta::similar);
}

TEST_CASE("emotion names round-trip") {
  for (int i = 0; i < kEmotionCount; ++i) {
    const auto e = static_cast<Emotion>(i);
    CHECK(parse_emotion(to_string(e)) == e);
  }
  CHECK_FALSE(parse_emotion("Happy").has_value());
}

TEST_CASE("mood record json has exactly three fields") {
  const MoodRecord r{"vid7", Mood::negative, 4};
  const auto j = to_json(r);
  CHECK(j.size() == 3);
  CHECK(j.at("mood") == -1);
  CHECK(j.at("dropped_frames") == 4);
  const auto back = mood_record_from_json(j);
  CHECK(back.video_id == "vid7");
  CHECK(back.mood == Mood::negative);
  CHECK(back.dropped_frames == 4);
}

TEST_CASE("mood class mapping") {
  CHECK(mood_class(Mood::negative) == 0);
  CHECK(mood_class(Mood::neutral) == 1);
  CHECK(mood_class(Mood::positive) == 2);
  for (int c = 0; c < kMoodClasses; ++c) CHECK(mood_class(mood_from_class(c)) == c);
  CHECK_THROWS(mood_from_class(3));
}
