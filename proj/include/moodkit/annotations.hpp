#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace moodkit {

/// Categorical facial emotion as annotated per frame.
enum class Emotion : std::uint8_t {
  happy,
  sad,
  disgust,
  anger,
  fear,
  surprise,
  neutral,
  other,
  contempt,
};

inline constexpr int kEmotionCount = 9;

std::string_view to_string(Emotion emotion);
/// Accepts the lower-case names above; returns nullopt for anything else.
std::optional<Emotion> parse_emotion(std::string_view name);

/// Video-level mood. The numeric values are the label values themselves.
enum class Mood : std::int8_t { negative = -1, neutral = 0, positive = 1 };

inline constexpr int kMoodClasses = 3;

/// Class index used by classifiers: negative=0, neutral=1, positive=2.
inline int mood_class(Mood mood) { return static_cast<int>(mood) + 1; }
Mood mood_from_class(int class_index);
Mood mood_from_value(int value);
inline int mood_value(Mood mood) { return static_cast<int>(mood); }

/// Emotion-change label between two frames: 1 means little or no change.
enum class Delta : std::uint8_t { dissimilar = 0, similar = 1 };

inline constexpr int kDeltaClasses = 2;
inline int delta_class(Delta delta) { return static_cast<int>(delta); }
Delta delta_from_class(int class_index);

struct FrameRecord {
  std::int64_t frame_index = 0;
  double valence = 0.0;
  std::optional<double> arousal;
  std::optional<Emotion> emotion;
};

struct AnnotationTrack {
  std::string video_id;
  std::vector<FrameRecord> records;
  /// Rows discarded because valence fell outside [-1, 1].
  std::size_t dropped_frames = 0;

  /// Emotion annotated at `frame_index`, if that frame survived filtering and
  /// carries a category.
  std::optional<Emotion> emotion_at(std::int64_t frame_index) const;
  std::int64_t last_frame() const;
};

/// Valence bins: negative [-1, -0.3), neutral [-0.3, 0.3], positive (0.3, 1].
struct MoodBins {
  double low = -0.3;
  double high = 0.3;

  Mood classify(double valence) const;
};

/// Bracket-exact mapping of the default bins.
inline Mood valence_bin(double valence) { return MoodBins{}.classify(valence); }

/// One maximal run of consecutive frames that share a bin.
struct BinRun {
  Mood bin;
  std::size_t length;
};

/// Maximal runs over the filtered record sequence, in order.
std::vector<BinRun> bin_runs(const AnnotationTrack& track, const MoodBins& bins = {});

/// Parses an annotation CSV with header `frame,valence,arousal,emotion`.
/// Rows whose valence lies outside [-1, 1] are dropped and counted.
/// The video id defaults to the file stem.
AnnotationTrack parse_annotations(const std::filesystem::path& path,
                                  std::optional<std::string> video_id = std::nullopt);
AnnotationTrack parse_annotations_text(std::string_view text, std::string video_id);

/// Longest run of frames inside a single bin decides the mood. Equal-length
/// winners resolve neutral > negative > positive.
Mood derive_mood_label(const AnnotationTrack& track, const MoodBins& bins = {});

/// 1 iff the two categories are equal.
Delta derive_delta_gt(Emotion a, Emotion b);
/// nullopt signals that the pair must be excluded (a missing category).
std::optional<Delta> derive_delta_gt(std::optional<Emotion> a, std::optional<Emotion> b);

struct MoodRecord {
  std::string video_id;
  Mood mood = Mood::neutral;
  std::size_t dropped_frames = 0;
};

nlohmann::json to_json(const MoodRecord& record);
MoodRecord mood_record_from_json(const nlohmann::json& j);

}  // namespace moodkit
