#include "moodkit/annotations.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "moodkit/errors.hpp"
#include "moodkit/log.hpp"

namespace moodkit {
namespace {

constexpr std::array<std::string_view, kEmotionCount> kEmotionNames = {
    "happy", "sad", "disgust", "anger", "fear", "surprise", "neutral", "other", "contempt"};

constexpr std::string_view kHeader = "frame,valence,arousal,emotion";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      return fields;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
  return value;
}

bool in_unit_range(double v) { return std::isfinite(v) && v >= -1.0 && v <= 1.0; }

// Rank used for tie-breaking between equally long runs; lower wins.
int tie_rank(Mood mood) {
  switch (mood) {
    case Mood::neutral: return 0;
    case Mood::negative: return 1;
    case Mood::positive: return 2;
  }
  return 3;
}

}  // namespace

std::string_view to_string(Emotion emotion) {
  return kEmotionNames.at(static_cast<std::size_t>(emotion));
}

std::optional<Emotion> parse_emotion(std::string_view name) {
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (kEmotionNames[i] == name) return static_cast<Emotion>(i);
  }
  return std::nullopt;
}

Mood mood_from_class(int class_index) {
  if (class_index < 0 || class_index >= kMoodClasses) {
    throw StructuralError("mood class index out of range: " + std::to_string(class_index));
  }
  return static_cast<Mood>(class_index - 1);
}

Mood mood_from_value(int value) {
  if (value < -1 || value > 1) throw ParseError("mood value must be -1, 0 or 1");
  return static_cast<Mood>(value);
}

Delta delta_from_class(int class_index) {
  if (class_index != 0 && class_index != 1) {
    throw StructuralError("delta class index out of range: " + std::to_string(class_index));
  }
  return static_cast<Delta>(class_index);
}

std::optional<Emotion> AnnotationTrack::emotion_at(std::int64_t frame_index) const {
  const auto it = std::lower_bound(
      records.begin(), records.end(), frame_index,
      [](const FrameRecord& r, std::int64_t f) { return r.frame_index < f; });
  if (it == records.end() || it->frame_index != frame_index) return std::nullopt;
  return it->emotion;
}

std::int64_t AnnotationTrack::last_frame() const {
  return records.empty() ? -1 : records.back().frame_index;
}

Mood MoodBins::classify(double valence) const {
  if (valence < low) return Mood::negative;
  if (valence <= high) return Mood::neutral;
  return Mood::positive;
}

std::vector<BinRun> bin_runs(const AnnotationTrack& track, const MoodBins& bins) {
  std::vector<BinRun> runs;
  for (const auto& record : track.records) {
    const Mood bin = bins.classify(record.valence);
    if (!runs.empty() && runs.back().bin == bin) {
      ++runs.back().length;
    } else {
      runs.push_back({bin, 1});
    }
  }
  return runs;
}

AnnotationTrack parse_annotations_text(std::string_view text, std::string video_id) {
  AnnotationTrack track;
  track.video_id = std::move(video_id);

  std::size_t line_no = 0;
  bool saw_header = false;
  std::optional<std::int64_t> last_frame;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;

    if (!saw_header) {
      if (line != kHeader) {
        throw ParseError(track.video_id + ": expected header '" + std::string(kHeader) + "'", line_no);
      }
      saw_header = true;
      continue;
    }

    const auto fields = split_commas(line);
    if (fields.size() != 4) {
      throw ParseError(track.video_id + ": expected 4 fields, got " + std::to_string(fields.size()),
                       line_no);
    }
    const auto frame = parse_number<std::int64_t>(fields[0]);
    const auto valence = parse_number<double>(fields[1]);
    if (!frame || *frame < 0) throw ParseError(track.video_id + ": bad frame index", line_no);
    if (!valence) throw ParseError(track.video_id + ": bad valence", line_no);

    std::optional<double> arousal;
    if (!fields[2].empty()) {
      arousal = parse_number<double>(fields[2]);
      if (!arousal) throw ParseError(track.video_id + ": bad arousal", line_no);
    }
    std::optional<Emotion> emotion;
    if (!fields[3].empty()) {
      emotion = parse_emotion(fields[3]);
      if (!emotion) {
        throw ParseError(track.video_id + ": unknown emotion '" + std::string(fields[3]) + "'",
                         line_no);
      }
    }

    if (last_frame && *frame <= *last_frame) {
      throw ParseError(track.video_id + ": frame indices must be strictly increasing", line_no);
    }
    last_frame = *frame;
    if (!in_unit_range(*valence) || (arousal && !in_unit_range(*arousal))) {
      ++track.dropped_frames;
      continue;
    }
    track.records.push_back({*frame, *valence, arousal, emotion});
  }

  if (track.records.empty()) {
    throw RejectedTrackError(track.video_id + ": no valid frames after filtering");
  }
  if (track.dropped_frames > 0) {
    log::info(track.video_id, ": dropped ", track.dropped_frames, " out-of-range frame(s)");
  }
  return track;
}

AnnotationTrack parse_annotations(const std::filesystem::path& path,
                                  std::optional<std::string> video_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_annotations_text(text, video_id.value_or(path.stem().string()));
}

Mood derive_mood_label(const AnnotationTrack& track, const MoodBins& bins) {
  const auto runs = bin_runs(track, bins);
  if (runs.empty()) throw RejectedTrackError(track.video_id + ": empty track");
  const BinRun* best = &runs.front();
  for (const auto& run : runs) {
    if (run.length > best->length ||
        (run.length == best->length && tie_rank(run.bin) < tie_rank(best->bin))) {
      best = &run;
    }
  }
  return best->bin;
}

Delta derive_delta_gt(Emotion a, Emotion b) { return a == b ? Delta::similar : Delta::dissimilar; }

std::optional<Delta> derive_delta_gt(std::optional<Emotion> a, std::optional<Emotion> b) {
  if (!a || !b) return std::nullopt;
  return derive_delta_gt(*a, *b);
}

nlohmann::json to_json(const MoodRecord& record) {
  return {{"video_id", record.video_id},
          {"mood", mood_value(record.mood)},
          {"dropped_frames", record.dropped_frames}};
}

MoodRecord mood_record_from_json(const nlohmann::json& j) {
  try {
    return {j.at("video_id").get<std::string>(), mood_from_value(j.at("mood").get<int>()),
            j.at("dropped_frames").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("mood record: ") + e.what());
  }
}

}  // namespace moodkit
