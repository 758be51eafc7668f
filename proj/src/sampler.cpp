#include "moodkit/sampler.hpp"

#include <map>

#include "moodkit/errors.hpp"
#include "moodkit/jsonl.hpp"
#include "moodkit/log.hpp"

namespace moodkit {

void SamplerConfig::validate() const {
  if (s < 1) throw ConfigError("sampler: stride s must be >= 1");
  if (n < 2) throw ConfigError("sampler: n must be >= 2");
  if (n > t) throw ConfigError("sampler: n must not exceed t");
}

std::vector<std::int64_t> sample_frame_indices(std::int64_t t, std::int64_t n) {
  if (n < 2 || n > t) {
    throw ConfigError("sample_frame_indices: require 2 <= n <= t (n=" + std::to_string(n) +
                      ", t=" + std::to_string(t) + ")");
  }
  std::vector<std::int64_t> offsets(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) offsets[i] = i * (t - 1) / (n - 1);
  return offsets;
}

std::vector<ClipSpec> generate_clips(const std::string& video_id, std::int64_t video_length,
                                     const SamplerConfig& config, Mood mood) {
  config.validate();
  if (video_length < 1) throw ConfigError(video_id + ": video length must be >= 1");
  std::vector<ClipSpec> clips;
  if (video_length < config.t) {
    log::info(video_id, ": skipped, ", video_length, " frames is shorter than t=", config.t);
    return clips;
  }
  const auto offsets = sample_frame_indices(config.t, config.n);
  clips.reserve(static_cast<std::size_t>((video_length - config.t) / config.s + 1));
  for (std::int64_t start = 0; start + config.t <= video_length; start += config.s) {
    ClipSpec clip;
    clip.video_id = video_id;
    clip.window_start = start;
    clip.t = config.t;
    clip.mood = mood;
    clip.frame_indices.reserve(offsets.size());
    for (const auto offset : offsets) clip.frame_indices.push_back(start + offset);
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::pair<std::int64_t, std::int64_t> delta_endpoints(const ClipSpec& clip) {
  return {clip.window_start, clip.window_end()};
}

void validate_clip(const ClipSpec& clip, std::optional<std::int64_t> video_length) {
  const auto fail = [&](const std::string& why) {
    throw StructuralError("clip " + clip.video_id + "@" + std::to_string(clip.window_start) +
                          ": " + why);
  };
  if (clip.t < 2 || clip.window_start < 0) fail("bad window");
  if (clip.frame_indices.size() < 2) fail("fewer than two frames");
  if (clip.frame_indices.front() != clip.window_start) fail("first frame is not the window start");
  if (clip.frame_indices.back() != clip.window_end()) fail("last frame is not the window end");
  for (std::size_t i = 1; i < clip.frame_indices.size(); ++i) {
    if (clip.frame_indices[i] <= clip.frame_indices[i - 1]) fail("frame indices not increasing");
  }
  if (video_length && clip.window_end() >= *video_length) fail("window exceeds the video");
}

nlohmann::json to_json(const ClipSpec& clip) {
  nlohmann::json j = {{"video_id", clip.video_id},
                      {"window_start", clip.window_start},
                      {"t", clip.t},
                      {"frame_indices", clip.frame_indices},
                      {"mood", mood_value(clip.mood)}};
  j["delta"] = clip.delta ? nlohmann::json(delta_class(*clip.delta)) : nlohmann::json(nullptr);
  return j;
}

ClipSpec clip_from_json(const nlohmann::json& j) {
  try {
    ClipSpec clip;
    clip.video_id = j.at("video_id").get<std::string>();
    clip.window_start = j.at("window_start").get<std::int64_t>();
    clip.t = j.at("t").get<std::int64_t>();
    clip.frame_indices = j.at("frame_indices").get<std::vector<std::int64_t>>();
    clip.mood = mood_from_value(j.at("mood").get<int>());
    if (j.contains("delta") && !j.at("delta").is_null()) {
      clip.delta = delta_from_class(j.at("delta").get<int>());
    }
    validate_clip(clip);
    return clip;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("clip manifest row: ") + e.what());
  }
}

std::vector<ClipSpec> read_clip_manifest(const std::filesystem::path& path) {
  std::vector<ClipSpec> clips;
  for (const auto& row : read_jsonl(path)) clips.push_back(clip_from_json(row));
  return clips;
}

void write_clip_manifest(const std::filesystem::path& path, const std::vector<ClipSpec>& clips) {
  std::vector<nlohmann::json> rows;
  rows.reserve(clips.size());
  for (const auto& clip : clips) rows.push_back(to_json(clip));
  write_jsonl(path, rows);
}

nlohmann::json to_json(const DeltaRecord& record) {
  return {{"video_id", record.video_id},
          {"window_start", record.window_start},
          {"delta", delta_class(record.delta)}};
}

DeltaRecord delta_record_from_json(const nlohmann::json& j) {
  try {
    return {j.at("video_id").get<std::string>(), j.at("window_start").get<std::int64_t>(),
            delta_from_class(j.at("delta").get<int>())};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("delta label row: ") + e.what());
  }
}

std::vector<DeltaRecord> read_delta_labels(const std::filesystem::path& path) {
  std::vector<DeltaRecord> labels;
  for (const auto& row : read_jsonl(path)) labels.push_back(delta_record_from_json(row));
  return labels;
}

void write_delta_labels(const std::filesystem::path& path,
                        const std::vector<DeltaRecord>& labels) {
  std::vector<nlohmann::json> rows;
  rows.reserve(labels.size());
  for (const auto& label : labels) rows.push_back(to_json(label));
  write_jsonl(path, rows);
}

std::size_t attach_delta_labels(std::vector<ClipSpec>& clips,
                                const std::vector<DeltaRecord>& labels) {
  std::map<std::pair<std::string, std::int64_t>, Delta> index;
  for (const auto& label : labels) index[{label.video_id, label.window_start}] = label.delta;
  std::size_t filled = 0;
  for (auto& clip : clips) {
    const auto it = index.find({clip.video_id, clip.window_start});
    if (it == index.end()) continue;
    clip.delta = it->second;
    ++filled;
  }
  return filled;
}

}  // namespace moodkit
