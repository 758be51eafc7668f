#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "moodkit/annotations.hpp"

namespace moodkit {

struct SamplerConfig {
  std::int64_t t = 100;  // window length in frames
  std::int64_t s = 3;    // stride in original frames
  std::int64_t n = 5;    // frames sampled per window

  /// Throws ConfigError unless 2 <= n <= t and s >= 1.
  void validate() const;
};

/// A window of `t` frames from one video with `n` sampled frame indices.
struct ClipSpec {
  std::string video_id;
  std::int64_t window_start = 0;
  std::int64_t t = 0;
  std::vector<std::int64_t> frame_indices;
  Mood mood = Mood::neutral;
  std::optional<Delta> delta;

  std::int64_t window_end() const { return window_start + t - 1; }
};

/// Offsets floor(i*(t-1)/(n-1)), i = 0..n-1. Both endpoints are included.
std::vector<std::int64_t> sample_frame_indices(std::int64_t t, std::int64_t n);

/// Sliding windows at 0, s, 2s, ... while start + t <= video_length. A video
/// shorter than t yields no clips and a logged notice.
std::vector<ClipSpec> generate_clips(const std::string& video_id, std::int64_t video_length,
                                     const SamplerConfig& config, Mood mood);

/// First and last frame of the window; these are the frames compared for the
/// emotion-change label.
std::pair<std::int64_t, std::int64_t> delta_endpoints(const ClipSpec& clip);

/// Throws StructuralError if the clip violates its ordering or window bounds,
/// or if it reaches past `video_length` when that is given.
void validate_clip(const ClipSpec& clip, std::optional<std::int64_t> video_length = std::nullopt);

nlohmann::json to_json(const ClipSpec& clip);
ClipSpec clip_from_json(const nlohmann::json& j);

std::vector<ClipSpec> read_clip_manifest(const std::filesystem::path& path);
void write_clip_manifest(const std::filesystem::path& path, const std::vector<ClipSpec>& clips);

/// A delta label keyed by (video_id, window_start), as produced by the
/// pseudo-labeler or derived from categorical annotations.
struct DeltaRecord {
  std::string video_id;
  std::int64_t window_start = 0;
  Delta delta = Delta::similar;
};

nlohmann::json to_json(const DeltaRecord& record);
DeltaRecord delta_record_from_json(const nlohmann::json& j);

std::vector<DeltaRecord> read_delta_labels(const std::filesystem::path& path);
void write_delta_labels(const std::filesystem::path& path, const std::vector<DeltaRecord>& labels);

/// Fills clip.delta from matching records. Clips without a match keep an
/// empty slot; returns how many were filled.
std::size_t attach_delta_labels(std::vector<ClipSpec>& clips, const std::vector<DeltaRecord>& labels);

}  // namespace moodkit
