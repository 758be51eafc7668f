#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "moodkit/annotations.hpp"
#include "moodkit/corpus.hpp"

namespace moodkit {

// ---------------------------------------------------------------------------
// Face-proxy rendering
// ---------------------------------------------------------------------------

/// Per-subject appearance: constant within a video.
struct FaceIdentity {
  cv::Scalar background{128, 128, 128};
  cv::Scalar skin{170, 190, 215};
  double face_width = 1.0;   // relative
  double face_height = 1.0;  // relative
  double offset_x = 0.0;     // fraction of the image
  double offset_y = 0.0;
  double eye_spacing = 1.0;
};

/// Expression geometry; each field is roughly in [-1, 1].
struct ExpressionGeometry {
  double mouth_curve = 0.0;  // + smile, - frown
  double mouth_open = 0.0;   // [0, 1]
  double eye_open = 0.6;     // [0, 1]
  double brow_tilt = 0.0;    // + inner ends down (frowning), - inner ends up
  double brow_raise = 0.0;   // + raised
  double asymmetry = 0.0;    // lifts the right mouth corner
};

/// Canonical geometry of each category. Distinct categories differ by a
/// margin larger than the jitter the generator applies.
ExpressionGeometry expression_of(Emotion emotion);

FaceIdentity random_identity(std::mt19937_64& rng, double variation);

/// Renders an 8-bit BGR face proxy of `size` x `size` pixels. `jitter`
/// perturbs the geometry, `noise` is the std-dev of additive pixel noise as a
/// fraction of full scale.
cv::Mat render_face(const FaceIdentity& identity, const ExpressionGeometry& expression,
                    int size, double jitter, double noise, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

/// A piecewise-constant valence segment: `length` frames inside `bin`.
struct ValenceSegment {
  Mood bin = Mood::neutral;
  std::int64_t length = 0;
};

struct VideoScript {
  std::string video_id;
  std::vector<ValenceSegment> segments;
  /// Emotion shown on each frame; filled by the generator when empty.
  std::vector<Emotion> emotions;

  std::int64_t length() const;
};

struct SynthSpec {
  int num_videos = 24;
  std::int64_t frames_per_video = 160;
  int image_size = 32;
  double noise = 0.03;
  double jitter = 0.08;
  /// Spread of per-video appearance (background, skin, face shape).
  double identity_variation = 1.0;
  /// Chance per frame of starting a short burst of a secondary emotion.
  double burst_rate = 0.02;
  std::int64_t burst_min = 6;
  std::int64_t burst_max = 20;
  /// Multiplier on burst_rate inside negative, neutral and positive segments.
  std::array<double, 3> volatility{1.0, 1.0, 1.0};
  /// Resting and burst emotion of negative, neutral and positive segments.
  std::array<Emotion, 3> resting{Emotion::sad, Emotion::neutral, Emotion::happy};
  std::array<Emotion, 3> bursts{Emotion::anger, Emotion::surprise, Emotion::surprise};
  /// Fraction of videos whose annotation carries emotion categories.
  double emotion_annotated_fraction = 1.0;
  std::uint64_t seed = 2024;
  /// Explicit scripts; generated from the seed when empty.
  std::vector<VideoScript> scripts;

  void validate() const;
};

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// Mood implied by a script: the bin of the longest segment after merging
/// adjacent segments that share a bin, with the usual tie order.
Mood script_mood(const VideoScript& script);

/// Scripts for spec.num_videos videos: each has a dominant segment and one or
/// two shorter segments, moods cycling negative, neutral, positive.
std::vector<VideoScript> default_scripts(const SynthSpec& spec);

/// Derived per-video seed, independent of generation order.
std::uint64_t video_seed(std::uint64_t master, std::uint64_t index);

struct SynthVideo {
  VideoScript script;
  AnnotationTrack track;
  std::vector<cv::Mat> frames;
  bool emotion_annotated = true;
  Mood mood = Mood::neutral;
};

SynthVideo render_video(const SynthSpec& spec, const VideoScript& script, std::uint64_t index);

struct CorpusSummary {
  std::vector<std::string> videos;
  std::vector<Mood> moods;
  std::int64_t frames = 0;
};

/// Writes annotations/, frames/ and the ground_truth.json sidecar.
CorpusSummary generate_corpus(const SynthSpec& spec, const std::filesystem::path& out_dir);

/// Annotation CSV text for a rendered video.
std::string annotation_csv(const SynthVideo& video);

struct PairSetSpec {
  int count = 2000;
  int image_size = 32;
  double noise = 0.03;
  double jitter = 0.08;
  double identity_variation = 1.0;
  std::vector<Emotion> palette{Emotion::happy, Emotion::surprise, Emotion::neutral, Emotion::sad,
                               Emotion::anger};
  std::uint64_t seed = 4048;
};

nlohmann::json to_json(const PairSetSpec& spec);

struct SynthPair {
  PairRecord record;
  cv::Mat image_a;
  cv::Mat image_b;
};

/// Exactly count/2 similar pairs (rounded down) and the rest dissimilar, in
/// seeded order. Every image gets a fresh identity.
std::vector<SynthPair> render_pair_set(const PairSetSpec& spec);
std::vector<PairRecord> generate_pair_set(const PairSetSpec& spec, const std::filesystem::path& out_dir);

/// Emotions used by the default corpus.
std::vector<Emotion> default_palette();

}  // namespace moodkit
