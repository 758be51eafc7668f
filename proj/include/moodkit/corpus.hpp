#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <opencv2/core.hpp>
#include <torch/torch.h>

#include "moodkit/annotations.hpp"
#include "moodkit/moodnet.hpp"
#include "moodkit/siamese.hpp"

namespace moodkit {

/// On-disk corpus layout:
///   annotations/<video>.csv         per-frame annotation CSV
///   frames/<video>/<frame:06d>.png  one RGB image per frame
///   ground_truth.json               test-only sidecar written by the generator
struct CorpusLayout {
  std::filesystem::path root;

  std::filesystem::path annotations_dir() const { return root / "annotations"; }
  std::filesystem::path annotation_path(const std::string& video) const {
    return annotations_dir() / (video + ".csv");
  }
  std::filesystem::path frames_dir(const std::string& video) const { return root / "frames" / video; }
  std::filesystem::path frame_path(const std::string& video, std::int64_t index) const;
  std::filesystem::path ground_truth_path() const { return root / "ground_truth.json"; }

  /// Video ids with an annotation file, sorted.
  std::vector<std::string> videos() const;
  /// Number of frames on disk; frames must be numbered 0..F-1 without gaps.
  std::int64_t video_length(const std::string& video) const;
};

/// Pair-set layout: pairs.csv (`pair,image_a,image_b,target,emotion_a,emotion_b`)
/// next to an images/ directory.
struct PairLayout {
  std::filesystem::path root;

  std::filesystem::path csv_path() const { return root / "pairs.csv"; }
  std::filesystem::path images_dir() const { return root / "images"; }
};

/// 8-bit BGR image to a float RGB tensor [3, size, size] in [0, 1].
torch::Tensor image_to_tensor(const cv::Mat& bgr, std::int64_t size);
torch::Tensor load_image(const std::filesystem::path& path, std::int64_t size);
void save_png(const std::filesystem::path& path, const cv::Mat& bgr);

/// Reads frames from a corpus directory, resized to `size`, with a per-video
/// cache.
class CorpusFrameSource : public FrameSource {
 public:
  CorpusFrameSource(CorpusLayout layout, std::int64_t size)
      : layout_(std::move(layout)), size_(size) {}

  torch::Tensor frame(const std::string& video_id, std::int64_t index) override;

 private:
  CorpusLayout layout_;
  std::int64_t size_;
  std::mutex mutex_;
  std::map<std::pair<std::string, std::int64_t>, torch::Tensor> cache_;
};

/// Frames held in memory, keyed by video; used by tests and generators.
class MemoryFrameSource : public FrameSource {
 public:
  void add(const std::string& video_id, std::vector<torch::Tensor> frames);
  torch::Tensor frame(const std::string& video_id, std::int64_t index) override;

 private:
  std::map<std::string, std::vector<torch::Tensor>> videos_;
};

struct PairRecord {
  std::string pair_id;
  std::string image_a;
  std::string image_b;
  int target = 0;
  Emotion emotion_a = Emotion::neutral;
  Emotion emotion_b = Emotion::neutral;
};

std::vector<PairRecord> read_pair_csv(const std::filesystem::path& path);
void write_pair_csv(const std::filesystem::path& path, const std::vector<PairRecord>& pairs);

/// Loads every pair of a pair-set directory into tensors at `size`.
PairSet load_pair_set(const PairLayout& layout, std::int64_t size);

}  // namespace moodkit
