#include "moodkit/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "moodkit/errors.hpp"

namespace moodkit {

namespace fs = std::filesystem;

fs::path CorpusLayout::frame_path(const std::string& video, std::int64_t index) const {
  char name[32];
  std::snprintf(name, sizeof(name), "%06lld.png", static_cast<long long>(index));
  return frames_dir(video) / name;
}

std::vector<std::string> CorpusLayout::videos() const {
  std::vector<std::string> ids;
  if (!fs::is_directory(annotations_dir())) {
    throw Error("corpus has no annotations directory: " + annotations_dir().string());
  }
  for (const auto& entry : fs::directory_iterator(annotations_dir())) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::int64_t CorpusLayout::video_length(const std::string& video) const {
  const auto dir = frames_dir(video);
  if (!fs::is_directory(dir)) throw Error("missing frame directory " + dir.string());
  std::int64_t count = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") ++count;
  }
  if (count > 0 && !fs::exists(frame_path(video, count - 1))) {
    throw Error(video + ": frames are not numbered contiguously from 0");
  }
  return count;
}

torch::Tensor image_to_tensor(const cv::Mat& bgr, std::int64_t size) {
  if (bgr.empty() || bgr.type() != CV_8UC3) throw StructuralError("image must be 8-bit, 3 channels");
  cv::Mat resized;
  if (bgr.rows != size || bgr.cols != size) {
    cv::resize(bgr, resized, cv::Size(static_cast<int>(size), static_cast<int>(size)), 0, 0,
               cv::INTER_AREA);
  } else {
    resized = bgr;
  }
  cv::Mat rgb;
  cv::cvtColor(resized, rgb, cv::COLOR_BGR2RGB);
  auto tensor = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8).clone();
  return tensor.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0).contiguous();
}

torch::Tensor load_image(const fs::path& path, std::int64_t size) {
  const auto img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw Error("cannot read image " + path.string());
  return image_to_tensor(img, size);
}

void save_png(const fs::path& path, const cv::Mat& bgr) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  // Fixed compression settings keep the encoded bytes reproducible.
  const std::vector<int> params{cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(path.string(), bgr, params)) throw Error("cannot write " + path.string());
}

torch::Tensor CorpusFrameSource::frame(const std::string& video_id, std::int64_t index) {
  std::lock_guard lock(mutex_);
  const auto key = std::make_pair(video_id, index);
  if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
  auto tensor = load_image(layout_.frame_path(video_id, index), size_);
  cache_.emplace(key, tensor);
  return tensor;
}

void MemoryFrameSource::add(const std::string& video_id, std::vector<torch::Tensor> frames) {
  videos_[video_id] = std::move(frames);
}

torch::Tensor MemoryFrameSource::frame(const std::string& video_id, std::int64_t index) {
  const auto it = videos_.find(video_id);
  if (it == videos_.end()) throw Error("unknown video " + video_id);
  if (index < 0 || index >= static_cast<std::int64_t>(it->second.size())) {
    throw StructuralError(video_id + ": frame " + std::to_string(index) + " out of range");
  }
  return it->second[static_cast<std::size_t>(index)];
}

std::vector<PairRecord> read_pair_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<PairRecord> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "pair,image_a,image_b,target,emotion_a,emotion_b") {
        throw ParseError(path.string() + ": unexpected header", line_no);
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
    if (fields.size() != 6) throw ParseError(path.string() + ": expected 6 fields", line_no);
    PairRecord r;
    r.pair_id = fields[0];
    r.image_a = fields[1];
    r.image_b = fields[2];
    if (fields[3] != "0" && fields[3] != "1") throw ParseError(path.string() + ": bad target", line_no);
    r.target = fields[3] == "1" ? 1 : 0;
    const auto ea = parse_emotion(fields[4]);
    const auto eb = parse_emotion(fields[5]);
    if (!ea || !eb) throw ParseError(path.string() + ": bad emotion", line_no);
    r.emotion_a = *ea;
    r.emotion_b = *eb;
    pairs.push_back(std::move(r));
  }
  return pairs;
}

void write_pair_csv(const fs::path& path, const std::vector<PairRecord>& pairs) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "pair,image_a,image_b,target,emotion_a,emotion_b\n";
  for (const auto& p : pairs) {
    out << p.pair_id << ',' << p.image_a << ',' << p.image_b << ',' << p.target << ','
        << to_string(p.emotion_a) << ',' << to_string(p.emotion_b) << '\n';
  }
}

PairSet load_pair_set(const PairLayout& layout, std::int64_t size) {
  const auto records = read_pair_csv(layout.csv_path());
  if (records.empty()) throw DataError("pair set is empty: " + layout.csv_path().string());
  std::vector<torch::Tensor> a;
  std::vector<torch::Tensor> b;
  std::vector<std::int64_t> y;
  for (const auto& r : records) {
    a.push_back(load_image(layout.images_dir() / r.image_a, size));
    b.push_back(load_image(layout.images_dir() / r.image_b, size));
    y.push_back(r.target);
  }
  return {torch::stack(a), torch::stack(b), torch::tensor(y, torch::kLong)};
}

}  // namespace moodkit
