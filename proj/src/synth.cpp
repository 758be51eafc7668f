#include "moodkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "moodkit/errors.hpp"
#include "moodkit/jsonl.hpp"
#include "moodkit/log.hpp"

namespace moodkit {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

ExpressionGeometry expression_of(Emotion emotion) {
  switch (emotion) {
    case Emotion::happy: return {0.9, 0.25, 0.55, 0.0, 0.1, 0.0};
    case Emotion::sad: return {-0.8, 0.0, 0.35, -0.9, -0.1, 0.0};
    case Emotion::anger: return {-0.35, 0.1, 0.45, 0.95, -0.5, 0.0};
    case Emotion::surprise: return {0.0, 0.95, 1.0, 0.0, 0.9, 0.0};
    case Emotion::fear: return {-0.45, 0.6, 0.95, -0.6, 0.6, 0.0};
    case Emotion::disgust: return {-0.6, 0.3, 0.25, 0.5, -0.3, -0.6};
    case Emotion::contempt: return {0.25, 0.0, 0.5, 0.2, 0.0, 0.9};
    case Emotion::other: return {0.3, 0.5, 0.75, 0.4, 0.3, 0.0};
    case Emotion::neutral: return {0.0, 0.05, 0.6, 0.0, 0.0, 0.0};
  }
  return {};
}

std::vector<Emotion> default_palette() {
  return {Emotion::happy, Emotion::surprise, Emotion::neutral, Emotion::sad, Emotion::anger};
}

FaceIdentity random_identity(std::mt19937_64& rng, double variation) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  FaceIdentity id;
  const auto channel = [&](double centre, double spread) {
    return std::clamp(centre + variation * spread * unit(rng), 0.0, 255.0);
  };
  id.background = cv::Scalar(channel(128, 90), channel(128, 90), channel(128, 90));
  const double tone = unit(rng);
  id.skin = cv::Scalar(channel(150 + 30 * tone, 25), channel(175 + 30 * tone, 25),
                       channel(205 + 25 * tone, 25));
  id.face_width = 1.0 + 0.12 * variation * unit(rng);
  id.face_height = 1.0 + 0.12 * variation * unit(rng);
  id.offset_x = 0.05 * variation * unit(rng);
  id.offset_y = 0.04 * variation * unit(rng);
  id.eye_spacing = 1.0 + 0.12 * variation * unit(rng);
  return id;
}

cv::Mat render_face(const FaceIdentity& identity, const ExpressionGeometry& expression, int size,
                    double jitter, double noise, std::mt19937_64& rng) {
  if (size < 8) throw ConfigError("render_face: size must be >= 8");
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto jit = [&](double v) { return v + jitter * gauss(rng); };
  const double curve = jit(expression.mouth_curve);
  const double open = std::clamp(jit(expression.mouth_open), 0.0, 1.0);
  const double eye_open = std::clamp(jit(expression.eye_open), 0.05, 1.0);
  const double tilt = jit(expression.brow_tilt);
  const double raise = jit(expression.brow_raise);
  const double asym = jit(expression.asymmetry);

  // Draw supersampled, then area-downsample.
  constexpr int kScale = 4;
  const int S = size * kScale;
  const double s = S;
  cv::Mat canvas(S, S, CV_8UC3, identity.background);
  const auto pt = [](double x, double y) { return cv::Point(static_cast<int>(std::lround(x)),
                                                             static_cast<int>(std::lround(y))); };
  const double cx = s / 2 + identity.offset_x * s;
  const double cy = s / 2 + identity.offset_y * s;
  const double fw = identity.face_width;
  const double fh = identity.face_height;
  cv::ellipse(canvas, pt(cx, cy), cv::Size(static_cast<int>(0.36 * s * fw), static_cast<int>(0.44 * s * fh)),
              0, 0, 360, identity.skin, cv::FILLED, cv::LINE_AA);

  const cv::Scalar dark(35, 35, 45);
  const int stroke = std::max(1, static_cast<int>(std::lround(0.03 * s)));
  const double eye_y = cy - 0.12 * s * fh;
  const double eye_dx = 0.15 * s * identity.eye_spacing * fw;
  for (const double side : {-1.0, 1.0}) {
    const double ex = cx + side * eye_dx;
    cv::ellipse(canvas, pt(ex, eye_y),
                cv::Size(static_cast<int>(0.06 * s), std::max(1, static_cast<int>(0.055 * s * eye_open))),
                0, 0, 360, dark, cv::FILLED, cv::LINE_AA);
    const double brow_y = eye_y - 0.095 * s - raise * 0.045 * s;
    const double inner_x = ex - side * 0.06 * s;
    const double outer_x = ex + side * 0.07 * s;
    cv::line(canvas, pt(inner_x, brow_y + tilt * 0.04 * s), pt(outer_x, brow_y - tilt * 0.02 * s), dark,
             stroke, cv::LINE_AA);
  }

  const double mouth_y = cy + 0.2 * s * fh;
  const double half_w = 0.15 * s * fw;
  constexpr int kSegments = 16;
  std::vector<cv::Point> upper;
  std::vector<cv::Point> lower;
  for (int i = 0; i <= kSegments; ++i) {
    const double u = -1.0 + 2.0 * i / kSegments;
    const double y = mouth_y - curve * 0.08 * s * u * u - asym * 0.05 * s * std::max(u, 0.0);
    upper.push_back(pt(cx + u * half_w, y));
    lower.push_back(pt(cx + u * half_w, y + open * 0.1 * s * (1.0 - u * u)));
  }
  if (open > 0.08) {
    std::vector<cv::Point> poly(upper);
    poly.insert(poly.end(), lower.rbegin(), lower.rend());
    cv::fillPoly(canvas, std::vector<std::vector<cv::Point>>{poly}, cv::Scalar(40, 30, 120), cv::LINE_AA);
  }
  cv::polylines(canvas, std::vector<std::vector<cv::Point>>{upper}, false, dark, stroke, cv::LINE_AA);

  cv::Mat small;
  cv::resize(canvas, small, cv::Size(size, size), 0, 0, cv::INTER_AREA);
  if (noise > 0.0) {
    for (int r = 0; r < small.rows; ++r) {
      auto* row = small.ptr<cv::Vec3b>(r);
      for (int c = 0; c < small.cols; ++c) {
        for (int k = 0; k < 3; ++k) {
          const double v = row[c][k] + 255.0 * noise * gauss(rng);
          row[c][k] = static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
        }
      }
    }
  }
  return small;
}

// ---------------------------------------------------------------------------
// Scripts
// ---------------------------------------------------------------------------

std::int64_t VideoScript::length() const {
  std::int64_t total = 0;
  for (const auto& seg : segments) total += seg.length;
  return total;
}

void SynthSpec::validate() const {
  if (num_videos < 1) throw ConfigError("synth: num_videos must be >= 1");
  if (frames_per_video < 1) throw ConfigError("synth: frames_per_video must be >= 1");
  if (image_size < 8) throw ConfigError("synth: image_size must be >= 8");
  if (noise < 0.0 || jitter < 0.0) throw ConfigError("synth: noise and jitter must be >= 0");
  if (burst_rate < 0.0 || burst_rate > 1.0) throw ConfigError("synth: burst_rate must lie in [0, 1]");
  if (burst_min < 1 || burst_max < burst_min) throw ConfigError("synth: bad burst length range");
  for (const double v : volatility) {
    if (v < 0.0) throw ConfigError("synth: volatility multipliers must be >= 0");
  }
  if (emotion_annotated_fraction < 0.0 || emotion_annotated_fraction > 1.0) {
    throw ConfigError("synth: emotion_annotated_fraction must lie in [0, 1]");
  }
  for (const auto& script : scripts) {
    if (script.segments.empty()) throw ConfigError("synth: script " + script.video_id + " is empty");
    for (const auto& seg : script.segments) {
      if (seg.length < 1) throw ConfigError("synth: segment lengths must be >= 1");
    }
    if (!script.emotions.empty() && static_cast<std::int64_t>(script.emotions.size()) != script.length()) {
      throw ConfigError("synth: script " + script.video_id +
                        " has an emotion list that does not match its segment lengths");
    }
  }
}

namespace {

const char* bin_name(Mood m) {
  switch (m) {
    case Mood::negative: return "negative";
    case Mood::neutral: return "neutral";
    case Mood::positive: return "positive";
  }
  return "?";
}

Mood parse_bin(const std::string& name) {
  if (name == "negative" || name == "neg") return Mood::negative;
  if (name == "neutral" || name == "neu") return Mood::neutral;
  if (name == "positive" || name == "pos") return Mood::positive;
  throw ConfigError("synth: unknown bin '" + name + "'");
}

nlohmann::json script_json(const VideoScript& script) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : script.segments) segs.push_back({bin_name(seg.bin), seg.length});
  return {{"video_id", script.video_id}, {"segments", segs}};
}

int tie_rank(Mood m) { return m == Mood::neutral ? 0 : (m == Mood::negative ? 1 : 2); }

std::vector<std::string> emotion_names(const std::array<Emotion, 3>& emotions) {
  std::vector<std::string> names;
  for (const auto e : emotions) names.emplace_back(to_string(e));
  return names;
}

std::array<Emotion, 3> emotions_from_names(const nlohmann::json& j) {
  const auto names = j.get<std::vector<std::string>>();
  if (names.size() != 3) throw ConfigError("synth: expected three emotions (negative, neutral, positive)");
  std::array<Emotion, 3> out{};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto e = parse_emotion(names[i]);
    if (!e) throw ConfigError("synth: unknown emotion '" + names[i] + "'");
    out[i] = *e;
  }
  return out;
}

// Valence strictly inside the bin, away from its edges.
std::pair<double, double> bin_interior(Mood bin) {
  switch (bin) {
    case Mood::negative: return {-0.95, -0.35};
    case Mood::neutral: return {-0.25, 0.25};
    case Mood::positive: return {0.35, 0.95};
  }
  return {0.0, 0.0};
}

std::string format_value(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json scripts = nlohmann::json::array();
  for (const auto& s : spec.scripts) scripts.push_back(script_json(s));
  return {{"num_videos", spec.num_videos},
          {"frames_per_video", spec.frames_per_video},
          {"image_size", spec.image_size},
          {"noise", spec.noise},
          {"jitter", spec.jitter},
          {"identity_variation", spec.identity_variation},
          {"burst_rate", spec.burst_rate},
          {"burst_min", spec.burst_min},
          {"burst_max", spec.burst_max},
          {"volatility", spec.volatility},
          {"resting", emotion_names(spec.resting)},
          {"bursts", emotion_names(spec.bursts)},
          {"emotion_annotated_fraction", spec.emotion_annotated_fraction},
          {"seed", spec.seed},
          {"scripts", scripts}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.num_videos = j.value("num_videos", s.num_videos);
  s.frames_per_video = j.value("frames_per_video", s.frames_per_video);
  s.image_size = j.value("image_size", s.image_size);
  s.noise = j.value("noise", s.noise);
  s.jitter = j.value("jitter", s.jitter);
  s.identity_variation = j.value("identity_variation", s.identity_variation);
  s.burst_rate = j.value("burst_rate", s.burst_rate);
  s.burst_min = j.value("burst_min", s.burst_min);
  s.burst_max = j.value("burst_max", s.burst_max);
  if (j.contains("volatility")) s.volatility = j.at("volatility").get<std::array<double, 3>>();
  if (j.contains("resting")) s.resting = emotions_from_names(j.at("resting"));
  if (j.contains("bursts")) s.bursts = emotions_from_names(j.at("bursts"));
  s.emotion_annotated_fraction = j.value("emotion_annotated_fraction", s.emotion_annotated_fraction);
  s.seed = j.value("seed", s.seed);
  if (j.contains("scripts")) {
    for (const auto& sj : j.at("scripts")) {
      VideoScript script;
      script.video_id = sj.at("video_id").get<std::string>();
      for (const auto& seg : sj.at("segments")) {
        script.segments.push_back({parse_bin(seg.at(0).get<std::string>()), seg.at(1).get<std::int64_t>()});
      }
      s.scripts.push_back(std::move(script));
    }
  }
  return s;
}

Mood script_mood(const VideoScript& script) {
  if (script.segments.empty()) throw ConfigError("script_mood: empty script");
  std::vector<ValenceSegment> merged;
  for (const auto& seg : script.segments) {
    if (!merged.empty() && merged.back().bin == seg.bin) {
      merged.back().length += seg.length;
    } else {
      merged.push_back(seg);
    }
  }
  const ValenceSegment* best = &merged.front();
  for (const auto& seg : merged) {
    if (seg.length > best->length || (seg.length == best->length && tie_rank(seg.bin) < tie_rank(best->bin))) {
      best = &seg;
    }
  }
  return best->bin;
}

std::uint64_t video_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 over (master, index)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<VideoScript> default_scripts(const SynthSpec& spec) {
  spec.validate();
  std::vector<VideoScript> scripts;
  const std::array<Mood, 3> cycle{Mood::negative, Mood::neutral, Mood::positive};
  for (int i = 0; i < spec.num_videos; ++i) {
    std::mt19937_64 rng(video_seed(spec.seed ^ 0xC0FFEEULL, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Mood dominant = cycle[static_cast<std::size_t>(i) % 3];
    std::vector<Mood> others;
    for (const auto m : cycle) {
      if (m != dominant) others.push_back(m);
    }
    if (unit(rng) < 0.5) std::swap(others[0], others[1]);

    VideoScript script;
    std::ostringstream id;
    id << "vid" << std::setw(3) << std::setfill('0') << i;
    script.video_id = id.str();
    const auto total = spec.frames_per_video;
    const auto dom_len = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(total * (0.55 + 0.15 * unit(rng)))));
    const auto rest = total - dom_len;
    if (rest <= 0) {
      script.segments.push_back({dominant, total});
    } else if (rest < 4 || unit(rng) < 0.4) {
      // dominant plus one other segment, either order
      if (unit(rng) < 0.5) {
        script.segments = {{dominant, dom_len}, {others[0], rest}};
      } else {
        script.segments = {{others[0], rest}, {dominant, dom_len}};
      }
    } else {
      const auto first = std::max<std::int64_t>(1, static_cast<std::int64_t>(rest * (0.3 + 0.4 * unit(rng))));
      const auto second = rest - first;
      switch (static_cast<int>(unit(rng) * 3.0)) {
        case 0: script.segments = {{dominant, dom_len}, {others[0], first}, {others[1], second}}; break;
        case 1: script.segments = {{others[0], first}, {dominant, dom_len}, {others[1], second}}; break;
        default: script.segments = {{others[0], first}, {others[1], second}, {dominant, dom_len}}; break;
      }
    }
    scripts.push_back(std::move(script));
  }
  return scripts;
}

// ---------------------------------------------------------------------------
// Videos and corpus
// ---------------------------------------------------------------------------

SynthVideo render_video(const SynthSpec& spec, const VideoScript& script, std::uint64_t index) {
  std::mt19937_64 rng(video_seed(spec.seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SynthVideo video;
  video.script = script;
  video.mood = script_mood(script);
  video.emotion_annotated = unit(rng) < spec.emotion_annotated_fraction ||
                            spec.emotion_annotated_fraction >= 1.0;
  const auto identity = random_identity(rng, spec.identity_variation);

  auto& emotions = video.script.emotions;
  const bool scripted = !emotions.empty();
  std::vector<Mood> frame_bins;
  frame_bins.reserve(static_cast<std::size_t>(script.length()));
  for (const auto& seg : script.segments) {
    for (std::int64_t k = 0; k < seg.length; ++k) frame_bins.push_back(seg.bin);
  }
  if (!scripted) {
    emotions.reserve(frame_bins.size());
    std::int64_t burst_left = 0;
    Emotion burst = Emotion::neutral;
    for (std::size_t f = 0; f < frame_bins.size(); ++f) {
      const Mood bin = frame_bins[f];
      if (f > 0 && frame_bins[f - 1] != bin) burst_left = 0;
      const double rate = std::min(1.0, spec.burst_rate * spec.volatility[static_cast<std::size_t>(mood_class(bin))]);
      if (burst_left == 0 && unit(rng) < rate) {
        burst_left = spec.burst_min +
                     static_cast<std::int64_t>(unit(rng) * static_cast<double>(spec.burst_max - spec.burst_min + 1));
        burst = spec.bursts[static_cast<std::size_t>(mood_class(bin))];
      }
      if (burst_left > 0) {
        emotions.push_back(burst);
        --burst_left;
      } else {
        emotions.push_back(spec.resting[static_cast<std::size_t>(mood_class(bin))]);
      }
    }
  }

  video.track.video_id = script.video_id;
  std::size_t frame = 0;
  for (const auto& seg : script.segments) {
    const auto [lo, hi] = bin_interior(seg.bin);
    const double level = lo + (hi - lo) * unit(rng);
    for (std::int64_t k = 0; k < seg.length; ++k, ++frame) {
      FrameRecord r;
      r.frame_index = static_cast<std::int64_t>(frame);
      // Round to the CSV precision so parsing reproduces the stored value.
      const double v = std::clamp(level + 0.05 * (unit(rng) - 0.5), lo, hi);
      r.valence = std::stod(format_value(v));
      r.arousal = std::stod(format_value(std::clamp(0.3 * (unit(rng) - 0.5) + (seg.bin == Mood::neutral ? -0.2 : 0.3), -1.0, 1.0)));
      if (video.emotion_annotated) r.emotion = emotions[frame];
      video.track.records.push_back(r);
      video.frames.push_back(render_face(identity, expression_of(emotions[frame]), spec.image_size,
                                         spec.jitter, spec.noise, rng));
    }
  }
  return video;
}

std::string annotation_csv(const SynthVideo& video) {
  std::ostringstream os;
  os << "frame,valence,arousal,emotion\n";
  for (const auto& r : video.track.records) {
    os << r.frame_index << ',' << format_value(r.valence) << ','
       << (r.arousal ? format_value(*r.arousal) : std::string{}) << ','
       << (r.emotion ? std::string(to_string(*r.emotion)) : std::string{}) << '\n';
  }
  return os.str();
}

CorpusSummary generate_corpus(const SynthSpec& spec, const fs::path& out_dir) {
  spec.validate();
  const CorpusLayout layout{out_dir};
  const auto scripts = spec.scripts.empty() ? default_scripts(spec) : spec.scripts;
  fs::create_directories(layout.annotations_dir());

  CorpusSummary summary;
  nlohmann::json truth = nlohmann::json::array();
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    const auto video = render_video(spec, scripts[i], static_cast<std::uint64_t>(i));
    write_text(layout.annotation_path(video.script.video_id), annotation_csv(video));
    const auto frames_dir = layout.frames_dir(video.script.video_id);
    if (fs::exists(frames_dir)) fs::remove_all(frames_dir);
    for (std::size_t f = 0; f < video.frames.size(); ++f) {
      save_png(layout.frame_path(video.script.video_id, static_cast<std::int64_t>(f)), video.frames[f]);
    }
    auto entry = script_json(video.script);
    entry["mood"] = mood_value(video.mood);
    entry["frames"] = video.frames.size();
    entry["emotion_annotated"] = video.emotion_annotated;
    truth.push_back(entry);
    summary.videos.push_back(video.script.video_id);
    summary.moods.push_back(video.mood);
    summary.frames += static_cast<std::int64_t>(video.frames.size());
  }
  write_json(layout.ground_truth_path(),
             {{"test_only", true},
              {"note", "generator ground truth for tests; not an input to any pipeline stage"},
              {"spec", to_json(spec)},
              {"videos", truth}});
  log::info("synth: wrote ", summary.videos.size(), " videos (", summary.frames, " frames) to ",
            out_dir.string());
  return summary;
}

// ---------------------------------------------------------------------------
// Pairs
// ---------------------------------------------------------------------------

nlohmann::json to_json(const PairSetSpec& spec) {
  std::vector<std::string> palette;
  for (const auto e : spec.palette) palette.emplace_back(to_string(e));
  return {{"count", spec.count},
          {"image_size", spec.image_size},
          {"noise", spec.noise},
          {"jitter", spec.jitter},
          {"identity_variation", spec.identity_variation},
          {"palette", palette},
          {"seed", spec.seed}};
}

std::vector<SynthPair> render_pair_set(const PairSetSpec& spec) {
  if (spec.count < 2) throw ConfigError("pairs: count must be >= 2");
  if (spec.palette.size() < 2) throw ConfigError("pairs: palette needs at least two emotions");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> pick(0, spec.palette.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, spec.palette.size() - 2);

  std::vector<int> targets(static_cast<std::size_t>(spec.count), 0);
  std::fill(targets.begin(), targets.begin() + spec.count / 2, 1);
  std::shuffle(targets.begin(), targets.end(), rng);

  std::vector<SynthPair> pairs;
  pairs.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto a = pick(rng);
    auto b = a;
    if (targets[i] == 0) {
      b = pick_other(rng);
      if (b >= a) ++b;
    }
    SynthPair p;
    std::ostringstream id;
    id << 'p' << std::setw(5) << std::setfill('0') << i;
    p.record.pair_id = id.str();
    p.record.image_a = p.record.pair_id + "_a.png";
    p.record.image_b = p.record.pair_id + "_b.png";
    p.record.target = targets[i];
    p.record.emotion_a = spec.palette[a];
    p.record.emotion_b = spec.palette[b];
    const auto id_a = random_identity(rng, spec.identity_variation);
    const auto id_b = random_identity(rng, spec.identity_variation);
    p.image_a = render_face(id_a, expression_of(p.record.emotion_a), spec.image_size, spec.jitter, spec.noise, rng);
    p.image_b = render_face(id_b, expression_of(p.record.emotion_b), spec.image_size, spec.jitter, spec.noise, rng);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<PairRecord> generate_pair_set(const PairSetSpec& spec, const fs::path& out_dir) {
  const PairLayout layout{out_dir};
  auto pairs = render_pair_set(spec);
  if (fs::exists(layout.images_dir())) fs::remove_all(layout.images_dir());
  std::vector<PairRecord> records;
  records.reserve(pairs.size());
  for (auto& p : pairs) {
    save_png(layout.images_dir() / p.record.image_a, p.image_a);
    save_png(layout.images_dir() / p.record.image_b, p.image_b);
    records.push_back(p.record);
  }
  write_pair_csv(layout.csv_path(), records);
  return records;
}

}  // namespace moodkit
