#include "moodkit/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "moodkit/ablation.hpp"
#include "moodkit/annotations.hpp"
#include "moodkit/checkpoint.hpp"
#include "moodkit/corpus.hpp"
#include "moodkit/errors.hpp"
#include "moodkit/hash.hpp"
#include "moodkit/jsonl.hpp"
#include "moodkit/log.hpp"
#include "moodkit/metrics.hpp"

namespace moodkit {

namespace fs = std::filesystem;

std::string to_string(DeltaSource source) { return source == DeltaSource::gt ? "gt" : "pseudo"; }

DeltaSource parse_delta_source(const std::string& name) {
  if (name == "pseudo") return DeltaSource::pseudo;
  if (name == "gt") return DeltaSource::gt;
  throw ConfigError("unknown delta source '" + name + "' (expected pseudo or gt)");
}

std::string model_name(MoodModelKind kind, DeltaSource delta) {
  if (kind == MoodModelKind::resmood) return "resmood";
  return "resmoodemo-" + to_string(delta);
}

// ---------------------------------------------------------------------------
// Settings
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto s = trim(text);
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || s.empty()) {
    throw ConfigError("config: bad value '" + text + "' for " + key);
  }
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_value(std::int64_t v) { return std::to_string(v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(double v) { return format_double(v); }
std::string format_value(const std::string& v) { return v; }
std::string format_value(const fs::path& v) { return v.string(); }

template <class T>
std::string format_value(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_value(values[i]);
  }
  return out;
}

template <class T>
void parse_into(const std::string& key, const std::string& text, T& out) {
  if constexpr (std::is_same_v<T, std::string>) {
    out = trim(text);
  } else if constexpr (std::is_same_v<T, fs::path>) {
    out = trim(text);
  } else {
    out = parse_number<T>(key, text);
  }
}

template <class T>
void parse_into(const std::string& key, const std::string& text, std::vector<T>& out) {
  std::vector<T> values;
  for (const auto& item : split_list(text)) {
    T v{};
    parse_into(key, item, v);
    values.push_back(v);
  }
  if (values.empty()) throw ConfigError("config: empty list for " + key);
  out = std::move(values);
}

struct Field {
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

template <class Access>
Field field(std::string key, Access access) {
  return {key,
          [access](const PipelineConfig& c) { return format_value(access(const_cast<PipelineConfig&>(c))); },
          [access, key](PipelineConfig& c, const std::string& v) { parse_into(key, v, access(c)); }};
}

Field custom(std::string key, std::function<std::string(const PipelineConfig&)> get,
             std::function<void(PipelineConfig&, const std::string&)> set) {
  return {std::move(key), std::move(get), std::move(set)};
}

template <class Access>
Field emotion_triple(std::string key, Access access) {
  return custom(
      key,
      [access](const PipelineConfig& c) {
        std::vector<std::string> names;
        for (const auto e : access(const_cast<PipelineConfig&>(c))) names.emplace_back(to_string(e));
        return format_value(names);
      },
      [access, key](PipelineConfig& c, const std::string& v) {
        const auto names = split_list(v);
        if (names.size() != 3) throw ConfigError("config: " + key + " takes three emotions (negative, neutral, positive)");
        for (std::size_t i = 0; i < 3; ++i) {
          const auto e = parse_emotion(names[i]);
          if (!e) throw ConfigError("config: unknown emotion '" + names[i] + "' in " + key);
          access(c)[i] = *e;
        }
      });
}

void add_train_fields(std::vector<Field>& fields, const std::string& prefix,
                      TrainConfig PipelineConfig::*member) {
  fields.push_back(field(prefix + "epochs", [member](PipelineConfig& c) -> auto& { return (c.*member).epochs; }));
  fields.push_back(
      field(prefix + "batch_size", [member](PipelineConfig& c) -> auto& { return (c.*member).batch_size; }));
  fields.push_back(
      field(prefix + "learning_rate", [member](PipelineConfig& c) -> auto& { return (c.*member).learning_rate; }));
  fields.push_back(
      field(prefix + "lr_decay_every", [member](PipelineConfig& c) -> auto& { return (c.*member).lr_decay_every; }));
  fields.push_back(field(prefix + "lr_decay_factor",
                         [member](PipelineConfig& c) -> auto& { return (c.*member).lr_decay_factor; }));
  fields.push_back(field(prefix + "holdout_fraction",
                         [member](PipelineConfig& c) -> auto& { return (c.*member).holdout_fraction; }));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(field("seed", [](PipelineConfig& c) -> auto& { return c.seed; }));
    f.push_back(field("paths.workdir", [](PipelineConfig& c) -> auto& { return c.workdir; }));

    f.push_back(field("synth.num_videos", [](PipelineConfig& c) -> auto& { return c.synth.num_videos; }));
    f.push_back(field("synth.frames_per_video", [](PipelineConfig& c) -> auto& { return c.synth.frames_per_video; }));
    f.push_back(field("synth.image_size", [](PipelineConfig& c) -> auto& { return c.synth.image_size; }));
    f.push_back(field("synth.noise", [](PipelineConfig& c) -> auto& { return c.synth.noise; }));
    f.push_back(field("synth.jitter", [](PipelineConfig& c) -> auto& { return c.synth.jitter; }));
    f.push_back(field("synth.identity_variation",
                      [](PipelineConfig& c) -> auto& { return c.synth.identity_variation; }));
    f.push_back(field("synth.burst_rate", [](PipelineConfig& c) -> auto& { return c.synth.burst_rate; }));
    f.push_back(field("synth.burst_min", [](PipelineConfig& c) -> auto& { return c.synth.burst_min; }));
    f.push_back(field("synth.burst_max", [](PipelineConfig& c) -> auto& { return c.synth.burst_max; }));
    f.push_back(custom(
        "synth.volatility", [](const PipelineConfig& c) { return format_value(std::vector<double>(c.synth.volatility.begin(), c.synth.volatility.end())); },
        [](PipelineConfig& c, const std::string& v) {
          std::vector<double> values;
          parse_into("synth.volatility", v, values);
          if (values.size() != 3) throw ConfigError("config: synth.volatility takes three values (negative, neutral, positive)");
          std::copy(values.begin(), values.end(), c.synth.volatility.begin());
        }));
    f.push_back(emotion_triple("synth.resting", [](PipelineConfig& c) -> auto& { return c.synth.resting; }));
    f.push_back(emotion_triple("synth.bursts", [](PipelineConfig& c) -> auto& { return c.synth.bursts; }));

    f.push_back(field("pairs.count", [](PipelineConfig& c) -> auto& { return c.pairs.count; }));
    f.push_back(field("pairs.noise", [](PipelineConfig& c) -> auto& { return c.pairs.noise; }));
    f.push_back(field("pairs.jitter", [](PipelineConfig& c) -> auto& { return c.pairs.jitter; }));
    f.push_back(field("pairs.identity_variation",
                      [](PipelineConfig& c) -> auto& { return c.pairs.identity_variation; }));
    f.push_back(custom(
        "pairs.palette",
        [](const PipelineConfig& c) {
          std::vector<std::string> names;
          for (const auto e : c.pairs.palette) names.emplace_back(to_string(e));
          return format_value(names);
        },
        [](PipelineConfig& c, const std::string& v) {
          std::vector<Emotion> palette;
          for (const auto& name : split_list(v)) {
            const auto e = parse_emotion(name);
            if (!e) throw ConfigError("config: unknown emotion '" + name + "' in pairs.palette");
            palette.push_back(*e);
          }
          c.pairs.palette = std::move(palette);
        }));

    f.push_back(field("sampler.t", [](PipelineConfig& c) -> auto& { return c.sampler.t; }));
    f.push_back(field("sampler.s", [](PipelineConfig& c) -> auto& { return c.sampler.s; }));
    f.push_back(field("sampler.n", [](PipelineConfig& c) -> auto& { return c.sampler.n; }));

    f.push_back(field("siamese.encoder", [](PipelineConfig& c) -> auto& { return c.siamese.encoder; }));
    f.push_back(field("siamese.encoder_width", [](PipelineConfig& c) -> auto& { return c.siamese.encoder_width; }));
    f.push_back(field("siamese.embedding_dim", [](PipelineConfig& c) -> auto& { return c.siamese.embedding_dim; }));
    f.push_back(field("siamese.head_widths", [](PipelineConfig& c) -> auto& { return c.siamese.head_widths; }));
    f.push_back(field("siamese.dropout", [](PipelineConfig& c) -> auto& { return c.siamese.dropout; }));
    f.push_back(field("siamese.margin", [](PipelineConfig& c) -> auto& { return c.siamese.margin; }));
    f.push_back(field("siamese.lambda", [](PipelineConfig& c) -> auto& { return c.siamese.lambda; }));
    f.push_back(custom(
        "siamese.reading",
        [](const PipelineConfig& c) {
          return std::string(c.siamese.reading == ContrastiveReading::distance ? "distance" : "similarity");
        },
        [](PipelineConfig& c, const std::string& v) {
          const auto s = trim(v);
          if (s == "similarity") {
            c.siamese.reading = ContrastiveReading::similarity;
          } else if (s == "distance") {
            c.siamese.reading = ContrastiveReading::distance;
          } else {
            throw ConfigError("config: siamese.reading must be similarity or distance");
          }
        }));
    f.push_back(field("siamese.image_size", [](PipelineConfig& c) -> auto& { return c.siamese.image_size; }));
    add_train_fields(f, "siamese.", &PipelineConfig::siamese_train);

    f.push_back(custom(
        "model.backbone", [](const PipelineConfig& c) { return to_string(c.model.backbone.family); },
        [](PipelineConfig& c, const std::string& v) {
          try {
            c.model.backbone.family = parse_backbone_family(trim(v));
          } catch (const Error& e) {
            throw ConfigError(std::string("config: model.backbone: ") + e.what());
          }
        }));
    f.push_back(field("model.output_dim", [](PipelineConfig& c) -> auto& { return c.model.backbone.output_dim; }));
    f.push_back(field("model.base_width", [](PipelineConfig& c) -> auto& { return c.model.backbone.base_width; }));
    f.push_back(field("model.input_size", [](PipelineConfig& c) -> auto& { return c.model.input_size; }));
    f.push_back(field("model.mood_widths", [](PipelineConfig& c) -> auto& { return c.model.heads.mood_widths; }));
    f.push_back(field("model.delta_widths", [](PipelineConfig& c) -> auto& { return c.model.heads.delta_widths; }));
    f.push_back(field("model.dropout", [](PipelineConfig& c) -> auto& { return c.model.heads.dropout; }));
    add_train_fields(f, "train.", &PipelineConfig::train);

    f.push_back(field("distill.temperature", [](PipelineConfig& c) -> auto& { return c.distill.temperature; }));
    f.push_back(field("distill.alpha", [](PipelineConfig& c) -> auto& { return c.distill.alpha; }));
    f.push_back(custom(
        "distill.teacher_delta", [](const PipelineConfig& c) { return to_string(c.teacher_delta); },
        [](PipelineConfig& c, const std::string& v) { c.teacher_delta = parse_delta_source(trim(v)); }));

    f.push_back(field("ablate.n_values", [](PipelineConfig& c) -> auto& { return c.ablate.n_values; }));
    f.push_back(field("ablate.t_values", [](PipelineConfig& c) -> auto& { return c.ablate.t_values; }));
    f.push_back(field("ablate.backbones", [](PipelineConfig& c) -> auto& { return c.ablate.backbones; }));
    f.push_back(field("ablate.resnet_width", [](PipelineConfig& c) -> auto& { return c.ablate.resnet_width; }));
    f.push_back(field("ablate.temperatures", [](PipelineConfig& c) -> auto& { return c.ablate.temperatures; }));
    f.push_back(field("ablate.alphas", [](PipelineConfig& c) -> auto& { return c.ablate.alphas; }));
    f.push_back(custom(
        "ablate.delta", [](const PipelineConfig& c) { return to_string(c.ablate.delta); },
        [](PipelineConfig& c, const std::string& v) { c.ablate.delta = parse_delta_source(trim(v)); }));
    return f;
  }();
  return table;
}

const Field& find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return f;
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

bool matches(const std::string& key, const std::vector<std::string>& prefixes) {
  return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) {
    return key == p || (!p.empty() && p.back() == '.' && key.rfind(p, 0) == 0);
  });
}

}  // namespace

void PipelineConfig::resolve_seeds() {
  synth.seed = video_seed(seed, 0);
  pairs.seed = video_seed(seed, 1);
  siamese_train.seed = video_seed(seed, 2);
  train.seed = video_seed(seed, 3);
  pairs.image_size = synth.image_size;
  model.frames = sampler.n;
}

void PipelineConfig::validate() const {
  synth.validate();
  sampler.validate();
  siamese.validate();
  siamese_train.validate();
  model.validate();
  train.validate();
  distill.validate();
  if (pairs.count < 2) throw ConfigError("config: pairs.count must be >= 2");
  if (ablate.resnet_width < 1) throw ConfigError("config: ablate.resnet_width must be >= 1");
}

PipelineConfig default_config() {
  PipelineConfig c;
  c.siamese_train.epochs = 40;
  c.siamese_train.batch_size = 64;
  c.siamese_train.holdout_fraction = 0.2;
  c.resolve_seeds();
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, value);
}

std::map<std::string, std::string> config_settings(const PipelineConfig& config) {
  std::map<std::string, std::string> out;
  for (const auto& f : fields()) out[f.key] = f.get(config);
  return out;
}

std::map<std::string, std::string> parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) {
      if (i) value += ',';
      value += item.inputs[i];
    }
    out[item.fullname()] = value;
  }
  return out;
}

PipelineConfig load_config(const std::vector<fs::path>& files, const std::vector<std::string>& overrides) {
  auto config = default_config();
  for (const auto& file : files) {
    for (const auto& [key, value] : parse_config_file(file)) apply_setting(config, key, value);
  }
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("config: override '" + item + "' is not key=value");
    apply_setting(config, trim(item.substr(0, eq)), item.substr(eq + 1));
  }
  config.resolve_seeds();
  config.validate();
  return config;
}

std::string section_hash(const PipelineConfig& config, const std::vector<std::string>& prefixes) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : config_settings(config)) {
    if (key.rfind("paths.", 0) == 0) continue;
    if (matches(key, prefixes)) j[key] = value;
  }
  return sha256_hex(j.dump());
}

std::string config_hash(const PipelineConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, value] : config_settings(config)) {
    if (key.rfind("paths.", 0) != 0) j[key] = value;
  }
  return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// Stage records
// ---------------------------------------------------------------------------

nlohmann::json to_json(const StageRecord& r) {
  return {{"stage", r.stage},         {"key", r.key},           {"settings_hash", r.settings_hash},
          {"config_hash", r.config_hash}, {"artifacts", r.artifacts}, {"upstream", r.upstream}};
}

StageRecord stage_record_from_json(const nlohmann::json& j) {
  StageRecord r;
  r.stage = j.at("stage").get<std::string>();
  r.key = j.at("key").get<std::string>();
  r.settings_hash = j.at("settings_hash").get<std::string>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  r.upstream = j.at("upstream").get<std::map<std::string, std::string>>();
  return r;
}

std::string artifact_digest(const fs::path& path) {
  if (fs::is_regular_file(path)) return sha256_file(path);
  if (!fs::is_directory(path)) throw DataError("missing artifact " + path.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& file : files) {
    listing += fs::relative(file, path).generic_string();
    listing += ' ';
    listing += sha256_file(file);
    listing += '\n';
  }
  return sha256_hex(listing);
}

namespace {

std::vector<std::string> stage_prefixes(const std::string& stage) {
  if (stage == "synth") return {"seed", "synth.", "pairs."};
  if (stage == "derive-labels") return {};
  if (stage == "make-clips") return {"sampler."};
  if (stage == "train-siamese") return {"seed", "siamese."};
  if (stage == "pseudo-label") return {};
  if (stage.rfind("train-mood.", 0) == 0) return {"seed", "model.", "train."};
  if (stage == "train-ts") return {"seed", "model.", "train.", "distill."};
  if (stage == "evaluate") return {};
  if (stage.rfind("ablate.", 0) == 0) return {"seed", "sampler.", "model.", "train.", "distill.", "ablate."};
  throw StructuralError("unknown stage " + stage);
}

class StageWriter {
 public:
  StageWriter(const PipelineConfig& config, std::string stage) : config_(config), ws_{config.workdir} {
    record_.stage = std::move(stage);
    record_.settings_hash = section_hash(config, stage_prefixes(record_.stage));
    record_.config_hash = config_hash(config);
  }

  const StageRecord& depend(const std::string& upstream) {
    deps_.push_back(verify_stage(config_, upstream));
    record_.upstream[upstream] = deps_.back().key;
    return deps_.back();
  }

  void artifact(const fs::path& path) {
    record_.artifacts[fs::relative(path, ws_.root).generic_string()] = artifact_digest(path);
  }

  void commit() {
    std::string material = record_.stage + "\n" + record_.settings_hash + "\n";
    for (const auto& [name, key] : record_.upstream) material += name + "=" + key + "\n";
    record_.key = sha256_hex(material);
    write_json(ws_.stage_record(record_.stage), to_json(record_));
  }

  const std::string& config_hash_value() const { return record_.config_hash; }

 private:
  const PipelineConfig& config_;
  Workspace ws_;
  StageRecord record_;
  std::vector<StageRecord> deps_;
};

PipelineConfig prepared(const PipelineConfig& config) {
  auto c = config;
  c.resolve_seeds();
  c.validate();
  return c;
}

bool has_stage(const PipelineConfig& config, const std::string& stage) {
  return fs::exists(Workspace{config.workdir}.stage_record(stage));
}

}  // namespace

StageRecord verify_stage(const PipelineConfig& config, const std::string& stage) {
  const Workspace ws{config.workdir};
  const auto path = ws.stage_record(stage);
  if (!fs::exists(path)) {
    throw DataError("missing input: stage '" + stage + "' has not been run in " + ws.root.string());
  }
  const auto record = stage_record_from_json(read_json(path));
  const auto expected = section_hash(config, stage_prefixes(stage));
  if (record.settings_hash != expected) {
    throw UpstreamHashError("stale upstream: '" + stage +
                            "' outputs were produced with different settings; rerun `" +
                            stage.substr(0, stage.find('.')) + "`");
  }
  for (const auto& [rel, digest] : record.artifacts) {
    const auto file = ws.root / rel;
    if (!fs::exists(file)) {
      throw UpstreamHashError("upstream artifact " + rel + " of '" + stage + "' is missing");
    }
    if (artifact_digest(file) != digest) {
      throw UpstreamHashError("upstream artifact " + rel + " of '" + stage + "' changed after it was written");
    }
  }
  for (const auto& [name, key] : record.upstream) {
    const auto up = verify_stage(config, name);
    if (up.key != key) {
      throw UpstreamHashError("stale upstream: '" + name + "' was rerun after '" + stage + "'; rerun `" +
                              stage.substr(0, stage.find('.')) + "`");
    }
  }
  return record;
}

// ---------------------------------------------------------------------------
// Shared data helpers
// ---------------------------------------------------------------------------

namespace {

std::map<std::string, std::size_t> count_moods(const std::vector<MoodRecord>& moods) {
  std::map<std::string, std::size_t> counts;
  for (const auto& m : moods) counts[mood_class_names()[static_cast<std::size_t>(mood_class(m.mood))]]++;
  return counts;
}

std::vector<MoodRecord> read_moods(const fs::path& path) {
  std::vector<MoodRecord> out;
  for (const auto& row : read_jsonl(path)) out.push_back(mood_record_from_json(row));
  return out;
}

std::vector<ClipSpec> build_clips(const CorpusLayout& corpus, const std::vector<MoodRecord>& moods,
                                  const SamplerConfig& sampler) {
  std::vector<ClipSpec> clips;
  for (const auto& m : moods) {
    const auto length = corpus.video_length(m.video_id);
    auto video_clips = generate_clips(m.video_id, length, sampler, m.mood);
    clips.insert(clips.end(), video_clips.begin(), video_clips.end());
  }
  return clips;
}

std::vector<DeltaRecord> gt_delta_records(const CorpusLayout& corpus, const std::vector<ClipSpec>& clips) {
  std::vector<DeltaRecord> out;
  std::map<std::string, AnnotationTrack> tracks;
  for (const auto& clip : clips) {
    auto it = tracks.find(clip.video_id);
    if (it == tracks.end()) {
      it = tracks.emplace(clip.video_id, parse_annotations(corpus.annotation_path(clip.video_id), clip.video_id))
               .first;
    }
    const auto [first, last] = delta_endpoints(clip);
    const auto delta = derive_delta_gt(it->second.emotion_at(first), it->second.emotion_at(last));
    if (delta) out.push_back({clip.video_id, clip.window_start, *delta});
  }
  return out;
}

std::vector<DeltaRecord> pseudo_delta_records(SiameseModel& model, FrameSource& frames,
                                              const std::vector<ClipSpec>& clips) {
  std::vector<DeltaRecord> out;
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < clips.size(); begin += kChunk) {
    const auto end = std::min(clips.size(), begin + kChunk);
    std::vector<torch::Tensor> a;
    std::vector<torch::Tensor> b;
    for (std::size_t i = begin; i < end; ++i) {
      const auto [first, last] = delta_endpoints(clips[i]);
      a.push_back(frames.frame(clips[i].video_id, first));
      b.push_back(frames.frame(clips[i].video_id, last));
    }
    const auto deltas = pseudo_label_batch(model, torch::stack(a), torch::stack(b));
    for (std::size_t i = begin; i < end; ++i) {
      out.push_back({clips[i].video_id, clips[i].window_start, deltas[i - begin]});
    }
  }
  return out;
}

void write_metrics(const fs::path& path, const std::string& model, double f1, const std::string& hash) {
  write_json(path, {{"model", model}, {"f1", f1}, {"config_hash", hash}});
}

nlohmann::json history_json(const MoodTrainResult& r) {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& e : r.history) {
    h.push_back({{"learning_rate", e.learning_rate}, {"loss", e.loss}, {"val_f1", e.val_f1}});
  }
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"history", h},
          {"best_val_f1", num(r.best_val_f1)},
          {"best_epoch", r.best_epoch},
          {"final_val_f1", num(r.final_val_f1)},
          {"train_f1", num(r.train_f1)}};
}

double finite_or_zero(double v) { return std::isfinite(v) ? v : 0.0; }

/// Clips of the workdir with Δ labels from `source` attached. Throws
/// ConfigError when some clip carries no label.
std::vector<ClipSpec> clips_with_delta(const Workspace& ws, DeltaSource source) {
  auto clips = read_clip_manifest(ws.manifest());
  const auto labels = read_delta_labels(source == DeltaSource::gt ? ws.delta_gt() : ws.delta_pseudo());
  const auto filled = attach_delta_labels(clips, labels);
  if (filled != clips.size()) {
    throw ConfigError("resmoodemo needs a delta label on every clip, but " + std::to_string(clips.size() - filled) +
                      " of " + std::to_string(clips.size()) + " clips have none (" + to_string(source) +
                      " labels)");
  }
  return clips;
}

}  // namespace

ClipSplit load_split(const PipelineConfig& config, const std::vector<ClipSpec>& clips) {
  const Workspace ws{config.workdir};
  auto [train_specs, val_specs] = split_by_video(clips, config.train.holdout_fraction, config.train.seed);
  CorpusFrameSource frames(CorpusLayout{ws.corpus()}, config.model.input_size);
  return {load_clip_tensors(train_specs, frames), load_clip_tensors(val_specs, frames)};
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

nlohmann::json run_synth(const PipelineConfig& input) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  StageWriter stage(config, "synth");
  fs::remove_all(ws.corpus());
  fs::remove_all(ws.pairs());
  const auto summary = generate_corpus(config.synth, ws.corpus());
  const auto pairs = generate_pair_set(config.pairs, ws.pairs());
  stage.artifact(ws.corpus());
  stage.artifact(ws.pairs());
  stage.commit();
  std::size_t similar = 0;
  for (const auto& p : pairs) similar += static_cast<std::size_t>(p.target);
  return {{"videos", summary.videos.size()}, {"frames", summary.frames}, {"pairs", pairs.size()},
          {"similar_pairs", similar}};
}

nlohmann::json run_derive_labels(const PipelineConfig& input) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  StageWriter stage(config, "derive-labels");
  const CorpusLayout corpus{ws.corpus()};
  if (has_stage(config, "synth")) {
    stage.depend("synth");
  } else {
    // A corpus supplied by hand: pin its annotations.
    log::info("derive-labels: no synth record, treating ", corpus.root.string(), " as an external corpus");
    stage.artifact(corpus.annotations_dir());
  }
  std::vector<MoodRecord> moods;
  std::size_t rejected = 0;
  for (const auto& video : corpus.videos()) {
    try {
      const auto track = parse_annotations(corpus.annotation_path(video), video);
      moods.push_back({video, derive_mood_label(track), track.dropped_frames});
    } catch (const RejectedTrackError& e) {
      ++rejected;
      log::warn("derive-labels: ", e.what());
    }
  }
  if (moods.empty()) throw DataError("derive-labels: no usable annotation tracks in " + corpus.root.string());
  std::vector<json> rows;
  for (const auto& m : moods) rows.push_back(to_json(m));
  write_jsonl(ws.moods(), rows);
  stage.artifact(ws.moods());
  stage.commit();
  return {{"videos", moods.size()}, {"rejected", rejected}, {"moods", count_moods(moods)}};
}

nlohmann::json run_make_clips(const PipelineConfig& input) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  StageWriter stage(config, "make-clips");
  stage.depend("derive-labels");
  const CorpusLayout corpus{ws.corpus()};
  const auto moods = read_moods(ws.moods());
  const auto clips = build_clips(corpus, moods, config.sampler);
  if (clips.empty()) throw DataError("make-clips: no video is long enough for t = " + std::to_string(config.sampler.t));
  const auto gt = gt_delta_records(corpus, clips);
  write_clip_manifest(ws.manifest(), clips);
  write_delta_labels(ws.delta_gt(), gt);
  stage.artifact(ws.manifest());
  stage.artifact(ws.delta_gt());
  stage.commit();
  std::size_t similar = 0;
  for (const auto& d : gt) similar += d.delta == Delta::similar ? 1 : 0;
  return {{"clips", clips.size()}, {"delta_gt_labels", gt.size()}, {"delta_gt_similar", similar}};
}

nlohmann::json run_train_siamese(const PipelineConfig& input) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  StageWriter stage(config, "train-siamese");
  if (has_stage(config, "synth")) {
    stage.depend("synth");
  } else {
    log::info("train-siamese: no synth record, treating ", ws.pairs().string(), " as an external pair set");
    stage.artifact(ws.pairs());
  }
  const auto pairs = load_pair_set(PairLayout{ws.pairs()}, config.siamese.image_size);
  auto result = train_siamese(pairs, config.siamese, config.siamese_train);
  save_siamese(ws.siamese_checkpoint(), result.model, stage.config_hash_value());
  const auto report_path = ws.reports() / "siamese.json";
  const nlohmann::json report{{"model", "siamese"},
                              {"heldout_accuracy", result.heldout_accuracy},
                              {"train_accuracy", result.train_accuracy},
                              {"heldout_pairs", result.heldout_pairs},
                              {"train_pairs", result.train_pairs},
                              {"epoch_loss", result.epoch_loss},
                              {"config_hash", stage.config_hash_value()}};
  write_json(report_path, report);
  stage.artifact(ws.siamese_checkpoint());
  stage.artifact(sidecar_path(ws.siamese_checkpoint()));
  stage.artifact(report_path);
  stage.commit();
  log::info("train-siamese: held-out pair accuracy ", result.heldout_accuracy, " over ", result.heldout_pairs,
            " pairs");
  return report;
}

nlohmann::json run_pseudo_label(const PipelineConfig& input) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  StageWriter stage(config, "pseudo-label");
  stage.depend("train-siamese");
  stage.depend("make-clips");
  auto model = load_siamese(ws.siamese_checkpoint());
  const auto clips = read_clip_manifest(ws.manifest());
  CorpusFrameSource frames(CorpusLayout{ws.corpus()}, model.spec().image_size);
  const auto labels = pseudo_delta_records(model, frames, clips);
  write_delta_labels(ws.delta_pseudo(), labels);

  // Agreement with annotation-derived labels where both exist.
  std::map<std::pair<std::string, std::int64_t>, Delta> gt;
  for (const auto& d : read_delta_labels(ws.delta_gt())) gt[{d.video_id, d.window_start}] = d.delta;
  std::vector<int> predicted;
  std::vector<int> truth;
  std::size_t similar = 0;
  for (const auto& d : labels) {
    similar += d.delta == Delta::similar ? 1 : 0;
    if (const auto it = gt.find({d.video_id, d.window_start}); it != gt.end()) {
      predicted.push_back(delta_class(d.delta));
      truth.push_back(delta_class(it->second));
    }
  }
  nlohmann::json report{{"labels", labels.size()}, {"similar", similar}, {"config_hash", stage.config_hash_value()}};
  if (!truth.empty()) {
    const auto eval = evaluate_predictions(predicted, truth, kDeltaClasses);
    report["agreement_with_gt"] = to_json(eval, delta_class_names());
  }
  const auto report_path = ws.reports() / "pseudo_label.json";
  write_json(report_path, report);
  stage.artifact(ws.delta_pseudo());
  stage.artifact(report_path);
  stage.commit();
  return report;
}

nlohmann::json run_train_mood(const PipelineConfig& input, MoodModelKind kind, DeltaSource delta) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  const auto name = model_name(kind, delta);
  StageWriter stage(config, "train-mood." + name);
  stage.depend("make-clips");
  std::vector<ClipSpec> clips;
  if (kind == MoodModelKind::resmoodemo) {
    if (delta == DeltaSource::pseudo) stage.depend("pseudo-label");
    clips = clips_with_delta(ws, delta);
  } else {
    clips = read_clip_manifest(ws.manifest());
  }
  const auto split = load_split(config, clips);
  auto spec = config.model;
  spec.kind = kind;
  log::info("train-mood: ", name, " on ", split.train.size(), " clips, validating on ", split.val.size());
  auto result = train_mood_model(split.train, split.val, spec, config.train);

  const auto ckpt = ws.checkpoint(name);
  save_mood_net(ckpt, result.model, name, stage.config_hash_value());
  const auto metrics_path = ws.reports() / "metrics" / (name + ".json");
  write_metrics(metrics_path, name, finite_or_zero(result.final_val_f1), stage.config_hash_value());
  auto report = history_json(result);
  report["model"] = name;
  report["config_hash"] = stage.config_hash_value();
  report["train_clips"] = split.train.size();
  report["val_clips"] = split.val.size();
  const auto report_path = ws.reports() / "train" / (name + ".json");
  write_json(report_path, report);
  stage.artifact(ckpt);
  stage.artifact(sidecar_path(ckpt));
  stage.artifact(metrics_path);
  stage.artifact(report_path);
  stage.commit();
  log::info("train-mood: ", name, " train f1 ", result.train_f1, ", val f1 ", result.final_val_f1);
  return report;
}

nlohmann::json run_train_ts(const PipelineConfig& input) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  const auto teacher_name = model_name(MoodModelKind::resmoodemo, config.teacher_delta);
  StageWriter stage(config, "train-ts");
  stage.depend("make-clips");
  stage.depend("train-mood." + teacher_name);
  std::string kind;
  auto teacher = load_mood_net(ws.checkpoint(teacher_name), &kind);
  const auto split = load_split(config, read_clip_manifest(ws.manifest()));
  auto spec = config.model;
  spec.kind = MoodModelKind::resmood;
  auto result = train_student(teacher, split.train, split.val, spec, config.distill, config.train);

  const auto ckpt = ws.checkpoint("student");
  save_mood_net(ckpt, result.model, "student", stage.config_hash_value());
  const auto metrics_path = ws.reports() / "metrics" / "student.json";
  write_metrics(metrics_path, "student", finite_or_zero(result.final_val_f1), stage.config_hash_value());
  auto report = history_json(result);
  report["model"] = "student";
  report["teacher"] = teacher_name;
  report["distill"] = to_json(config.distill);
  report["config_hash"] = stage.config_hash_value();
  const auto report_path = ws.reports() / "train" / "student.json";
  write_json(report_path, report);
  const auto grid_path = ws.reports() / "train_ts_grid.csv";
  write_text(grid_path, grid_csv({{config.distill.temperature, config.distill.alpha, result.final_val_f1}}));
  for (const auto& p : {ckpt, sidecar_path(ckpt), metrics_path, report_path, grid_path}) stage.artifact(p);
  stage.commit();
  log::info("train-ts: student train f1 ", result.train_f1, ", val f1 ", result.final_val_f1);
  return report;
}

nlohmann::json run_evaluate(const PipelineConfig& input) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  StageWriter stage(config, "evaluate");
  stage.depend("make-clips");
  const std::vector<std::pair<std::string, std::string>> candidates{
      {"resmood", "train-mood.resmood"},
      {"resmoodemo-pseudo", "train-mood.resmoodemo-pseudo"},
      {"resmoodemo-gt", "train-mood.resmoodemo-gt"},
      {"student", "train-ts"}};
  std::vector<std::string> models;
  for (const auto& [name, stage_name] : candidates) {
    if (!has_stage(config, stage_name)) continue;
    stage.depend(stage_name);
    models.push_back(name);
  }
  if (models.empty()) throw DataError("evaluate: no trained model found; run train-mood first");

  const auto split = load_split(config, read_clip_manifest(ws.manifest()));
  const auto train_truth = target_classes(split.train.moods);
  const auto val_truth = target_classes(split.val.moods);
  nlohmann::json report{{"config_hash", stage.config_hash_value()},
                        {"train_clips", split.train.size()},
                        {"val_clips", split.val.size()}};
  nlohmann::json metrics = nlohmann::json::array();
  std::ostringstream text;
  for (const auto& name : models) {
    auto model = load_mood_net(ws.checkpoint(name));
    const auto train_eval = evaluate_predictions(predict_moods(model, split.train), train_truth, kMoodClasses);
    nlohmann::json entry{{"train", to_json(train_eval, mood_class_names())}};
    text << format_report(train_eval, mood_class_names(), name + " (training clips)") << '\n';
    double f1 = 0.0;
    if (split.val.size() > 0) {
      const auto val_eval = evaluate_predictions(predict_moods(model, split.val), val_truth, kMoodClasses);
      entry["validation"] = to_json(val_eval, mood_class_names());
      text << format_report(val_eval, mood_class_names(), name + " (held-out clips)") << '\n';
      f1 = val_eval.weighted_f1;
    }
    report["models"][name] = entry;
    metrics.push_back({{"model", name}, {"f1", f1}, {"config_hash", stage.config_hash_value()}});
  }
  if (has_stage(config, "train-siamese")) {
    const auto siamese = read_json(ws.reports() / "siamese.json");
    report["siamese"] = {{"heldout_accuracy", siamese.at("heldout_accuracy")},
                         {"heldout_pairs", siamese.at("heldout_pairs")}};
    text << "siamese held-out pair accuracy: " << format_metric(siamese.at("heldout_accuracy").get<double>())
         << '\n';
  }
  report["metrics"] = metrics;
  const auto json_path = ws.reports() / "evaluate.json";
  const auto text_path = ws.reports() / "evaluate.txt";
  write_json(json_path, report);
  write_text(text_path, text.str());
  stage.artifact(json_path);
  stage.artifact(text_path);
  stage.commit();
  return report;
}

// ---------------------------------------------------------------------------
// Ablations
// ---------------------------------------------------------------------------

namespace {

std::string format_axis_number(double v) { return format_double(v); }

class AblationContext {
 public:
  explicit AblationContext(const PipelineConfig& config)
      : config_(config), ws_{config.workdir}, corpus_{ws_.corpus()}, moods_(read_moods(ws_.moods())) {
    if (config.ablate.delta == DeltaSource::pseudo) siamese_ = load_siamese(ws_.siamese_checkpoint());
  }

  /// Clips at the given sampler setting with Δ labels attached.
  std::vector<ClipSpec> clips(const SamplerConfig& sampler) {
    auto clips = build_clips(corpus_, moods_, sampler);
    if (clips.empty()) throw DataError("no video is long enough for t = " + std::to_string(sampler.t));
    std::vector<DeltaRecord> labels;
    if (config_.ablate.delta == DeltaSource::gt) {
      labels = gt_delta_records(corpus_, clips);
    } else {
      CorpusFrameSource frames(corpus_, siamese_.spec().image_size);
      labels = pseudo_delta_records(siamese_, frames, clips);
    }
    attach_delta_labels(clips, labels);
    return clips;
  }

  MoodTrainResult train(const std::vector<ClipSpec>& clips, ModelSpec spec, const std::string& model) {
    spec.kind = model == "resmoodemo" ? MoodModelKind::resmoodemo : MoodModelKind::resmood;
    const auto split = load_split(config_, clips);
    return train_mood_model(split.train, split.val, spec, config_.train);
  }

  const PipelineConfig& config() const { return config_; }

 private:
  PipelineConfig config_;
  Workspace ws_;
  CorpusLayout corpus_;
  std::vector<MoodRecord> moods_;
  SiameseModel siamese_;
};

}  // namespace

nlohmann::json run_ablate(const PipelineConfig& input, const std::string& axis) {
  const auto config = prepared(input);
  const Workspace ws{config.workdir};
  if (axis != "n" && axis != "t" && axis != "backbone" && axis != "temp-alpha") {
    throw ConfigError("ablate: unknown axis '" + axis + "' (expected n, t, backbone or temp-alpha)");
  }
  StageWriter stage(config, "ablate." + axis);
  stage.depend("make-clips");
  if (config.ablate.delta == DeltaSource::pseudo) stage.depend("train-siamese");
  AblationContext ctx(config);

  AblationResult result;
  std::vector<GridPoint> grid;
  if (axis == "temp-alpha") {
    const auto base_clips = ctx.clips(config.sampler);
    const auto split = load_split(config, base_clips);
    std::vector<AblationCellSpec> cells{{"baseline", "resmood", std::nullopt},
                                        {"teacher", "resmoodemo", std::size_t{0}}};
    for (const auto t : config.ablate.temperatures) {
      for (const auto a : config.ablate.alphas) {
        cells.push_back({"T=" + format_axis_number(t) + ";alpha=" + format_axis_number(a), "student", std::size_t{0}});
        grid.push_back({t, a, std::nullopt});
      }
    }
    MoodNet teacher{nullptr};
    std::size_t grid_index = 0;
    result = run_ablation(axis, cells, [&](const AblationCellSpec& cell) {
      auto spec = config.model;
      if (cell.model == "resmood") return ctx.train(base_clips, spec, "resmood").final_val_f1;
      if (cell.model == "resmoodemo") {
        auto r = ctx.train(base_clips, spec, "resmoodemo");
        teacher = r.model;
        return r.final_val_f1;
      }
      const auto& point = grid.at(grid_index++);
      if (teacher.is_empty()) throw DataError("no teacher: the teacher cell failed");
      spec.kind = MoodModelKind::resmood;
      const DistillConfig distill{point.temperature, point.alpha};
      return train_student(teacher, split.train, split.val, spec, distill, config.train).final_val_f1;
    });
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i].f1 = result.cells[i + 2].f1;
  } else {
    std::vector<std::string> values;
    if (axis == "n") {
      for (const auto v : config.ablate.n_values) values.push_back(std::to_string(v));
    } else if (axis == "t") {
      for (const auto v : config.ablate.t_values) values.push_back(std::to_string(v));
    } else {
      values = config.ablate.backbones;
    }
    result = run_ablation(axis, paired_cells(values), [&](const AblationCellSpec& cell) {
      auto sampler = config.sampler;
      auto spec = config.model;
      if (axis == "n") {
        sampler.n = parse_number<std::int64_t>("ablate.n_values", cell.axis_value);
      } else if (axis == "t") {
        sampler.t = parse_number<std::int64_t>("ablate.t_values", cell.axis_value);
      } else {
        spec.backbone.family = parse_backbone_family(cell.axis_value);
        spec.backbone.base_width = config.ablate.resnet_width;
      }
      sampler.validate();
      spec.frames = sampler.n;
      return ctx.train(ctx.clips(sampler), spec, cell.model).final_val_f1;
    });
  }

  const auto base = ws.reports() / ("ablate_" + axis);
  const auto csv_path = fs::path(base.string() + ".csv");
  const auto json_path = fs::path(base.string() + ".json");
  const auto text_path = fs::path(base.string() + ".txt");
  auto report = to_json(result);
  report["config_hash"] = stage.config_hash_value();
  write_text(csv_path, ablation_csv(result));
  write_json(json_path, report);
  write_text(text_path, format_ablation(result));
  stage.artifact(csv_path);
  stage.artifact(json_path);
  stage.artifact(text_path);
  if (!grid.empty()) {
    const auto grid_path = ws.reports() / "ts_grid.csv";
    write_text(grid_path, grid_csv(grid));
    stage.artifact(grid_path);
  }
  stage.commit();
  return report;
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"moodkit: weakly supervised mood inference from valence traces"};
  app.require_subcommand(1);
  std::vector<std::string> config_files;
  std::vector<std::string> overrides;
  std::string workdir;
  std::string log_level = "info";
  app.add_option("-c,--config", config_files, "Config file (key = value, [section] headers); repeatable")
      ->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "Override a setting, e.g. --set train.epochs=5; repeatable");
  app.add_option("-w,--workdir", workdir, "Work directory (overrides paths.workdir)");
  app.add_option("--log-level", log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  auto* synth = app.add_subcommand("synth", "Generate the synthetic corpus and pair set");
  auto* derive = app.add_subcommand("derive-labels", "Derive video mood labels from valence annotations");
  auto* clips = app.add_subcommand("make-clips", "Cut clips and derive annotation-based delta labels");
  auto* siamese = app.add_subcommand("train-siamese", "Train the emotion-change pair classifier");
  auto* pseudo = app.add_subcommand("pseudo-label", "Label clip endpoints with the pair classifier");
  auto* mood = app.add_subcommand("train-mood", "Train ResMood or ResMoodEmo");
  std::string model = "resmoodemo";
  std::string delta = "pseudo";
  mood->add_option("--model", model, "resmood or resmoodemo")->check(CLI::IsMember({"resmood", "resmoodemo"}));
  mood->add_option("--delta", delta, "Delta labels: pseudo or gt")->check(CLI::IsMember({"pseudo", "gt"}));
  auto* ts = app.add_subcommand("train-ts", "Distil the ResMoodEmo teacher into a ResMood student");
  auto* evaluate = app.add_subcommand("evaluate", "Score every trained model on the held-out videos");
  auto* ablate = app.add_subcommand("ablate", "Run an ablation grid");
  std::string axis;
  ablate->add_option("--axis", axis, "n, t, backbone or temp-alpha")
      ->required()
      ->check(CLI::IsMember({"n", "t", "backbone", "temp-alpha"}));
  auto* show = app.add_subcommand("show-config", "Print the resolved settings and their hash");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::map<std::string, log::Level> levels{
      {"debug", log::Level::debug}, {"info", log::Level::info}, {"warn", log::Level::warn}, {"error", log::Level::error}};
  log::set_threshold(levels.at(log_level));

  try {
    std::vector<fs::path> files(config_files.begin(), config_files.end());
    if (!workdir.empty()) overrides.push_back("paths.workdir=" + workdir);
    const auto config = load_config(files, overrides);
    nlohmann::json summary;
    std::string command;
    if (synth->parsed()) {
      command = "synth";
      summary = run_synth(config);
    } else if (derive->parsed()) {
      command = "derive-labels";
      summary = run_derive_labels(config);
    } else if (clips->parsed()) {
      command = "make-clips";
      summary = run_make_clips(config);
    } else if (siamese->parsed()) {
      command = "train-siamese";
      summary = run_train_siamese(config);
    } else if (pseudo->parsed()) {
      command = "pseudo-label";
      summary = run_pseudo_label(config);
    } else if (mood->parsed()) {
      command = "train-mood";
      const auto kind = parse_mood_model_kind(model);
      if (kind == MoodModelKind::resmood && mood->count("--delta") > 0) {
        log::info("train-mood: resmood has no delta head; --delta is ignored");
      }
      summary = run_train_mood(config, kind, parse_delta_source(delta));
    } else if (ts->parsed()) {
      command = "train-ts";
      summary = run_train_ts(config);
    } else if (evaluate->parsed()) {
      command = "evaluate";
      summary = run_evaluate(config);
      if (log::threshold() < log::Level::error) {
        std::cerr << slurp(Workspace{config.workdir}.reports() / "evaluate.txt");
      }
    } else if (ablate->parsed()) {
      command = "ablate";
      summary = run_ablate(config, axis);
      if (log::threshold() < log::Level::error) {
        std::cerr << slurp(Workspace{config.workdir}.reports() / ("ablate_" + axis + ".txt"));
      }
    } else if (show->parsed()) {
      for (const auto& [key, value] : config_settings(config)) std::cout << key << " = " << value << '\n';
      std::cout << "; config_hash = " << config_hash(config) << '\n';
      return 0;
    }
    log::info(command, " done");
    return 0;
  } catch (const UpstreamHashError& e) {
    log::error(e.what());
    return 3;
  } catch (const Error& e) {
    log::error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log::error("internal error: ", e.what());
    return 1;
  }
}

}  // namespace moodkit
