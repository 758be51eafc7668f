#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "moodkit/distill.hpp"
#include "moodkit/moodnet.hpp"
#include "moodkit/sampler.hpp"
#include "moodkit/siamese.hpp"
#include "moodkit/synth.hpp"
#include "moodkit/training.hpp"

namespace moodkit {

/// Where the Δ labels for a ResMoodEmo run come from.
enum class DeltaSource { pseudo, gt };

std::string to_string(DeltaSource source);
DeltaSource parse_delta_source(const std::string& name);

struct AblationSpec {
  std::vector<std::int64_t> n_values{3, 5, 7, 9};
  std::vector<std::int64_t> t_values{50, 100, 150, 200};
  std::vector<std::string> backbones{"18", "34", "50"};
  /// First-stage width of the residual backbones in the backbone axis.
  std::int64_t resnet_width = 16;
  std::vector<double> temperatures{3, 5, 7};
  std::vector<double> alphas{0.05, 0.1, 0.15, 0.2};
  DeltaSource delta = DeltaSource::pseudo;
};

/// Every setting of a run. Seeds of the individual stages derive from `seed`.
struct PipelineConfig {
  std::uint64_t seed = 7;
  std::filesystem::path workdir = "work";
  SynthSpec synth;
  PairSetSpec pairs;
  SamplerConfig sampler;
  SiameseSpec siamese;
  TrainConfig siamese_train;
  ModelSpec model;
  TrainConfig train;
  DistillConfig distill;
  /// Δ source of the ResMoodEmo teacher used by train-ts.
  DeltaSource teacher_delta = DeltaSource::pseudo;
  AblationSpec ablate;

  /// Copies the master seed into every stage seed.
  void resolve_seeds();
  void validate() const;
};

/// Built-in defaults: paper hyperparameters, desk-scale sizes.
PipelineConfig default_config();

/// Known keys in canonical order.
std::vector<std::string> config_keys();

/// Sets one key from its text form. Throws ConfigError on an unknown key or
/// an unparsable value.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);

/// Every key with its canonical text value.
std::map<std::string, std::string> config_settings(const PipelineConfig& config);

/// Parses `key = value` lines with optional [section] headers into dotted
/// keys. Later occurrences win.
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

/// Defaults, then each file in order, then `key=value` overrides.
PipelineConfig load_config(const std::vector<std::filesystem::path>& files,
                           const std::vector<std::string>& overrides);

/// SHA-256 over the canonical settings, excluding paths.*.
std::string config_hash(const PipelineConfig& config);
/// Same, restricted to keys under the given prefixes (e.g. "synth.").
std::string section_hash(const PipelineConfig& config, const std::vector<std::string>& prefixes);

/// Artifact locations under the work directory.
struct Workspace {
  std::filesystem::path root;

  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path pairs() const { return root / "pairs"; }
  std::filesystem::path moods() const { return root / "labels" / "moods.jsonl"; }
  std::filesystem::path manifest() const { return root / "clips" / "manifest.jsonl"; }
  std::filesystem::path delta_gt() const { return root / "labels" / "delta_gt.jsonl"; }
  std::filesystem::path delta_pseudo() const { return root / "labels" / "delta_pseudo.jsonl"; }
  std::filesystem::path siamese_checkpoint() const { return root / "checkpoints" / "siamese.pt"; }
  std::filesystem::path checkpoint(const std::string& model) const {
    return root / "checkpoints" / (model + ".pt");
  }
  std::filesystem::path reports() const { return root / "reports"; }
  std::filesystem::path stages() const { return root / "stages"; }
  std::filesystem::path stage_record(const std::string& stage) const {
    return stages() / (stage + ".json");
  }
};

// ---------------------------------------------------------------------------
// Stage records
// ---------------------------------------------------------------------------

/// Written by every stage next to its outputs. `key` chains the stage's own
/// settings with the keys of the stages it read from.
struct StageRecord {
  std::string stage;
  std::string key;
  std::string settings_hash;
  std::string config_hash;
  std::map<std::string, std::string> artifacts;  // path relative to workdir -> sha256
  std::map<std::string, std::string> upstream;   // stage -> key
};

nlohmann::json to_json(const StageRecord& record);
StageRecord stage_record_from_json(const nlohmann::json& j);

/// Digest of a file, or of a directory tree (sorted relative paths and
/// their contents).
std::string artifact_digest(const std::filesystem::path& path);

/// Checks a stage's record against the current config and its artifacts on
/// disk, and recursively the stages it read from. Throws DataError when the
/// record is missing and UpstreamHashError when anything is stale or altered.
StageRecord verify_stage(const PipelineConfig& config, const std::string& stage);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

nlohmann::json run_synth(const PipelineConfig& config);
nlohmann::json run_derive_labels(const PipelineConfig& config);
nlohmann::json run_make_clips(const PipelineConfig& config);
nlohmann::json run_train_siamese(const PipelineConfig& config);
nlohmann::json run_pseudo_label(const PipelineConfig& config);
nlohmann::json run_train_mood(const PipelineConfig& config, MoodModelKind kind, DeltaSource delta);
nlohmann::json run_train_ts(const PipelineConfig& config);
nlohmann::json run_evaluate(const PipelineConfig& config);
nlohmann::json run_ablate(const PipelineConfig& config, const std::string& axis);

/// Name under which a trained mood model is stored.
std::string model_name(MoodModelKind kind, DeltaSource delta);

/// Train and validation clip sets of the workdir at the configured input
/// size, split by video.
struct ClipSplit {
  ClipTensorSet train;
  ClipTensorSet val;
};
ClipSplit load_split(const PipelineConfig& config, const std::vector<ClipSpec>& clips);

/// Command-line entry point. Returns 0 on success, 2 on a validation
/// failure, 3 on an upstream-hash mismatch.
int run_cli(const std::vector<std::string>& args);

}  // namespace moodkit
