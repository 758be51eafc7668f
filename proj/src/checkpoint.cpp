#include "moodkit/checkpoint.hpp"

#include "moodkit/errors.hpp"
#include "moodkit/jsonl.hpp"

namespace moodkit {

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

nlohmann::json save_checkpoint(const std::filesystem::path& path, torch::nn::Module& module,
                               const std::string& kind, const nlohmann::json& spec,
                               const std::string& config_hash) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  torch::serialize::OutputArchive archive;
  module.save(archive);
  archive.write("moodkit_format_version", torch::tensor(kCheckpointVersion, torch::kLong));
  archive.save_to(path.string());

  nlohmann::json meta = {{"format_version", kCheckpointVersion},
                         {"kind", kind},
                         {"spec", spec},
                         {"config_hash", config_hash}};
  write_json(sidecar_path(path), meta);
  return meta;
}

nlohmann::json read_checkpoint_meta(const std::filesystem::path& path,
                                    const std::string& expected_kind) {
  if (!std::filesystem::exists(path)) throw Error("checkpoint not found: " + path.string());
  const auto meta = read_json(sidecar_path(path));
  if (meta.value("format_version", 0) != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version");
  }
  if (!expected_kind.empty() && meta.value("kind", std::string{}) != expected_kind) {
    throw StructuralError(path.string() + ": expected a '" + expected_kind + "' checkpoint, found '" +
                          meta.value("kind", std::string{}) + "'");
  }
  return meta;
}

void load_checkpoint_weights(const std::filesystem::path& path, torch::nn::Module& module) {
  torch::serialize::InputArchive archive;
  archive.load_from(path.string());
  torch::Tensor version;
  if (!archive.try_read("moodkit_format_version", version) ||
      version.item<std::int64_t>() != kCheckpointVersion) {
    throw ParseError(path.string() + ": missing or unsupported format version");
  }
  try {
    module.load(archive);
  } catch (const c10::Error& e) {
    throw StructuralError(path.string() + ": weights do not match the model: " + e.what_without_backtrace());
  }
}

}  // namespace moodkit
