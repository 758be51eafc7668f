#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>
#include <torch/torch.h>

namespace moodkit {

inline constexpr int kCheckpointVersion = 1;

/// Weights go to `path` as a torch archive; `path` + ".json" receives the
/// sidecar {"format_version", "kind", "spec", "config_hash"}.
/// Returns the sidecar.
nlohmann::json save_checkpoint(const std::filesystem::path& path, torch::nn::Module& module,
                               const std::string& kind, const nlohmann::json& spec,
                               const std::string& config_hash);

/// Reads and checks the sidecar; `expected_kind` may be empty to accept any.
nlohmann::json read_checkpoint_meta(const std::filesystem::path& path,
                                    const std::string& expected_kind = {});

void load_checkpoint_weights(const std::filesystem::path& path, torch::nn::Module& module);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace moodkit
