#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

namespace moodkit {

using json = nlohmann::json;

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; key order is nlohmann's sorted order,
// which keeps outputs byte-stable across runs.
void write_json(const std::filesystem::path& path, const json& value);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace moodkit
