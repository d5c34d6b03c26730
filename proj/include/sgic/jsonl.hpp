#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace sgic {

// One JSON value per line. Parse errors carry the 1-based line number.
std::vector<nlohmann::ordered_json> read_jsonl(const std::filesystem::path& path);

std::string dump_jsonl(const std::vector<nlohmann::ordered_json>& records);

void write_jsonl_atomic(const std::filesystem::path& path,
                        const std::vector<nlohmann::ordered_json>& records);

}  // namespace sgic
