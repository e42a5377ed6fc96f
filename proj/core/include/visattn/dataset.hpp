#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "visattn/scene.hpp"

namespace visattn {

// Benchmark JSON: an array of records
//   {"item_id", "image_path", "question", "options", "gold", "pair_id",
//    "set_id", "reversed", "scene"}
// gold is an option index or the option text; pair_id, set_id, reversed,
// image_path and scene are optional. Written with this exact field order.
//
// VSR JSON: an array of {"item_id", "image_path", "caption", "label"} with a
// boolean label; items become true/false questions.
//
// Schema violations throw ParseError whose offset() is the record index.

std::vector<EvalItem> parse_whatsup_json(std::string_view text);
std::string format_whatsup_json(const std::vector<EvalItem>& items);
std::vector<EvalItem> load_whatsup_json(const std::filesystem::path& path);
void save_whatsup_json(const std::vector<EvalItem>& items, const std::filesystem::path& path);

std::vector<EvalItem> parse_vsr_json(std::string_view text);
std::string format_vsr_json(const std::vector<EvalItem>& items);
std::vector<EvalItem> load_vsr_json(const std::filesystem::path& path);
void save_vsr_json(const std::vector<EvalItem>& items, const std::filesystem::path& path);

/// Either format; records carrying "caption" and no "question" are VSR.
std::vector<EvalItem> parse_dataset_json(std::string_view text);
std::vector<EvalItem> load_dataset_json(const std::filesystem::path& path);

}  // namespace visattn
