#include "visattn/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "visattn/error.hpp"

namespace visattn {

namespace {

using ojson = nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
}

ojson parse_array(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), e.byte);
  }
  if (!doc.is_array()) throw ParseError("expected a top-level JSON array", 0);
  return doc;
}

[[noreturn]] void fail(std::size_t index, const std::string& what) {
  throw ParseError("record " + std::to_string(index) + ": " + what, index);
}

const ojson& field(const ojson& rec, std::size_t index, const char* name) {
  if (!rec.contains(name)) fail(index, std::string("missing field '") + name + "'");
  return rec.at(name);
}

std::string string_field(const ojson& rec, std::size_t index, const char* name) {
  const ojson& v = field(rec, index, name);
  if (!v.is_string()) fail(index, std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

ojson box_json(const CellBox& b) { return ojson::array({b.row, b.col, b.height, b.width}); }

CellBox box_from(const ojson& v, std::size_t index, const char* name) {
  if (!v.is_array() || v.size() != 4) fail(index, std::string("scene.") + name + " must be [row, col, height, width]");
  for (const auto& x : v) {
    if (!x.is_number_integer()) fail(index, std::string("scene.") + name + " entries must be integers");
  }
  return {v[0].get<int>(), v[1].get<int>(), v[2].get<int>(), v[3].get<int>()};
}

ojson scene_json(const SceneSpec& s) {
  ojson j;
  j["object_a"] = s.object_a;
  j["object_b"] = s.object_b;
  j["pos_a"] = box_json(s.pos_a);
  j["pos_b"] = box_json(s.pos_b);
  j["depth_a"] = s.depth_a;
  j["depth_b"] = s.depth_b;
  j["relation"] = std::string(to_string(s.relation));
  j["seed"] = s.seed;
  j["patch_side"] = s.patch_side;
  return j;
}

SceneSpec scene_from(const ojson& j, std::size_t index) {
  if (!j.is_object()) fail(index, "field 'scene' must be an object");
  SceneSpec s;
  try {
    s.object_a = field(j, index, "object_a").get<std::uint32_t>();
    s.object_b = field(j, index, "object_b").get<std::uint32_t>();
    s.pos_a = box_from(field(j, index, "pos_a"), index, "pos_a");
    s.pos_b = box_from(field(j, index, "pos_b"), index, "pos_b");
    s.depth_a = field(j, index, "depth_a").get<double>();
    s.depth_b = field(j, index, "depth_b").get<double>();
    const auto rel = parse_relation(field(j, index, "relation").get<std::string>());
    if (!rel) fail(index, "scene.relation is not a spatial relation");
    s.relation = *rel;
    s.seed = field(j, index, "seed").get<std::uint64_t>();
    s.patch_side = field(j, index, "patch_side").get<std::uint32_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(index, std::string("malformed scene: ") + e.what());
  }
  try {
    s.validate();
  } catch (const ContractViolation& e) {
    fail(index, e.what());
  }
  return s;
}

std::vector<EvalItem> items_from(std::string_view text) {
  const ojson doc = parse_array(text);
  std::vector<EvalItem> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const ojson& rec = doc[i];
    if (!rec.is_object()) fail(i, "expected an object");
    EvalItem item;
    item.item_id = string_field(rec, i, "item_id");
    if (rec.contains("image_path")) item.image_path = string_field(rec, i, "image_path");
    item.question = string_field(rec, i, "question");
    const ojson& opts = field(rec, i, "options");
    if (!opts.is_array() || opts.empty()) fail(i, "field 'options' must be a non-empty array");
    for (const auto& o : opts) {
      if (!o.is_string()) fail(i, "field 'options' must hold strings");
      item.options.push_back(o.get<std::string>());
    }
    const ojson& gold = field(rec, i, "gold");
    if (gold.is_number_unsigned() || (gold.is_number_integer() && gold.get<long long>() >= 0)) {
      item.gold = gold.get<std::size_t>();
    } else if (gold.is_string()) {
      const std::string g = gold.get<std::string>();
      const auto it = std::find(item.options.begin(), item.options.end(), g);
      if (it == item.options.end()) fail(i, "gold answer '" + g + "' is not among the options");
      item.gold = static_cast<std::size_t>(it - item.options.begin());
    } else {
      fail(i, "field 'gold' must be an option index or option text");
    }
    if (item.gold >= item.options.size()) fail(i, "field 'gold' is out of range");
    if (rec.contains("pair_id") && !rec["pair_id"].is_null()) item.pair_id = string_field(rec, i, "pair_id");
    if (rec.contains("set_id") && !rec["set_id"].is_null()) item.set_id = string_field(rec, i, "set_id");
    if (rec.contains("reversed")) {
      if (!rec["reversed"].is_boolean()) fail(i, "field 'reversed' must be a boolean");
      item.reversed = rec["reversed"].get<bool>();
    }
    if (rec.contains("scene") && !rec["scene"].is_null()) item.scene = scene_from(rec["scene"], i);
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

std::vector<EvalItem> parse_whatsup_json(std::string_view text) { return items_from(text); }

std::string format_whatsup_json(const std::vector<EvalItem>& items) {
  ojson doc = ojson::array();
  for (const auto& item : items) {
    ojson rec;
    rec["item_id"] = item.item_id;
    rec["image_path"] = item.image_path;
    rec["question"] = item.question;
    rec["options"] = item.options;
    rec["gold"] = item.gold;
    rec["pair_id"] = item.pair_id ? ojson(*item.pair_id) : ojson(nullptr);
    rec["set_id"] = item.set_id ? ojson(*item.set_id) : ojson(nullptr);
    rec["reversed"] = item.reversed;
    rec["scene"] = item.scene ? scene_json(*item.scene) : ojson(nullptr);
    doc.push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

std::vector<EvalItem> load_whatsup_json(const std::filesystem::path& path) {
  return parse_whatsup_json(read_text(path));
}

void save_whatsup_json(const std::vector<EvalItem>& items, const std::filesystem::path& path) {
  write_text(path, format_whatsup_json(items));
}

std::vector<EvalItem> parse_vsr_json(std::string_view text) {
  const ojson doc = parse_array(text);
  std::vector<EvalItem> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const ojson& rec = doc[i];
    if (!rec.is_object()) fail(i, "expected an object");
    EvalItem item;
    item.item_id = string_field(rec, i, "item_id");
    if (rec.contains("image_path")) item.image_path = string_field(rec, i, "image_path");
    item.question = string_field(rec, i, "caption");
    const ojson& label = field(rec, i, "label");
    bool truth = false;
    if (label.is_boolean()) {
      truth = label.get<bool>();
    } else if (label.is_number_integer() && (label.get<long long>() == 0 || label.get<long long>() == 1)) {
      truth = label.get<long long>() == 1;
    } else {
      fail(i, "field 'label' must be a boolean");
    }
    item.options = {"true", "false"};
    item.gold = truth ? 0 : 1;
    out.push_back(std::move(item));
  }
  return out;
}

std::string format_vsr_json(const std::vector<EvalItem>& items) {
  ojson doc = ojson::array();
  for (const auto& item : items) {
    if (!item.binary()) throw ContractViolation("format_vsr_json: item '" + item.item_id + "' is not true/false");
    ojson rec;
    rec["item_id"] = item.item_id;
    rec["image_path"] = item.image_path;
    rec["caption"] = item.question;
    rec["label"] = item.gold == 0;
    doc.push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

std::vector<EvalItem> load_vsr_json(const std::filesystem::path& path) {
  return parse_vsr_json(read_text(path));
}

void save_vsr_json(const std::vector<EvalItem>& items, const std::filesystem::path& path) {
  write_text(path, format_vsr_json(items));
}

std::vector<EvalItem> parse_dataset_json(std::string_view text) {
  const ojson doc = parse_array(text);
  if (!doc.empty() && doc[0].is_object() && doc[0].contains("caption") && !doc[0].contains("question")) {
    return parse_vsr_json(text);
  }
  return parse_whatsup_json(text);
}

std::vector<EvalItem> load_dataset_json(const std::filesystem::path& path) {
  return parse_dataset_json(read_text(path));
}

}  // namespace visattn
