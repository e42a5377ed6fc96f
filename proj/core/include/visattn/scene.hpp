#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "visattn/model.hpp"
#include "visattn/vocab.hpp"

namespace visattn {

/// Axis-aligned block of patch cells [row, row+height) x [col, col+width).
struct CellBox {
  int row = 0;
  int col = 0;
  int height = 1;
  int width = 1;

  double center_row() const noexcept { return row + (height - 1) / 2.0; }
  double center_col() const noexcept { return col + (width - 1) / 2.0; }
  bool contains(int r, int c) const noexcept {
    return r >= row && r < row + height && c >= col && c < col + width;
  }
  bool overlaps(const CellBox& o) const noexcept {
    return row < o.row + o.height && o.row < row + height && col < o.col + o.width &&
           o.col < col + width;
  }

  friend bool operator==(const CellBox&, const CellBox&) = default;
};

/// Two-object scene on a P x P patch grid. Depth grows with distance from
/// the camera; "behind" means depth_a > depth_b.
struct SceneSpec {
  std::uint32_t object_a = 0;  // index into Vocabulary::object_names()
  std::uint32_t object_b = 0;
  CellBox pos_a;
  CellBox pos_b;
  double depth_a = 0.5;
  double depth_b = 0.5;
  Relation relation = Relation::left;
  std::uint64_t seed = 0;
  std::uint32_t patch_side = 24;

  /// Throws ContractViolation when the boxes leave the grid, overlap, or
  /// disagree with `relation`.
  void validate() const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

enum class ControlledMode { A, B };

/// Label space of a controlled subset: A = left,right,on,under;
/// B = left,right,behind,front.
std::vector<Relation> label_space(ControlledMode mode);

struct EvalItem {
  std::string item_id;
  std::optional<SceneSpec> scene;
  std::string image_path;
  std::string question;
  std::vector<std::string> options;
  std::size_t gold = 0;
  std::optional<std::string> pair_id;
  std::optional<std::string> set_id;
  bool reversed = false;

  const std::string& gold_text() const { return options.at(gold); }
  /// True for true/false items (VSR-style), scored with F1.
  bool binary() const;

  friend bool operator==(const EvalItem&, const EvalItem&) = default;
};

struct Question {
  std::string text;
  std::vector<std::string> options;
  std::size_t gold = 0;
};

/// "Where is the {A} in relation to the {B}? ..." over `labels`. With
/// reversed = true the entities swap and the gold relation is inverted.
Question make_question(const SceneSpec& scene, const std::vector<Relation>& labels,
                       bool reversed);

/// Toggles the entity order of an item: swaps the two names in the question
/// and inverts the gold option. Applying it twice restores the item.
EvalItem reverse_item(const EvalItem& item);

struct ControlledSet {
  std::vector<EvalItem> items;
};

/// One set of |label space| items per object pair; left/right items also
/// share a pair_id. Gold labels are exactly uniform per set.
ControlledSet generate_controlled_set(std::size_t n_object_pairs, ControlledMode mode,
                                      std::uint64_t seed, std::uint32_t patch_side = 24);

/// Layout: <bos> user: <image> x P^2 <question tokens> assistant:
/// Patch embeddings: background cells share one embedding; object cells get
/// the object's embedding plus a per-cell positional code.
TokenSequence encode_scene(const SceneSpec& scene, const ModelConfig& config,
                           const std::string& question);

/// Sequence for an item. Items without a scene get placeholder image tokens
/// and no patch embeddings.
TokenSequence encode_item(const EvalItem& item, const ModelConfig& config);

}  // namespace visattn
