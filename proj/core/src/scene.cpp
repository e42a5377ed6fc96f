#include "visattn/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "visattn/error.hpp"
#include "visattn/rng.hpp"

namespace visattn {

namespace {

constexpr std::array<std::uint32_t, 10> kSmallObjects{0, 1, 2, 3, 4, 5, 6, 7, 13, 14};
constexpr std::array<std::uint32_t, 6> kLargeObjects{8, 9, 10, 11, 12, 15};

constexpr std::uint64_t kBackgroundTag = 0xB6;
constexpr std::uint64_t kObjectTag = 0x0B;
constexpr std::uint64_t kPositionTag = 0x9C;

double perspective_depth(const CellBox& b, std::uint32_t p) {
  return p <= 1 ? 0.5 : 1.0 - b.center_row() / static_cast<double>(p - 1);
}

bool h_overlap(const CellBox& a, const CellBox& b) {
  return a.col < b.col + b.width && b.col < a.col + a.width;
}

std::string pad4(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04zu", v);
  return buf;
}

std::string join_options(const std::vector<std::string>& opts) {
  std::string s;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    if (i > 0) s += (i + 1 == opts.size()) ? " or " : ", ";
    s += opts[i];
  }
  return s;
}

std::string question_text(const std::string& subject, const std::string& reference,
                          const std::vector<std::string>& options) {
  return "Where is the " + subject + " in relation to the " + reference + "? Answer with " +
         join_options(options) + ".";
}

void fill_seeded(std::span<double> dst, std::uint64_t seed, double scale) {
  SplitMix64 g(seed);
  for (double& v : dst) v = g.symmetric(scale);
}

}  // namespace

void SceneSpec::validate() const {
  const int p = static_cast<int>(patch_side);
  auto inside = [p](const CellBox& b) {
    return b.height > 0 && b.width > 0 && b.row >= 0 && b.col >= 0 && b.row + b.height <= p &&
           b.col + b.width <= p;
  };
  if (!inside(pos_a) || !inside(pos_b)) throw ContractViolation("scene: object box leaves the grid");
  if (pos_a.overlaps(pos_b)) throw ContractViolation("scene: object boxes overlap");
  const auto& names = Vocabulary::standard().object_names();
  if (object_a >= names.size() || object_b >= names.size()) {
    throw ContractViolation("scene: unknown object id");
  }
  bool ok = false;
  switch (relation) {
    case Relation::left: ok = pos_a.col + pos_a.width <= pos_b.col; break;
    case Relation::right: ok = pos_b.col + pos_b.width <= pos_a.col; break;
    case Relation::on: ok = pos_a.row + pos_a.height <= pos_b.row && h_overlap(pos_a, pos_b); break;
    case Relation::under: ok = pos_b.row + pos_b.height <= pos_a.row && h_overlap(pos_a, pos_b); break;
    case Relation::behind: ok = depth_a > depth_b; break;
    case Relation::front: ok = depth_a < depth_b; break;
  }
  if (!ok) {
    throw ContractViolation("scene: geometry is inconsistent with relation '" +
                            std::string(to_string(relation)) + "'");
  }
}

std::vector<Relation> label_space(ControlledMode mode) {
  if (mode == ControlledMode::A) return {Relation::left, Relation::right, Relation::on, Relation::under};
  return {Relation::left, Relation::right, Relation::behind, Relation::front};
}

bool EvalItem::binary() const {
  return options.size() == 2 && options[0] == "true" && options[1] == "false";
}

Question make_question(const SceneSpec& scene, const std::vector<Relation>& labels, bool reversed) {
  const auto& names = Vocabulary::standard().object_names();
  const std::string& a = names.at(scene.object_a);
  const std::string& b = names.at(scene.object_b);
  Question q;
  for (Relation r : labels) q.options.emplace_back(to_string(r));
  const Relation gold = reversed ? inverse(scene.relation) : scene.relation;
  auto it = std::find(labels.begin(), labels.end(), gold);
  if (it == labels.end()) throw ContractViolation("make_question: gold relation outside label space");
  q.gold = static_cast<std::size_t>(it - labels.begin());
  q.text = reversed ? question_text(b, a, q.options) : question_text(a, b, q.options);
  return q;
}

EvalItem reverse_item(const EvalItem& item) {
  const auto gold_rel = parse_relation(item.gold_text());
  if (!gold_rel) throw ContractViolation("reverse_item: gold answer is not a spatial relation");
  const std::string inv(to_string(inverse(*gold_rel)));
  auto it = std::find(item.options.begin(), item.options.end(), inv);
  if (it == item.options.end()) throw ContractViolation("reverse_item: inverse relation not offered");

  EvalItem out = item;
  out.reversed = !item.reversed;
  out.gold = static_cast<std::size_t>(it - item.options.begin());

  const std::string head = "Where is the ";
  const std::string mid = " in relation to the ";
  const auto m = item.question.find(mid);
  const auto q = item.question.find('?');
  if (item.question.rfind(head, 0) != 0 || m == std::string::npos || q == std::string::npos || q < m) {
    throw ContractViolation("reverse_item: question does not follow the relation template");
  }
  const std::string subject = item.question.substr(head.size(), m - head.size());
  const std::string reference = item.question.substr(m + mid.size(), q - m - mid.size());
  out.question = head + reference + mid + subject + item.question.substr(q);
  return out;
}

ControlledSet generate_controlled_set(std::size_t n_object_pairs, ControlledMode mode,
                                      std::uint64_t seed, std::uint32_t patch_side) {
  if (n_object_pairs == 0) throw ContractViolation("generate_controlled_set: n must be >= 1");
  const int p = static_cast<int>(patch_side);
  const int small = std::max(1, p / 8);
  const int large_h = mode == ControlledMode::A ? std::max(1, p / 6) : small;
  const int large_w = mode == ControlledMode::A ? std::max(2, p / 3) : small;
  const int max_gap = std::max(1, p / 8);
  const int vgap = mode == ControlledMode::A ? 0 : max_gap;

  const int col_lo = max_gap + small;
  const int col_hi = p - large_w - max_gap - small;
  const int row_lo = small + vgap;
  const int row_hi = p - large_h - vgap - small;
  if (col_lo > col_hi || row_lo > row_hi) {
    throw ContractViolation("generate_controlled_set: patch_side " + std::to_string(p) +
                            " is too small for the controlled layout");
  }

  const auto labels = label_space(mode);
  const std::string prefix = mode == ControlledMode::A ? "A-" : "B-";
  ControlledSet out;
  SplitMix64 rng(seed);
  for (std::size_t s = 0; s < n_object_pairs; ++s) {
    std::uint32_t obj_a = 0;
    std::uint32_t obj_b = 0;
    if (mode == ControlledMode::A) {
      obj_a = kSmallObjects[rng.below(kSmallObjects.size())];
      obj_b = kLargeObjects[rng.below(kLargeObjects.size())];
    } else {
      obj_a = kSmallObjects[rng.below(kSmallObjects.size())];
      do {
        obj_b = kSmallObjects[rng.below(kSmallObjects.size())];
      } while (obj_b == obj_a);
    }
    CellBox b{row_lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(row_hi - row_lo + 1))),
              col_lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(col_hi - col_lo + 1))),
              large_h, large_w};
    const std::string sid = "set-" + pad4(s);
    const std::string pid = "pair-" + pad4(s);

    for (std::size_t k = 0; k < labels.size(); ++k) {
      const Relation rel = labels[k];
      const int gap = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_gap)));
      const int slack = std::max(0, b.width - small);
      const int jitter = slack == 0 ? 0 : static_cast<int>(rng.below(static_cast<std::uint64_t>(slack + 1)));
      CellBox a{0, 0, small, small};
      switch (rel) {
        case Relation::left:
          a.row = b.row + (b.height - small) / 2;
          a.col = b.col - gap - small;
          break;
        case Relation::right:
          a.row = b.row + (b.height - small) / 2;
          a.col = b.col + b.width + gap;
          break;
        case Relation::on:
          a.row = b.row - small;
          a.col = b.col + jitter;
          break;
        case Relation::under:
          a.row = b.row + b.height;
          a.col = b.col + jitter;
          break;
        case Relation::behind:
          a.row = b.row - gap - small;
          a.col = b.col;
          break;
        case Relation::front:
          a.row = b.row + b.height + gap;
          a.col = b.col;
          break;
      }
      SceneSpec scene;
      scene.object_a = obj_a;
      scene.object_b = obj_b;
      scene.pos_a = a;
      scene.pos_b = b;
      scene.depth_a = perspective_depth(a, patch_side);
      scene.depth_b = perspective_depth(b, patch_side);
      scene.relation = rel;
      scene.seed = derive_seed(seed, s * 16 + k + 1);
      scene.patch_side = patch_side;
      scene.validate();

      const Question q = make_question(scene, labels, false);
      EvalItem item;
      item.item_id = prefix + pad4(s) + "-" + std::string(to_string(rel));
      item.scene = scene;
      item.question = q.text;
      item.options = q.options;
      item.gold = q.gold;
      item.set_id = sid;
      if (rel == Relation::left || rel == Relation::right) item.pair_id = pid;
      out.items.push_back(std::move(item));
    }
  }
  return out;
}

TokenSequence encode_scene(const SceneSpec& scene, const ModelConfig& config,
                           const std::string& question) {
  scene.validate();
  if (scene.patch_side != config.patch_side) {
    throw ContractViolation("encode_scene: scene grid and model patch_side differ");
  }
  const Vocabulary& vocab = Vocabulary::standard();
  const std::size_t cells = config.image_tokens();
  const std::size_t d = config.model_dim;

  TokenSequence seq;
  seq.token_ids = {Vocabulary::kBegin, vocab.id("user:")};
  seq.image_span = {seq.token_ids.size(), cells};
  seq.token_ids.insert(seq.token_ids.end(), cells, Vocabulary::kImage);
  const auto q = vocab.encode(question);
  seq.token_ids.insert(seq.token_ids.end(), q.begin(), q.end());
  seq.token_ids.push_back(vocab.id("assistant:"));

  std::vector<double> background(d);
  std::vector<double> emb_a(d);
  std::vector<double> emb_b(d);
  fill_seeded(background, derive_seed(kBackgroundTag, 0), 1.0);
  fill_seeded(emb_a, derive_seed(kObjectTag, scene.object_a), 1.0);
  fill_seeded(emb_b, derive_seed(kObjectTag, scene.object_b), 1.0);

  seq.patch_embeddings = Matrix(cells, d);
  std::vector<double> code(d);
  const int p = static_cast<int>(config.patch_side);
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) {
      const std::size_t k = static_cast<std::size_t>(r * p + c);
      auto dst = seq.patch_embeddings.row(k);
      const bool in_a = scene.pos_a.contains(r, c);
      const bool in_b = scene.pos_b.contains(r, c);
      if (!in_a && !in_b) {
        std::copy(background.begin(), background.end(), dst.begin());
        continue;
      }
      fill_seeded(code, derive_seed(kPositionTag, k), 0.25);
      const auto& emb = in_a ? emb_a : emb_b;
      for (std::size_t t = 0; t < d; ++t) dst[t] = emb[t] + code[t];
    }
  }
  return seq;
}

TokenSequence encode_item(const EvalItem& item, const ModelConfig& config) {
  if (item.scene) return encode_scene(*item.scene, config, item.question);
  const Vocabulary& vocab = Vocabulary::standard();
  TokenSequence seq;
  seq.token_ids = {Vocabulary::kBegin, vocab.id("user:")};
  seq.image_span = {seq.token_ids.size(), config.image_tokens()};
  seq.token_ids.insert(seq.token_ids.end(), config.image_tokens(), Vocabulary::kImage);
  const auto q = vocab.encode(item.question);
  seq.token_ids.insert(seq.token_ids.end(), q.begin(), q.end());
  seq.token_ids.push_back(vocab.id("assistant:"));
  return seq;
}

}  // namespace visattn
