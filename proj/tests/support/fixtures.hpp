#pragma once

#include <memory>
#include <string>
#include <vector>

#include "visattn/model.hpp"
#include "visattn/referee.hpp"
#include "visattn/scene.hpp"
#include "visattn/vocab.hpp"

namespace fixture {

using namespace visattn;

// Returns fixed next-token logits. The image span holds one logit 1.0 that is
// passed through the hook; `seen` records what came back.
class ForcedModel final : public DecoderModel {
 public:
  explicit ForcedModel(std::vector<double> logits) : logits_(std::move(logits)) {
    cfg_.layers = 1;
    cfg_.heads = 1;
    cfg_.model_dim = 1;
    cfg_.head_dim = 1;
    cfg_.vocab_size = static_cast<std::uint32_t>(logits_.size());
    cfg_.patch_side = 1;
    cfg_.max_seq = 16;
  }
  const ModelConfig& config() const noexcept override { return cfg_; }
  ForwardResult forward(const TokenSequence& seq, const ImageHook& hook,
                        const ForwardOptions& = {}) const override {
    std::vector<double> image{1.0};
    if (hook) hook(image);
    seen = image[0];
    ForwardResult r;
    // after the first token, always stop
    if (seq.size() > 2) {
      r.next_token_logits.assign(logits_.size(), -1e9);
      r.next_token_logits[0] = 0.0;
    } else {
      r.next_token_logits = logits_;
    }
    return r;
  }
  mutable double seen = 0.0;

 private:
  std::vector<double> logits_;
  ModelConfig cfg_;
};

inline TokenSequence two_token_prompt() {
  TokenSequence s;
  s.token_ids = {Vocabulary::kBegin, Vocabulary::kImage};
  s.image_span = {1, 1};
  return s;
}

inline ModelConfig referee_config(std::uint32_t side, std::uint32_t layers = 1, std::uint32_t heads = 2) {
  ModelConfig c;
  c.layers = layers;
  c.heads = heads;
  c.model_dim = heads * 4;
  c.head_dim = 4;
  c.vocab_size = static_cast<std::uint32_t>(Vocabulary::standard().size());
  c.patch_side = side;
  c.max_seq = side * side + 64;
  return c;
}

// Single-cell objects on one row: A at (row, col_a), B at (row, col_b).
inline SceneSpec row_scene(std::uint32_t side, int row, int col_a, int col_b) {
  SceneSpec s;
  s.object_a = 0;
  s.object_b = 4;
  s.pos_a = {row, col_a, 1, 1};
  s.pos_b = {row, col_b, 1, 1};
  s.relation = col_a < col_b ? Relation::left : Relation::right;
  s.seed = 11;
  s.patch_side = side;
  return s;
}

inline bool same_decode(const DecodeResult& a, const DecodeResult& b) {
  if (a.generated_ids != b.generated_ids || a.step_probs != b.step_probs ||
      a.answer_confidence != b.answer_confidence)
    return false;
  if ((a.trace == nullptr) != (b.trace == nullptr)) return false;
  return !a.trace || *a.trace == *b.trace;
}

}  // namespace fixture
