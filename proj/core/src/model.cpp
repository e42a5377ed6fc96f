#include "visattn/model.hpp"

#include <limits>
#include <string>

#include "visattn/error.hpp"

namespace visattn {

void ModelConfig::validate() const {
  if (layers == 0 || heads == 0 || model_dim == 0 || head_dim == 0) {
    throw ConfigError("model config: layers, heads, model_dim and head_dim must be positive");
  }
  if (static_cast<std::uint64_t>(heads) * head_dim != model_dim) {
    throw ConfigError("model config: model_dim " + std::to_string(model_dim) +
                      " != heads * head_dim (" + std::to_string(heads) + " * " +
                      std::to_string(head_dim) + ")");
  }
  if (patch_side == 0) throw ConfigError("model config: patch_side must be >= 1");
  if (vocab_size == 0) throw ConfigError("model config: vocab_size must be positive");
  if (max_seq == 0) throw ConfigError("model config: max_seq must be positive");
}

AttentionTrace::AttentionTrace(const ModelConfig& config, std::size_t seq_len, ImageSpan span,
                               std::size_t first_row)
    : config_(config), seq_len_(seq_len), span_(span), first_row_(first_row) {
  if (seq_len == 0 || first_row >= seq_len) {
    throw ContractViolation("attention trace: stored row range is empty");
  }
  if (span.end() > seq_len) {
    throw ContractViolation("attention trace: image span exceeds sequence");
  }
  const std::size_t rows = stored_rows();
  logits_.assign(std::size_t{config.layers} * config.heads * rows * seq_len, 0.0);
  const double ninf = -std::numeric_limits<double>::infinity();
  for (std::size_t lh = 0; lh < std::size_t{config.layers} * config.heads; ++lh) {
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t row = first_row + r;
      double* base = logits_.data() + (lh * rows + r) * seq_len;
      for (std::size_t j = row + 1; j < seq_len; ++j) base[j] = ninf;
    }
  }
}

std::size_t AttentionTrace::index(std::size_t layer, std::size_t head, std::size_t row) const {
  if (layer >= config_.layers || head >= config_.heads || !has_row(row)) {
    throw ContractViolation("attention trace: (layer " + std::to_string(layer) + ", head " +
                            std::to_string(head) + ", row " + std::to_string(row) +
                            ") is not stored");
  }
  return ((layer * config_.heads + head) * stored_rows() + (row - first_row_)) * seq_len_;
}

std::span<double> AttentionTrace::logits_row(std::size_t layer, std::size_t head,
                                             std::size_t row) {
  return {logits_.data() + index(layer, head, row), seq_len_};
}

std::span<const double> AttentionTrace::logits_row(std::size_t layer, std::size_t head,
                                                   std::size_t row) const {
  return {logits_.data() + index(layer, head, row), seq_len_};
}

std::vector<double> AttentionTrace::probs_row(std::size_t layer, std::size_t head,
                                              std::size_t row) const {
  auto src = logits_row(layer, head, row);
  std::vector<double> out(src.begin(), src.end());
  softmax_prefix_inplace(out, row + 1);
  return out;
}

TokenId DecodeResult::answer_token(TokenId end_token) const {
  for (TokenId t : generated_ids) {
    if (t != end_token) return t;
  }
  return end_token;
}

std::size_t argmax_lowest(std::span<const double> values) {
  if (values.empty()) throw ContractViolation("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

DecodeResult decode_greedy(const DecoderModel& model, const TokenSequence& seq,
                           const ImageHook& hook, const DecodeOptions& options) {
  if (options.max_new == 0) throw ContractViolation("decode_greedy: max_new must be >= 1");

  DecodeResult result;
  TokenSequence current = seq;
  bool have_content = false;
  for (std::size_t step = 0; step < options.max_new; ++step) {
    ForwardResult fwd = model.forward(current, hook, options.forward);
    ++result.forward_calls;
    const std::vector<double> probs = softmax(fwd.next_token_logits);
    const auto token = static_cast<TokenId>(argmax_lowest(probs));
    result.generated_ids.push_back(token);
    result.step_probs.push_back(probs[token]);
    if (step == 0) {
      result.prompt_trace = fwd.trace;
      result.prompt_pre_hook_trace = fwd.pre_hook_trace;
      result.answer_confidence = probs[token];
    }
    if (!have_content && token != options.end_token) {
      result.answer_confidence = probs[token];
      have_content = true;
    }
    result.trace = std::move(fwd.trace);
    if (token == options.end_token) break;
    current.token_ids.push_back(token);
  }
  return result;
}

}  // namespace visattn
