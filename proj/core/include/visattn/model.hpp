#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "visattn/tensor.hpp"

namespace visattn {

using TokenId = std::uint32_t;

/// Shape of a decoder stack. head_dim must equal model_dim / heads and the
/// image block of every sequence holds patch_side * patch_side tokens.
struct ModelConfig {
  std::uint32_t layers = 4;
  std::uint32_t heads = 4;
  std::uint32_t model_dim = 32;
  std::uint32_t head_dim = 8;
  std::uint32_t vocab_size = 64;
  std::uint32_t patch_side = 8;
  std::uint32_t max_seq = 128;

  std::size_t image_tokens() const noexcept {
    return static_cast<std::size_t>(patch_side) * patch_side;
  }

  /// Throws ConfigError when the fields are inconsistent.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Contiguous block of image-token positions.
struct ImageSpan {
  std::size_t offset = 0;
  std::size_t length = 0;

  std::size_t end() const noexcept { return offset + length; }
  bool contains(std::size_t pos) const noexcept { return pos >= offset && pos < end(); }

  friend bool operator==(const ImageSpan&, const ImageSpan&) = default;
};

struct TokenSequence {
  std::vector<TokenId> token_ids;
  ImageSpan image_span;
  /// Optional per-patch input embeddings (image_span.length x model_dim).
  /// When empty, image positions use the token embedding of their id.
  Matrix patch_embeddings;

  std::size_t size() const noexcept { return token_ids.size(); }
};

/// Pre-softmax attention logits [layer][head][row][col] for a contiguous
/// range of query rows [first_row, seq_len). Entries with col > row hold -inf.
class AttentionTrace {
 public:
  AttentionTrace(const ModelConfig& config, std::size_t seq_len, ImageSpan span,
                 std::size_t first_row = 0);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t seq_len() const noexcept { return seq_len_; }
  ImageSpan image_span() const noexcept { return span_; }
  std::size_t first_row() const noexcept { return first_row_; }
  std::size_t stored_rows() const noexcept { return seq_len_ - first_row_; }
  bool has_row(std::size_t row) const noexcept { return row >= first_row_ && row < seq_len_; }
  bool full() const noexcept { return first_row_ == 0; }

  std::span<double> logits_row(std::size_t layer, std::size_t head, std::size_t row);
  std::span<const double> logits_row(std::size_t layer, std::size_t head, std::size_t row) const;

  /// Causal softmax of one stored row; entries past `row` are 0.
  std::vector<double> probs_row(std::size_t layer, std::size_t head, std::size_t row) const;

  std::span<const double> raw() const noexcept { return logits_; }
  std::span<double> raw() noexcept { return logits_; }

  friend bool operator==(const AttentionTrace&, const AttentionTrace&) = default;

 private:
  std::size_t index(std::size_t layer, std::size_t head, std::size_t row) const;

  ModelConfig config_;
  std::size_t seq_len_;
  ImageSpan span_;
  std::size_t first_row_;
  std::vector<double> logits_;
};

/// Transformation applied in place to the image-span slice of the current
/// query row's logits. An empty function is the identity.
using ImageHook = std::function<void(std::span<double>)>;

enum class TraceCapture { full, last_row, none };

struct ForwardOptions {
  TraceCapture capture = TraceCapture::full;
  /// Also record the logits as they were before the hook ran.
  bool capture_pre_hook = false;
};

struct ForwardResult {
  std::vector<double> next_token_logits;
  std::shared_ptr<const AttentionTrace> trace;
  std::shared_ptr<const AttentionTrace> pre_hook_trace;
};

/// Anything that can run one causal forward pass with an image-logit hook.
/// Implementations are const and reentrant.
class DecoderModel {
 public:
  virtual ~DecoderModel() = default;

  virtual const ModelConfig& config() const noexcept = 0;

  /// Post: the hook has been applied to the image columns of the final row
  /// in every layer and head before softmax; the trace records post-hook
  /// logits.
  virtual ForwardResult forward(const TokenSequence& seq, const ImageHook& hook,
                                const ForwardOptions& options = {}) const = 0;
};

struct DecodeOptions {
  std::size_t max_new = 2;
  /// Generation stops after emitting this token.
  TokenId end_token = 0;
  ForwardOptions forward;
};

struct DecodeResult {
  std::vector<TokenId> generated_ids;
  /// Probability of each emitted token at its step.
  std::vector<double> step_probs;
  /// Trace of the final forward pass.
  std::shared_ptr<const AttentionTrace> trace;
  /// Trace of the first forward pass, whose last row is the last input token.
  std::shared_ptr<const AttentionTrace> prompt_trace;
  std::shared_ptr<const AttentionTrace> prompt_pre_hook_trace;
  /// Probability of the first generated token that is not end_token.
  double answer_confidence = 0.0;
  std::size_t forward_calls = 0;

  /// First generated token that is not end_token, or end_token if none.
  TokenId answer_token(TokenId end_token) const;
};

/// Index of the maximum; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> values);

/// Greedy decoding. Throws ContractViolation when max_new == 0 and
/// propagates forward errors.
DecodeResult decode_greedy(const DecoderModel& model, const TokenSequence& seq,
                           const ImageHook& hook, const DecodeOptions& options);

}  // namespace visattn
