#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "visattn/model.hpp"
#include "visattn/tensor.hpp"

namespace visattn {

/// Named weight matrices for a TransformerModel.
///
/// Required sections (d = model_dim, V = vocab_size):
///   embed            V x d
///   pos              max_seq x d
///   layer{l}.wq      d x d   (head h owns columns [h*head_dim, (h+1)*head_dim))
///   layer{l}.wk      d x d
///   layer{l}.wv      d x d
///   layer{l}.wo      d x d
///   layer{l}.ff      d x d
///   unembed          d x V
struct WeightSet {
  ModelConfig config;
  std::map<std::string, Matrix> sections;

  const Matrix& at(const std::string& name) const;

  /// Names of every section the config requires, in file order.
  static std::vector<std::string> required_sections(const ModelConfig& config);

  /// Throws ConfigError naming the first missing or mis-shaped section.
  void validate() const;

  friend bool operator==(const WeightSet&, const WeightSet&) = default;
};

/// Deterministic weights drawn from SplitMix64 as uniform values in
/// [-sqrt(3/fan_in), sqrt(3/fan_in)); sections are filled in
/// required_sections() order from one stream.
WeightSet seeded_weights(const ModelConfig& config, std::uint64_t seed);

/// AIW1 weight file. Throws ParseError (with byte offset) on malformed input.
WeightSet load_weights(const std::filesystem::path& path);
WeightSet parse_weights(const std::vector<std::uint8_t>& bytes);
void save_weights(const WeightSet& weights, const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_weights(const WeightSet& weights);

/// Pre-norm decoder stack: RMS-normalized multi-head causal attention and a
/// single tanh feed-forward per layer, both residual.
class TransformerModel final : public DecoderModel {
 public:
  explicit TransformerModel(std::shared_ptr<const WeightSet> weights);

  const ModelConfig& config() const noexcept override { return weights_->config; }

  ForwardResult forward(const TokenSequence& seq, const ImageHook& hook,
                        const ForwardOptions& options = {}) const override;

  const WeightSet& weights() const noexcept { return *weights_; }

 private:
  std::shared_ptr<const WeightSet> weights_;
};

/// Free-function form of one forward pass.
ForwardResult forward(const WeightSet& weights, const TokenSequence& seq, const ImageHook& hook,
                      const ForwardOptions& options = {});

}  // namespace visattn
