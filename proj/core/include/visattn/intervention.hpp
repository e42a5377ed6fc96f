#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visattn/model.hpp"

namespace visattn {

enum class Method { none, scaling, adaptive, additive };

/// How pass-1 confidence is read off a decode.
enum class ConfidenceMode {
  first_token,     // probability of the first generated content token
  geometric_mean,  // geometric mean over all generated content tokens
};

std::string_view to_string(Method m) noexcept;
/// Accepts none|scaling|adaptive|additive and the CLI spellings
/// baseline|scaling_vis|adapt_vis.
std::optional<Method> parse_method(std::string_view s) noexcept;

struct InterventionSpec {
  Method method = Method::none;
  double alpha = 1.0;   // scaling coefficient
  double alpha1 = 1.0;  // adaptive, low confidence
  double alpha2 = 1.0;  // adaptive, high confidence
  double beta = 0.5;    // adaptive threshold
  double constant = 0.0;
  ConfidenceMode confidence = ConfidenceMode::first_token;

  /// Throws ContractViolation for non-positive coefficients, beta outside
  /// [0, 1] or a non-finite constant.
  void validate() const;
  /// Soft conventions (alpha1 <= 1 <= alpha2) that are reported, not enforced.
  std::vector<std::string> warnings() const;

  friend bool operator==(const InterventionSpec&, const InterventionSpec&) = default;
};

/// Flat key-value form: method, weight1, weight2, threshold, constant,
/// confidence. weight1 is alpha for scaling and alpha1 for adaptive.
std::string format_spec(const InterventionSpec& spec);
InterventionSpec parse_spec(std::string_view text);

/// `key = value` lines; '#' starts a comment. Throws ParseError carrying the
/// 1-based line number on malformed lines.
std::map<std::string, std::string> parse_flat_config(std::string_view text);

struct HyperGrid {
  std::vector<double> alpha_grid{0.5, 0.8, 1.2, 1.5, 2.0};
  std::vector<double> beta_grid{0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55};
  double beta_step = 0.05;

  /// Throws ContractViolation unless both grids are non-empty and strictly
  /// increasing.
  void validate() const;

  /// lo, lo+step, ..., hi with the count fixed by round((hi-lo)/step)+1.
  static std::vector<double> range(double lo, double hi, double step);
};

// Row transforms. Return a new row; the input is not modified.
std::vector<double> scale_image_logits(std::span<const double> row, ImageSpan span, double alpha);
std::vector<double> add_constant(std::span<const double> row, ImageSpan span, double c);

ImageHook scaling_hook(double alpha);
ImageHook additive_hook(double c);

/// alpha1 when confidence < beta, alpha2 otherwise (confidence == beta goes
/// to alpha2).
double gate_alpha(double confidence, const InterventionSpec& spec);

double confidence_of(const DecodeResult& result, ConfidenceMode mode, TokenId end_token);

DecodeResult scalingvis_decode(const DecoderModel& model, const TokenSequence& seq, double alpha,
                               const DecodeOptions& options);
DecodeResult additive_decode(const DecoderModel& model, const TokenSequence& seq, double c,
                             const DecodeOptions& options);

struct AdaptiveDecode {
  DecodeResult result;      // pass 2
  DecodeResult first_pass;  // unintervened greedy pass
  double confidence = 0.0;
  double chosen_alpha = 1.0;
};

/// Pass 1: plain greedy decode to measure confidence. Pass 2: scaling decode
/// with gate_alpha(confidence, spec).
AdaptiveDecode adaptvis_decode(const DecoderModel& model, const TokenSequence& seq,
                               const InterventionSpec& spec, const DecodeOptions& options);

struct MethodDecode {
  DecodeResult result;
  std::optional<DecodeResult> first_pass;
  /// Confidence of the returned result; for adaptive, the pass-1 value.
  double confidence = 0.0;
  double chosen_alpha = 1.0;
};

/// Dispatches on spec.method.
MethodDecode run_method(const DecoderModel& model, const TokenSequence& seq,
                        const InterventionSpec& spec, const DecodeOptions& options);

struct ValidationCase {
  std::shared_ptr<const DecoderModel> model;
  TokenSequence seq;
  TokenId gold = 0;
  /// Grouping key for the threshold-from-confidence rule (the gold label).
  std::string label;
};

struct TuneOptions {
  DecodeOptions decode;
  /// Adaptive only: set beta to the mean of per-label average pass-1
  /// confidences instead of searching beta_grid.
  bool threshold_from_confidence = false;
};

struct TuneResult {
  InterventionSpec best;
  double accuracy = 0.0;
  std::size_t candidates = 0;
};

/// Exhaustive grid search for the highest validation accuracy. Ties keep the
/// smallest alpha (alpha1, then alpha2), then the smallest beta. Only the
/// scaling and adaptive methods are tunable.
TuneResult tune_hyperparameters(std::span<const ValidationCase> cases, const HyperGrid& grid,
                                Method method, const TuneOptions& options = {});

}  // namespace visattn
