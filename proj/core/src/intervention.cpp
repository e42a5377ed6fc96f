#include "visattn/intervention.hpp"

#include <cmath>
#include <map>
#include <string>

#include "visattn/error.hpp"

namespace visattn {

namespace {

void check_span(std::span<const double> row, ImageSpan span) {
  if (span.end() > row.size()) throw ContractViolation("image span exceeds the logit row");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ContractViolation("intervention coefficient must be positive and finite, got " +
                            std::to_string(alpha));
  }
}

void check_increasing(const std::vector<double>& g, const char* name) {
  if (g.empty()) throw ContractViolation(std::string(name) + " is empty");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) throw ContractViolation(std::string(name) + " is not strictly increasing");
  }
}

}  // namespace

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::none: return "none";
    case Method::scaling: return "scaling";
    case Method::adaptive: return "adaptive";
    case Method::additive: return "additive";
  }
  return "none";
}

std::optional<Method> parse_method(std::string_view s) noexcept {
  if (s == "none" || s == "baseline") return Method::none;
  if (s == "scaling" || s == "scaling_vis") return Method::scaling;
  if (s == "adaptive" || s == "adapt_vis") return Method::adaptive;
  if (s == "additive") return Method::additive;
  return std::nullopt;
}

void InterventionSpec::validate() const {
  switch (method) {
    case Method::none: break;
    case Method::scaling: check_alpha(alpha); break;
    case Method::adaptive:
      check_alpha(alpha1);
      check_alpha(alpha2);
      if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ContractViolation("threshold must lie in [0, 1], got " + std::to_string(beta));
      }
      break;
    case Method::additive:
      if (!std::isfinite(constant)) throw ContractViolation("additive constant must be finite");
      break;
  }
}

std::vector<std::string> InterventionSpec::warnings() const {
  std::vector<std::string> out;
  if (method == Method::adaptive) {
    if (alpha1 > 1.0) out.emplace_back("weight1 > 1 sharpens low-confidence generations");
    if (alpha2 < 1.0) out.emplace_back("weight2 < 1 smooths high-confidence generations");
  }
  return out;
}

void HyperGrid::validate() const {
  check_increasing(alpha_grid, "alpha grid");
  for (double a : alpha_grid) check_alpha(a);
  check_increasing(beta_grid, "beta grid");
}

std::vector<double> HyperGrid::range(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ContractViolation("grid range needs step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = lo + static_cast<double>(k) * step;
  return out;
}

std::vector<double> scale_image_logits(std::span<const double> row, ImageSpan span, double alpha) {
  check_alpha(alpha);
  check_span(row, span);
  std::vector<double> out(row.begin(), row.end());
  scaling_hook(alpha)(std::span<double>(out).subspan(span.offset, span.length));
  return out;
}

std::vector<double> add_constant(std::span<const double> row, ImageSpan span, double c) {
  if (!std::isfinite(c)) throw ContractViolation("additive constant must be finite");
  check_span(row, span);
  std::vector<double> out(row.begin(), row.end());
  additive_hook(c)(std::span<double>(out).subspan(span.offset, span.length));
  return out;
}

ImageHook scaling_hook(double alpha) {
  check_alpha(alpha);
  return [alpha](std::span<double> image) {
    for (double& v : image) v *= alpha;
  };
}

ImageHook additive_hook(double c) {
  return [c](std::span<double> image) {
    for (double& v : image) v += c;
  };
}

double gate_alpha(double confidence, const InterventionSpec& spec) {
  if (spec.method != Method::adaptive) throw ContractViolation("gate_alpha: method is not adaptive");
  if (!(confidence >= 0.0 && confidence <= 1.0)) {
    throw ContractViolation("gate_alpha: confidence " + std::to_string(confidence) +
                            " outside [0, 1]");
  }
  return confidence < spec.beta ? spec.alpha1 : spec.alpha2;
}

double confidence_of(const DecodeResult& result, ConfidenceMode mode, TokenId end_token) {
  if (mode == ConfidenceMode::first_token) return result.answer_confidence;
  double log_sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < result.generated_ids.size(); ++i) {
    if (result.generated_ids[i] == end_token) continue;
    log_sum += std::log(result.step_probs[i]);
    ++count;
  }
  return count == 0 ? result.answer_confidence : std::exp(log_sum / static_cast<double>(count));
}

DecodeResult scalingvis_decode(const DecoderModel& model, const TokenSequence& seq, double alpha,
                               const DecodeOptions& options) {
  return decode_greedy(model, seq, scaling_hook(alpha), options);
}

DecodeResult additive_decode(const DecoderModel& model, const TokenSequence& seq, double c,
                             const DecodeOptions& options) {
  if (!std::isfinite(c)) throw ContractViolation("additive constant must be finite");
  return decode_greedy(model, seq, additive_hook(c), options);
}

AdaptiveDecode adaptvis_decode(const DecoderModel& model, const TokenSequence& seq,
                               const InterventionSpec& spec, const DecodeOptions& options) {
  if (spec.method != Method::adaptive) throw ContractViolation("adaptvis_decode: method is not adaptive");
  spec.validate();
  AdaptiveDecode out;
  out.first_pass = decode_greedy(model, seq, ImageHook{}, options);
  out.confidence = confidence_of(out.first_pass, spec.confidence, options.end_token);
  out.chosen_alpha = gate_alpha(out.confidence, spec);
  out.result = scalingvis_decode(model, seq, out.chosen_alpha, options);
  return out;
}

MethodDecode run_method(const DecoderModel& model, const TokenSequence& seq,
                        const InterventionSpec& spec, const DecodeOptions& options) {
  spec.validate();
  MethodDecode out;
  switch (spec.method) {
    case Method::none:
      out.result = decode_greedy(model, seq, ImageHook{}, options);
      break;
    case Method::scaling:
      out.result = scalingvis_decode(model, seq, spec.alpha, options);
      out.chosen_alpha = spec.alpha;
      break;
    case Method::additive:
      out.result = additive_decode(model, seq, spec.constant, options);
      break;
    case Method::adaptive: {
      AdaptiveDecode a = adaptvis_decode(model, seq, spec, options);
      out.result = std::move(a.result);
      out.first_pass = std::move(a.first_pass);
      out.chosen_alpha = a.chosen_alpha;
      out.confidence = a.confidence;
      return out;
    }
  }
  out.confidence = confidence_of(out.result, spec.confidence, options.end_token);
  return out;
}

TuneResult tune_hyperparameters(std::span<const ValidationCase> cases, const HyperGrid& grid,
                                Method method, const TuneOptions& options) {
  if (cases.empty()) throw ContractViolation("tune: empty validation set");
  if (method != Method::scaling && method != Method::adaptive) {
    throw ContractViolation("tune: only scaling and adaptive methods have tunable coefficients");
  }
  if (method == Method::scaling || !options.threshold_from_confidence) {
    grid.validate();
  } else {
    check_increasing(grid.alpha_grid, "alpha grid");
  }

  const std::size_t n = cases.size();
  const TokenId end = options.decode.end_token;
  // correct[a][i]: case i answered correctly under alpha_grid[a].
  std::vector<std::vector<bool>> correct(grid.alpha_grid.size(), std::vector<bool>(n));
  for (std::size_t a = 0; a < grid.alpha_grid.size(); ++a) {
    for (std::size_t i = 0; i < n; ++i) {
      const DecodeResult r = scalingvis_decode(*cases[i].model, cases[i].seq, grid.alpha_grid[a], options.decode);
      correct[a][i] = r.answer_token(end) == cases[i].gold;
    }
  }

  TuneResult best;
  best.accuracy = -1.0;
  auto consider = [&](const InterventionSpec& spec, std::size_t hits) {
    ++best.candidates;
    const double acc = static_cast<double>(hits) / static_cast<double>(n);
    if (acc > best.accuracy) {
      best.accuracy = acc;
      best.best = spec;
    }
  };

  if (method == Method::scaling) {
    for (std::size_t a = 0; a < grid.alpha_grid.size(); ++a) {
      InterventionSpec spec;
      spec.method = Method::scaling;
      spec.alpha = grid.alpha_grid[a];
      std::size_t hits = 0;
      for (std::size_t i = 0; i < n; ++i) hits += correct[a][i] ? 1 : 0;
      consider(spec, hits);
    }
    return best;
  }

  std::vector<double> confidence(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DecodeResult r = decode_greedy(*cases[i].model, cases[i].seq, ImageHook{}, options.decode);
    confidence[i] = confidence_of(r, ConfidenceMode::first_token, end);
  }

  std::vector<double> betas = grid.beta_grid;
  if (options.threshold_from_confidence) {
    std::map<std::string, std::pair<double, std::size_t>> by_label;
    for (std::size_t i = 0; i < n; ++i) {
      auto& [sum, count] = by_label[cases[i].label];
      sum += confidence[i];
      ++count;
    }
    double total = 0.0;
    for (const auto& [label, sc] : by_label) total += sc.first / static_cast<double>(sc.second);
    betas = {total / static_cast<double>(by_label.size())};
  }

  for (std::size_t a1 = 0; a1 < grid.alpha_grid.size(); ++a1) {
    for (std::size_t a2 = 0; a2 < grid.alpha_grid.size(); ++a2) {
      for (double beta : betas) {
        InterventionSpec spec;
        spec.method = Method::adaptive;
        spec.alpha1 = grid.alpha_grid[a1];
        spec.alpha2 = grid.alpha_grid[a2];
        spec.beta = beta;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const bool ok = confidence[i] < beta ? correct[a1][i] : correct[a2][i];
          hits += ok ? 1 : 0;
        }
        consider(spec, hits);
      }
    }
  }
  return best;
}

}  // namespace visattn
