#include "visattn/transformer.hpp"

#include <cmath>
#include <string>

#include "visattn/error.hpp"
#include "visattn/rng.hpp"

namespace visattn {

namespace {

constexpr double kNormEps = 1e-6;

void rms_normalize(std::span<double> x) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(x.size()) + kNormEps);
  for (double& v : x) v *= inv;
}

Matrix rms_normalized(const Matrix& x) {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) rms_normalize(out.row(r));
  return out;
}

std::string layer_name(std::size_t l, const char* part) {
  return "layer" + std::to_string(l) + "." + part;
}

void check_sequence(const ModelConfig& cfg, const TokenSequence& seq) {
  const std::size_t n = seq.size();
  if (n == 0) throw ContractViolation("forward: empty sequence");
  if (n > cfg.max_seq) {
    throw CapacityError("forward: sequence length " + std::to_string(n) + " exceeds max_seq " +
                        std::to_string(cfg.max_seq));
  }
  if (seq.image_span.end() > n) throw ContractViolation("forward: image span exceeds sequence");
  for (TokenId t : seq.token_ids) {
    if (t >= cfg.vocab_size) {
      throw ConfigError("forward: token id " + std::to_string(t) + " outside vocabulary");
    }
  }
  if (!seq.patch_embeddings.empty() &&
      (seq.patch_embeddings.rows() != seq.image_span.length ||
       seq.patch_embeddings.cols() != cfg.model_dim)) {
    throw ShapeError("forward: patch embeddings must be image_span.length x model_dim");
  }
}

}  // namespace

const Matrix& WeightSet::at(const std::string& name) const {
  auto it = sections.find(name);
  if (it == sections.end()) throw ConfigError("weights: missing section '" + name + "'");
  return it->second;
}

std::vector<std::string> WeightSet::required_sections(const ModelConfig& config) {
  std::vector<std::string> names{"embed", "pos"};
  for (std::size_t l = 0; l < config.layers; ++l) {
    for (const char* part : {"wq", "wk", "wv", "wo", "ff"}) names.push_back(layer_name(l, part));
  }
  names.emplace_back("unembed");
  return names;
}

namespace {

std::pair<std::size_t, std::size_t> expected_shape(const ModelConfig& c, const std::string& name) {
  if (name == "embed") return {c.vocab_size, c.model_dim};
  if (name == "pos") return {c.max_seq, c.model_dim};
  if (name == "unembed") return {c.model_dim, c.vocab_size};
  return {c.model_dim, c.model_dim};
}

}  // namespace

void WeightSet::validate() const {
  config.validate();
  for (const auto& name : required_sections(config)) {
    const Matrix& m = at(name);
    const auto [r, c] = expected_shape(config, name);
    if (m.rows() != r || m.cols() != c) {
      throw ConfigError("weights: section '" + name + "' is " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ", expected " + std::to_string(r) + "x" +
                        std::to_string(c));
    }
  }
}

WeightSet seeded_weights(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  WeightSet w;
  w.config = config;
  SplitMix64 rng(seed);
  for (const auto& name : WeightSet::required_sections(config)) {
    const auto [r, c] = expected_shape(config, name);
    double scale = std::sqrt(3.0 / static_cast<double>(r));
    if (name == "embed") scale = 1.0;
    if (name == "pos") scale = 0.1;
    Matrix m(r, c);
    for (double& v : m.data()) v = rng.symmetric(scale);
    w.sections.emplace(name, std::move(m));
  }
  return w;
}

TransformerModel::TransformerModel(std::shared_ptr<const WeightSet> weights)
    : weights_(std::move(weights)) {
  if (!weights_) throw ConfigError("transformer: null weight set");
  weights_->validate();
}

ForwardResult TransformerModel::forward(const TokenSequence& seq, const ImageHook& hook,
                                        const ForwardOptions& options) const {
  return visattn::forward(*weights_, seq, hook, options);
}

ForwardResult forward(const WeightSet& weights, const TokenSequence& seq, const ImageHook& hook,
                      const ForwardOptions& options) {
  const ModelConfig& cfg = weights.config;
  check_sequence(cfg, seq);
  const std::size_t n = seq.size();
  const std::size_t d = cfg.model_dim;
  const std::size_t dh = cfg.head_dim;
  const std::size_t last = n - 1;
  const ImageSpan span = seq.image_span;

  ForwardResult result;
  std::shared_ptr<AttentionTrace> trace;
  std::shared_ptr<AttentionTrace> pre_trace;
  if (options.capture != TraceCapture::none) {
    const std::size_t first = options.capture == TraceCapture::full ? 0 : last;
    trace = std::make_shared<AttentionTrace>(cfg, n, span, first);
    if (options.capture_pre_hook) pre_trace = std::make_shared<AttentionTrace>(cfg, n, span, first);
  }

  const Matrix& embed = weights.at("embed");
  const Matrix& pos = weights.at("pos");
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = x.row(i);
    const bool from_patch = !seq.patch_embeddings.empty() && span.contains(i);
    auto src = from_patch ? seq.patch_embeddings.row(i - span.offset) : embed.row(seq.token_ids[i]);
    auto p = pos.row(i);
    for (std::size_t k = 0; k < d; ++k) dst[k] = src[k] + p[k];
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<double> row(n);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const Matrix xn = rms_normalized(x);
    const Matrix q = matmul(xn, weights.at(layer_name(l, "wq")));
    const Matrix k = matmul(xn, weights.at(layer_name(l, "wk")));
    const Matrix v = matmul(xn, weights.at(layer_name(l, "wv")));
    Matrix heads_out(n, d);

    for (std::size_t h = 0; h < cfg.heads; ++h) {
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        auto qi = q.row(i).subspan(c0, dh);
        for (std::size_t j = 0; j <= i; ++j) {
          auto kj = k.row(j).subspan(c0, dh);
          double dot = 0.0;
          for (std::size_t t = 0; t < dh; ++t) dot += qi[t] * kj[t];
          row[j] = dot * scale;
        }
        if (pre_trace && pre_trace->has_row(i)) {
          auto dst = pre_trace->logits_row(l, h, i);
          std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(i + 1), dst.begin());
        }
        if (i == last && hook && span.length > 0) hook(std::span<double>(row).subspan(span.offset, span.length));
        if (trace && trace->has_row(i)) {
          auto dst = trace->logits_row(l, h, i);
          std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(i + 1), dst.begin());
        }
        softmax_prefix_inplace(std::span<double>(row).first(i + 1), i + 1);
        auto out = heads_out.row(i).subspan(c0, dh);
        for (std::size_t j = 0; j <= i; ++j) {
          const double p = row[j];
          auto vj = v.row(j).subspan(c0, dh);
          for (std::size_t t = 0; t < dh; ++t) out[t] += p * vj[t];
        }
      }
    }

    const Matrix attn = matmul(heads_out, weights.at(layer_name(l, "wo")));
    for (std::size_t idx = 0; idx < x.size(); ++idx) x.data()[idx] += attn.data()[idx];
    const Matrix ff = matmul(rms_normalized(x), weights.at(layer_name(l, "ff")));
    for (std::size_t idx = 0; idx < x.size(); ++idx) x.data()[idx] += std::tanh(ff.data()[idx]);
  }

  Matrix final_row(1, d);
  std::copy(x.row(last).begin(), x.row(last).end(), final_row.row(0).begin());
  rms_normalize(final_row.row(0));
  const Matrix logits = matmul(final_row, weights.at("unembed"));
  result.next_token_logits.assign(logits.data().begin(), logits.data().end());
  result.trace = std::move(trace);
  result.pre_hook_trace = std::move(pre_trace);
  return result;
}

}  // namespace visattn
