#include "visattn/referee.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "visattn/error.hpp"
#include "visattn/rng.hpp"

namespace visattn {

namespace {

constexpr double kInactiveLogit = -30.0;
constexpr double kStopLogit = 30.0;
constexpr std::uint64_t kFaultTag = 0xFA;
constexpr std::uint64_t kNoiseTag = 0x77;

struct Point {
  double row;
  double col;
};

Point center(const CellBox& b) { return {b.center_row(), b.center_col()}; }

Point clamp_to_grid(Point p, std::uint32_t side) {
  const double hi = static_cast<double>(side) - 1.0;
  return {std::clamp(p.row, 0.0, hi), std::clamp(p.col, 0.0, hi)};
}

void add_peak(std::vector<double>& map, std::uint32_t side, Point at, double height, double width) {
  const double inv = 1.0 / (2.0 * width * width);
  for (std::uint32_t r = 0; r < side; ++r) {
    for (std::uint32_t c = 0; c < side; ++c) {
      const double dr = r - at.row;
      const double dc = c - at.col;
      map[r * side + c] += height * std::exp(-(dr * dr + dc * dc) * inv);
    }
  }
}

void add_box(std::vector<double>& map, std::uint32_t side, const CellBox& box, double value) {
  for (std::uint32_t r = 0; r < side; ++r)
    for (std::uint32_t c = 0; c < side; ++c)
      if (box.contains(static_cast<int>(r), static_cast<int>(c))) map[r * side + c] += value;
}

void validate_config(const ModelConfig& config, const SceneSpec& scene) {
  config.validate();
  if (config.heads < 2) throw ConfigError("referee: needs at least two heads");
  if (config.vocab_size < Vocabulary::standard().size()) {
    throw ConfigError("referee: vocab_size smaller than the standard vocabulary");
  }
  if (scene.patch_side != config.patch_side) {
    throw ContractViolation("referee: scene grid and model patch_side differ");
  }
}

}  // namespace

RefereeModel::RefereeModel(const ModelConfig& config, const SceneSpec& scene, bool reversed,
                           std::vector<Relation> options, const RefereeParams& params, int)
    : config_(config),
      scene_(scene),
      reversed_(reversed),
      options_(std::move(options)),
      params_(params) {
  validate_config(config, scene);
  scene.validate();
  if (options_.empty()) throw ContractViolation("referee: empty option list");
  const std::uint32_t p = config.patch_side;
  depth_.resize(config.image_tokens());
  for (std::uint32_t r = 0; r < p; ++r) {
    for (std::uint32_t c = 0; c < p; ++c) {
      double d = p <= 1 ? 0.5 : 1.0 - r / static_cast<double>(p - 1);
      if (scene.pos_a.contains(static_cast<int>(r), static_cast<int>(c))) d = scene.depth_a;
      if (scene.pos_b.contains(static_cast<int>(r), static_cast<int>(c))) d = scene.depth_b;
      depth_[r * p + c] = d;
    }
  }
}

RefereeModel::RefereeModel(const ModelConfig& config, const SceneSpec& scene, bool reversed,
                           std::vector<Relation> options, const RefereeParams& params)
    : RefereeModel(config, scene, reversed, std::move(options), params, 0) {
  const std::uint32_t p = config.patch_side;
  const CellBox& subject = reversed ? scene.pos_b : scene.pos_a;
  const CellBox& reference = reversed ? scene.pos_a : scene.pos_b;
  const Point s = center(subject);
  const Point r = center(reference);

  SplitMix64 fault_rng(derive_seed(scene.seed, kFaultTag));
  const double u = fault_rng.uniform();
  if (u < params.misplace_prob) {
    fault_ = AttentionFault::misplaced;
  } else if (u < params.misplace_prob + params.distractor_prob) {
    fault_ = AttentionFault::distractor;
  }

  subject_map_.assign(config.image_tokens(), 0.0);
  reference_map_.assign(config.image_tokens(), 0.0);

  Point subject_peak = s;
  if (fault_ == AttentionFault::misplaced) {
    const Point d = clamp_to_grid({r.row + params.decoy_shift * (r.row - s.row),
                                   r.col + params.decoy_shift * (r.col - s.col)},
                                  p);
    subject_peak = {std::round(d.row), std::round(d.col)};
  }
  const double peak_height = fault_ == AttentionFault::misplaced ? params.decoy_logit : params.peak_logit;
  add_peak(subject_map_, p, subject_peak, peak_height, params.peak_width);
  add_box(subject_map_, p, subject, params.object_logit);
  if (fault_ == AttentionFault::distractor) {
    const Point dc = clamp_to_grid({r.row + params.distractor_shift * (r.row - s.row),
                                    r.col + params.distractor_shift * (r.col - s.col)},
                                   p);
    const int rad = params.distractor_radius;
    const CellBox region{static_cast<int>(std::lround(dc.row)) - rad,
                         static_cast<int>(std::lround(dc.col)) - rad, 2 * rad + 1, 2 * rad + 1};
    add_box(subject_map_, p, region, params.distractor_logit);
  }

  add_peak(reference_map_, p, r, params.peak_logit, params.peak_width);
  add_box(reference_map_, p, reference, params.object_logit);

  SplitMix64 noise(derive_seed(scene.seed, kNoiseTag));
  for (double& v : subject_map_) v += noise.symmetric(params.noise);
  for (double& v : reference_map_) v += noise.symmetric(params.noise);
}

RefereeModel RefereeModel::from_maps(const ModelConfig& config, const SceneSpec& scene,
                                     bool reversed, std::vector<Relation> options,
                                     std::vector<double> subject_map,
                                     std::vector<double> reference_map,
                                     const RefereeParams& params) {
  RefereeModel m(config, scene, reversed, std::move(options), params, 0);
  if (subject_map.size() != config.image_tokens() || reference_map.size() != config.image_tokens()) {
    throw ShapeError("referee: attention maps must have patch_side^2 entries");
  }
  m.subject_map_ = std::move(subject_map);
  m.reference_map_ = std::move(reference_map);
  return m;
}

std::vector<double> RefereeModel::peaked_map(std::uint32_t patch_side, double row, double col,
                                             double sharpness, double width) {
  const double hi = static_cast<double>(patch_side) - 1.0;
  if (!(row >= 0.0 && row <= hi && col >= 0.0 && col <= hi)) {
    throw ContractViolation("referee: peak location outside the patch grid");
  }
  if (!(width > 0.0)) throw ContractViolation("referee: peak width must be positive");
  std::vector<double> map(std::size_t{patch_side} * patch_side, 0.0);
  add_peak(map, patch_side, {row, col}, sharpness, width);
  return map;
}

double RefereeModel::layer_gain(std::size_t layer) const {
  if (config_.layers == 1) return 1.0;
  const double x = 2.0 * static_cast<double>(layer) / (config_.layers - 1) - 1.0;
  return 0.75 + 0.5 * (1.0 - std::abs(x));
}

std::array<double, 3> RefereeModel::cell_position(std::size_t k) const {
  const std::size_t p = config_.patch_side;
  return {static_cast<double>(k / p), static_cast<double>(k % p), depth_[k]};
}

double RefereeModel::relation_score(Relation r, const PerceivedLayout& layout) const {
  const auto& s = layout.subject;
  const auto& ref = layout.reference;
  const double depth_scale = config_.patch_side > 1 ? config_.patch_side - 1.0 : 1.0;
  double v = 0.0;
  switch (r) {
    case Relation::left: v = ref[1] - s[1]; break;
    case Relation::right: v = s[1] - ref[1]; break;
    case Relation::on: v = ref[0] - s[0]; break;
    case Relation::under: v = s[0] - ref[0]; break;
    case Relation::behind: v = depth_scale * (s[2] - ref[2]); break;
    case Relation::front: v = depth_scale * (ref[2] - s[2]); break;
  }
  return params_.answer_gain * v;
}

namespace {

struct HeadPass {
  const RefereeModel& model;
  const ImageHook& hook;
  double text_logit;

  // Runs every (layer, head) final row; records into the traces when given.
  PerceivedLayout run(AttentionTrace* trace, AttentionTrace* pre, std::size_t n,
                      std::size_t offset) const {
    const ModelConfig& cfg = model.config();
    const std::size_t cells = cfg.image_tokens();
    const std::size_t row_len = trace || pre ? n : cells;
    std::vector<double> row(row_len, text_logit);
    const std::size_t img0 = trace || pre ? offset : 0;
    PerceivedLayout out;
    std::array<std::size_t, 2> counts{};
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const double gain = model.layer_gain(l);
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        const bool subject = h % 2 == 0;
        const auto& map = subject ? model.subject_map() : model.reference_map();
        for (std::size_t k = 0; k < cells; ++k) row[img0 + k] = gain * map[k];
        if (pre) {
          auto dst = pre->logits_row(l, h, n - 1);
          std::copy(row.begin(), row.end(), dst.begin());
        }
        auto image = std::span<double>(row).subspan(img0, cells);
        if (hook) hook(image);
        if (trace) {
          auto dst = trace->logits_row(l, h, n - 1);
          std::copy(row.begin(), row.end(), dst.begin());
        }
        const std::vector<double> p = softmax(image);
        auto& acc = subject ? out.subject : out.reference;
        for (std::size_t k = 0; k < cells; ++k) {
          const auto pos = model.cell_position(k);
          for (int a = 0; a < 3; ++a) acc[a] += p[k] * pos[a];
        }
        ++counts[subject ? 0 : 1];
        if (trace || pre) {
          std::fill(row.begin(), row.end(), text_logit);
        }
      }
    }
    for (int a = 0; a < 3; ++a) {
      out.subject[a] /= static_cast<double>(counts[0]);
      out.reference[a] /= static_cast<double>(counts[1]);
    }
    return out;
  }
};

}  // namespace

PerceivedLayout RefereeModel::perceive(const ImageHook& hook) const {
  return HeadPass{*this, hook, params_.text_logit}.run(nullptr, nullptr, 0, 0);
}

ForwardResult RefereeModel::forward(const TokenSequence& seq, const ImageHook& hook,
                                    const ForwardOptions& options) const {
  const std::size_t n = seq.size();
  if (n == 0) throw ContractViolation("referee: empty sequence");
  if (n > config_.max_seq) {
    throw CapacityError("referee: sequence length " + std::to_string(n) + " exceeds max_seq " +
                        std::to_string(config_.max_seq));
  }
  if (seq.image_span.length != config_.image_tokens() || seq.image_span.end() > n) {
    throw ContractViolation("referee: image span must hold patch_side^2 tokens inside the sequence");
  }

  ForwardResult result;
  std::shared_ptr<AttentionTrace> trace;
  std::shared_ptr<AttentionTrace> pre;
  if (options.capture != TraceCapture::none) {
    const std::size_t first = options.capture == TraceCapture::full ? 0 : n - 1;
    trace = std::make_shared<AttentionTrace>(config_, n, seq.image_span, first);
    if (options.capture_pre_hook) pre = std::make_shared<AttentionTrace>(config_, n, seq.image_span, first);
  }
  const PerceivedLayout layout =
      HeadPass{*this, hook, params_.text_logit}.run(trace.get(), pre.get(), n, seq.image_span.offset);

  result.next_token_logits.assign(config_.vocab_size, kInactiveLogit);
  const Vocabulary& vocab = Vocabulary::standard();
  const TokenId last = seq.token_ids.back();
  const bool answered = last >= vocab.relation_token(Relation::left) && last <= vocab.id("false");
  if (answered) {
    result.next_token_logits[Vocabulary::kEnd] = kStopLogit;
  } else {
    for (Relation r : options_) {
      result.next_token_logits[vocab.relation_token(r)] = relation_score(r, layout);
    }
  }
  result.trace = std::move(trace);
  result.pre_hook_trace = std::move(pre);
  return result;
}

}  // namespace visattn
