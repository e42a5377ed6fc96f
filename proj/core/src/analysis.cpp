#include "visattn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "visattn/error.hpp"
#include "visattn/tensor.hpp"

namespace visattn {

namespace {

void check_row(const AttentionTrace& trace, std::size_t row) {
  if (!trace.has_row(row)) {
    throw ContractViolation("row " + std::to_string(row) + " is not stored in the trace");
  }
}

std::vector<double> renormalized(std::span<const double> p, const char* who) {
  if (p.empty()) throw ContractViolation(std::string(who) + ": empty distribution");
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0 || !std::isfinite(v)) throw ContractViolation(std::string(who) + ": negative or non-finite entry");
    sum += v;
  }
  if (!(sum > 0.0)) throw ContractViolation(std::string(who) + ": zero total mass");
  std::vector<double> out(p.begin(), p.end());
  for (double& v : out) v /= sum;
  return out;
}

// Head-mean image-column probabilities of one layer.
std::vector<double> head_mean_image_probs(const AttentionTrace& trace, std::size_t row,
                                          std::size_t layer) {
  const ImageSpan span = trace.image_span();
  const std::size_t heads = trace.config().heads;
  std::vector<double> acc(span.length, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    const auto p = trace.probs_row(layer, h, row);
    for (std::size_t k = 0; k < span.length; ++k) acc[k] += p[span.offset + k];
  }
  for (double& v : acc) v /= static_cast<double>(heads);
  return acc;
}

}  // namespace

std::size_t BBoxMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
}

std::vector<double> image_attention_share(const AttentionTrace& trace, std::size_t row) {
  check_row(trace, row);
  const ImageSpan span = trace.image_span();
  std::vector<double> out(trace.config().layers, 0.0);
  for (std::size_t l = 0; l < trace.config().layers; ++l) {
    double total = 0.0;
    for (std::size_t h = 0; h < trace.config().heads; ++h) {
      const auto p = trace.probs_row(l, h, row);
      double share = 0.0;
      for (std::size_t j = span.offset; j < span.end() && j <= row; ++j) share += p[j];
      total += share;
    }
    out[l] = total / static_cast<double>(trace.config().heads);
  }
  return out;
}

std::pair<std::size_t, std::size_t> patch_cell(std::size_t k, std::uint32_t side) {
  if (side == 0 || k >= std::size_t{side} * side) {
    throw ContractViolation("patch_cell: token index outside the grid");
  }
  return {k / side, k % side};
}

PatchAttentionMap map_to_patch_grid(const AttentionTrace& trace, std::size_t row,
                                    std::size_t layer, std::optional<std::size_t> head,
                                    bool normalize, MapSource source) {
  check_row(trace, row);
  const std::uint32_t side = trace.config().patch_side;
  const ImageSpan span = trace.image_span();
  if (span.length != std::size_t{side} * side) {
    throw ContractViolation("map_to_patch_grid: image span length " + std::to_string(span.length) +
                            " is not patch_side^2 = " + std::to_string(side * side));
  }
  if (layer >= trace.config().layers) throw ContractViolation("map_to_patch_grid: layer out of range");
  if (head && *head >= trace.config().heads) throw ContractViolation("map_to_patch_grid: head out of range");

  PatchAttentionMap map;
  map.side = side;
  map.layer = layer;
  map.head = head;
  map.values.assign(span.length, 0.0);

  const std::size_t h0 = head ? *head : 0;
  const std::size_t h1 = head ? *head + 1 : trace.config().heads;
  for (std::size_t h = h0; h < h1; ++h) {
    if (source == MapSource::probabilities) {
      const auto p = trace.probs_row(layer, h, row);
      for (std::size_t k = 0; k < span.length; ++k) map.values[k] += p[span.offset + k];
    } else {
      const auto a = trace.logits_row(layer, h, row);
      for (std::size_t k = 0; k < span.length; ++k) {
        const double v = a[span.offset + k];
        map.values[k] += std::isfinite(v) ? v : 0.0;
      }
    }
  }
  const double heads = static_cast<double>(h1 - h0);
  for (double& v : map.values) v /= heads;
  if (source == MapSource::logits) {
    const double lo = *std::min_element(map.values.begin(), map.values.end());
    for (double& v : map.values) v -= lo;
  }
  if (normalize) {
    double sum = 0.0;
    for (double v : map.values) sum += v;
    if (!(sum > 0.0)) throw ContractViolation("map_to_patch_grid: cannot normalize a zero map");
    for (double& v : map.values) v /= sum;
    map.normalized = true;
  }
  return map;
}

BBoxMask rasterize_bbox(const PixelBox& box, std::uint32_t side) {
  if (side == 0 || !(box.image_width > 0) || !(box.image_height > 0)) {
    throw ContractViolation("rasterize_bbox: grid side and image size must be positive");
  }
  BBoxMask mask;
  mask.side = side;
  mask.bits.assign(std::size_t{side} * side, false);
  const double cw = box.image_width / side;
  const double ch = box.image_height / side;
  for (std::uint32_t r = 0; r < side; ++r) {
    const double cy = (r + 0.5) * ch;
    for (std::uint32_t c = 0; c < side; ++c) {
      const double cx = (c + 0.5) * cw;
      if (cx >= box.x_min && cx <= box.x_max && cy >= box.y_min && cy <= box.y_max) {
        mask.bits[r * side + c] = true;
      }
    }
  }
  if (mask.count() == 0) {
    throw ContractViolation("rasterize_bbox: box for '" + box.item_id + "/" + box.label +
                            "' covers no patch centre");
  }
  return mask;
}

std::vector<PixelBox> parse_bbox_annotations(std::string_view text) {
  std::vector<PixelBox> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    PixelBox b;
    std::string extra;
    if (!(fields >> b.item_id >> b.label >> b.x_min >> b.y_min >> b.x_max >> b.y_max >>
          b.image_width >> b.image_height) ||
        (fields >> extra)) {
      throw ParseError("bbox annotations line " + std::to_string(line_no) +
                           ": expected 'item_id label x_min y_min x_max y_max img_w img_h'",
                       line_no);
    }
    if (b.x_max < b.x_min || b.y_max < b.y_min) {
      throw ParseError("bbox annotations line " + std::to_string(line_no) + ": inverted box", line_no);
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<PixelBox> load_bbox_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_bbox_annotations(ss.str());
}

double bbox_overlap_cosine(const PatchAttentionMap& map, const BBoxMask& mask) {
  if (map.side != mask.side || map.values.size() != mask.bits.size()) {
    throw ContractViolation("bbox_overlap_cosine: map and mask grids differ");
  }
  const std::size_t ones = mask.count();
  if (ones == 0) throw ContractViolation("bbox_overlap_cosine: empty mask");
  double norm2 = 0.0;
  double dot = 0.0;
  for (std::size_t k = 0; k < map.values.size(); ++k) {
    norm2 += map.values[k] * map.values[k];
    if (mask.bits[k]) dot += map.values[k];
  }
  if (!(norm2 > 0.0)) throw ContractViolation("bbox_overlap_cosine: zero-norm attention map");
  return dot / (std::sqrt(norm2) * std::sqrt(static_cast<double>(ones)));
}

double overlap_score(const AttentionTrace& trace, std::size_t row, std::size_t layer,
                     const BBoxMask& mask, HeadAggregation aggregation, MapSource source) {
  if (aggregation == HeadAggregation::mean) {
    return bbox_overlap_cosine(map_to_patch_grid(trace, row, layer, std::nullopt, false, source), mask);
  }
  double best = 0.0;
  for (std::size_t h = 0; h < trace.config().heads; ++h) {
    best = std::max(best, bbox_overlap_cosine(map_to_patch_grid(trace, row, layer, h, false, source), mask));
  }
  return best;
}

double auroc(std::span<const ScoredSample> samples) {
  std::size_t pos = 0;
  for (const auto& s : samples) {
    if (!std::isfinite(s.score)) throw ContractViolation("auroc: non-finite score");
    pos += s.label ? 1 : 0;
  }
  const std::size_t neg = samples.size() - pos;
  if (pos == 0 || neg == 0) throw ContractViolation("auroc: needs at least one positive and one negative");

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return samples[a].score < samples[b].score; });

  // Sum of 2 * rank over positives; ranks are 1-based, ties get the average.
  double twice_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && samples[order[j]].score == samples[order[i]].score) ++j;
    const double twice_rank = static_cast<double>(i + 1 + j);  // (i+1) + j = 2 * mean rank
    for (std::size_t k = i; k < j; ++k) {
      if (samples[order[k]].label) twice_rank_sum += twice_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double u_twice = twice_rank_sum - p * (p + 1.0);
  return u_twice / (2.0 * p * static_cast<double>(neg));
}

double attention_entropy(std::span<const double> probs) {
  const auto p = renormalized(probs, "attention_entropy");
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

double attention_skewness(std::span<const double> probs) {
  const auto p = renormalized(probs, "attention_skewness");
  double mu = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) mu += static_cast<double>(j) * p[j];
  double m2 = 0.0;
  double m3 = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double d = static_cast<double>(j) - mu;
    m2 += d * d * p[j];
    m3 += d * d * d * p[j];
  }
  if (!(m2 > 0.0)) throw ContractViolation("attention_skewness: undefined skewness (zero spread)");
  const double sigma = std::sqrt(m2);
  return m3 / (sigma * sigma * sigma);
}

std::vector<double> layer_variance(const AttentionTrace& trace, std::size_t row) {
  check_row(trace, row);
  if (trace.image_span().length == 0) throw ContractViolation("layer_variance: empty image span");
  std::vector<double> out(trace.config().layers);
  for (std::size_t l = 0; l < out.size(); ++l) {
    out[l] = variance(head_mean_image_probs(trace, row, l));
  }
  return out;
}

std::vector<double> image_distribution(const AttentionTrace& trace, std::size_t row,
                                       std::size_t layer) {
  check_row(trace, row);
  return renormalized(head_mean_image_probs(trace, row, layer), "image_distribution");
}

std::size_t default_analysis_layer(std::size_t layers) noexcept { return layers * 17 / 32; }

}  // namespace visattn
