#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "visattn/model.hpp"

namespace visattn {

/// P x P grid of non-negative attention values, row-major.
struct PatchAttentionMap {
  std::uint32_t side = 0;
  std::vector<double> values;
  std::size_t layer = 0;
  std::optional<std::size_t> head;  // nullopt = mean over heads
  bool normalized = false;

  double at(std::size_t r, std::size_t c) const { return values.at(r * side + c); }
};

struct BBoxMask {
  std::uint32_t side = 0;
  std::vector<bool> bits;

  std::size_t count() const noexcept;
};

/// One line of a bbox annotation file, pixel units.
struct PixelBox {
  std::string item_id;
  std::string label;
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  double image_width = 0, image_height = 0;
};

struct ScoredSample {
  double score = 0.0;
  bool label = false;
};

enum class MapSource { probabilities, logits };
enum class HeadAggregation { mean, max };

/// Per layer: mean over heads of the probability mass `row` puts on image
/// tokens. Text share is 1 minus this.
std::vector<double> image_attention_share(const AttentionTrace& trace, std::size_t row);

/// Image token k (0-based within the span) -> (k / P, k % P).
std::pair<std::size_t, std::size_t> patch_cell(std::size_t k, std::uint32_t side);

/// Image columns of `row` laid out on the patch grid. With
/// MapSource::logits the head-averaged logits are shifted so the minimum is 0.
PatchAttentionMap map_to_patch_grid(const AttentionTrace& trace, std::size_t row,
                                    std::size_t layer, std::optional<std::size_t> head,
                                    bool normalize = false,
                                    MapSource source = MapSource::probabilities);

/// Marks every cell whose centre lies inside the box (edges inclusive).
/// Throws ContractViolation when no cell qualifies.
BBoxMask rasterize_bbox(const PixelBox& box, std::uint32_t side);

std::vector<PixelBox> parse_bbox_annotations(std::string_view text);
std::vector<PixelBox> load_bbox_annotations(const std::filesystem::path& path);

/// Cosine between the flattened map and the 0/1 mask.
double bbox_overlap_cosine(const PatchAttentionMap& map, const BBoxMask& mask);

/// Overlap of `row`'s attention in `layer` with `mask`: the head-mean map's
/// cosine, or the maximum per-head cosine.
double overlap_score(const AttentionTrace& trace, std::size_t row, std::size_t layer,
                     const BBoxMask& mask, HeadAggregation aggregation,
                     MapSource source = MapSource::probabilities);

/// Mann-Whitney AUROC via average ranks; tied scores count 1/2.
double auroc(std::span<const ScoredSample> samples);

/// -sum p ln p of the renormalized input (0 ln 0 = 0).
double attention_entropy(std::span<const double> probs);

/// Third standardized moment over positions 0..t-1 of the renormalized
/// input. Throws ContractViolation when the spread is zero.
double attention_skewness(std::span<const double> probs);

/// Per layer: population variance of the head-mean image-token probabilities.
std::vector<double> layer_variance(const AttentionTrace& trace, std::size_t row);

/// Renormalized image-token distribution of `row` in `layer` (head mean).
std::vector<double> image_distribution(const AttentionTrace& trace, std::size_t row,
                                       std::size_t layer);

/// floor(L * 17 / 32): layer 17 of a 32-layer stack, scaled.
std::size_t default_analysis_layer(std::size_t layers) noexcept;

enum class HeatmapStyle { grayscale, ramp };

/// Binary PPM (P6), one cell_px x cell_px block per patch, min-max
/// normalized.
std::vector<std::uint8_t> render_heatmap(const PatchAttentionMap& map,
                                         HeatmapStyle style = HeatmapStyle::ramp,
                                         std::uint32_t cell_px = 16);
void export_heatmap(const PatchAttentionMap& map, const std::filesystem::path& path,
                    HeatmapStyle style = HeatmapStyle::ramp, std::uint32_t cell_px = 16);

}  // namespace visattn
