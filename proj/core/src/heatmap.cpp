#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "visattn/analysis.hpp"

namespace visattn {

namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

std::uint8_t to_byte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

// Dark blue -> cyan -> yellow -> red.
Rgb ramp(double t) {
  if (t < 1.0 / 3.0) {
    const double u = t * 3.0;
    return {0, to_byte(u), to_byte(0.5 + 0.5 * u)};
  }
  if (t < 2.0 / 3.0) {
    const double u = (t - 1.0 / 3.0) * 3.0;
    return {to_byte(u), 255, to_byte(1.0 - u)};
  }
  const double u = (t - 2.0 / 3.0) * 3.0;
  return {255, to_byte(1.0 - u), 0};
}

}  // namespace

std::vector<std::uint8_t> render_heatmap(const PatchAttentionMap& map, HeatmapStyle style,
                                         std::uint32_t cell_px) {
  if (map.side == 0 || map.values.size() != std::size_t{map.side} * map.side) {
    throw ContractViolation("render_heatmap: map values do not fill the grid");
  }
  if (cell_px == 0) throw ContractViolation("render_heatmap: cell size must be positive");
  const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *lo_it;
  const double span = *hi_it - lo;

  const std::uint32_t dim = map.side * cell_px;
  const std::string header = "P6\n" + std::to_string(dim) + " " + std::to_string(dim) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + std::size_t{dim} * dim * 3);
  for (std::uint32_t y = 0; y < dim; ++y) {
    for (std::uint32_t x = 0; x < dim; ++x) {
      const double v = map.values[(y / cell_px) * map.side + x / cell_px];
      const double t = span > 0.0 ? (v - lo) / span : 0.0;
      const Rgb px = style == HeatmapStyle::grayscale ? Rgb{to_byte(t), to_byte(t), to_byte(t)} : ramp(t);
      out.push_back(px.r);
      out.push_back(px.g);
      out.push_back(px.b);
    }
  }
  return out;
}

void export_heatmap(const PatchAttentionMap& map, const std::filesystem::path& path,
                    HeatmapStyle style, std::uint32_t cell_px) {
  detail::write_file(path, render_heatmap(map, style, cell_px));
}

}  // namespace visattn
