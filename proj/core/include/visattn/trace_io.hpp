#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "visattn/model.hpp"

namespace visattn {

// AIT1 trace files:
//   "AIT1" | 7 x u32 config | u32 n | u32 span offset | u32 span length |
//   [L][H][rows][n] little-endian f64 pre-softmax logits, col > row = -inf.
// rows is n for a full trace. A payload of exactly L*H*n doubles is read as a
// final-row-only trace (rows = 1, row index n-1).

std::vector<std::uint8_t> serialize_trace(const AttentionTrace& trace);
AttentionTrace parse_trace(const std::vector<std::uint8_t>& bytes);

void save_trace(const AttentionTrace& trace, const std::filesystem::path& path);
AttentionTrace load_trace(const std::filesystem::path& path);

}  // namespace visattn
