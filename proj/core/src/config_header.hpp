#pragma once

#include "binary_io.hpp"
#include "visattn/model.hpp"

namespace visattn::detail {

/// The 7 little-endian u32 fields shared by AIW1 and AIT1:
/// layers, heads, model_dim, head_dim, vocab_size, patch_side, max_seq.
void write_config(ByteWriter& w, const ModelConfig& c);
ModelConfig read_config(ByteReader& r);
void expect_magic(ByteReader& r, const char* magic);

}  // namespace visattn::detail
