#include "visattn/trace_io.hpp"

#include <cmath>

#include "binary_io.hpp"
#include "config_header.hpp"

namespace visattn {

std::vector<std::uint8_t> serialize_trace(const AttentionTrace& trace) {
  const std::size_t n = trace.seq_len();
  if (!trace.full() && trace.first_row() != n - 1) {
    throw ContractViolation("serialize_trace: only full or final-row traces can be written");
  }
  detail::ByteWriter w;
  w.bytes("AIT1", 4);
  detail::write_config(w, trace.config());
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(trace.image_span().offset));
  w.u32(static_cast<std::uint32_t>(trace.image_span().length));
  for (double v : trace.raw()) w.f64(v);
  return std::move(w.buffer());
}

AttentionTrace parse_trace(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  detail::expect_magic(r, "AIT1");
  const ModelConfig cfg = detail::read_config(r);
  const std::size_t header_at = r.offset();
  const std::size_t n = r.u32("sequence length");
  ImageSpan span;
  span.offset = r.u32("image span");
  span.length = r.u32("image span");
  if (n == 0) throw ParseError("zero sequence length at byte offset " + std::to_string(header_at), header_at);
  if (span.end() > n) {
    throw ParseError("image span exceeds sequence at byte offset " + std::to_string(header_at + 4),
                     header_at + 4);
  }

  const std::size_t lh = std::size_t{cfg.layers} * cfg.heads;
  const std::size_t payload_at = r.offset();
  std::size_t rows = 0;
  if (r.remaining() == lh * n * n * 8) {
    rows = n;
  } else if (r.remaining() == lh * n * 8) {
    rows = 1;
  } else {
    throw ParseError("trace payload at byte offset " + std::to_string(payload_at) + " has " +
                         std::to_string(r.remaining()) + " bytes, expected " +
                         std::to_string(lh * n * n * 8) + " (full) or " +
                         std::to_string(lh * n * 8) + " (final row)",
                     payload_at);
  }

  AttentionTrace trace(cfg, n, span, n - rows);
  auto dst = trace.raw();
  for (std::size_t idx = 0; idx < dst.size(); ++idx) {
    const std::size_t at = r.offset();
    const double v = r.f64("trace logits");
    const std::size_t col = idx % n;
    const std::size_t row = trace.first_row() + (idx / n) % rows;
    const bool upper = col > row;
    if (upper ? !(std::isinf(v) && v < 0) : !std::isfinite(v)) {
      throw ParseError(std::string(upper ? "expected -inf above the diagonal" : "non-finite logit") +
                           " at byte offset " + std::to_string(at),
                       at);
    }
    dst[idx] = v;
  }
  return trace;
}

void save_trace(const AttentionTrace& trace, const std::filesystem::path& path) {
  detail::write_file(path, serialize_trace(trace));
}

AttentionTrace load_trace(const std::filesystem::path& path) {
  return parse_trace(detail::read_file(path));
}

}  // namespace visattn
