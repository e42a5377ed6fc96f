#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include "binary_io.hpp"
#include "config_header.hpp"
#include "visattn/transformer.hpp"

namespace visattn {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_config(ByteWriter& w, const ModelConfig& c) {
  for (std::uint32_t v : {c.layers, c.heads, c.model_dim, c.head_dim, c.vocab_size, c.patch_side,
                          c.max_seq}) {
    w.u32(v);
  }
}

ModelConfig read_config(ByteReader& r) {
  const std::size_t at = r.offset();
  ModelConfig c;
  c.layers = r.u32("config header");
  c.heads = r.u32("config header");
  c.model_dim = r.u32("config header");
  c.head_dim = r.u32("config header");
  c.vocab_size = r.u32("config header");
  c.patch_side = r.u32("config header");
  c.max_seq = r.u32("config header");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid config header at byte offset ") + std::to_string(at) +
                         ": " + e.what(),
                     at);
  }
  return c;
}

void expect_magic(ByteReader& r, const char* magic) {
  const std::string m = r.str(4, "magic");
  if (m != magic) {
    throw ParseError(std::string("bad magic at byte offset 0: expected ") + magic, 0);
  }
}

}  // namespace detail

std::vector<std::uint8_t> serialize_weights(const WeightSet& weights) {
  weights.validate();
  detail::ByteWriter w;
  w.bytes("AIW1", 4);
  detail::write_config(w, weights.config);
  for (const auto& name : WeightSet::required_sections(weights.config)) {
    const Matrix& m = weights.at(name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) w.f64(v);
  }
  return std::move(w.buffer());
}

WeightSet parse_weights(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes);
  detail::expect_magic(r, "AIW1");
  WeightSet ws;
  ws.config = detail::read_config(r);

  while (!r.done()) {
    const std::size_t section_at = r.offset();
    const std::uint16_t len = r.u16("section name length");
    const std::string name = r.str(len, "section name");
    const std::string what = "section '" + name + "'";
    const std::uint32_t rows = r.u32(what + " shape");
    const std::uint32_t cols = r.u32(what + " shape");
    const std::size_t count = std::size_t{rows} * cols;
    r.need(count * 8, what + " data");
    Matrix m(rows, cols);
    for (double& v : m.data()) {
      const std::size_t at = r.offset();
      v = r.f64(what);
      if (!std::isfinite(v)) {
        throw ParseError("non-finite weight in " + what + " at byte offset " + std::to_string(at), at);
      }
    }
    if (!ws.sections.emplace(name, std::move(m)).second) {
      throw ParseError("duplicate " + what + " at byte offset " + std::to_string(section_at),
                       section_at);
    }
  }

  for (const auto& name : WeightSet::required_sections(ws.config)) {
    if (!ws.sections.contains(name)) {
      throw ParseError("missing section '" + name + "' (file ends at byte offset " +
                           std::to_string(bytes.size()) + ")",
                       bytes.size());
    }
  }
  try {
    ws.validate();
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), bytes.size());
  }
  return ws;
}

WeightSet load_weights(const std::filesystem::path& path) {
  return parse_weights(detail::read_file(path));
}

void save_weights(const WeightSet& weights, const std::filesystem::path& path) {
  detail::write_file(path, serialize_weights(weights));
}

}  // namespace visattn
