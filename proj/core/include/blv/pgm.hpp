#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "blv/labels.hpp"

namespace blv {

/// A decoded binary PGM (P5) label map. Pixel values are raw class indices.
struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  int maxval = 255;
  std::vector<std::uint8_t> pixels;  // row-major, width * height

  LabelBatch to_batch(int ignore_index = kDefaultIgnoreIndex) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Parses "P5" with optional '#' comments in the header and maxval <= 255.
/// Throws ParseError carrying the failing byte offset. Bytes after the
/// pixel payload are ignored.
LabelMap read_label_map(std::span<const std::uint8_t> bytes);

/// Canonical form: "P5\n<w> <h>\n<maxval>\n" followed by the payload.
std::vector<std::uint8_t> write_label_map(const LabelMap& map);

LabelMap read_label_map_file(const std::string& path);
void write_label_map_file(const std::string& path, const LabelMap& map);

}  // namespace blv
