#include "blv/pgm.hpp"

#include <fstream>
#include <iterator>
#include <limits>

#include "blv/error.hpp"

namespace blv {

LabelBatch LabelMap::to_batch(int ignore_index) const {
  LabelBatch batch;
  batch.ignore_index = ignore_index;
  batch.labels.assign(pixels.begin(), pixels.end());
  return batch;
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  void expect_magic() {
    if (bytes_.size() < 2) throw ParseError(bytes_.size(), "file too short for PGM magic");
    if (bytes_[0] != 'P' || bytes_[1] != '5') throw ParseError(0, "bad magic, expected \"P5\"");
    pos_ = 2;
  }

  // Skips whitespace and '#' comments that run to end of line.
  void skip_separators() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (is_space(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t read_uint(const char* field) {
    const std::size_t start = pos_;
    if (pos_ >= bytes_.size()) {
      throw ParseError(pos_, std::string("unexpected end of header reading ") + field);
    }
    std::uint64_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + static_cast<std::uint64_t>(bytes_[pos_] - '0');
      if (value > std::numeric_limits<std::uint32_t>::max()) {
        throw ParseError(start, std::string(field) + " is too large");
      }
      ++pos_;
    }
    if (pos_ == start) throw ParseError(pos_, std::string("expected a number for ") + field);
    return value;
  }

  void expect_single_space(const char* after) {
    if (pos_ >= bytes_.size()) {
      throw ParseError(pos_, std::string("unexpected end of header after ") + after);
    }
    if (!is_space(bytes_[pos_])) {
      throw ParseError(pos_, std::string("expected whitespace after ") + after);
    }
    ++pos_;
  }

 private:
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

LabelMap read_label_map(std::span<const std::uint8_t> bytes) {
  HeaderReader header(bytes);
  header.expect_magic();
  header.expect_single_space("magic");
  header.skip_separators();
  const std::size_t width_at = header.pos();
  const auto width = header.read_uint("width");
  header.skip_separators();
  const std::size_t height_at = header.pos();
  const auto height = header.read_uint("height");
  header.skip_separators();
  const std::size_t maxval_at = header.pos();
  const auto maxval = header.read_uint("maxval");
  header.expect_single_space("maxval");

  if (width == 0) throw ParseError(width_at, "width must be positive");
  if (height == 0) throw ParseError(height_at, "height must be positive");
  if (maxval == 0 || maxval > 255) {
    throw ParseError(maxval_at, "maxval " + std::to_string(maxval) +
                                    " unsupported; label maps need 1..255");
  }

  const std::size_t payload_at = header.pos();
  const std::uint64_t need = width * height;
  const std::size_t have = bytes.size() - payload_at;
  if (have < need) {
    throw ParseError(bytes.size(), "truncated payload: expected " + std::to_string(need) +
                                       " pixel bytes, found " + std::to_string(have));
  }

  LabelMap map;
  map.width = static_cast<std::size_t>(width);
  map.height = static_cast<std::size_t>(height);
  map.maxval = static_cast<int>(maxval);
  map.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(payload_at),
                    bytes.begin() + static_cast<std::ptrdiff_t>(payload_at + need));
  for (std::size_t i = 0; i < map.pixels.size(); ++i) {
    if (map.pixels[i] > maxval) {
      throw ParseError(payload_at + i, "pixel value " + std::to_string(map.pixels[i]) +
                                           " exceeds maxval " + std::to_string(maxval));
    }
  }
  return map;
}

std::vector<std::uint8_t> write_label_map(const LabelMap& map) {
  if (map.pixels.size() != map.width * map.height) {
    throw ContractError("label map pixel count does not match width*height");
  }
  if (map.maxval < 1 || map.maxval > 255) throw ContractError("maxval must lie in 1..255");
  const std::string header = "P5\n" + std::to_string(map.width) + " " +
                             std::to_string(map.height) + "\n" + std::to_string(map.maxval) +
                             "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), map.pixels.begin(), map.pixels.end());
  return out;
}

LabelMap read_label_map_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return read_label_map(bytes);
}

void write_label_map_file(const std::string& path, const LabelMap& map) {
  const auto bytes = write_label_map(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace blv
