#pragma once

#include "dslit/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dslit {

/// File could not be read, written, or parsed.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Binary 16-bit graymap (P5, maxval 65535, big-endian samples). Header
/// comments of the form `# key=value` are kept as metadata.
struct GrayImage16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels; // row-major
  std::map<std::string, std::string> metadata;
};

void write_pgm(const std::filesystem::path& path, const GrayImage16& image);
GrayImage16 read_pgm(const std::filesystem::path& path);

/// Frame <-> graymap, with geometry and exposure stored as header comments.
GrayImage16 to_image(const Frame& frame);
Frame frame_from_image(const GrayImage16& image);

/// Linear map of a nonnegative real image onto 0..65535 (max -> 65535).
GrayImage16 to_image(const Eigen::ArrayXXd& values);

} // namespace dslit
