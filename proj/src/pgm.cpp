#include "dslit/pgm.hpp"

#include "dslit/format.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>

namespace dslit {

namespace {

class HeaderReader {
public:
  HeaderReader(const std::string& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}

  std::string token(std::map<std::string, std::string>& metadata) {
    skip_space_and_comments(metadata);
    const auto start = pos_;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) && bytes_[pos_] != '#')
      ++pos_;
    if (start == pos_) fail("truncated header");
    return bytes_.substr(start, pos_ - start);
  }

  int integer(std::map<std::string, std::string>& metadata) {
    const auto text = token(metadata);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value <= 0) fail("bad header field '" + text + "'");
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) fail("truncated header");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& what) const { throw IoError(path_.string() + ": " + what); }

private:
  void skip_space_and_comments(std::map<std::string, std::string>& metadata) {
    while (pos_ < bytes_.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        const auto end = bytes_.find('\n', pos_);
        const auto line = bytes_.substr(pos_ + 1, end == std::string::npos ? std::string::npos : end - pos_ - 1);
        const auto eq = line.find('=');
        if (eq != std::string::npos) {
          auto key = line.substr(0, eq);
          key.erase(0, key.find_first_not_of(' '));
          metadata[key] = line.substr(eq + 1);
        }
        pos_ = end == std::string::npos ? bytes_.size() : end + 1;
      } else {
        return;
      }
    }
  }

  const std::string& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

double metadata_number(const GrayImage16& image, const std::string& key, double fallback) {
  const auto it = image.metadata.find(key);
  if (it == image.metadata.end()) return fallback;
  double value = 0.0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("frame metadata '" + key + "' is not a number");
  return value;
}

} // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage16& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != std::size_t(image.width) * std::size_t(image.height))
    throw IoError(path.string() + ": inconsistent image dimensions");
  std::string out = "P5\n";
  for (const auto& [key, value] : image.metadata) out += "# " + key + "=" + value + "\n";
  out += std::to_string(image.width) + " " + std::to_string(image.height) + "\n65535\n";
  out.reserve(out.size() + image.pixels.size() * 2);
  for (const auto v : image.pixels) {
    out.push_back(char(v >> 8));
    out.push_back(char(v & 0xff));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError(path.string() + ": cannot open for writing");
  file.write(out.data(), std::streamsize(out.size()));
  if (!file) throw IoError(path.string() + ": write failed");
}

GrayImage16 read_pgm(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError(path.string() + ": cannot open for reading");
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  GrayImage16 image;
  HeaderReader header(bytes, path);
  if (header.token(image.metadata) != "P5") header.fail("not a binary graymap (P5)");
  image.width = header.integer(image.metadata);
  image.height = header.integer(image.metadata);
  const int maxval = header.integer(image.metadata);
  if (maxval > 65535) header.fail("maxval out of range");
  const std::size_t start = header.raster_start();
  const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = std::size_t(image.width) * std::size_t(image.height);
  if (bytes.size() - start < count * bytes_per_sample) header.fail("truncated raster");
  image.pixels.resize(count);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::size_t i = 0; i < count; ++i)
    image.pixels[i] = bytes_per_sample == 2 ? std::uint16_t((data[2 * i] << 8) | data[2 * i + 1]) : data[i];
  return image;
}

GrayImage16 to_image(const Frame& frame) {
  GrayImage16 image;
  image.width = frame.width();
  image.height = frame.height();
  image.pixels.assign(frame.counts.data(), frame.counts.data() + frame.counts.size());
  image.metadata = {{"frame", std::to_string(frame.index)},
                    {"t_start", format_double(frame.t_start)},
                    {"t_end", format_double(frame.t_end)},
                    {"pitch_m", format_double(frame.geometry.pitch)},
                    {"x0_m", format_double(frame.geometry.x0)},
                    {"y0_m", format_double(frame.geometry.y0)}};
  return image;
}

Frame frame_from_image(const GrayImage16& image) {
  Frame frame;
  frame.geometry.width = image.width;
  frame.geometry.height = image.height;
  frame.geometry.pitch = metadata_number(image, "pitch_m", 1.0);
  frame.geometry.x0 = metadata_number(image, "x0_m", 0.0);
  frame.geometry.y0 = metadata_number(image, "y0_m", 0.0);
  frame.t_start = metadata_number(image, "t_start", 0.0);
  frame.t_end = metadata_number(image, "t_end", 0.0);
  frame.index = std::size_t(metadata_number(image, "frame", 0.0));
  frame.counts = Eigen::Map<const CountImage>(image.pixels.data(), image.height, image.width);
  return frame;
}

GrayImage16 to_image(const Eigen::ArrayXXd& values) {
  GrayImage16 image;
  image.width = int(values.cols());
  image.height = int(values.rows());
  image.pixels.resize(std::size_t(values.size()));
  const double peak = values.size() > 0 ? values.maxCoeff() : 0.0;
  const double scale = peak > 0.0 ? 65535.0 / peak : 0.0;
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      image.pixels[i++] = std::uint16_t(std::clamp(std::round(values(r, c) * scale), 0.0, 65535.0));
  return image;
}

} // namespace dslit
