#pragma once

#include "dslit/beamline.hpp"
#include "dslit/blobdetect.hpp"
#include "dslit/core.hpp"
#include "dslit/field.hpp"
#include "dslit/geometry.hpp"
#include "dslit/sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dslit {

struct SamplerConfig {
  double total_rate = 6.32;   // Hz, electrons through the whole detector
  double pattern_rate = 1.0;  // Hz, electrons inside the recorded zoom window
  std::size_t events = 6235;
  std::optional<std::uint64_t> seed;
  double psf_sigma = 3.0;     // px
  double spot_amplitude = 1000.0;
  double background = 0.05;   // counts / px / frame
  int frame_width = 256;
  int frame_height = 48;
  int frame_margin = 16;      // px between the zoom window and the frame edge
  double zoom_orders = 5.0;   // fringe periods spanned by the frame interior
  double exposure = 0.0;      // s; 0 gives one frame per event
};

struct BlobConfig {
  double t_min = 2.0;
  double t_max = 30.0;
  double ratio = 1.3;
  std::optional<double> threshold; // fixed |response|; empty means automatic
  double threshold_factor = 5.0;
  double min_response = 50.0;

  std::vector<double> scales() const { return make_scale_ladder(t_min, t_max, ratio); }
  BlobThreshold policy() const {
    return threshold ? BlobThreshold::fixed(*threshold) : BlobThreshold{0.0, threshold_factor, min_response};
  }
};

struct OutputConfig {
  std::string directory = "out";
  bool image = true;
  std::size_t frames = 100; // rendered frames written by buildup
  double profile_range = 20e-3; // m, half-width of the written profile; 0 keeps the whole grid
};

struct RunConfig {
  double energy = 600.0; // eV

  double z_collimation_to_doubleslit = 0.305;
  double z_doubleslit_to_mask = 230e-6;
  double z_mask_to_detector = 0.5;
  double magnification = 10.0;
  double collimation_width = 2e-6;
  double slit_width = 50e-9;
  double slit_separation = 280e-9;
  double slit_height = 20e-6;
  double mask_opening = 5e-6;
  Illumination illumination = Illumination::plane_wave;

  GridSpec grid;
  SamplerConfig sampler;
  BlobConfig blob;
  OutputConfig outputs;
  std::vector<std::size_t> checkpoints = {2, 7, 209, 1004, 6235};
  std::optional<double> buildup_mask_center = 0.0;
  unsigned threads = 1;

  BeamlineLayout layout() const;
  BeamParametersd beam() const { return BeamParametersd::from_energy(energy); }

  /// Throws ConfigurationError naming the first offending key.
  void validate() const;
};

/// Parses `section.key = value` lines. Values take an optional unit suffix
/// (nm, um, mm, cm, m, eV, keV, Hz, kHz, s, ms); bare numbers are SI. Blank
/// lines and `#` comments are ignored. Keys not given keep their defaults.
/// Errors are ConfigurationError with the line number and key.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");

/// Reads and parses a file; IoError if it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text form (SI units, 17 significant digits) that parses back
/// to the same configuration.
std::string to_config_text(const RunConfig& config);

/// Contents of configs/default.conf.
const std::string& default_config_text();

/// Parses a single quantity such as "2.5 um" for a key of the given kind.
enum class Quantity { length, energy, rate, time, number };
double parse_quantity(const std::string& text, Quantity kind, const std::string& what);

} // namespace dslit
