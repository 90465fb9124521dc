#pragma once

#include "dslit/analysis.hpp"
#include "dslit/blobdetect.hpp"
#include "dslit/config.hpp"
#include "dslit/sampler.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dslit {

inline constexpr const char* version = "0.1.0";

/// P1 + P2 for the same mask position under common-flux normalization; the
/// envelope against which fringe visibility is measured.
IntensityProfiled incoherent_envelope(const RunConfig& config, std::optional<double> mask_center);

/// Visibilities of a profile against its incoherent envelope. Empty when
/// the beam is fully blocked.
struct PatternVisibility {
  double central = 0.0;
  SideVisibility first_order;
};
std::optional<PatternVisibility> pattern_visibility(const RunConfig& config, const IntensityProfiled& profile,
                                                    std::optional<double> mask_center);

struct PatternSummary {
  IntensityProfiled profile; // normalized unless blocked
  SlitFractions fractions{};
  SlitState state = SlitState::blocked;
  std::optional<double> fringe_period;
  std::optional<PatternVisibility> visibility;
};

/// profile.csv, pattern.pgm (if enabled), metadata.txt, metrics.txt.
PatternSummary cmd_pattern(const RunConfig& config, std::optional<double> mask_center);

/// profile_NNN.csv per centre, sweep_manifest.csv, metadata.txt,
/// metrics.txt. Needs at least two strictly monotone centres.
SweepResult cmd_sweep(const RunConfig& config, std::span<const double> centers);

struct FrameDetections {
  Frame frame;
  BlobDetection detection;
};

struct BuildupSummary {
  IntensityProfiled source; // normalized P12 over the zoom window
  FrameGeometry geometry;
  std::vector<DetectionEvent> events;
  std::vector<BlobDescriptor> blobs; // frame pixel coordinates, frame order
  std::vector<std::size_t> blob_frames;
  std::size_t frames = 0;
  std::size_t snapshots = 0;
  double ks_events = 0.0;
  double ks_blobs = 0.0;
};

/// Samples events from the simulated pattern, renders and detects every
/// frame, accumulates the detections. Writes events.csv, blobs.csv,
/// buildup_NNNNN.pgm per checkpoint, buildup_final.pgm, frames/, metadata.txt
/// and metrics.txt.
BuildupSummary cmd_buildup(const RunConfig& config);

struct DetectSummary {
  std::vector<std::size_t> counts; // blobs per input
};

/// One <stem>_blobs.csv per frame file plus detect_summary.csv. An empty
/// file list is a ConfigurationError; unreadable files raise IoError naming
/// the file.
DetectSummary cmd_detect(const RunConfig& config, std::span<const std::filesystem::path> frames);

/// Full command-line front end. Returns the process exit code: 0 success,
/// 2 configuration or domain error, 3 I/O error.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace dslit
