#pragma once

#include "dslit/field.hpp"
#include "dslit/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace dslit {

/// Piecewise-linear CDF of a sampled density: sample k carries mass
/// values[k] * dx spread uniformly over [x_k - dx/2, x_k + dx/2].
class ProfileCdf {
public:
  /// Throws DomainError unless the profile is flagged normalized and
  /// integrates to 1 within 1e-9.
  explicit ProfileCdf(const IntensityProfiled& profile);

  double operator()(double x) const;
  /// Position with CDF value u in [0, 1].
  double inverse(double u) const;
  double lo() const { return x0_ - dx_ / 2; }
  double hi() const { return lo() + dx_ * double(cumulative_.size() - 1); }

private:
  double x0_;
  double dx_;
  std::vector<double> cumulative_; // size n + 1, cumulative_[k] = mass left of cell k
};

/// Inverse-CDF draws of detector positions. Draw i consumes output
/// `first_index + i` of a SplitMix64 stream seeded with `seed`, so disjoint
/// index ranges may be sampled independently and concatenated.
std::vector<double> sample_positions(const IntensityProfiled& profile, std::size_t n_events, std::uint64_t seed,
                                     std::size_t first_index = 0);

/// Exponential gaps with mean 1/rate, same indexing rule as sample_positions.
std::vector<double> sample_gaps(double rate, std::size_t n_events, std::uint64_t seed, std::size_t first_index = 0);

/// Cumulative sums of sample_gaps, starting from t = 0.
std::vector<double> sample_arrival_times(double rate, std::size_t n_events, std::uint64_t seed);

struct DetectionEvent {
  std::size_t index;
  double t; // s
  double x; // m, detector transverse
  double y; // m, detector vertical
};

struct EventSettings {
  double rate = 1.0;       // Hz, detected rate in the sampled pattern
  std::size_t count = 0;
  std::uint64_t seed = 0;
  double y_lo = 0.0;       // m, vertical band for the uniform y draw
  double y_hi = 0.0;
};

/// Position, arrival and vertical streams are derived from `seed` with
/// derive_seed(seed, Stream::...). Equal for any split into index ranges.
std::vector<DetectionEvent> generate_events(const IntensityProfiled& profile, const EventSettings& settings);

using CountImage = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Pixel layout of the camera in detector coordinates. Pixel (col, row) is
/// centred at (x0 + col * pitch, y0 + row * pitch).
struct FrameGeometry {
  int width = 256;
  int height = 48;
  double pitch = 1.0; // m per pixel
  double x0 = 0.0;
  double y0 = 0.0;

  double column(double x) const { return (x - x0) / pitch; }
  double row(double y) const { return (y - y0) / pitch; }
};

struct Frame {
  FrameGeometry geometry;
  CountImage counts; // height x width
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t index = 0;

  int width() const { return geometry.width; }
  int height() const { return geometry.height; }
};

struct RenderSettings {
  double psf_sigma = 3.0;        // px
  double spot_amplitude = 1000.0; // counts at spot centre
  double background = 0.05;       // mean counts per pixel per frame
};

/// Adds a sampled Gaussian spot for every event with t in [t0, t1), rounds to
/// counts, then adds Poisson background drawn in row-major order from a
/// SplitMix64 stream seeded with `seed`. Counts saturate at 65535.
Frame render_frame(std::span<const DetectionEvent> events, double t0, double t1, const FrameGeometry& geometry,
                   const RenderSettings& settings, std::uint64_t seed);

/// Knuth's multiplication method, applied to chunks of mean <= 16.
std::uint32_t poisson_draw(double mean, SplitMix64& rng);

} // namespace dslit
