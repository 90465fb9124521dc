#pragma once

#include "dslit/sampler.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace dslit {

using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Geometric ladder t_k = t_min * ratio^k, k = 0.. while t_k <= t_max.
std::vector<double> make_scale_ladder(double t_min = 2.0, double t_max = 30.0, double ratio = 1.3);

/// Scale-normalized Laplacian t * lap(L(.; t)) of the frame at every scale.
struct ResponseStack {
  std::vector<double> scales;
  std::vector<Image> levels;
};

/// Smoothing uses the discrete Gaussian kernel exp(-t) I_n(t), applied as a
/// cascade between consecutive scales (it is a semigroup), with half-sample
/// mirror padding. The Laplacian is the five-point stencil.
ResponseStack scale_space_response(const Image& frame, std::span<const double> scales);
ResponseStack scale_space_response(const Frame& frame, std::span<const double> scales);

/// Discrete Gaussian kernel taps e^{-t} I_n(t), n = -radius..radius, summing to 1.
std::vector<double> discrete_gaussian_kernel(double t);

struct BlobDescriptor {
  double x = 0.0;       // px, sub-pixel column
  double y = 0.0;       // px, sub-pixel row
  double scale_t = 0.0; // px^2
  double response = 0.0; // signed; bright spots are negative
};

struct BlobThreshold {
  /// Fixed |response| threshold when positive; otherwise noise_factor times the
  /// MAD noise estimate of the finest response level, but never below floor.
  double absolute = 0.0;
  double noise_factor = 5.0;
  double floor = 50.0;

  static BlobThreshold fixed(double value) { return {value, 0.0, 0.0}; }
};

struct BlobDetection {
  std::vector<BlobDescriptor> blobs;
  double threshold = 0.0;
  double noise_sigma = 0.0;
  std::size_t border_discarded = 0;
  std::size_t overlap_discarded = 0;
};

/// Bright blobs: strict local minima of the response stack over the 3x3x3
/// (x, y, t) neighbourhood with |response| above threshold, refined by
/// per-axis parabolic fits. Extrema closer than 2 sqrt(t) to a border are
/// dropped, and of two detections closer than sqrt(t1) + sqrt(t2) only the
/// stronger one is kept.
BlobDetection detect_blobs(const Image& frame, std::span<const double> scales, const BlobThreshold& threshold = {});
BlobDetection detect_blobs(const Frame& frame, std::span<const double> scales, const BlobThreshold& threshold = {});

Image to_real_image(const Frame& frame);

struct CanvasSpec {
  int width = 0;
  int height = 0;
  double scale = 1.0;   // canvas px per blob px
  double offset_x = 0.0; // canvas px added after scaling
  double offset_y = 0.0;
  std::vector<std::size_t> checkpoints; // strictly increasing event counts
};

struct BuildUpImage {
  Eigen::ArrayXXd canvas; // height x width
  std::size_t n_events = 0;

  int width() const { return int(canvas.cols()); }
  int height() const { return int(canvas.rows()); }
};

/// Running accumulation of detections. Each blob is stamped as a
/// unit-integral Gaussian whose variance is its detected scale.
class BuildUpAccumulator {
public:
  explicit BuildUpAccumulator(CanvasSpec spec);

  /// Returns false (and counts a skip) when the blob centre is off the canvas.
  bool add(const BlobDescriptor& blob);
  void merge(const BuildUpAccumulator& other);

  const BuildUpImage& image() const { return image_; }
  const std::vector<BuildUpImage>& snapshots() const { return snapshots_; }
  std::size_t skipped() const { return skipped_; }

private:
  CanvasSpec spec_;
  BuildUpImage image_;
  std::vector<BuildUpImage> snapshots_;
  std::size_t next_checkpoint_ = 0;
  std::size_t skipped_ = 0;
};

struct BuildUpResult {
  BuildUpImage image;
  std::vector<BuildUpImage> snapshots;
  std::size_t skipped = 0;
};

BuildUpResult accumulate_buildup(std::span<const BlobDescriptor> blobs, const CanvasSpec& spec);

} // namespace dslit
