#include "dslit/blobdetect.hpp"

#include "dslit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dslit {

namespace {

// Half-sample symmetric reflection: -1 -> 0, n -> n-1.
inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

void convolve_rows(Image& img, const std::vector<double>& kernel) {
  const auto radius = Eigen::Index(kernel.size() / 2);
  const Eigen::Index w = img.cols();
  std::vector<double> line(std::size_t(w + 2 * radius));
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index i = 0; i < w + 2 * radius; ++i) line[std::size_t(i)] = img(r, reflect(i - radius, w));
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * line[std::size_t(c) + k];
      img(r, c) = acc;
    }
  }
}

void convolve_cols(Image& img, const std::vector<double>& kernel) {
  const auto radius = Eigen::Index(kernel.size() / 2);
  const Eigen::Index h = img.rows();
  const Image src = img;
  for (Eigen::Index r = 0; r < h; ++r) {
    img.row(r).setZero();
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      const auto sr = reflect(r + Eigen::Index(k) - radius, h);
      img.row(r) += kernel[k] * src.row(sr);
    }
  }
}

Image laplacian(const Image& L) {
  const Eigen::Index h = L.rows();
  const Eigen::Index w = L.cols();
  Image out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c)
      out(r, c) = L(r, reflect(c - 1, w)) + L(r, reflect(c + 1, w)) + L(reflect(r - 1, h), c) +
                  L(reflect(r + 1, h), c) - 4.0 * L(r, c);
  return out;
}

void validate_scales(std::span<const double> scales) {
  if (scales.empty()) throw DomainError("scale list is empty");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw DomainError("scales must be positive");
    if (i > 0 && !(scales[i] > scales[i - 1])) throw DomainError("scales must be strictly increasing");
  }
}

// Vertex offset of the parabola through (-1, minus), (0, centre), (1, plus).
struct ParabolaFit {
  double offset = 0.0;
  double slope = 0.0;
};

ParabolaFit fit_parabola(double minus, double centre, double plus) {
  const double curvature = minus - 2.0 * centre + plus;
  const double slope = 0.5 * (plus - minus);
  if (curvature == 0.0) return {};
  return {std::clamp(-slope / curvature, -0.5, 0.5), slope};
}

double median_inplace(std::vector<double>& v) {
  const auto mid = v.begin() + std::ptrdiff_t(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

} // namespace

std::vector<double> make_scale_ladder(double t_min, double t_max, double ratio) {
  if (!(t_min > 0.0) || !(t_max >= t_min) || !(ratio > 1.0))
    throw DomainError("make_scale_ladder: need 0 < t_min <= t_max and ratio > 1");
  std::vector<double> ladder;
  for (int k = 0;; ++k) {
    const double t = t_min * std::pow(ratio, k);
    if (t > t_max * (1.0 + 1e-12)) break;
    ladder.push_back(t);
  }
  return ladder;
}

std::vector<double> discrete_gaussian_kernel(double t) {
  if (!(t > 0.0)) throw DomainError("discrete_gaussian_kernel: variance must be positive");
  const int radius = int(std::ceil(8.0 * std::sqrt(t))) + 4;
  std::vector<double> taps(std::size_t(2 * radius + 1));
  for (int n = -radius; n <= radius; ++n)
    taps[std::size_t(n + radius)] = std::exp(-t) * std::cyl_bessel_i(double(std::abs(n)), t);
  const double total = std::accumulate(taps.begin(), taps.end(), 0.0);
  for (auto& v : taps) v /= total;
  return taps;
}

ResponseStack scale_space_response(const Image& frame, std::span<const double> scales) {
  validate_scales(scales);
  ResponseStack stack;
  stack.scales.assign(scales.begin(), scales.end());
  stack.levels.reserve(scales.size());
  Image smoothed = frame;
  double current = 0.0;
  for (const double t : scales) {
    const auto kernel = discrete_gaussian_kernel(t - current);
    convolve_rows(smoothed, kernel);
    convolve_cols(smoothed, kernel);
    current = t;
    stack.levels.push_back(t * laplacian(smoothed));
  }
  return stack;
}

Image to_real_image(const Frame& frame) { return frame.counts.cast<double>(); }

ResponseStack scale_space_response(const Frame& frame, std::span<const double> scales) {
  return scale_space_response(to_real_image(frame), scales);
}

BlobDetection detect_blobs(const Image& frame, std::span<const double> scales, const BlobThreshold& policy) {
  if (scales.size() < 3) throw DomainError("detect_blobs: at least three scales are required");
  const auto stack = scale_space_response(frame, scales);
  const auto& R = stack.levels;
  const Eigen::Index h = frame.rows();
  const Eigen::Index w = frame.cols();

  BlobDetection result;
  {
    std::vector<double> v(R.front().data(), R.front().data() + R.front().size());
    const double med = median_inplace(v);
    for (auto& x : v) x = std::abs(x - med);
    result.noise_sigma = 1.4826 * median_inplace(v);
  }
  result.threshold =
      policy.absolute > 0.0 ? policy.absolute : std::max(policy.noise_factor * result.noise_sigma, policy.floor);

  std::vector<BlobDescriptor> candidates;
  for (std::size_t k = 1; k + 1 < R.size(); ++k) {
    for (Eigen::Index r = 1; r + 1 < h; ++r) {
      for (Eigen::Index c = 1; c + 1 < w; ++c) {
        const double v = R[k](r, c);
        if (!(-v > result.threshold)) continue;
        bool is_min = true;
        // Ties go to the neighbour later in (k, r, c) order.
        for (int dk = -1; dk <= 1 && is_min; ++dk)
          for (int dr = -1; dr <= 1 && is_min; ++dr)
            for (int dc = -1; dc <= 1 && is_min; ++dc) {
              if (dk == 0 && dr == 0 && dc == 0) continue;
              const double nb = R[std::size_t(int(k) + dk)](r + dr, c + dc);
              const bool later = dk > 0 || (dk == 0 && (dr > 0 || (dr == 0 && dc > 0)));
              is_min = later ? v < nb : v <= nb;
            }
        if (!is_min) continue;

        const auto fx = fit_parabola(R[k](r, c - 1), v, R[k](r, c + 1));
        const auto fy = fit_parabola(R[k](r - 1, c), v, R[k](r + 1, c));
        const auto ft = fit_parabola(R[k - 1](r, c), v, R[k + 1](r, c));
        const double log_step = ft.offset >= 0.0 ? std::log(stack.scales[k + 1] / stack.scales[k])
                                                 : std::log(stack.scales[k] / stack.scales[k - 1]);
        BlobDescriptor blob;
        blob.x = double(c) + fx.offset;
        blob.y = double(r) + fy.offset;
        blob.scale_t = stack.scales[k] * std::exp(ft.offset * log_step);
        blob.response = v + 0.5 * (fx.slope * fx.offset + fy.slope * fy.offset + ft.slope * ft.offset);
        const double margin = 2.0 * std::sqrt(blob.scale_t);
        if (blob.x < margin || blob.y < margin || blob.x > double(w - 1) - margin || blob.y > double(h - 1) - margin) {
          ++result.border_discarded;
          continue;
        }
        candidates.push_back(blob);
      }
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(), [](const BlobDescriptor& a, const BlobDescriptor& b) {
    return std::abs(a.response) > std::abs(b.response);
  });
  for (const auto& cand : candidates) {
    const bool overlaps = std::any_of(result.blobs.begin(), result.blobs.end(), [&cand](const BlobDescriptor& kept) {
      const double reach = std::sqrt(kept.scale_t) + std::sqrt(cand.scale_t);
      return std::hypot(kept.x - cand.x, kept.y - cand.y) < reach;
    });
    if (overlaps)
      ++result.overlap_discarded;
    else
      result.blobs.push_back(cand);
  }
  return result;
}

BlobDetection detect_blobs(const Frame& frame, std::span<const double> scales, const BlobThreshold& threshold) {
  return detect_blobs(to_real_image(frame), scales, threshold);
}

BuildUpAccumulator::BuildUpAccumulator(CanvasSpec spec) : spec_(std::move(spec)) {
  if (spec_.width <= 0 || spec_.height <= 0) throw DomainError("BuildUpAccumulator: canvas must be non-empty");
  if (!(spec_.scale > 0.0)) throw DomainError("BuildUpAccumulator: scale must be positive");
  for (std::size_t i = 1; i < spec_.checkpoints.size(); ++i)
    if (!(spec_.checkpoints[i] > spec_.checkpoints[i - 1]))
      throw DomainError("BuildUpAccumulator: checkpoints must be strictly increasing");
  image_.canvas = Eigen::ArrayXXd::Zero(spec_.height, spec_.width);
}

bool BuildUpAccumulator::add(const BlobDescriptor& blob) {
  const double cx = blob.x * spec_.scale + spec_.offset_x;
  const double cy = blob.y * spec_.scale + spec_.offset_y;
  if (!(cx >= -0.5 && cx < spec_.width - 0.5 && cy >= -0.5 && cy < spec_.height - 0.5)) {
    ++skipped_;
    return false;
  }
  const double var = blob.scale_t * spec_.scale * spec_.scale;
  const int radius = int(std::ceil(5.0 * std::sqrt(var)));
  const double norm = 1.0 / (2.0 * constants::pi * var);
  const int c_lo = std::max(0, int(std::floor(cx)) - radius);
  const int c_hi = std::min(spec_.width - 1, int(std::ceil(cx)) + radius);
  const int r_lo = std::max(0, int(std::floor(cy)) - radius);
  const int r_hi = std::min(spec_.height - 1, int(std::ceil(cy)) + radius);
  for (int r = r_lo; r <= r_hi; ++r)
    for (int c = c_lo; c <= c_hi; ++c) {
      const double d2 = (c - cx) * (c - cx) + (r - cy) * (r - cy);
      image_.canvas(r, c) += norm * std::exp(-d2 / (2.0 * var));
    }
  ++image_.n_events;
  if (next_checkpoint_ < spec_.checkpoints.size() && spec_.checkpoints[next_checkpoint_] == image_.n_events) {
    snapshots_.push_back(image_);
    ++next_checkpoint_;
  }
  return true;
}

void BuildUpAccumulator::merge(const BuildUpAccumulator& other) {
  if (other.image_.canvas.rows() != image_.canvas.rows() || other.image_.canvas.cols() != image_.canvas.cols())
    throw DomainError("BuildUpAccumulator::merge: canvas size mismatch");
  image_.canvas += other.image_.canvas;
  image_.n_events += other.image_.n_events;
  skipped_ += other.skipped_;
}

BuildUpResult accumulate_buildup(std::span<const BlobDescriptor> blobs, const CanvasSpec& spec) {
  BuildUpAccumulator acc(spec);
  for (const auto& b : blobs) acc.add(b);
  return {acc.image(), acc.snapshots(), acc.skipped()};
}

} // namespace dslit
