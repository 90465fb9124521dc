#include "dslit/sampler.hpp"

#include "dslit/core.hpp"
#include "dslit/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dslit {

ProfileCdf::ProfileCdf(const IntensityProfiled& profile) : x0_(profile.x0), dx_(profile.dx) {
  if (!profile.normalized) throw DomainError("ProfileCdf: profile is not normalized");
  if (std::abs(profile.integral() - 1.0) > 1e-9)
    throw DomainError("ProfileCdf: profile integral differs from 1");
  if ((profile.values < 0.0).any()) throw DomainError("ProfileCdf: negative density");
  cumulative_.resize(std::size_t(profile.size()) + 1);
  cumulative_[0] = 0.0;
  for (Eigen::Index k = 0; k < profile.size(); ++k)
    cumulative_[std::size_t(k) + 1] = cumulative_[std::size_t(k)] + profile.values[k] * dx_;
  // Absorb the residual rounding so that the CDF ends at exactly 1.
  const double total = cumulative_.back();
  for (auto& c : cumulative_) c /= total;
}

double ProfileCdf::operator()(double x) const {
  const double pos = (x - lo()) / dx_;
  if (pos <= 0.0) return 0.0;
  const auto cells = cumulative_.size() - 1;
  if (pos >= double(cells)) return 1.0;
  const auto k = std::size_t(pos);
  const double frac = pos - double(k);
  return cumulative_[k] + frac * (cumulative_[k + 1] - cumulative_[k]);
}

double ProfileCdf::inverse(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  // First cell whose right cumulative edge exceeds u; empty cells are skipped.
  auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), u);
  if (it == cumulative_.end()) it = std::prev(cumulative_.end());
  while (it != cumulative_.begin() + 1 && *it == *std::prev(it)) --it;
  const auto k = std::size_t(std::distance(cumulative_.begin(), it)) - 1;
  const double mass = cumulative_[k + 1] - cumulative_[k];
  const double frac = mass > 0.0 ? std::clamp((u - cumulative_[k]) / mass, 0.0, 1.0) : 0.5;
  return lo() + (double(k) + frac) * dx_;
}

std::vector<double> sample_positions(const IntensityProfiled& profile, std::size_t n_events, std::uint64_t seed,
                                     std::size_t first_index) {
  const ProfileCdf cdf(profile);
  SplitMix64 rng(seed);
  rng.discard(first_index);
  std::vector<double> out(n_events);
  for (auto& x : out) x = cdf.inverse(rng.uniform());
  return out;
}

std::vector<double> sample_gaps(double rate, std::size_t n_events, std::uint64_t seed, std::size_t first_index) {
  if (!(rate > 0.0)) throw DomainError("sample_gaps: rate must be positive");
  SplitMix64 rng(seed);
  rng.discard(first_index);
  std::vector<double> out(n_events);
  // 1 - u lies in (0, 1], so the logarithm is finite.
  for (auto& g : out) g = -std::log1p(-rng.uniform()) / rate;
  return out;
}

std::vector<double> sample_arrival_times(double rate, std::size_t n_events, std::uint64_t seed) {
  auto times = sample_gaps(rate, n_events, seed);
  double t = 0.0;
  for (auto& g : times) {
    t += g;
    g = t;
  }
  return times;
}

std::vector<DetectionEvent> generate_events(const IntensityProfiled& profile, const EventSettings& settings) {
  if (!(settings.y_hi >= settings.y_lo)) throw DomainError("generate_events: empty vertical band");
  const auto xs = sample_positions(profile, settings.count, derive_seed(settings.seed, Stream::position));
  const auto ts = sample_arrival_times(settings.rate, settings.count, derive_seed(settings.seed, Stream::arrival));
  SplitMix64 vertical(derive_seed(settings.seed, Stream::vertical));
  std::vector<DetectionEvent> events(settings.count);
  for (std::size_t i = 0; i < settings.count; ++i) {
    const double y = settings.y_lo + (settings.y_hi - settings.y_lo) * vertical.uniform();
    events[i] = {i, ts[i], xs[i], y};
  }
  return events;
}

std::uint32_t poisson_draw(double mean, SplitMix64& rng) {
  if (!(mean >= 0.0)) throw DomainError("poisson_draw: negative mean");
  std::uint32_t total = 0;
  while (mean > 0.0) {
    const double chunk = std::min(mean, 16.0);
    mean -= chunk;
    const double limit = std::exp(-chunk);
    double p = rng.uniform();
    while (p > limit) {
      ++total;
      p *= rng.uniform();
    }
  }
  return total;
}

Frame render_frame(std::span<const DetectionEvent> events, double t0, double t1, const FrameGeometry& geometry,
                   const RenderSettings& settings, std::uint64_t seed) {
  if (!(t0 < t1)) throw DomainError("render_frame: exposure window must satisfy t0 < t1");
  if (!(settings.psf_sigma > 0.0)) throw DomainError("render_frame: psf_sigma must be positive");
  if (geometry.width <= 0 || geometry.height <= 0) throw DomainError("render_frame: empty frame");

  Eigen::ArrayXXd signal = Eigen::ArrayXXd::Zero(geometry.height, geometry.width);
  const double sigma = settings.psf_sigma;
  const int radius = int(std::ceil(5.0 * sigma));
  for (const auto& e : events) {
    if (!(e.t >= t0 && e.t < t1)) continue;
    const double cx = geometry.column(e.x);
    const double cy = geometry.row(e.y);
    const int c_lo = std::max(0, int(std::floor(cx)) - radius);
    const int c_hi = std::min(geometry.width - 1, int(std::ceil(cx)) + radius);
    const int r_lo = std::max(0, int(std::floor(cy)) - radius);
    const int r_hi = std::min(geometry.height - 1, int(std::ceil(cy)) + radius);
    for (int r = r_lo; r <= r_hi; ++r)
      for (int c = c_lo; c <= c_hi; ++c) {
        const double d2 = (c - cx) * (c - cx) + (r - cy) * (r - cy);
        signal(r, c) += settings.spot_amplitude * std::exp(-d2 / (2.0 * sigma * sigma));
      }
  }

  Frame frame;
  frame.geometry = geometry;
  frame.t_start = t0;
  frame.t_end = t1;
  frame.counts.resize(geometry.height, geometry.width);
  SplitMix64 rng(seed);
  for (int r = 0; r < geometry.height; ++r)
    for (int c = 0; c < geometry.width; ++c) {
      double value = std::round(signal(r, c));
      if (settings.background > 0.0) value += double(poisson_draw(settings.background, rng));
      frame.counts(r, c) = std::uint16_t(std::min(value, 65535.0));
    }
  return frame;
}

} // namespace dslit
