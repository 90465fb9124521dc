#include "dslit/analysis.hpp"

#include "dslit/format.hpp"
#include "dslit/propagation.hpp"
#include "dslit/sampler.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <thread>

namespace dslit {

namespace {

Eigen::Index next_power_of_two(Eigen::Index n) {
  Eigen::Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

int count_principal_maxima(const Eigen::ArrayXd& v) {
  const double half = 0.5 * v.maxCoeff();
  int count = 0;
  for (Eigen::Index k = 1; k + 1 < v.size(); ++k)
    if (v[k] > v[k - 1] && v[k] >= v[k + 1] && v[k] >= half) ++count;
  return count;
}

} // namespace

double fringe_spacing(const IntensityProfiled& profile) {
  if (profile.size() < 8 || profile.is_zero()) throw DomainError("fringe_spacing: no periodicity (empty profile)");
  if (count_principal_maxima(profile.values) < 4)
    throw DomainError("fringe_spacing: no periodicity (fewer than four principal maxima)");

  // Power spectrum (the transform of the autocorrelation), zero padded for
  // finer bins.
  const Eigen::Index padded = 4 * next_power_of_two(profile.size());
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(padded);
  signal.head(profile.size()) = profile.values.matrix();
  Eigen::FFT<double> fft;
  Eigen::VectorXcd spectrum;
  fft.fwd(spectrum, signal);
  const Eigen::Index half = padded / 2;
  Eigen::ArrayXd power = spectrum.head(half + 1).array().abs2();

  // Skip the envelope lobe around DC: start after its first minimum.
  Eigen::Index start = 0;
  while (start + 1 <= half && power[start + 1] <= power[start]) ++start;
  if (start >= half) throw DomainError("fringe_spacing: no periodicity (monotone spectrum)");
  Eigen::Index peak = start;
  for (Eigen::Index k = start; k <= half; ++k)
    if (power[k] > power[peak]) peak = k;
  double offset = 0.0;
  if (peak > 0 && peak < half) {
    const double a = power[peak - 1];
    const double b = power[peak];
    const double c = power[peak + 1];
    const double curvature = a - 2.0 * b + c;
    if (curvature < 0.0) offset = std::clamp(0.5 * (a - c) / curvature, -0.5, 0.5);
  }
  const double frequency = (double(peak) + offset) / (double(padded) * profile.dx);
  return 1.0 / frequency;
}

double visibility(const IntensityProfiled& profile, Window window, const IntensityProfiled& envelope, double period) {
  if (!profile.same_grid(envelope)) throw DomainError("visibility: profile and envelope grids differ");
  if (!(period > 0.0)) throw DomainError("visibility: period must be positive");
  if (!(window.hi > window.lo)) throw DomainError("visibility: degenerate window");
  const double periods = std::floor((window.hi - window.lo) / period);
  if (periods < 1.0) throw DomainError("visibility: window shorter than one fringe period");
  const double mid = 0.5 * (window.lo + window.hi);
  const double lo = mid - 0.5 * periods * period;
  const double hi = mid + 0.5 * periods * period;

  const auto first = std::max<Eigen::Index>(0, Eigen::Index(std::ceil((lo - profile.x0) / profile.dx)));
  const auto last =
      std::min<Eigen::Index>(profile.size() - 1, Eigen::Index(std::floor((hi - profile.x0) / profile.dx)));
  if (last - first < 4) throw DomainError("visibility: window holds too few samples");
  const double envelope_floor = 1e-12 * envelope.values.maxCoeff();

  double c0 = 0.0;
  std::complex<double> c1 = 0.0;
  for (Eigen::Index k = first; k <= last; ++k) {
    if (!(envelope.values[k] > envelope_floor)) throw DomainError("visibility: envelope vanishes inside the window");
    const double r = profile.values[k] / envelope.values[k];
    const double phase = -2.0 * constants::pi * (profile.x(k) - mid) / period;
    c0 += r;
    c1 += r * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  if (!(c0 > 0.0)) throw DomainError("visibility: no intensity inside the window");
  return std::clamp(2.0 * std::abs(c1) / c0, 0.0, 1.0);
}

SignedProfile interference_term(const IntensityProfiled& p12, const IntensityProfiled& p1,
                                const IntensityProfiled& p2) {
  if (!p12.same_grid(p1) || !p12.same_grid(p2)) throw DomainError("interference_term: grid mismatch");
  if (p12.normalized || p1.normalized || p2.normalized)
    throw DomainError("interference_term: profiles must share a common flux normalization");
  return {p12.x0, p12.dx, p12.values - p1.values - p2.values};
}

int highest_unblocked_order(double mask_half_width, double z_gap, double wavelength, double separation) {
  if (!(mask_half_width > 0.0) || !(z_gap > 0.0) || !(wavelength > 0.0) || !(separation > 0.0))
    throw DomainError("highest_unblocked_order: inputs must be positive");
  return int(std::floor(mask_half_width * separation / (wavelength * z_gap)));
}

double ks_distance(std::span<const double> events, const IntensityProfiled& reference) {
  if (events.empty()) throw DomainError("ks_distance: no events");
  const ProfileCdf cdf(reference);
  std::vector<double> sorted(events.begin(), events.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  return d;
}

std::vector<double> linspace(double from, double to, std::size_t steps) {
  if (steps < 2) throw DomainError("linspace: need at least two points");
  std::vector<double> out(steps);
  for (std::size_t i = 0; i < steps; ++i) out[i] = from + (to - from) * double(i) / double(steps - 1);
  return out;
}

SweepResult run_sweep(const BeamlineLayout& layout, const BeamParametersd& beam, std::span<const double> centers,
                      const GridSpec& grid, const BeamlineOptions& options, unsigned threads) {
  if (centers.size() < 2) throw DomainError("run_sweep: need at least two mask centres");
  const bool increasing = centers[1] > centers[0];
  for (std::size_t i = 1; i < centers.size(); ++i)
    if (increasing ? !(centers[i] > centers[i - 1]) : !(centers[i] < centers[i - 1]))
      throw DomainError("run_sweep: mask centres must be strictly monotone");

  SweepResult result;
  result.entries.resize(centers.size());
  const auto work = [&](std::size_t i) {
    auto& e = result.entries[i];
    e.mask_center = centers[i];
    e.fractions = open_fraction(layout.doubleslit, make_mask(layout.mask_opening_width, centers[i]),
                                layout.z_doubleslit_to_mask);
    e.state = classify(e.fractions);
    e.profile = simulate_beamline(layout, beam, std::optional<double>(centers[i]), grid, options);
  };

  threads = std::max(1u, threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < centers.size(); ++i) work(i);
    return result;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < centers.size(); i += threads) work(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return result;
}

std::vector<SlitState> state_sequence(const SweepResult& sweep) {
  std::vector<SlitState> out;
  for (const auto& e : sweep.entries)
    if (out.empty() || out.back() != e.state) out.push_back(e.state);
  return out;
}

Window central_window(double period) { return {-period, period}; }

Window first_order_lobe_window(const BeamlineLayout& layout, double wavelength, int side) {
  const auto& slit = layout.doubleslit.intervals().front();
  const double L = layout.z_doubleslit_to_mask + layout.z_mask_to_detector;
  const double lobe = layout.magnification * wavelength * L / slit.length();
  const double period = expected_fringe_period(layout, wavelength);
  const double periods = std::max(1.0, std::floor(lobe / period) - 1.0);
  const double centre = (side < 0 ? -1.5 : 1.5) * lobe;
  return {centre - 0.5 * periods * period, centre + 0.5 * periods * period};
}

SideVisibility first_order_visibility(const IntensityProfiled& profile, const IntensityProfiled& envelope,
                                      const BeamlineLayout& layout, double wavelength) {
  const double period = expected_fringe_period(layout, wavelength);
  return {visibility(profile, first_order_lobe_window(layout, wavelength, -1), envelope, period),
          visibility(profile, first_order_lobe_window(layout, wavelength, +1), envelope, period)};
}

double mirror_mismatch(const IntensityProfiled& a, const IntensityProfiled& b) {
  if (!a.same_grid(b)) throw DomainError("mirror_mismatch: grid mismatch");
  return relative_l2(mirrored(a).values, b.values);
}

void MetricsBlock::add(const std::string& key, double value) { entries.emplace_back(key, format_double(value)); }

void MetricsBlock::add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }

std::string format_metrics(std::span<const MetricsBlock> blocks) {
  std::string out;
  for (const auto& block : blocks) {
    if (!out.empty()) out += "\n";
    out += "block=" + block.name + "\n";
    for (const auto& [key, value] : block.entries) out += key + "=" + value + "\n";
  }
  return out;
}

} // namespace dslit
