#pragma once

#include "dslit/beamline.hpp"
#include "dslit/field.hpp"
#include "dslit/geometry.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dslit {

/// Signed density on a profile grid (used for P12 - P1 - P2).
struct SignedProfile {
  double x0 = 0.0;
  double dx = 0.0;
  Eigen::ArrayXd values;
};

struct Window {
  double lo;
  double hi;
};

/// Mean spacing of the principal maxima, from the dominant non-DC peak of the
/// power spectrum (the transform of the autocorrelation). Throws DomainError
/// ("no periodicity") unless at least four local maxima exceed half of the
/// global maximum.
double fringe_spacing(const IntensityProfiled& profile);

/// Fringe contrast (Imax - Imin) / (Imax + Imin) of the two-beam component
/// with the given period, after dividing the profile by `envelope`. The
/// window is shrunk symmetrically to a whole number of periods and the
/// contrast is read from the first harmonic: 2 |c1| / c0, clamped to [0, 1].
double visibility(const IntensityProfiled& profile, Window window, const IntensityProfiled& envelope, double period);

/// Pointwise p12 - p1 - p2. All three must share one grid and carry a common
/// incident-flux normalization (none may be individually normalized).
SignedProfile interference_term(const IntensityProfiled& p12, const IntensityProfiled& p1,
                                const IntensityProfiled& p2);

/// floor(h d / (lambda z)): the highest double-slit order whose geometric ray
/// still reaches the mask plane inside an opening of half-width h.
int highest_unblocked_order(double mask_half_width, double z_gap, double wavelength, double separation);

/// Kolmogorov-Smirnov sup distance between the empirical CDF of `events` and
/// the piecewise-linear CDF of a normalized reference profile.
double ks_distance(std::span<const double> events, const IntensityProfiled& reference);

/// 1.63 / sqrt(n), the 99% one-sample critical value for large n.
inline double ks_critical_value_99(std::size_t n) { return 1.63 / std::sqrt(double(n)); }

struct SweepEntry {
  double mask_center = 0.0;
  IntensityProfiled profile;
  SlitFractions fractions{};
  SlitState state = SlitState::blocked;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
};

/// Evenly spaced centres from `from` to `to` inclusive.
std::vector<double> linspace(double from, double to, std::size_t steps);

/// One normalized detector profile per mask centre. Centres must be strictly
/// monotone. Work is spread over `threads` workers; each entry is computed
/// independently, so the result does not depend on the thread count.
SweepResult run_sweep(const BeamlineLayout& layout, const BeamParametersd& beam, std::span<const double> centers,
                      const GridSpec& grid, const BeamlineOptions& options = {}, unsigned threads = 1);

/// Collapses consecutive repeats: blocked, P1, P1, mixed -> blocked, P1, mixed.
std::vector<SlitState> state_sequence(const SweepResult& sweep);

/// Two fringe periods centred on the axis.
Window central_window(double period);

/// Whole number of fringe periods centred in the first single-slit side lobe
/// on the requested side (-1 or +1).
Window first_order_lobe_window(const BeamlineLayout& layout, double wavelength, int side);

struct SideVisibility {
  double negative = 0.0;
  double positive = 0.0;
};

SideVisibility first_order_visibility(const IntensityProfiled& profile, const IntensityProfiled& envelope,
                                      const BeamlineLayout& layout, double wavelength);

/// ||mirror(a) - b|| / ||b||.
double mirror_mismatch(const IntensityProfiled& a, const IntensityProfiled& b);

/// Plain-text report block: a `block=<name>` line followed by key=value lines.
struct MetricsBlock {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;

  void add(const std::string& key, double value);
  void add(const std::string& key, const std::string& value);
};

std::string format_metrics(std::span<const MetricsBlock> blocks);

} // namespace dslit
