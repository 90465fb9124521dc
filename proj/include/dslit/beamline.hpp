#pragma once

#include "dslit/core.hpp"
#include "dslit/field.hpp"
#include "dslit/geometry.hpp"
#include "dslit/propagation.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace dslit {

enum class Illumination {
  plane_wave,        // on-axis plane wave at the double slit
  collimation_stage, // collimation slit propagated to the double slit
};

struct BeamlineOptions {
  Illumination illumination = Illumination::plane_wave;
  /// Restrict the double slit to one of its slits (1 or 2); 0 keeps both.
  int only_slit = 0;
};

namespace detail {

inline void require_quarter_window(const ApertureSpec& aperture, double window, const std::string& what) {
  if (aperture.extent() > window / 4.0)
    throw ConfigurationError(what + " occupies more than a quarter of the grid window");
}

inline ApertureSpec select_slit(const ApertureSpec& slits, int only_slit) {
  if (only_slit == 0) return slits;
  if (only_slit < 0 || std::size_t(only_slit) > slits.intervals().size())
    throw DomainError("select_slit: no such slit");
  return ApertureSpec({slits.intervals()[std::size_t(only_slit - 1)]});
}

template <typename Scalar>
WaveField<Scalar> incident_field(const BeamlineLayout& layout, Scalar wavelength, const GridSpec& grid,
                                 Illumination illumination) {
  if (illumination == Illumination::plane_wave) return WaveField<Scalar>::plane_wave(grid, wavelength);

  // Collimation plane sampled so that one Fresnel transform lands exactly on
  // the double-slit grid.
  const double z = layout.z_collimation_to_doubleslit;
  GridSpec upstream = grid;
  upstream.window = double(wavelength) * z / grid.pitch();
  require_quarter_window(layout.collimation, upstream.window, "collimation slit");
  const auto lit = apply_aperture(WaveField<Scalar>::plane_wave(upstream, wavelength), layout.collimation);
  auto at_slits = fresnel_transform_step(lit, Scalar(z));
  at_slits.x0 = Scalar(grid.origin());
  at_slits.dx = Scalar(grid.pitch());
  return at_slits;
}

} // namespace detail

/// Complex detector-plane amplitude for one mask position (no mask when
/// `mask_center` is empty). A mask whose opening misses every slit projection
/// yields an all-zero field. Coordinates are magnified and the amplitude is
/// rescaled so that the integrated flux is unchanged by magnification; with
/// plane-wave illumination the incident amplitude is 1.
template <typename Scalar>
WaveField<Scalar> detector_field(const BeamlineLayout& layout, const BeamParameters<Scalar>& beam,
                                 std::optional<Scalar> mask_center, const GridSpec& grid,
                                 const BeamlineOptions& options = {}) {
  layout.validate();
  if (!is_power_of_two(grid.n)) throw ConfigurationError("grid.n must be a power of two");
  if (!(grid.window > 0.0)) throw ConfigurationError("grid.window must be positive");
  const Scalar lambda = beam.wavelength;
  if (grid.pitch() > double(max_pitch_for_angle(lambda, Scalar(grid.max_angle))))
    throw ConfigurationError("grid pitch exceeds the band limit lambda / (2 max_angle)");

  const ApertureSpec slits = detail::select_slit(layout.doubleslit, options.only_slit);
  detail::require_quarter_window(layout.doubleslit, grid.window, "double slit");

  const Scalar m = Scalar(layout.magnification);
  if (mask_center) {
    // Total geometric occlusion: no slit projects into the opening.
    const ApertureSpec mask = make_mask(layout.mask_opening_width, double(*mask_center));
    bool lit = false;
    for (const auto& iv : slits.intervals()) lit = lit || mask.covered_length(iv.lo, iv.hi) > 0.0;
    if (!lit) {
      const Scalar pitch = lambda * Scalar(layout.z_mask_to_detector) / (Scalar(grid.n) * Scalar(grid.pitch())) * m;
      return WaveField<Scalar>(-Scalar(grid.n / 2) * pitch, pitch, lambda,
                               WaveField<Scalar>::Amplitudes::Zero(grid.n));
    }
  }

  auto field = detail::incident_field(layout, lambda, grid, options.illumination);
  field = apply_aperture(field, slits);
  field = angular_spectrum_step(field, Scalar(layout.z_doubleslit_to_mask), Scalar(grid.max_angle));

  if (mask_center) {
    const ApertureSpec mask = make_mask(layout.mask_opening_width, double(*mask_center));
    detail::require_quarter_window(mask, grid.window, "mask opening");
    // The Fresnel chirp exp(i pi x^2 / (lambda z)) is resolved only for
    // |x| <= lambda z / (2 dx).
    const double alias_free = double(lambda) * layout.z_mask_to_detector / (2.0 * grid.pitch());
    const auto& iv = mask.intervals().front();
    if (std::max(std::abs(iv.lo), std::abs(iv.hi)) > alias_free)
      throw ConfigurationError("mask edge lies outside the alias-free region of the detector transform");
    field = apply_aperture(field, mask);
  }

  field = fresnel_transform_step(field, Scalar(layout.z_mask_to_detector));
  using std::sqrt;
  field.x0 *= m;
  field.dx *= m;
  field.amplitudes /= sqrt(m);
  return field;
}

/// Detector intensity for one mask position. Normalized to unit integral
/// unless `unit_integral` is false, in which case the incident plane wave has
/// unit amplitude (common-flux normalization). A fully blocked beam gives an
/// all-zero profile with `normalized == false`.
template <typename Scalar>
IntensityProfile<Scalar> simulate_beamline(const BeamlineLayout& layout, const BeamParameters<Scalar>& beam,
                                           std::optional<Scalar> mask_center, const GridSpec& grid,
                                           const BeamlineOptions& options = {}, bool unit_integral = true) {
  auto profile = intensity(detector_field(layout, beam, mask_center, grid, options));
  return unit_integral ? normalized(std::move(profile)) : profile;
}

/// Far-field two-slit fringe period at the detector, M lambda L / d.
inline double expected_fringe_period(const BeamlineLayout& layout, double wavelength) {
  const auto& iv = layout.doubleslit.intervals();
  if (iv.size() != 2) throw DomainError("expected_fringe_period: layout needs two slits");
  const double separation = (iv[1].lo + iv[1].hi) / 2.0 - (iv[0].lo + iv[0].hi) / 2.0;
  const double L = layout.z_doubleslit_to_mask + layout.z_mask_to_detector;
  return layout.magnification * wavelength * L / separation;
}

} // namespace dslit
