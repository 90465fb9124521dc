#pragma once

#include "dslit/core.hpp"
#include "dslit/field.hpp"
#include "dslit/geometry.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace dslit {

/// Largest grid pitch that still resolves diffraction angles up to `max_angle`.
template <typename Scalar>
Scalar max_pitch_for_angle(Scalar wavelength, Scalar max_angle) {
  return wavelength / (Scalar(2) * max_angle);
}

namespace detail {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
std::complex<Scalar> unit_phase(Scalar phase) {
  using std::cos;
  using std::sin;
  return {cos(phase), sin(phase)};
}

// 1/sqrt(i * lambda * z), the 1D Fresnel kernel prefactor.
template <typename Scalar>
std::complex<Scalar> fresnel_prefactor(Scalar wavelength, Scalar z) {
  using std::sqrt;
  return unit_phase(Scalar(-constants::pi / 4)) / sqrt(wavelength * z);
}

} // namespace detail

/// Multiplies the field by the aperture's indicator function. Each sample is
/// treated as a cell of width dx and weighted by the open fraction of that
/// cell, so edges that fall inside a cell are anti-aliased.
template <typename Scalar>
WaveField<Scalar> apply_aperture(const WaveField<Scalar>& field, const ApertureSpec& aperture) {
  const double lo = double(field.window_lo());
  const double hi = double(field.window_hi());
  for (const auto& iv : aperture.intervals()) {
    if (iv.lo < lo || iv.hi > hi)
      throw DomainError("apply_aperture: aperture extends beyond the grid window");
  }
  WaveField<Scalar> out = field;
  const double dx = double(field.dx);
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    const double c = double(field.x(i));
    double weight = aperture.covered_length(c - dx / 2, c + dx / 2) / dx;
    // Snap rounding noise so that edges on cell boundaries give exact 0 / 1.
    if (weight > 1.0 - 1e-9) weight = 1.0;
    if (weight < 1e-9) weight = 0.0;
    out.amplitudes[i] *= Scalar(weight);
  }
  return out;
}

/// Free-space propagation over `z` by the Fresnel transfer function
/// exp(-i pi lambda z f^2) applied to the discrete spectrum. Frequencies whose
/// transfer phase is undersampled (|f| > n dx / (2 lambda z)) or evanescent
/// are zeroed. Same grid in and out.
template <typename Scalar>
WaveField<Scalar> angular_spectrum_step(const WaveField<Scalar>& field, Scalar z,
                                        Scalar max_angle = Scalar(1.5e-2)) {
  using std::abs;
  if (!(z >= Scalar(0))) throw DomainError("angular_spectrum_step: distance must be non-negative");
  if (field.dx > max_pitch_for_angle(field.wavelength, max_angle))
    throw ConfigurationError("angular_spectrum_step: grid pitch " + std::to_string(double(field.dx)) +
                             " m does not resolve the maximum diffraction angle");
  if (z == Scalar(0)) return field;

  const Eigen::Index n = field.size();
  const Scalar lambda = field.wavelength;
  const Scalar df = Scalar(1) / (Scalar(n) * field.dx);
  const Scalar f_alias = Scalar(n) * field.dx / (Scalar(2) * lambda * z);

  Eigen::FFT<Scalar> fft;
  detail::ComplexVector<Scalar> spectrum;
  fft.fwd(spectrum, field.amplitudes.matrix().eval());
  for (Eigen::Index m = 0; m < n; ++m) {
    const Scalar f = Scalar(m < n / 2 ? m : m - n) * df;
    if (abs(f) > f_alias || abs(lambda * f) >= Scalar(1)) {
      spectrum[m] = 0;
    } else {
      spectrum[m] *= detail::unit_phase(Scalar(-constants::pi) * lambda * z * f * f);
    }
  }
  WaveField<Scalar> out = field;
  detail::ComplexVector<Scalar> back;
  fft.inv(back, spectrum);
  out.amplitudes = back.array();
  return out;
}

/// Single-transform Fresnel propagation. The output grid has pitch
/// lambda z / (n dx) and is centred on the axis (x = 0 at sample n/2).
template <typename Scalar>
WaveField<Scalar> fresnel_transform_step(const WaveField<Scalar>& field, Scalar z) {
  if (!(z > Scalar(0))) throw DomainError("fresnel_transform_step: distance must be positive");
  const Eigen::Index n = field.size();
  const Scalar lambda = field.wavelength;
  const Scalar lz = lambda * z;
  const Scalar out_dx = lz / (Scalar(n) * field.dx);
  const Scalar out_x0 = -Scalar(n / 2) * out_dx;
  const Scalar pi = Scalar(constants::pi);

  detail::ComplexVector<Scalar> chirped(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar x = field.x(j);
    const Scalar sign = (j % 2 == 0) ? Scalar(1) : Scalar(-1);
    chirped[j] = field.amplitudes[j] * detail::unit_phase(pi * x * x / lz) * sign;
  }
  Eigen::FFT<Scalar> fft;
  detail::ComplexVector<Scalar> transformed;
  fft.fwd(transformed, chirped);

  const auto scale = detail::fresnel_prefactor(lambda, z) * field.dx;
  WaveField<Scalar> out;
  out.x0 = out_x0;
  out.dx = out_dx;
  out.wavelength = lambda;
  out.amplitudes.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar xo = out_x0 + Scalar(k) * out_dx;
    out.amplitudes[k] = transformed[k] * scale * detail::unit_phase(pi * (xo * xo - Scalar(2) * field.x0 * xo) / lz);
  }
  return out;
}

/// O(N * targets) rectangle-rule quadrature of the Fresnel diffraction
/// integral. Used as the reference for both fast propagators.
template <typename Scalar>
typename WaveField<Scalar>::Amplitudes direct_integral_reference(const WaveField<Scalar>& field, Scalar z,
                                                                 std::span<const Scalar> targets) {
  if (!(z > Scalar(0))) throw DomainError("direct_integral_reference: distance must be positive");
  const Scalar lz = field.wavelength * z;
  const Scalar pi = Scalar(constants::pi);
  const auto scale = detail::fresnel_prefactor(field.wavelength, z) * field.dx;
  typename WaveField<Scalar>::Amplitudes out(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::complex<Scalar> acc(0);
    for (Eigen::Index j = 0; j < field.size(); ++j) {
      const Scalar d = targets[t] - field.x(j);
      acc += field.amplitudes[j] * detail::unit_phase(pi * d * d / lz);
    }
    out[Eigen::Index(t)] = acc * scale;
  }
  return out;
}

/// Relative L2 distance ||a - b|| / ||b||.
template <typename DerivedA, typename DerivedB>
auto relative_l2(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b) {
  using std::sqrt;
  return sqrt((a - b).abs2().sum() / b.abs2().sum());
}

} // namespace dslit
