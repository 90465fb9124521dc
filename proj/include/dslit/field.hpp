#pragma once

#include "dslit/core.hpp"

#include <Eigen/Core>

#include <complex>

namespace dslit {

inline bool is_power_of_two(Eigen::Index n) { return n >= 2 && (n & (n - 1)) == 0; }

/// Uniform transverse sampling: `n` cells of pitch window/n, centred so that
/// x = 0 is sample n/2.
struct GridSpec {
  double window = 64e-6;   // m
  Eigen::Index n = 1 << 16;
  double max_angle = 1.5e-2; // rad, highest diffraction angle the grid must resolve

  double pitch() const { return window / static_cast<double>(n); }
  double origin() const { return -static_cast<double>(n / 2) * pitch(); }
};

/// Complex scalar wave on a uniform 1D grid: sample i sits at x0 + i*dx.
template <typename Scalar>
struct WaveField {
  using Complex = std::complex<Scalar>;
  using Amplitudes = Eigen::Array<Complex, Eigen::Dynamic, 1>;

  Scalar x0{};
  Scalar dx{};
  Scalar wavelength{};
  Amplitudes amplitudes;

  WaveField() = default;
  WaveField(Scalar x0_, Scalar dx_, Scalar wavelength_, Amplitudes a)
      : x0(x0_), dx(dx_), wavelength(wavelength_), amplitudes(std::move(a)) {
    validate();
  }

  static WaveField plane_wave(const GridSpec& grid, Scalar wavelength) {
    return WaveField(Scalar(grid.origin()), Scalar(grid.pitch()), wavelength,
                     Amplitudes::Constant(grid.n, Complex(1)));
  }

  Eigen::Index size() const { return amplitudes.size(); }
  Scalar x(Eigen::Index i) const { return x0 + Scalar(i) * dx; }
  /// Left edge of the sampled window (cell boundary of sample 0).
  Scalar window_lo() const { return x0 - dx / Scalar(2); }
  Scalar window_hi() const { return x0 + (Scalar(size()) - Scalar(0.5)) * dx; }
  Scalar squared_norm() const { return amplitudes.abs2().sum() * dx; }
  bool is_zero() const { return (amplitudes.abs2() == Scalar(0)).all(); }

  void validate() const {
    if (!(dx > Scalar(0))) throw DomainError("WaveField: pitch must be positive");
    if (!(wavelength > Scalar(0))) throw DomainError("WaveField: wavelength must be positive");
    if (!is_power_of_two(size())) throw DomainError("WaveField: sample count must be a power of two");
  }
};

/// Nonnegative sampled density. When `normalized`, sum(values) * dx == 1.
template <typename Scalar>
struct IntensityProfile {
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Scalar x0{};
  Scalar dx{};
  Values values;
  bool normalized = false;

  Eigen::Index size() const { return values.size(); }
  Scalar x(Eigen::Index i) const { return x0 + Scalar(i) * dx; }
  Scalar integral() const { return values.sum() * dx; }
  bool is_zero() const { return (values == Scalar(0)).all(); }
  bool same_grid(const IntensityProfile& o, Scalar rel_tol = Scalar(1e-12)) const {
    using std::abs;
    return size() == o.size() && abs(dx - o.dx) <= rel_tol * abs(dx) &&
           abs(x0 - o.x0) <= rel_tol * abs(dx) * Scalar(size());
  }
};

using WaveFieldd = WaveField<double>;
using IntensityProfiled = IntensityProfile<double>;

/// |psi|^2 on the field's grid, not normalized.
template <typename Scalar>
IntensityProfile<Scalar> intensity(const WaveField<Scalar>& field) {
  return {field.x0, field.dx, field.amplitudes.abs2(), false};
}

/// Scales to unit integral. An all-zero profile is returned unchanged with
/// `normalized == false`.
template <typename Scalar>
IntensityProfile<Scalar> normalized(IntensityProfile<Scalar> p) {
  const Scalar total = p.integral();
  if (total > Scalar(0)) {
    p.values /= total;
    p.normalized = true;
  } else {
    p.normalized = false;
  }
  return p;
}

/// Reflection x -> -x on a grid centred as in GridSpec (sample k maps to n-k).
/// Sample 0 has no partner inside the window and is kept in place.
template <typename Scalar>
IntensityProfile<Scalar> mirrored(const IntensityProfile<Scalar>& p) {
  IntensityProfile<Scalar> out = p;
  const Eigen::Index n = p.size();
  for (Eigen::Index k = 1; k < n; ++k) out.values[k] = p.values[n - k];
  return out;
}

/// Samples whose centres lie in [lo, hi], renormalized if the input was.
template <typename Scalar>
IntensityProfile<Scalar> cropped(const IntensityProfile<Scalar>& p, Scalar lo, Scalar hi) {
  using std::ceil;
  using std::floor;
  const auto first = std::max<Eigen::Index>(0, Eigen::Index(ceil((lo - p.x0) / p.dx)));
  const auto last = std::min<Eigen::Index>(p.size() - 1, Eigen::Index(floor((hi - p.x0) / p.dx)));
  if (last < first) throw DomainError("cropped: empty range");
  IntensityProfile<Scalar> out{p.x(first), p.dx, p.values.segment(first, last - first + 1), false};
  return p.normalized ? normalized(std::move(out)) : out;
}

} // namespace dslit
