#include "doctest.h"
#include "approx.hpp"

#include "dslit/core.hpp"
#include "dslit/propagation.hpp"
#include "dslit/rng.hpp"

#include <cmath>
#include <vector>

using namespace dslit;
using Amplitudes = WaveFieldd::Amplitudes;

namespace {

constexpr double kPi = constants::pi;
const double kLambda = de_broglie_wavelength(600.0);

// Grid whose cell boundaries fall on integer multiples of dx, so apertures
// with edges on that lattice are sampled without partial cells.
WaveFieldd aligned_plane_wave(Eigen::Index n, double dx) {
  return WaveFieldd(-double(n / 2) * dx + dx / 2, dx, kLambda, Amplitudes::Constant(n, 1.0));
}

WaveFieldd gaussian(Eigen::Index n, double dx, double waist, double centre = 0.0, double tilt = 0.0) {
  Amplitudes a(n);
  const double x0 = -double(n / 2) * dx;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = x0 + double(i) * dx - centre;
    a[i] = std::exp(-x * x / (waist * waist)) * std::polar(1.0, 2 * kPi * tilt * x);
  }
  return WaveFieldd(x0, dx, kLambda, a);
}

double rms_width(const WaveFieldd& f) {
  const Eigen::ArrayXd p = f.amplitudes.abs2();
  double m0 = 0, m1 = 0, m2 = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    m0 += p[i];
    m1 += p[i] * f.x(i);
    m2 += p[i] * f.x(i) * f.x(i);
  }
  const double mean = m1 / m0;
  return std::sqrt(m2 / m0 - mean * mean);
}

std::vector<double> grid_points(const WaveFieldd& f) {
  std::vector<double> xs(std::size_t(f.size()));
  for (Eigen::Index i = 0; i < f.size(); ++i) xs[std::size_t(i)] = f.x(i);
  return xs;
}

double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

} // namespace

TEST_CASE("aperture covering the window is the identity") {
  const auto field = gaussian(256, 1e-9, 30e-9, 0.0, 1e6);
  const auto out = apply_aperture(field, ApertureSpec({{field.window_lo(), field.window_hi()}}));
  CHECK((out.amplitudes - field.amplitudes).abs().maxCoeff() == 0.0);
}

TEST_CASE("blocked aperture zeroes the field") {
  const auto out = apply_aperture(gaussian(256, 1e-9, 30e-9), ApertureSpec::blocked());
  CHECK(out.is_zero());
  CHECK(out.squared_norm() == 0.0);
}

TEST_CASE("aperture beyond the grid is rejected") {
  const auto field = gaussian(256, 1e-9, 30e-9);
  CHECK_THROWS_AS(apply_aperture(field, make_mask(1e-6, 0.0)), DomainError);
}

TEST_CASE("double slit transmits its open length") {
  const Eigen::Index n = 4096;
  const double dx = 1e-9;
  const auto in = aligned_plane_wave(n, dx);
  const auto out = apply_aperture(in, make_double_slit(50e-9, 280e-9));
  const double window = double(n) * dx;
  CHECK(out.squared_norm() == approx(100e-9 / window * in.squared_norm()).epsilon(1e-12));
}

TEST_CASE("edge cells are weighted by their open fraction") {
  const auto in = aligned_plane_wave(64, 1e-9);
  // Edge at 0.25 nm into the cell centred at 0.5 nm.
  const auto out = apply_aperture(in, ApertureSpec({{0.75e-9, 10e-9}}));
  const auto k = Eigen::Index(32); // centre 0.5 nm, cell [0, 1] nm
  CHECK(out.amplitudes[k].real() == approx(0.25).epsilon(1e-9));
  CHECK(out.amplitudes[k + 1].real() == approx(1.0));
}

TEST_CASE("aperture application is idempotent on cell-aligned apertures") {
  SplitMix64 rng(3);
  const double dx = 1e-9;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Interval> iv;
    double edge = -100e-9;
    for (int k = 0; k < 3; ++k) {
      const double lo = edge + std::floor(1 + 20 * rng.uniform()) * dx;
      const double hi = lo + std::floor(1 + 30 * rng.uniform()) * dx;
      iv.push_back({lo, hi});
      edge = hi;
    }
    const ApertureSpec ap(iv);
    auto field = aligned_plane_wave(512, dx);
    field.amplitudes *= gaussian(512, dx, 80e-9, 0.0, 2e6).amplitudes;
    const auto once = apply_aperture(field, ap);
    const auto twice = apply_aperture(once, ap);
    CHECK((twice.amplitudes - once.amplitudes).abs().maxCoeff() == 0.0);
  }
}

TEST_CASE("angular spectrum: zero distance is the identity") {
  const auto field = gaussian(512, 1e-9, 20e-9, 10e-9, 3e6);
  const auto out = angular_spectrum_step(field, 0.0);
  CHECK((out.amplitudes - field.amplitudes).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("angular spectrum preserves the L2 norm within the band limit") {
  SplitMix64 rng(17);
  const Eigen::Index n = 512;
  const double dx = 1e-9;
  const double z_max = double(n) * dx * dx / kLambda; // no transfer-function aliasing up to here
  for (int trial = 0; trial < 20; ++trial) {
    Amplitudes a(n);
    for (Eigen::Index i = 0; i < n; ++i) a[i] = {rng.uniform() - 0.5, rng.uniform() - 0.5};
    const WaveFieldd field(-256e-9, dx, kLambda, a);
    const double z = z_max * rng.uniform();
    const auto out = angular_spectrum_step(field, z);
    CHECK(out.squared_norm() == approx(field.squared_norm()).epsilon(1e-9));
  }
}

TEST_CASE("angular spectrum: Gaussian width grows by sqrt(2) over one Rayleigh range") {
  const double waist = 40e-9;
  const auto field = gaussian(4096, 1e-9, waist);
  const double rayleigh = kPi * waist * waist / kLambda;
  const auto out = angular_spectrum_step(field, rayleigh);
  CHECK(rms_width(out) / rms_width(field) == approx(std::sqrt(2.0)).epsilon(1e-9));
  // Analytic on-axis amplitude of a 1D Gaussian beam: (1 + (z/zR)^2)^(-1/4).
  CHECK(std::abs(out.amplitudes[2048]) == approx(std::pow(2.0, -0.25)).epsilon(1e-9));
}

TEST_CASE("angular spectrum rejects bad input") {
  const auto field = gaussian(512, 1e-9, 20e-9);
  CHECK_THROWS_AS(angular_spectrum_step(field, -1e-6), DomainError);
  const WaveFieldd coarse(-256 * 4e-9, 4e-9, kLambda, field.amplitudes);
  CHECK_THROWS_AS(angular_spectrum_step(coarse, 1e-6), ConfigurationError);
}

TEST_CASE("direct integral agrees with the angular spectrum step") {
  const Eigen::Index n = 512;
  const double dx = 1e-9;
  const double z = 20e-6;
  for (const auto& field : {gaussian(n, dx, 20e-9), gaussian(n, dx, 15e-9, 30e-9, 4e6),
                            gaussian(n, dx, 25e-9, -40e-9, -2e6)}) {
    const auto xs = grid_points(field);
    const auto reference = direct_integral_reference(field, z, std::span<const double>(xs));
    const auto fast = angular_spectrum_step(field, z);
    CHECK(relative_l2(fast.amplitudes, reference) < 1e-6);
  }
}

TEST_CASE("direct integral is linear") {
  const auto a = gaussian(256, 1e-9, 20e-9, 10e-9);
  const auto b = gaussian(256, 1e-9, 10e-9, -30e-9, 1e7);
  WaveFieldd sum = a;
  sum.amplitudes += b.amplitudes;
  const std::vector<double> xs = {-1e-6, -3e-7, 0.0, 5e-8, 2e-7, 9e-7};
  const auto ra = direct_integral_reference(a, 1e-4, std::span<const double>(xs));
  const auto rb = direct_integral_reference(b, 1e-4, std::span<const double>(xs));
  const auto rs = direct_integral_reference(sum, 1e-4, std::span<const double>(xs));
  CHECK(relative_l2(ra + rb, rs) < 1e-12);
  CHECK_THROWS_AS(direct_integral_reference(a, 0.0, std::span<const double>(xs)), DomainError);
}

TEST_CASE("direct integral: single slit far field follows sinc^2") {
  const double dx = 0.5e-9;
  const double width = 50e-9;
  const auto slit = apply_aperture(aligned_plane_wave(512, dx), ApertureSpec({{-width / 2, width / 2}}));
  const double z = 1.0;
  std::vector<double> xs;
  for (int i = -600; i <= 600; ++i) xs.push_back(i * 5e-6); // +-3 lambda z / a
  const auto u = direct_integral_reference(slit, z, std::span<const double>(xs));
  Eigen::ArrayXd numeric = u.abs2();
  Eigen::ArrayXd closed(numeric.size());
  for (Eigen::Index i = 0; i < closed.size(); ++i)
    closed[i] = std::pow(sinc(kPi * width * xs[std::size_t(i)] / (kLambda * z)), 2);
  numeric /= numeric.sum();
  closed /= closed.sum();
  CHECK(relative_l2(numeric, closed) < 1e-3);
}

TEST_CASE("Fresnel transform: output pitch and recentred window") {
  const auto field = gaussian(512, 1e-9, 20e-9);
  const double z = 3e-5;
  const auto out = fresnel_transform_step(field, z);
  CHECK(out.dx == approx(kLambda * z / (512 * 1e-9)).epsilon(1e-15));
  CHECK(out.x(256) == 0.0);
  CHECK_THROWS_AS(fresnel_transform_step(field, 0.0), DomainError);
  CHECK_THROWS_AS(fresnel_transform_step(field, -1.0), DomainError);
}

TEST_CASE("Fresnel transform agrees with the direct integral") {
  const Eigen::Index n = 512;
  const double dx = 1e-9;
  for (const double z : {10.24e-6, 40e-6, 1e-3}) {
    for (const auto& field : {gaussian(n, dx, 20e-9), gaussian(n, dx, 12e-9, 25e-9, 3e6)}) {
      const auto fast = fresnel_transform_step(field, z);
      const auto xs = grid_points(fast);
      const auto reference = direct_integral_reference(field, z, std::span<const double>(xs));
      CHECK(relative_l2(fast.amplitudes, reference) < 1e-4);
    }
  }
}

TEST_CASE("Fresnel transform agrees with the angular spectrum where both grids coincide") {
  const Eigen::Index n = 512;
  const double dx = 1e-9;
  const double z = double(n) * dx * dx / kLambda; // output pitch equals input pitch
  const auto field = gaussian(n, dx, 20e-9, 5e-9, 2e6);
  const auto a = fresnel_transform_step(field, z);
  const auto b = angular_spectrum_step(field, z);
  CHECK(a.dx == approx(dx).epsilon(1e-12));
  CHECK(relative_l2(a.amplitudes, b.amplitudes) < 1e-4);
}

TEST_CASE("Fresnel transform preserves the L2 norm") {
  const auto field = gaussian(1024, 1e-9, 30e-9, 0.0, 5e6);
  const auto out = fresnel_transform_step(field, 0.5);
  CHECK(out.squared_norm() == approx(field.squared_norm()).epsilon(1e-12));
}

TEST_CASE("Fresnel transform: far-field double slit matches cos^2 sinc^2") {
  const Eigen::Index n = 1 << 16;
  const double dx = 0.5e-9;
  const double a = 50e-9;
  const double d = 280e-9;
  const double z = 1.0;
  const auto slits = apply_aperture(aligned_plane_wave(n, dx), make_double_slit(a, d));
  const auto far = fresnel_transform_step(slits, z);
  // Both normalized on axis; a sum normalization would be biased by the
  // truncated closed-form tails.
  Eigen::ArrayXd numeric = far.amplitudes.abs2();
  numeric /= numeric[n / 2];
  Eigen::ArrayXd closed(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double theta = far.x(k) / z;
    closed[k] = std::pow(std::cos(kPi * d * theta / kLambda), 2) * std::pow(sinc(kPi * a * theta / kLambda), 2);
  }
  CHECK(relative_l2(numeric, closed) < 1e-3);
}
