#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace dslit {

/// Raised when a value lies outside an operation's domain (non-positive
/// energy, overlapping slits, unnormalized profile, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Raised when a numerical setup cannot honour a sampling rule (band limit,
/// zero padding, alias-free chirp region).
class ConfigurationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace constants {

// CODATA 2018. h and e are exact by definition of the SI.
inline constexpr double planck = 6.62607015e-34;            // J s
inline constexpr double electron_mass = 9.1093837015e-31;   // kg
inline constexpr double elementary_charge = 1.602176634e-19; // C (J/eV)
inline constexpr double pi = 3.14159265358979323846;

} // namespace constants

/// Nonrelativistic de Broglie wavelength h / sqrt(2 m E), E in eV, result in m.
template <typename Scalar = double>
Scalar de_broglie_wavelength(Scalar kinetic_energy_ev) {
  if (!(kinetic_energy_ev > Scalar(0)))
    throw DomainError("de_broglie_wavelength: kinetic energy must be positive");
  using std::sqrt;
  const Scalar joules = kinetic_energy_ev * Scalar(constants::elementary_charge);
  return Scalar(constants::planck) / sqrt(Scalar(2) * Scalar(constants::electron_mass) * joules);
}

/// Nonrelativistic speed sqrt(2E/m), E in eV, result in m/s.
template <typename Scalar = double>
Scalar electron_speed(Scalar kinetic_energy_ev) {
  if (!(kinetic_energy_ev > Scalar(0)))
    throw DomainError("electron_speed: kinetic energy must be positive");
  using std::sqrt;
  const Scalar joules = kinetic_energy_ev * Scalar(constants::elementary_charge);
  return sqrt(Scalar(2) * joules / Scalar(constants::electron_mass));
}

/// Mean longitudinal spacing between consecutive electrons in the beam.
template <typename Scalar = double>
Scalar mean_interelectron_distance(Scalar speed, Scalar detection_rate) {
  if (!(speed > Scalar(0)))
    throw DomainError("mean_interelectron_distance: speed must be positive");
  if (!(detection_rate > Scalar(0)))
    throw DomainError("mean_interelectron_distance: detection rate must be positive");
  return speed / detection_rate;
}

/// Kinetic energy together with the derived wavelength and speed.
template <typename Scalar = double>
struct BeamParameters {
  Scalar kinetic_energy; // eV
  Scalar wavelength;     // m
  Scalar speed;          // m/s

  static BeamParameters from_energy(Scalar kinetic_energy_ev) {
    return {kinetic_energy_ev, de_broglie_wavelength(kinetic_energy_ev),
            electron_speed(kinetic_energy_ev)};
  }
};

using BeamParametersd = BeamParameters<double>;

} // namespace dslit
