#pragma once

#include <cmath>

// Atomic units throughout the numerical core; eV, fs and TW/cm^2 at the edges.
namespace stirap::units {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHartreeEv = 27.211386245988;
inline constexpr double kFsAu = 41.341373335;            // 1 fs in a.u. of time
inline constexpr double kAsAu = kFsAu / 1000.0;
inline constexpr double kIntensityAuWcm2 = 3.50945e16;   // I [W/cm^2] for E0 = 1 a.u.
inline constexpr double kSpeedOfLightAu = 137.036;

constexpr double ev_to_au(double ev) { return ev / kHartreeEv; }
constexpr double au_to_ev(double au) { return au * kHartreeEv; }
constexpr double fs_to_au(double fs) { return fs * kFsAu; }
constexpr double au_to_fs(double au) { return au / kFsAu; }

/// Peak field amplitude (a.u.) of a pulse with the given peak intensity.
inline double intensity_to_amplitude(double intensity_tw_cm2) {
  return std::sqrt(intensity_tw_cm2 * 1e12 / kIntensityAuWcm2);
}

inline double amplitude_to_intensity(double amplitude_au) {
  return amplitude_au * amplitude_au * kIntensityAuWcm2 / 1e12;
}

}  // namespace stirap::units
