#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "stirap/pulses.hpp"

namespace stirap {

using cplx = std::complex<double>;
using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;

/// Three-level rotating-frame model. Detunings in a.u.; Rabi envelopes take fs
/// and return a.u.
struct RwaParameters {
  double delta12 = 0.0;
  double delta23 = 0.0;
  double phi = 0.0;
  std::function<double(double)> rabi_P;
  std::function<double(double)> rabi_S;

  static RwaParameters resonant(double delta, double phi, std::function<double(double)> rabi_P,
                                std::function<double(double)> rabi_S);
  bool two_photon_resonant() const;
};

/// H'(t) = -1/2 [[-2δ12, Ω_P, 0], [Ω_P, 0, Ω_S e^{iφ}], [0, Ω_S e^{-iφ}, -2δ23]].
Mat3c rwa_hamiltonian(const RwaParameters& p, double t_fs);

/// Instantaneous eigensystem of H' under two-photon resonance at one time.
struct AdiabaticPoint {
  double theta = 0.0;
  double phi_mix = 0.0;
  double omega = 0.0;  // sqrt(Ω_P² + Ω_S²)
  double e0 = 0.0, e_plus = 0.0, e_minus = 0.0;
  Vec3c psi0, psi_plus, psi_minus;
};

/// Θ = atan2(Ω_P, Ω_S), Φ = -atan2(Ω, δ)/2. `theta` overrides Θ when both
/// envelopes vanish and the ratio is undefined.
///
/// ψ0 = cosΘ|1> - e^{-iφ} sinΘ|3> is annihilated by the 2-row of H'. The bright
/// combination b = sinΘ|1> + e^{-iφ} cosΘ|3> couples to |2> with the real
/// element -Ω/2, so ψ+ = cosΦ b + sinΦ|2>, ψ- = sinΦ b - cosΦ|2>.
AdiabaticPoint adiabatic_point(double delta, double phi, double rabi_P, double rabi_S, double theta);

struct AdiabaticFrame {
  std::vector<double> t_fs;
  std::vector<AdiabaticPoint> points;
};

/// Θ is held at its last defined value (or the first one, before any) where both
/// envelopes fall below `floor`. Throws InputError without two-photon resonance.
AdiabaticFrame adiabatic_frame(const RwaParameters& p, const std::vector<double>& t_fs,
                               double floor = kEnvelopeFloor);

/// |<ψ_k|state>|² for k = 0, +, -.
std::array<double, 3> adiabatic_populations(const Vec3c& state, const AdiabaticPoint& point);

/// Lab amplitudes to the rotating frame: c'_1 = e^{i((E2-ωP)t - φP)} c_1,
/// c'_2 = e^{iE2 t} c_2, c'_3 = e^{i(E2-ωS)t} c_3 (t in fs, the rest in a.u.).
/// With that frame the pump element of H' is real and the Stokes element carries
/// e^{-iφS}, so the model phase is φ = -φS.
Vec3c rotating_frame_transform(const Vec3c& lab, double t_fs, double omega_P, double omega_S, double E2,
                               double phase_P = 0.0);
Vec3c inverse_rotating_frame_transform(const Vec3c& rot, double t_fs, double omega_P, double omega_S, double E2,
                                       double phase_P = 0.0);

/// Model parameters equivalent to a lab-frame pump (1-2) and Stokes (2-3) pair.
RwaParameters rwa_from_lab(const ControlField& pump, const ControlField& stokes, double mu12, double mu23,
                           const std::array<double, 3>& energies_au);

struct RwaTrajectory {
  std::vector<double> t_fs;
  std::vector<Vec3c> states;

  std::array<double, 3> populations(std::size_t i) const;
};

/// Exponential-midpoint integration on a uniform grid [t0, t1] with step dt.
RwaTrajectory propagate_rwa(const RwaParameters& p, const Vec3c& initial, double t0_fs, double t1_fs,
                            double dt_fs);

/// CSV `t_fs,theta,phi_mix,E0,E_plus,E_minus` plus `P0,P_plus,P_minus` when a
/// trajectory sampled on the same grid is given.
void export_adiabatic_csv(const std::filesystem::path& path, const AdiabaticFrame& frame,
                          const RwaTrajectory* trajectory = nullptr);

}  // namespace stirap
