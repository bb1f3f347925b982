#pragma once

#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stirap/dipoles.hpp"
#include "stirap/propagator.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

/// Multiplies samples after t_probe by exp(-(t - t_probe)/tau); tau = +inf is the identity.
std::vector<double> apply_window(const std::vector<double>& series, const std::vector<double>& t_fs,
                                 double t_probe_fs, double tau_fs);

/// ∫ x(t) e^{iωt} dt by the rectangle rule on a uniform grid, for each energy.
std::vector<std::complex<double>> fourier(const std::vector<double>& series, double t0_fs, double dt_fs,
                                          const std::vector<double>& energies_ev);

/// σ(ω) = 4πω/c Im[d̃(ω)/Ẽ(ω)] in bohr², with d windowed after t_probe. Throws
/// NumericError when |Ẽ| is below `floor` anywhere on the energy grid.
std::vector<double> cross_section(const std::vector<double>& dipole, const std::vector<double>& probe_field,
                                  double t0_fs, double dt_fs, double t_probe_fs, double tau_fs,
                                  const std::vector<double>& energies_ev, double floor = 1e-14);

/// Relative mismatch of Σ|x|² against Σ|X|²/N for the full discrete transform.
double parseval_mismatch(const std::vector<double>& series);

struct Peak {
  double energy_ev = 0.0;
  double height = 0.0;
};

/// Local maxima above `relative_threshold` of the largest value, refined by a
/// parabola through the three highest samples.
std::vector<Peak> find_peaks(const std::vector<double>& energies_ev, const std::vector<double>& values,
                             double relative_threshold = 0.05);

struct SpectralLine {
  std::string symbol;
  double energy_ev = 0.0;
};

/// CSV with columns `symbol` and `energy_eV`.
std::vector<SpectralLine> load_lines(const std::filesystem::path& path);

struct LineTrace {
  SpectralLine line;
  double found_energy_ev = 0.0;      // mean refined peak position over delays
  std::vector<double> peak_values;   // σ at the nearest grid point, per delay
};

struct Spectrogram {
  std::vector<double> delays_fs;
  std::vector<double> energies_ev;
  std::vector<std::vector<double>> sigma;  // [delay][energy]
  std::vector<LineTrace> lines;

  void export_csv(const std::filesystem::path& path) const;
  void export_peaks_json(const std::filesystem::path& path) const;
};

struct ProbeSettings {
  std::vector<double> carriers_ev{16.325, 17.631};
  double intensity_tw = 0.008;
  double width_fs = 1.0;
  double phase = 0.0;

  /// Components of E(t - delay): the same waveform for every delay.
  std::vector<ControlField> fields(double delay_fs) const;
};

struct AtasSetup {
  const DipoleTable* dipoles = nullptr;
  std::vector<ControlField> control;
  ProbeSettings probe;
  Eigen::VectorXcd initial;
  double t_start_fs = 0.0;
  double dt_as = 13.0;
  double span_after_fs = 80.0;  // transform window after the probe
  double lead_fs = 5.0;         // transform start before the probe
  double tau_fs = 10.0;
  double e_min_ev = 16.25, e_max_ev = 18.25, e_step_ev = 0.01;
  std::vector<SpectralLine> lines;
  double line_tolerance_ev = 0.03;
  unsigned threads = 1;
};

/// One propagation per delay, restarted from a control-only reference at the
/// transform start. The probe response is the difference to that reference.
Spectrogram atas_scan(const AtasSetup& setup, const std::vector<double>& delays_fs);

struct Oscillation {
  double period_fs = 0.0;
  double amplitude = 0.0;  // of the fitted sinusoid
  double mean = 0.0;
};

/// Least-squares fit of mean + sinusoid, scanning periods in [min, max] and
/// refining the best by golden-section search.
Oscillation fit_oscillation(const std::vector<double>& t_fs, const std::vector<double>& y, double min_period_fs,
                            double max_period_fs);

/// Amplitude of the best sinusoid at a fixed period.
Oscillation fit_fixed_period(const std::vector<double>& t_fs, const std::vector<double>& y, double period_fs);

}  // namespace stirap
