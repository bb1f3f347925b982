#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stirap/dipoles.hpp"
#include "stirap/levels.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

/// Uniform grid; the end point is rounded to a whole number of steps.
struct TimeGrid {
  double t_start_fs = 0.0;
  double t_end_fs = 0.0;
  double dt_as = 1.0;
  std::size_t n_steps = 0;

  static TimeGrid make(double t_start_fs, double t_end_fs, double dt_as);
  double time_fs(std::size_t step) const { return t_start_fs + static_cast<double>(step) * dt_as * 1e-3; }
  double dt_fs() const { return dt_as * 1e-3; }
};

/// A set of transitions driven by a common field: the interaction is
/// -E(t) coupling with E(t) the sum of the channel's fields.
struct Channel {
  Eigen::MatrixXd coupling;
  std::vector<ControlField> fields;
};

enum class Splitting {
  EnergyOuter,  // e^{-iD dt/2} e^{-iV dt} e^{-iD dt/2}
  FieldOuter,   // e^{-iV dt/2} e^{-iD dt} e^{-iV dt/2}
};

struct PropagationOptions {
  double store_stride_fs = 2.0;  // 0 stores every step
  bool record_dipole = false;    // d(t) at every step, needs a dipole matrix
  const Eigen::MatrixXd* dipole = nullptr;
  Splitting splitting = Splitting::EnergyOuter;
  double norm_tolerance = 1e-8;
};

struct Trajectory {
  TimeGrid grid;
  std::vector<std::size_t> steps;  // stored step indices
  std::vector<Eigen::VectorXcd> amplitudes;
  std::vector<double> norm_log;    // |‖ψ‖ - 1| at each stored step
  std::vector<double> dipole;      // per step when recorded

  double time_fs(std::size_t stored) const { return grid.time_fs(steps.at(stored)); }
  const Eigen::VectorXcd& final_state() const { return amplitudes.back(); }
};

class Propagator {
 public:
  /// Energies in a.u.; each channel matrix must be symmetric and N×N.
  Propagator(Eigen::VectorXd energies_au, std::vector<Channel> channels);

  /// Every field acts through the full dipole matrix.
  static Propagator lab_frame(const DipoleTable& dip, std::vector<ControlField> fields);

  /// Pump fields drive only the a-b element, Stokes fields only b-c; probe
  /// fields act through the full matrix.
  static Propagator three_level(const DipoleTable& dip, std::size_t a, std::size_t b, std::size_t c,
                                const std::vector<ControlField>& fields);

  std::size_t dimension() const { return static_cast<std::size_t>(energies_.size()); }

  /// Throws NumericError when the norm drifts beyond the tolerance.
  Trajectory run(const Eigen::VectorXcd& initial, const TimeGrid& grid, const PropagationOptions& opt = {}) const;

  /// Maps a state from t_from to t_to (either direction) without storing.
  Eigen::VectorXcd evolve(Eigen::VectorXcd psi, const TimeGrid& grid, bool backward,
                          Splitting splitting) const;

 private:
  struct Block {
    std::vector<Eigen::Index> active;
    Eigen::MatrixXd vectors;
    Eigen::VectorXd values;
    std::vector<ControlField> fields;
  };

  void apply_field(Eigen::VectorXcd& psi, const Block& b, double t_mid_fs, double dt_au) const;
  void apply_energy(Eigen::VectorXcd& psi, double dt_au) const;
  void step(Eigen::VectorXcd& psi, double t_mid_fs, double dt_au, Splitting splitting) const;

  Eigen::VectorXd energies_;
  std::vector<Block> blocks_;
};

Eigen::VectorXd level_energies_au(const LevelSet& ls);

/// P_i(t) on the stored steps, one row per stored step.
std::vector<std::vector<double>> populations(const Trajectory& traj, const std::vector<std::size_t>& indices);

/// d(t) = <ψ|μ|ψ> on the stored steps.
std::vector<double> dipole_expectation(const Trajectory& traj, const Eigen::MatrixXd& mu);

/// Propagates the final state back to the start with the other splitting order
/// and returns 1 - |<ψ_back(0)|ψ(0)>|.
double reverse_check(const Propagator& prop, const Trajectory& traj);

/// CSV `t_fs,P_<label>...`.
void export_populations_csv(const std::filesystem::path& path, const Trajectory& traj,
                            const std::vector<std::size_t>& indices, const std::vector<std::string>& names);

/// Little-endian float64 pairs (t_fs, d) for every recorded step.
void export_dipole_binary(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace stirap
