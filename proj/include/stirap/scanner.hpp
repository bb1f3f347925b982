#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stirap/dipoles.hpp"
#include "stirap/propagator.hpp"
#include "stirap/pulses.hpp"

namespace stirap {

/// Pump and Stokes with identical Gaussian envelopes; the Stokes pulse is
/// centered delta_t later than the pump and carries the relative phase phi.
struct TwinPulses {
  double intensity_tw = 3.38;
  double gamma_fs = 50.0;
  double pump_ev = 0.0;
  double stokes_ev = 0.0;
  double delta_t_fs = 0.0;
  double phi = 0.0;

  /// Pulse centers at t_mid -+ delta_t/2.
  std::vector<ControlField> fields(double t_mid_fs) const;

  double get(const std::string& name) const;
  void set(const std::string& name, double value);
};

enum class ModelKind {
  ThreeLevel,  // pump only on 1-2, Stokes only on 2-3
  Full,        // every field through the whole dipole matrix
};

/// States |1>, |2>, |3> inside a dipole table plus the propagation settings.
struct TransferModel {
  const DipoleTable* dipoles = nullptr;
  std::size_t s1 = 0, s2 = 1, s3 = 2;
  ModelKind kind = ModelKind::ThreeLevel;
  double dt_as = 10.0;
  double margin = 6.0;         // pulse tails kept inside the grid, in units of gamma
  double initial_phase = 0.0;  // relative phase of |3> in the initial superposition

  /// cos α|1> + e^{i initial_phase} sin α|3>.
  Eigen::VectorXcd initial(double alpha) const;
  double t_mid(const TwinPulses& p) const;
  TimeGrid grid(const TwinPulses& p) const;
  Propagator propagator(const std::vector<ControlField>& fields) const;
  Trajectory run(const TwinPulses& p, double alpha, const PropagationOptions& opt = {}) const;
  /// Final (P1, P2, P3).
  std::array<double, 3> final_populations(const TwinPulses& p, double alpha) const;

  /// Carriers resonant with the 1-2 and 2-3 transitions.
  std::pair<double, double> resonant_carriers_ev() const;
};

struct ScanAxis {
  std::string name;  // alpha, delta_t_fs, phi or intensity_tw
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 2;

  std::vector<double> values() const;
};

struct Landscape {
  ScanAxis axis1, axis2;
  std::vector<double> p1, p2, p3;  // index i1 * axis2.n + i2; NaN where the point failed
  std::vector<std::string> failures;

  std::size_t index(std::size_t i1, std::size_t i2) const { return i1 * axis2.n + i2; }
  std::size_t missing() const;
  /// Largest |P1+P2+P3-1| over completed points.
  double closure_error() const;
  /// Largest |ΔP1| between neighbouring completed points.
  double max_neighbor_step() const;

  /// CSV `<axis1>,<axis2>,P1,P2,P3`.
  void export_csv(const std::filesystem::path& path) const;
};

/// Final populations over a grid of two named parameters; the other pulse
/// parameters and α (unless scanned) come from `base` and `alpha`.
Landscape scan(const TransferModel& model, const TwinPulses& base, double alpha, const ScanAxis& axis1,
               const ScanAxis& axis2, unsigned threads = 1);

Landscape scan_delay(const TransferModel& model, const TwinPulses& base, const ScanAxis& alpha,
                     const ScanAxis& delta_t, unsigned threads = 1);
Landscape scan_phase(const TransferModel& model, const TwinPulses& base, const ScanAxis& alpha, const ScanAxis& phi,
                     unsigned threads = 1);

struct OptimizeResult {
  TwinPulses best;
  double fidelity = 0.0;
  double baseline_fidelity = 0.0;
  bool improved = false;
  std::array<double, 3> populations{};
  std::size_t evaluations = 0;
};

/// Overlap with cos β|1> + e^{iχ} sin β|3> maximised over χ:
/// (cos β |c1| + sin β |c3|)².
double mixing_fidelity(const Eigen::VectorXcd& psi, std::size_t s1, std::size_t s3, double beta);

/// Coarse grid over the free parameters followed by pattern-search refinement
/// from the best grid point and from seeded random jitters around it. At most
/// three free parameters; bounds are required for each.
OptimizeResult optimize_transfer(const TransferModel& model, const TwinPulses& base, double alpha, double beta,
                                 const std::map<std::string, std::pair<double, double>>& free, std::uint64_t seed,
                                 std::size_t coarse_points = 9, unsigned threads = 1);

}  // namespace stirap
