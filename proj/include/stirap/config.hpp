#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "stirap/pulses.hpp"
#include "stirap/scanner.hpp"
#include "stirap/spectro.hpp"

namespace stirap {

enum class Scenario { ThreeLevel, XeXuv, XeXray, Custom };

std::string to_string(Scenario s);

struct InitialState {
  double alpha = 0.0;
  double relative_phase = 0.0;
  // explicit amplitudes of |1>, |2>, |3>; replaces alpha when present
  std::optional<std::array<std::complex<double>, 3>> amplitudes;
};

enum class ControlKind { None, Gaussian, Composite, Twin };

struct CompositeControl {
  double alpha = 0.0;
  double beta = 0.0;
  double pump_intensity_tw = 0.0;
  double stokes_intensity_tw = 0.0;
  double t_left_fs = 0.0;
  double t_right_fs = 0.0;
  double gamma_left_fs = 1.0;
  double gamma_right_fs = 1.0;
  bool compare_fit = false;  // also propagate the fitted Gaussian pair
};

/// Carriers left as NaN are set on resonance with the selected states.
struct ControlBlock {
  ControlKind kind = ControlKind::None;
  GaussianParams pump;
  GaussianParams stokes;
  CompositeControl composite;
  TwinPulses twin;
  double twin_center_fs = 0.0;
  double pump_carrier_ev = std::numeric_limits<double>::quiet_NaN();
  double stokes_carrier_ev = std::numeric_limits<double>::quiet_NaN();
  double stokes_phase = 0.0;  // composite pulses
};

struct GridBlock {
  double t_start_fs = 0.0;
  double t_end_fs = 200.0;
  double dt_as = 13.0;
  double store_stride_fs = 2.0;
};

struct OptimizeBlock {
  double target_beta = 0.0;
  std::map<std::string, std::pair<double, double>> free;
  std::size_t coarse_points = 9;
};

struct ScanBlock {
  ScanAxis axis1{"alpha", 0.0, 1.5707963267948966, 64};
  ScanAxis axis2{"delta_t_fs", -40.0, 40.0, 64};
  double margin_gamma = 6.0;
  std::optional<OptimizeBlock> optimize;
};

struct AtasBlock {
  double delay_start_fs = 0.0;
  double delay_stop_fs = 0.0;
  std::size_t delay_count = 0;
  double tau_fs = 10.0;
  double span_after_fs = 80.0;
  double lead_fs = 5.0;
  double e_min_ev = 16.25, e_max_ev = 18.25, e_step_ev = 0.01;
  double line_tolerance_ev = 0.03;
};

struct RunConfig {
  Scenario scenario = Scenario::ThreeLevel;
  std::filesystem::path levels_path;
  std::filesystem::path dipole_overrides_path;  // empty: none
  std::filesystem::path lines_path;             // empty: none
  double z_charge = 2.0;
  double m_projection = 0.5;
  std::array<std::string, 3> states;  // labels of |1>, |2>, |3>
  ModelKind model = ModelKind::ThreeLevel;
  InitialState initial;
  ControlBlock control;
  std::optional<ProbeSettings> probe;
  GridBlock grid;
  std::optional<ScanBlock> scan;
  std::optional<AtasBlock> atas;
  std::filesystem::path output_dir = "out";
  bool dipole_binary = false;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: all cores

  /// Resolved form; from_json(to_json()) reproduces the configuration.
  nlohmann::json to_json() const;
};

/// Parses a configuration or a run manifest (its "config" member). Relative paths
/// are looked up next to the file first and in the bundled data directory second.
/// Unknown keys, missing files and out-of-range values throw InputError.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

std::filesystem::path preset_path(const std::string& name);
RunConfig load_preset(const std::string& name);

}  // namespace stirap
