#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "stirap/config.hpp"
#include "stirap/dipoles.hpp"
#include "stirap/levels.hpp"
#include "stirap/propagator.hpp"

namespace stirap {

/// Basis, dipoles and the three selected states of a configuration.
struct Model {
  LevelSet levels;
  DipoleTable dipoles;
  std::array<std::size_t, 3> states{};  // |1>, |2>, |3>

  Eigen::VectorXd energies_au() const { return level_energies_au(dipoles.basis()); }
  double energy_ev(int k) const { return dipoles.basis()[states[k]].energy_ev; }
};

Model build_model(const RunConfig& cfg);

/// Fills carriers left open in the configuration with the 1-2 and 3-2 resonances.
void resolve_carriers(RunConfig& cfg, const Model& model);

Eigen::VectorXcd initial_state(const RunConfig& cfg, const Model& model);

/// Control fields of the configuration (none for control type "none").
std::vector<ControlField> control_fields(const RunConfig& cfg);

/// Propagator with the configured coupling restriction.
Propagator make_propagator(const RunConfig& cfg, const Model& model, const std::vector<ControlField>& fields);

TransferModel transfer_model(const RunConfig& cfg, const Model& model);

struct RunResult {
  std::vector<std::filesystem::path> artifacts;
  nlohmann::json summary;
};

// Each command resolves the configuration, writes its artifacts into
// cfg.output_dir and finishes with manifest.json.
RunResult cmd_dipoles(RunConfig cfg);
RunResult cmd_propagate(RunConfig cfg);
RunResult cmd_scan(RunConfig cfg);
RunResult cmd_atas(RunConfig cfg);
RunResult cmd_fit_pulse(RunConfig cfg);
RunResult cmd_design_pulse(RunConfig cfg);

/// Resolved config, SHA-256 of every input file and artifact, and the summary.
void write_manifest(const std::string& command, const RunConfig& cfg, RunResult& result);

}  // namespace stirap
