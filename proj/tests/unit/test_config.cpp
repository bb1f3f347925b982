#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "stirap/config.hpp"
#include "stirap/error.hpp"
#include "stirap/units.hpp"
#include "stirap/workflows.hpp"

using namespace stirap;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stirap_test_config_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json smoke_json() {
  std::ifstream in(preset_path("smoke"));
  return json::parse(in);
}

std::array<double, 3> last_row(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  std::array<double, 3> p{};
  std::stringstream ss(last);
  std::string cell;
  std::getline(ss, cell, ',');
  for (double& x : p) {
    std::getline(ss, cell, ',');
    x = std::stod(cell);
  }
  return p;
}

}  // namespace

TEST(Config, EveryPresetParses) {
  for (const auto& e : fs::directory_iterator(STIRAP_PRESET_DIR)) {
    if (e.path().extension() != ".json") continue;
    SCOPED_TRACE(e.path().string());
    EXPECT_NO_THROW(load_config(e.path()));
  }
}

TEST(Config, ResolvedFormRoundTrips) {
  for (const char* name : {"smoke", "composite_superposition", "composite_fitted", "twin_delay_scan", "xe_fitted", "xe_xray"}) {
    SCOPED_TRACE(name);
    const RunConfig a = load_preset(name);
    const json ja = a.to_json();
    const RunConfig b = parse_config(ja);
    EXPECT_EQ(ja, b.to_json());
  }
}

TEST(Config, AnglesInPiAndRadiansAgree) {
  json j = smoke_json();
  j["initial_state"] = {{"alpha_pi", 0.25}};
  const double a = parse_config(j, STIRAP_PRESET_DIR).initial.alpha;
  j["initial_state"] = {{"alpha_rad", units::kPi / 4}};
  EXPECT_DOUBLE_EQ(a, parse_config(j, STIRAP_PRESET_DIR).initial.alpha);
}

TEST(Config, UnknownKeysAreRejected) {
  json j = smoke_json();
  j["control"]["gama_fs"] = 10.0;
  EXPECT_THROW(parse_config(j, STIRAP_PRESET_DIR), InputError);
  j = smoke_json();
  j["extra"] = 1;
  EXPECT_THROW(parse_config(j, STIRAP_PRESET_DIR), InputError);
}

TEST(Config, InvalidValuesAreRejected) {
  json j = smoke_json();
  j["grid"]["dt_as"] = -1.0;
  EXPECT_THROW(parse_config(j, STIRAP_PRESET_DIR), InputError);
  j = smoke_json();
  j["scenario"] = "nitrogen";
  EXPECT_THROW(parse_config(j, STIRAP_PRESET_DIR), InputError);
  j = smoke_json();
  j["control"]["type"] = "square";
  EXPECT_THROW(parse_config(j, STIRAP_PRESET_DIR), InputError);
}

TEST(Config, MissingFilesAreInputErrors) {
  json j = smoke_json();
  j["levels_path"] = "no_such_levels.csv";
  EXPECT_THROW(parse_config(j, STIRAP_PRESET_DIR), InputError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InputError);
  EXPECT_THROW(load_preset("no_such_preset"), InputError);
}

TEST(Workflows, ThreeLevelDipolesAreUnitCouplings) {
  RunConfig cfg = load_preset("smoke");
  cfg.output_dir = scratch("dipoles");
  const RunResult r = cmd_dipoles(cfg);
  EXPECT_EQ(r.summary["states"].get<std::size_t>(), 3u);
  EXPECT_NEAR(std::abs(r.summary["mu12_au"].get<double>()), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(r.summary["mu23_au"].get<double>()), 1.0, 1e-12);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "manifest.json"));
}

TEST(Workflows, NoControlKeepsPopulations) {
  json j = smoke_json();
  j["control"] = {{"type", "none"}};
  RunConfig cfg = parse_config(j, STIRAP_PRESET_DIR);
  cfg.output_dir = scratch("free");
  const RunResult r = cmd_propagate(cfg);
  EXPECT_NEAR(r.summary["final"]["P1"].get<double>(), 0.5, 1e-10);
  EXPECT_NEAR(r.summary["final"]["P2"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(r.summary["final"]["P3"].get<double>(), 0.5, 1e-10);
  const auto p = last_row(cfg.output_dir / "populations.csv");
  EXPECT_NEAR(p[0], 0.5, 1e-8);
  EXPECT_NEAR(p[2], 0.5, 1e-8);
}

TEST(Workflows, ManifestReplayIsBitIdentical) {
  RunConfig cfg = load_preset("smoke");
  cfg.threads = 1;
  cfg.output_dir = scratch("first");
  const RunResult first = cmd_scan(cfg);

  const fs::path manifest = cfg.output_dir / "manifest.json";
  RunConfig again = load_config(manifest);
  again.output_dir = scratch("second");
  const RunResult second = cmd_scan(again);

  ASSERT_EQ(first.artifacts.size(), second.artifacts.size());
  for (std::size_t k = 0; k < first.artifacts.size(); ++k) {
    if (first.artifacts[k].filename() == "manifest.json") continue;
    EXPECT_EQ(slurp(first.artifacts[k]), slurp(second.artifacts[k])) << first.artifacts[k];
  }
  const json m1 = json::parse(slurp(manifest));
  const json m2 = json::parse(slurp(again.output_dir / "manifest.json"));
  EXPECT_EQ(m1["artifacts"], m2["artifacts"]);
  EXPECT_EQ(m1["inputs"], m2["inputs"]);
}

TEST(Workflows, SmokeScanIsClosed) {
  RunConfig cfg = load_preset("smoke");
  cfg.output_dir = scratch("scan");
  const RunResult r = cmd_scan(cfg);
  EXPECT_LT(r.summary["closure_error"].get<double>(), 1e-8);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "landscape.csv"));
}

TEST(Workflows, PulseCommandsNeedCompositeControl) {
  RunConfig cfg = load_preset("smoke");
  cfg.output_dir = scratch("nofit");
  EXPECT_THROW(cmd_fit_pulse(cfg), InputError);
  EXPECT_THROW(cmd_design_pulse(cfg), InputError);
}

TEST(Workflows, FitPulseRecoversFittedGaussians) {
  RunConfig cfg = load_preset("composite_fitted");
  cfg.output_dir = scratch("fit");
  const RunResult r = cmd_fit_pulse(cfg);
  // The pump of a β = 0 composite is a single Gaussian with intensity I_P sin²α.
  EXPECT_NEAR(r.summary["pump"]["intensity_tw_cm2"].get<double>(), 10.04 * 0.5, 1e-6);
  EXPECT_NEAR(r.summary["pump"]["gamma_fs"].get<double>(), 50.0, 1e-6);
  EXPECT_NEAR(r.summary["pump"]["center_fs"].get<double>(), 375.3, 1e-6);
  EXPECT_GT(r.summary["stokes"]["residual"].get<double>(), 0.0);
}

TEST(Workflows, DesignPulseMeetsBoundaryAngles) {
  RunConfig cfg = load_preset("composite_superposition");
  cfg.output_dir = scratch("design");
  const RunResult r = cmd_design_pulse(cfg);
  EXPECT_TRUE(fs::exists(cfg.output_dir / "envelopes.csv"));
  EXPECT_LT(r.summary["boundary_residual_initial"].get<double>(), 1e-6);
  EXPECT_LT(r.summary["boundary_residual_final"].get<double>(), 1e-6);
  EXPECT_DOUBLE_EQ(r.summary["peak_rabi_pump_au"].get<double>(), r.summary["peak_rabi_stokes_au"].get<double>());
}
