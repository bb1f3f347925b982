#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stirap/config.hpp"
#include "stirap/error.hpp"
#include "stirap/workflows.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfigError = 2, kNumericError = 3 };

struct Options {
  std::string config;
  std::string preset;
  std::string out;
  std::optional<unsigned> threads;
  std::optional<double> store_stride;
};

stirap::RunConfig resolve(const Options& o) {
  if (o.config.empty() == o.preset.empty()) throw stirap::InputError("give exactly one of --config and --preset");
  stirap::RunConfig cfg = o.config.empty() ? stirap::load_preset(o.preset) : stirap::load_config(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (o.store_stride) {
    if (*o.store_stride < 0.0) throw stirap::InputError("--store-stride must be non-negative");
    cfg.grid.store_stride_fs = *o.store_stride;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-level and Xe+ population transfer: propagation, landscapes and transient absorption"};
  app.require_subcommand(1);

  using Command = std::function<stirap::RunResult(stirap::RunConfig)>;
  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"dipoles", {"Build and export the dipole matrix", stirap::cmd_dipoles}},
      {"propagate", {"Propagate the configured fields and export populations", stirap::cmd_propagate}},
      {"scan", {"Final-population landscape of twin Gaussian pulses", stirap::cmd_scan}},
      {"atas", {"Transient absorption spectrogram over probe delays", stirap::cmd_atas}},
      {"fit-pulse", {"Fit Gaussians to composite pulse envelopes", stirap::cmd_fit_pulse}},
      {"design-pulse", {"Composite pulses for a mixing-angle change", stirap::cmd_design_pulse}},
  };

  Options opt;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    CLI::App* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", opt.config, "Configuration or manifest file (JSON)");
    sub->add_option("--preset", opt.preset, "Bundled preset name");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--threads", opt.threads, "Worker threads (0: all cores)");
    sub->add_option("--store-stride", opt.store_stride, "Amplitude storage stride in fs (0: every step)");
    subs[name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      const stirap::RunResult r = commands.at(name).second(resolve(opt));
      std::cout << r.summary.dump(2) << '\n';
      for (const auto& p : r.artifacts) std::cout << "wrote " << p.string() << '\n';
      return kOk;
    } catch (const stirap::InputError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kConfigError;
    } catch (const stirap::NumericError& e) {
      std::cerr << "numeric failure: " << e.what() << '\n';
      return kNumericError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kFailure;
    }
  }
  return kFailure;
}
