#include "stirap/workflows.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stirap/error.hpp"
#include "stirap/io.hpp"
#include "stirap/parallel.hpp"
#include "stirap/rwa.hpp"
#include "stirap/units.hpp"

namespace stirap {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

unsigned thread_count(const RunConfig& cfg) { return cfg.threads ? cfg.threads : default_threads(); }

fs::path prepare_output(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  return cfg.output_dir;
}

std::array<double, 3> final_three(const Eigen::VectorXcd& psi, const Model& m) {
  return {std::norm(psi[static_cast<Eigen::Index>(m.states[0])]), std::norm(psi[static_cast<Eigen::Index>(m.states[1])]),
          std::norm(psi[static_cast<Eigen::Index>(m.states[2])])};
}

json populations_json(const Eigen::VectorXcd& psi, const Model& m) {
  const auto p = final_three(psi, m);
  return {{"P1", p[0]}, {"P2", p[1]}, {"P3", p[2]}, {"P_other", std::max(0.0, psi.squaredNorm() - p[0] - p[1] - p[2])}};
}

double max_population(const Trajectory& tr, std::size_t index) {
  double best = 0.0;
  for (const auto& a : tr.amplitudes) best = std::max(best, std::norm(a[static_cast<Eigen::Index>(index)]));
  return best;
}

std::vector<double> stored_times(const Trajectory& tr) {
  std::vector<double> t(tr.steps.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = tr.time_fs(k);
  return t;
}

void export_fields_csv(const fs::path& path, const std::vector<ControlField>& fields, const std::vector<double>& t) {
  std::ostringstream os;
  os << "t_fs";
  for (const auto& f : fields)
    os << ',' << (f.role == FieldRole::Pump ? "E_pump" : f.role == FieldRole::Stokes ? "E_stokes" : "E_probe");
  os << '\n';
  for (double x : t) {
    os << io::format_double(x);
    for (const auto& f : fields) os << ',' << io::format_double(f.value(x));
    os << '\n';
  }
  io::write_file(path, os.str());
}

const ControlField* find_role(const std::vector<ControlField>& fields, FieldRole role) {
  for (const auto& f : fields)
    if (f.role == role) return &f;
  return nullptr;
}

// Rotating-frame amplitudes of |1>,|2>,|3> and the adiabatic states along a lab trajectory.
json adiabatic_diagnostics(const fs::path& path, const Model& m, const std::vector<ControlField>& fields,
                           const Trajectory& tr) {
  const ControlField* pump = find_role(fields, FieldRole::Pump);
  const ControlField* stokes = find_role(fields, FieldRole::Stokes);
  if (!pump || !stokes) return {{"written", false}, {"reason", "needs a pump and a Stokes field"}};
  const auto& d = m.dipoles;
  const std::array<double, 3> e{units::ev_to_au(m.energy_ev(0)), units::ev_to_au(m.energy_ev(1)),
                                units::ev_to_au(m.energy_ev(2))};
  const RwaParameters p = rwa_from_lab(*pump, *stokes, d(m.states[0], m.states[1]), d(m.states[1], m.states[2]), e);
  const auto t = stored_times(tr);
  AdiabaticFrame frame;
  try {
    frame = adiabatic_frame(p, t);
  } catch (const InputError& err) {
    return {{"written", false}, {"reason", err.what()}};
  }
  RwaTrajectory rot;
  rot.t_fs = t;
  const double wp = units::ev_to_au(pump->carrier_ev), ws = units::ev_to_au(stokes->carrier_ev);
  double min_p0 = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto& a = tr.amplitudes[k];
    Vec3c lab(a[static_cast<Eigen::Index>(m.states[0])], a[static_cast<Eigen::Index>(m.states[1])],
              a[static_cast<Eigen::Index>(m.states[2])]);
    rot.states.push_back(rotating_frame_transform(lab, t[k], wp, ws, e[1], pump->phase));
  }
  // P0 is only meaningful while both fields are on
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double op = std::abs(p.rabi_P(t[k])), os = std::abs(p.rabi_S(t[k]));
    const double peak = std::max(op, os);
    if (peak <= 0.0 || std::min(op, os) < 1e-2 * peak) continue;
    min_p0 = std::min(min_p0, adiabatic_populations(rot.states[k], frame.points[k])[0]);
  }
  export_adiabatic_csv(path, frame, &rot);
  return {{"written", true}, {"min_P0_during_overlap", min_p0}};
}

GaussianParams fitted_params(const Envelope& env, const std::vector<double>& t, double carrier, double phase,
                             json& report) {
  std::vector<double> y(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) y[k] = env(t[k]);
  GaussianFit fit;
  try {
    fit = fit_gaussian(t, y);
  } catch (const FitError& e) {
    fit = e.best();
    report["warning"] = e.what();
  }
  report["intensity_tw_cm2"] = fit.intensity_tw();
  report["center_fs"] = fit.center_fs;
  report["gamma_fs"] = fit.width_fs;
  report["residual"] = fit.residual;
  report["iterations"] = fit.iterations;
  return GaussianParams{fit.intensity_tw(), fit.center_fs, fit.width_fs, carrier, phase};
}

std::vector<double> sample_times(const RunConfig& cfg, double spacing_fs) {
  const auto n = static_cast<std::size_t>(std::llround((cfg.grid.t_end_fs - cfg.grid.t_start_fs) / spacing_fs)) + 1;
  return linspace(cfg.grid.t_start_fs, cfg.grid.t_end_fs, n);
}

void require_composite(const RunConfig& cfg, const char* cmd) {
  if (cfg.control.kind != ControlKind::Composite)
    throw InputError(std::string(cmd) + " needs control.type = composite");
}

}  // namespace

Model build_model(const RunConfig& cfg) {
  const HalfInt m = HalfInt::from_double(cfg.m_projection);
  LevelSet ls = select_subspace(load_levels(cfg.levels_path), m);
  if (ls.empty()) throw InputError("no levels with m = " + m.str() + " in " + cfg.levels_path.string());
  std::vector<DipoleOverride> ov;
  if (!cfg.dipole_overrides_path.empty()) ov = load_dipole_overrides(cfg.dipole_overrides_path);
  Model model{ls, build_dipole_matrix(ls, cfg.z_charge, ov), {}};
  for (int k = 0; k < 3; ++k) model.states[k] = model.dipoles.basis().index_of(cfg.states[k], m);
  if (model.states[0] == model.states[1] || model.states[1] == model.states[2] || model.states[0] == model.states[2])
    throw InputError("config.states: the three states must differ");
  return model;
}

void resolve_carriers(RunConfig& cfg, const Model& model) {
  const double wp = model.energy_ev(1) - model.energy_ev(0);
  const double ws = model.energy_ev(1) - model.energy_ev(2);
  auto& c = cfg.control;
  if (!std::isfinite(c.pump_carrier_ev)) c.pump_carrier_ev = wp;
  if (!std::isfinite(c.stokes_carrier_ev)) c.stokes_carrier_ev = ws;
  if (!std::isfinite(c.pump.carrier_ev)) c.pump.carrier_ev = wp;
  if (!std::isfinite(c.stokes.carrier_ev)) c.stokes.carrier_ev = ws;
  c.twin.pump_ev = c.pump_carrier_ev;
  c.twin.stokes_ev = c.stokes_carrier_ev;
}

Eigen::VectorXcd initial_state(const RunConfig& cfg, const Model& model) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(model.dipoles.size()));
  if (cfg.initial.amplitudes) {
    for (int k = 0; k < 3; ++k) psi[static_cast<Eigen::Index>(model.states[k])] = (*cfg.initial.amplitudes)[k];
  } else {
    psi[static_cast<Eigen::Index>(model.states[0])] = std::cos(cfg.initial.alpha);
    psi[static_cast<Eigen::Index>(model.states[2])] = std::polar(std::sin(cfg.initial.alpha), cfg.initial.relative_phase);
  }
  return psi;
}

std::vector<ControlField> control_fields(const RunConfig& cfg) {
  const auto& c = cfg.control;
  switch (c.kind) {
    case ControlKind::None:
      return {};
    case ControlKind::Gaussian:
      return {make_field(c.pump, FieldRole::Pump), make_field(c.stokes, FieldRole::Stokes)};
    case ControlKind::Composite: {
      const auto& cp = c.composite;
      auto env = composite_envelopes(cp.alpha, cp.beta, units::intensity_to_amplitude(cp.pump_intensity_tw),
                                     units::intensity_to_amplitude(cp.stokes_intensity_tw), cp.t_left_fs,
                                     cp.t_right_fs, cp.gamma_left_fs, cp.gamma_right_fs);
      return {ControlField{env.pump, c.pump_carrier_ev, 0.0, FieldRole::Pump},
              ControlField{env.stokes, c.stokes_carrier_ev, c.stokes_phase, FieldRole::Stokes}};
    }
    case ControlKind::Twin:
      return c.twin.fields(c.twin_center_fs);
  }
  return {};
}

Propagator make_propagator(const RunConfig& cfg, const Model& model, const std::vector<ControlField>& fields) {
  if (cfg.model == ModelKind::ThreeLevel)
    return Propagator::three_level(model.dipoles, model.states[0], model.states[1], model.states[2], fields);
  return Propagator::lab_frame(model.dipoles, fields);
}

TransferModel transfer_model(const RunConfig& cfg, const Model& model) {
  TransferModel t;
  t.dipoles = &model.dipoles;
  t.s1 = model.states[0];
  t.s2 = model.states[1];
  t.s3 = model.states[2];
  t.kind = cfg.model;
  t.dt_as = cfg.grid.dt_as;
  if (cfg.scan) t.margin = cfg.scan->margin_gamma;
  t.initial_phase = cfg.initial.relative_phase;
  return t;
}

RunResult cmd_dipoles(RunConfig cfg) {
  const Model m = build_model(cfg);
  const fs::path out = prepare_output(cfg);
  RunResult r;
  m.dipoles.export_csv(out / "dipoles.csv");
  r.artifacts.push_back(out / "dipoles.csv");
  json largest = json::array();
  const auto& b = m.dipoles.basis();
  for (const auto& e : m.dipoles.largest(10))
    largest.push_back({{"i", b[e.i].label}, {"j", b[e.j].label}, {"mu_au", e.mu_au}});
  r.summary = {{"states", m.dipoles.size()},
               {"m_projection", cfg.m_projection},
               {"nonzero", m.dipoles.nonzero_count()},
               {"mu12_au", m.dipoles(m.states[0], m.states[1])},
               {"mu23_au", m.dipoles(m.states[1], m.states[2])},
               {"largest", largest}};
  write_manifest("dipoles", cfg, r);
  return r;
}

RunResult cmd_propagate(RunConfig cfg) {
  const Model m = build_model(cfg);
  resolve_carriers(cfg, m);
  const fs::path out = prepare_output(cfg);
  const auto fields = control_fields(cfg);
  const Propagator prop = make_propagator(cfg, m, fields);
  const TimeGrid grid = TimeGrid::make(cfg.grid.t_start_fs, cfg.grid.t_end_fs, cfg.grid.dt_as);
  const Eigen::MatrixXd mu = m.dipoles.matrix();
  PropagationOptions opt;
  opt.store_stride_fs = cfg.grid.store_stride_fs;
  opt.record_dipole = cfg.dipole_binary;
  opt.dipole = &mu;
  const Trajectory tr = prop.run(initial_state(cfg, m), grid, opt);

  RunResult r;
  const std::vector<std::size_t> idx(m.states.begin(), m.states.end());
  export_populations_csv(out / "populations.csv", tr, idx, {"1", "2", "3"});
  r.artifacts.push_back(out / "populations.csv");
  export_fields_csv(out / "fields.csv", fields, stored_times(tr));
  r.artifacts.push_back(out / "fields.csv");

  double drift = 0.0;
  for (double d : tr.norm_log) drift = std::max(drift, d);
  r.summary = {{"final", populations_json(tr.final_state(), m)},
               {"max_P2", max_population(tr, m.states[1])},
               {"steps", grid.n_steps},
               {"max_norm_drift", drift}};

  if (cfg.control.kind != ControlKind::None) {
    r.summary["adiabatic"] = adiabatic_diagnostics(out / "adiabatic.csv", m, fields, tr);
    if (r.summary["adiabatic"]["written"].get<bool>()) r.artifacts.push_back(out / "adiabatic.csv");
  }
  if (cfg.dipole_binary) {
    export_dipole_binary(out / "dipole.bin", tr);
    r.artifacts.push_back(out / "dipole.bin");
  }

  if (cfg.control.kind == ControlKind::Composite && cfg.control.composite.compare_fit) {
    const auto t = sample_times(cfg, 0.5);
    json fit_p, fit_s;
    const GaussianParams gp = fitted_params(fields[0].envelope, t, fields[0].carrier_ev, fields[0].phase, fit_p);
    const GaussianParams gs = fitted_params(fields[1].envelope, t, fields[1].carrier_ev, fields[1].phase, fit_s);
    const std::vector<ControlField> fitted{make_field(gp, FieldRole::Pump), make_field(gs, FieldRole::Stokes)};
    PropagationOptions fopt = opt;
    fopt.record_dipole = false;
    const Trajectory tf = make_propagator(cfg, m, fitted).run(initial_state(cfg, m), grid, fopt);
    export_populations_csv(out / "populations_fitted.csv", tf, idx, {"1", "2", "3"});
    export_fields_csv(out / "fields_fitted.csv", fitted, stored_times(tf));
    r.artifacts.push_back(out / "populations_fitted.csv");
    r.artifacts.push_back(out / "fields_fitted.csv");
    r.summary["fit"] = {{"pump", fit_p},
                        {"stokes", fit_s},
                        {"delta_t_fs", gs.center_fs - gp.center_fs},
                        {"final", populations_json(tf.final_state(), m)}};
  }
  write_manifest("propagate", cfg, r);
  return r;
}

RunResult cmd_scan(RunConfig cfg) {
  if (!cfg.scan) throw InputError("scan needs a scan block");
  if (cfg.control.kind != ControlKind::Twin) throw InputError("scan needs control.type = twin");
  const Model m = build_model(cfg);
  resolve_carriers(cfg, m);
  const fs::path out = prepare_output(cfg);
  const TransferModel tm = transfer_model(cfg, m);
  const auto& s = *cfg.scan;
  const unsigned threads = thread_count(cfg);

  const Landscape l = scan(tm, cfg.control.twin, cfg.initial.alpha, s.axis1, s.axis2, threads);
  RunResult r;
  l.export_csv(out / "landscape.csv");
  r.artifacts.push_back(out / "landscape.csv");

  std::size_t good = 0, done = 0;
  for (std::size_t k = 0; k < l.p1.size(); ++k) {
    if (std::isnan(l.p1[k])) continue;
    ++done;
    if (l.p1[k] + l.p3[k] > 0.95) ++good;
  }
  r.summary = {{"points", l.p1.size()},
               {"failures", l.missing()},
               {"closure_error", l.closure_error()},
               {"fraction_P1_plus_P3_above_0.95", done ? static_cast<double>(good) / static_cast<double>(done) : 0.0},
               {"max_neighbor_step_P1", l.max_neighbor_step()}};
  if (!l.failures.empty()) r.summary["failure_messages"] = l.failures;

  // reachability per value of the first axis
  std::size_t rows_p1 = 0, rows_p3 = 0;
  for (std::size_t i = 0; i < l.axis1.n; ++i) {
    double b1 = 0.0, b3 = 0.0;
    for (std::size_t j = 0; j < l.axis2.n; ++j) {
      const auto k = l.index(i, j);
      if (std::isnan(l.p1[k])) continue;
      b1 = std::max(b1, l.p1[k]);
      b3 = std::max(b3, l.p3[k]);
    }
    rows_p1 += b1 > 0.9;
    rows_p3 += b3 > 0.9;
  }
  r.summary["rows_reaching_P1_0.9"] = rows_p1;
  r.summary["rows_reaching_P3_0.9"] = rows_p3;
  r.summary["rows"] = l.axis1.n;

  if (s.optimize) {
    const auto res = optimize_transfer(tm, cfg.control.twin, cfg.initial.alpha, s.optimize->target_beta,
                                       s.optimize->free, cfg.seed, s.optimize->coarse_points, threads);
    json best;
    for (const auto& [name, range] : s.optimize->free) best[name] = res.best.get(name);
    json opt{{"best", best},
             {"fidelity", res.fidelity},
             {"baseline_fidelity", res.baseline_fidelity},
             {"improved", res.improved},
             {"populations", {{"P1", res.populations[0]}, {"P2", res.populations[1]}, {"P3", res.populations[2]}}},
             {"evaluations", res.evaluations}};
    io::write_file(out / "optimum.json", opt.dump(2) + "\n");
    r.artifacts.push_back(out / "optimum.json");
    r.summary["optimum"] = opt;
  }
  write_manifest("scan", cfg, r);
  return r;
}

RunResult cmd_atas(RunConfig cfg) {
  if (!cfg.atas) throw InputError("atas needs an atas block");
  const Model m = build_model(cfg);
  resolve_carriers(cfg, m);
  const fs::path out = prepare_output(cfg);
  const auto& a = *cfg.atas;

  AtasSetup setup;
  setup.dipoles = &m.dipoles;
  setup.control = control_fields(cfg);
  setup.probe = cfg.probe.value_or(ProbeSettings{});
  setup.initial = initial_state(cfg, m);
  setup.t_start_fs = cfg.grid.t_start_fs;
  setup.dt_as = cfg.grid.dt_as;
  setup.span_after_fs = a.span_after_fs;
  setup.lead_fs = a.lead_fs;
  setup.tau_fs = a.tau_fs;
  setup.e_min_ev = a.e_min_ev;
  setup.e_max_ev = a.e_max_ev;
  setup.e_step_ev = a.e_step_ev;
  if (!cfg.lines_path.empty()) setup.lines = load_lines(cfg.lines_path);
  setup.line_tolerance_ev = a.line_tolerance_ev;
  setup.threads = thread_count(cfg);

  const auto delays =
      a.delay_count == 1 ? std::vector<double>{a.delay_start_fs} : linspace(a.delay_start_fs, a.delay_stop_fs, a.delay_count);
  const Spectrogram sg = atas_scan(setup, delays);
  RunResult r;
  sg.export_csv(out / "spectrogram.csv");
  sg.export_peaks_json(out / "peaks.json");
  r.artifacts.push_back(out / "spectrogram.csv");
  r.artifacts.push_back(out / "peaks.json");

  json lines = json::array();
  for (const auto& lt : sg.lines) {
    json j{{"label", lt.line.symbol}, {"energy_eV", lt.line.energy_ev}};
    j["found_energy_eV"] = std::isfinite(lt.found_energy_ev) ? json(lt.found_energy_ev) : json(nullptr);
    if (std::isfinite(lt.found_energy_ev) && delays.size() >= 8) {
      const auto osc = fit_oscillation(delays, lt.peak_values, 2.0, 5.0);
      j["oscillation"] = {{"period_fs", osc.period_fs}, {"amplitude", osc.amplitude}, {"mean", osc.mean}};
    }
    lines.push_back(j);
  }
  r.summary = {{"delays", delays.size()}, {"energies", sg.energies_ev.size()}, {"lines", lines}};

  if (!setup.control.empty()) {
    const Propagator prop = make_propagator(cfg, m, setup.control);
    PropagationOptions opt;
    opt.store_stride_fs = cfg.grid.store_stride_fs;
    const Trajectory tr = prop.run(setup.initial, TimeGrid::make(cfg.grid.t_start_fs, cfg.grid.t_end_fs, cfg.grid.dt_as), opt);
    const std::vector<std::size_t> idx(m.states.begin(), m.states.end());
    export_populations_csv(out / "populations.csv", tr, idx, {"1", "2", "3"});
    r.artifacts.push_back(out / "populations.csv");
    r.summary["control_final"] = populations_json(tr.final_state(), m);
  }
  write_manifest("atas", cfg, r);
  return r;
}

RunResult cmd_fit_pulse(RunConfig cfg) {
  require_composite(cfg, "fit-pulse");
  const Model m = build_model(cfg);
  resolve_carriers(cfg, m);
  const fs::path out = prepare_output(cfg);
  const auto fields = control_fields(cfg);
  const auto t = sample_times(cfg, 0.5);
  json fp, fs_;
  const GaussianParams gp = fitted_params(fields[0].envelope, t, fields[0].carrier_ev, fields[0].phase, fp);
  const GaussianParams gs = fitted_params(fields[1].envelope, t, fields[1].carrier_ev, fields[1].phase, fs_);
  const Envelope ep = Envelope::from(gp), es = Envelope::from(gs);

  std::ostringstream os;
  os << "t_fs,pump_au,stokes_au,pump_fit_au,stokes_fit_au\n";
  for (double x : t)
    os << io::format_double(x) << ',' << io::format_double(fields[0].envelope(x)) << ','
       << io::format_double(fields[1].envelope(x)) << ',' << io::format_double(ep(x)) << ','
       << io::format_double(es(x)) << '\n';
  RunResult r;
  io::write_file(out / "envelopes.csv", os.str());
  r.artifacts.push_back(out / "envelopes.csv");
  r.summary = {{"pump", fp}, {"stokes", fs_}, {"delta_t_fs", gs.center_fs - gp.center_fs}};
  io::write_file(out / "fit.json", r.summary.dump(2) + "\n");
  r.artifacts.push_back(out / "fit.json");
  write_manifest("fit-pulse", cfg, r);
  return r;
}

RunResult cmd_design_pulse(RunConfig cfg) {
  require_composite(cfg, "design-pulse");
  const Model m = build_model(cfg);
  resolve_carriers(cfg, m);
  const fs::path out = prepare_output(cfg);
  const auto fields = control_fields(cfg);
  const auto t = sample_times(cfg, 0.1);
  const double mu_p = m.dipoles(m.states[0], m.states[1]), mu_s = m.dipoles(m.states[1], m.states[2]);
  RunResult r;
  export_envelopes_csv(out / "envelopes.csv", fields[0].envelope, fields[1].envelope, mu_p, mu_s, t);
  r.artifacts.push_back(out / "envelopes.csv");
  const auto& cp = cfg.control.composite;
  const auto res = stirap_boundary_residuals(fields[0].envelope, fields[1].envelope, cp.alpha, cp.beta, t);
  r.summary = {{"alpha_rad", cp.alpha},
               {"beta_rad", cp.beta},
               {"boundary_residual_initial", res.initial},
               {"boundary_residual_final", res.final},
               {"peak_rabi_pump_au", std::abs(mu_p) * fields[0].envelope.amplitude()},
               {"peak_rabi_stokes_au", std::abs(mu_s) * fields[1].envelope.amplitude()}};
  io::write_file(out / "design.json", r.summary.dump(2) + "\n");
  r.artifacts.push_back(out / "design.json");
  write_manifest("design-pulse", cfg, r);
  return r;
}

void write_manifest(const std::string& command, const RunConfig& cfg, RunResult& result) {
  json inputs = json::object();
  auto add_input = [&](const char* key, const fs::path& p) {
    if (!p.empty()) inputs[key] = {{"path", p.string()}, {"sha256", io::sha256_file(p)}};
  };
  add_input("levels", cfg.levels_path);
  add_input("dipole_overrides", cfg.dipole_overrides_path);
  add_input("lines", cfg.lines_path);

  json artifacts = json::array();
  for (const auto& p : result.artifacts)
    artifacts.push_back({{"file", p.filename().string()}, {"sha256", io::sha256_file(p)}});

  const json manifest{{"command", command},
                      {"config", cfg.to_json()},
                      {"inputs", inputs},
                      {"artifacts", artifacts},
                      {"summary", result.summary}};
  const fs::path path = cfg.output_dir / "manifest.json";
  io::write_file(path, manifest.dump(2) + "\n");
  result.artifacts.push_back(path);
}

}  // namespace stirap
