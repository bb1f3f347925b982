#include "stirap/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "stirap/error.hpp"
#include "stirap/io.hpp"
#include "stirap/units.hpp"

namespace stirap {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Reads the members of one JSON object and rejects the ones nobody asked for.
class Obj {
 public:
  Obj(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InputError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw InputError(where_ + ": missing '" + key + "'");
    return j_.at(key);
  }

  double num(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& v = j_.at(key);
    if (v.is_null()) return kNaN;
    if (!v.is_number()) throw InputError(where_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  double num(const std::string& key) {
    const double v = num(key, kNaN);
    if (!j_.contains(key)) throw InputError(where_ + ": missing '" + key + "'");
    return v;
  }

  double finite(const std::string& key, double fallback) {
    const double v = num(key, fallback);
    if (!std::isfinite(v)) throw InputError(where_ + "." + key + ": must be finite");
    return v;
  }

  double positive(const std::string& key, double fallback) {
    const double v = finite(key, fallback);
    if (!(v > 0.0)) throw InputError(where_ + "." + key + ": must be positive");
    return v;
  }

  /// `<base>_rad` or `<base>_pi` (multiples of π).
  double angle(const std::string& base, double fallback) {
    const bool r = j_.contains(base + "_rad"), p = j_.contains(base + "_pi");
    seen_.insert(base + "_rad");
    seen_.insert(base + "_pi");
    if (r && p) throw InputError(where_ + ": give either " + base + "_rad or " + base + "_pi");
    if (r) return finite(base + "_rad", 0.0);
    if (p) return finite(base + "_pi", 0.0) * units::kPi;
    return fallback;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_string()) throw InputError(where_ + "." + key + ": expected a string");
    return j_.at(key).get<std::string>();
  }

  bool flag(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw InputError(where_ + "." + key + ": expected true or false");
    return j_.at(key).get<bool>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw InputError(where_ + "." + key + ": expected a non-negative integer");
    return v.get<std::size_t>();
  }

  Obj child(const std::string& key) { return Obj(at(key), where_ + "." + key); }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw InputError(where_ + ": unknown key '" + k + "'");
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

fs::path resolve_path(const std::string& text, const fs::path& base_dir, const std::string& what) {
  const fs::path p(text);
  if (p.is_absolute()) {
    if (!fs::exists(p)) throw InputError(what + ": file not found: " + text);
    return p;
  }
  if (!base_dir.empty() && fs::exists(base_dir / p)) return fs::absolute(base_dir / p).lexically_normal();
  if (fs::exists(p)) return fs::absolute(p).lexically_normal();
  const fs::path data = fs::path(STIRAP_DATA_DIR) / p;
  if (fs::exists(data)) return data.lexically_normal();
  throw InputError(what + ": file not found: " + text);
}

Scenario parse_scenario(const std::string& s) {
  if (s == "three_level") return Scenario::ThreeLevel;
  if (s == "xe_xuv") return Scenario::XeXuv;
  if (s == "xe_xray") return Scenario::XeXray;
  if (s == "custom") return Scenario::Custom;
  throw InputError("unknown scenario '" + s + "' (three_level, xe_xuv, xe_xray, custom)");
}

const char* kGround32 = "5s2.5p5 2P*3/2";
const char* kGround12 = "5s2.5p5 2P*1/2";

void scenario_defaults(RunConfig& c) {
  const fs::path data(STIRAP_DATA_DIR);
  switch (c.scenario) {
    case Scenario::ThreeLevel:
      c.levels_path = data / "three_level.csv";
      c.dipole_overrides_path = data / "three_level_dipoles.csv";
      c.states = {kGround32, "5s.5p6 2S1/2", kGround12};
      c.model = ModelKind::ThreeLevel;
      break;
    case Scenario::XeXuv:
      c.levels_path = data / "xe_levels.csv";
      c.lines_path = data / "xe_lines.csv";
      c.states = {kGround32, "5s.5p6 2S1/2", kGround12};
      c.model = ModelKind::Full;
      break;
    case Scenario::XeXray:
      c.levels_path = data / "xe_levels.csv";
      c.lines_path = data / "xe_lines.csv";
      c.states = {kGround32, "4s.5s2.5p6 2S1/2", kGround12};
      c.model = ModelKind::Full;
      break;
    case Scenario::Custom:
      break;
  }
}

GaussianParams parse_gaussian(Obj o) {
  GaussianParams g;
  g.peak_intensity_tw = o.finite("intensity_tw_cm2", 0.0);
  g.center_fs = o.finite("center_fs", 0.0);
  g.width_fs = o.positive("gamma_fs", 1.0);
  g.carrier_ev = o.num("carrier_ev", kNaN);
  g.phase = o.angle("phase", 0.0);
  if (g.peak_intensity_tw < 0.0) throw InputError(o.where() + ".intensity_tw_cm2: must be non-negative");
  o.done();
  return g;
}

json gaussian_json(const GaussianParams& g) {
  return {{"intensity_tw_cm2", g.peak_intensity_tw}, {"center_fs", g.center_fs}, {"gamma_fs", g.width_fs},
          {"carrier_ev", std::isfinite(g.carrier_ev) ? json(g.carrier_ev) : json(nullptr)},
          {"phase_rad", g.phase}};
}

json maybe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Config spelling of the scan axes and the scanner's parameter names.
const std::map<std::string, std::string> kAxisNames = {{"alpha_rad", "alpha"},
                                                       {"phi_rad", "phi"},
                                                       {"delta_t_fs", "delta_t_fs"},
                                                       {"intensity_tw_cm2", "intensity_tw"},
                                                       {"gamma_fs", "gamma_fs"}};

std::string axis_config_name(const std::string& internal) {
  for (const auto& [k, v] : kAxisNames)
    if (v == internal) return k;
  throw InputError("unknown scan axis '" + internal + "'");
}

std::string axis_internal_name(const std::string& name, const std::string& where) {
  auto it = kAxisNames.find(name);
  if (it == kAxisNames.end())
    throw InputError(where + ": unknown axis '" + name +
                     "' (alpha_rad, phi_rad, delta_t_fs, intensity_tw_cm2, gamma_fs)");
  return it->second;
}

ScanAxis parse_axis(Obj o) {
  ScanAxis a;
  a.name = axis_internal_name(o.str("name", ""), o.where());
  const bool angular = a.name == "alpha" || a.name == "phi";
  a.lo = angular ? o.angle("lo", kNaN) : o.finite("lo", kNaN);
  a.hi = angular ? o.angle("hi", kNaN) : o.finite("hi", kNaN);
  if (!std::isfinite(a.lo) || !std::isfinite(a.hi)) throw InputError(o.where() + ": lo and hi are required");
  a.n = o.count("n", 0);
  if (a.n < 2) throw InputError(o.where() + ".n: at least 2 points per axis");
  o.done();
  return a;
}

json axis_json(const ScanAxis& a) {
  const bool angular = a.name == "alpha" || a.name == "phi";
  json j{{"name", axis_config_name(a.name)}, {"n", a.n}};
  j[angular ? "lo_rad" : "lo"] = a.lo;
  j[angular ? "hi_rad" : "hi"] = a.hi;
  return j;
}

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::ThreeLevel: return "three_level";
    case Scenario::XeXuv: return "xe_xuv";
    case Scenario::XeXray: return "xe_xray";
    case Scenario::Custom: return "custom";
  }
  return "custom";
}

RunConfig parse_config(const json& root, const fs::path& base_dir) {
  if (root.is_object() && root.contains("config") && root.contains("artifacts"))
    return parse_config(root.at("config"), base_dir);

  Obj o(root, "config");
  RunConfig c;
  c.scenario = parse_scenario(o.str("scenario", "custom"));
  scenario_defaults(c);

  if (o.has("levels_path")) c.levels_path = resolve_path(o.str("levels_path", ""), base_dir, "levels_path");
  if (c.levels_path.empty()) throw InputError("config: levels_path is required for a custom scenario");
  if (!fs::exists(c.levels_path)) throw InputError("levels_path: file not found: " + c.levels_path.string());
  if (o.has("dipole_overrides_path")) {
    const std::string s = o.str("dipole_overrides_path", "");
    c.dipole_overrides_path = s.empty() ? fs::path() : resolve_path(s, base_dir, "dipole_overrides_path");
  }
  if (o.has("lines_path")) {
    const std::string s = o.str("lines_path", "");
    c.lines_path = s.empty() ? fs::path() : resolve_path(s, base_dir, "lines_path");
  }
  c.z_charge = o.positive("z_charge", c.z_charge);
  c.m_projection = o.finite("m_projection", c.m_projection);

  if (o.has("states")) {
    Obj s = o.child("states");
    c.states = {s.str("s1", ""), s.str("s2", ""), s.str("s3", "")};
    s.done();
  }
  for (const auto& s : c.states)
    if (s.empty()) throw InputError("config.states: s1, s2 and s3 are required");

  const std::string coupling = o.str("coupling", c.model == ModelKind::Full ? "full" : "three_level");
  if (coupling == "full")
    c.model = ModelKind::Full;
  else if (coupling == "three_level")
    c.model = ModelKind::ThreeLevel;
  else
    throw InputError("config.coupling: expected 'three_level' or 'full'");

  if (o.has("initial_state")) {
    Obj i = o.child("initial_state");
    c.initial.alpha = i.angle("alpha", 0.0);
    c.initial.relative_phase = i.angle("relative_phase", 0.0);
    if (i.has("amplitudes")) {
      const json& a = i.at("amplitudes");
      if (!a.is_array() || a.size() != 3) throw InputError("initial_state.amplitudes: expected three [re, im] pairs");
      std::array<std::complex<double>, 3> amp;
      double norm = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        if (!a[k].is_array() || a[k].size() != 2 || !a[k][0].is_number() || !a[k][1].is_number())
          throw InputError("initial_state.amplitudes: expected three [re, im] pairs");
        amp[k] = {a[k][0].get<double>(), a[k][1].get<double>()};
        norm += std::norm(amp[k]);
      }
      if (std::abs(norm - 1.0) > 1e-10) throw InputError("initial_state.amplitudes: not normalized");
      c.initial.amplitudes = amp;
    }
    i.done();
  }

  if (o.has("control")) {
    Obj k = o.child("control");
    const std::string type = k.str("type", "none");
    auto& ctl = c.control;
    if (type == "none") {
      ctl.kind = ControlKind::None;
    } else if (type == "gaussian") {
      ctl.kind = ControlKind::Gaussian;
      ctl.pump = parse_gaussian(k.child("pump"));
      ctl.stokes = parse_gaussian(k.child("stokes"));
    } else if (type == "composite") {
      ctl.kind = ControlKind::Composite;
      auto& cp = ctl.composite;
      cp.alpha = k.angle("alpha", kNaN);
      cp.beta = k.angle("beta", kNaN);
      if (!std::isfinite(cp.alpha) || !std::isfinite(cp.beta))
        throw InputError("config.control: composite pulses need alpha and beta");
      cp.pump_intensity_tw = k.finite("pump_intensity_tw_cm2", 0.0);
      cp.stokes_intensity_tw = k.finite("stokes_intensity_tw_cm2", 0.0);
      cp.t_left_fs = k.finite("t_left_fs", 0.0);
      cp.t_right_fs = k.finite("t_right_fs", 0.0);
      cp.gamma_left_fs = k.positive("gamma_left_fs", 1.0);
      cp.gamma_right_fs = k.positive("gamma_right_fs", 1.0);
      cp.compare_fit = k.flag("compare_fit", false);
      ctl.pump_carrier_ev = k.num("pump_carrier_ev", kNaN);
      ctl.stokes_carrier_ev = k.num("stokes_carrier_ev", kNaN);
      ctl.stokes_phase = k.angle("stokes_phase", 0.0);
      if (cp.pump_intensity_tw < 0.0 || cp.stokes_intensity_tw < 0.0)
        throw InputError("config.control: intensities must be non-negative");
    } else if (type == "twin") {
      ctl.kind = ControlKind::Twin;
      auto& t = ctl.twin;
      t.intensity_tw = k.finite("intensity_tw_cm2", t.intensity_tw);
      t.gamma_fs = k.positive("gamma_fs", t.gamma_fs);
      t.delta_t_fs = k.finite("delta_t_fs", 0.0);
      t.phi = k.angle("phi", 0.0);
      ctl.twin_center_fs = k.finite("center_fs", 0.5 * (c.grid.t_start_fs + c.grid.t_end_fs));
      ctl.pump_carrier_ev = k.num("pump_carrier_ev", kNaN);
      ctl.stokes_carrier_ev = k.num("stokes_carrier_ev", kNaN);
      if (t.intensity_tw < 0.0) throw InputError("config.control.intensity_tw_cm2: must be non-negative");
    } else {
      throw InputError("config.control.type: expected none, gaussian, composite or twin");
    }
    k.done();
  }

  if (o.has("probe")) {
    Obj p = o.child("probe");
    ProbeSettings ps;
    if (p.has("carriers_ev")) {
      const json& cj = p.at("carriers_ev");
      if (!cj.is_array() || cj.empty()) throw InputError("probe.carriers_ev: expected a non-empty array");
      ps.carriers_ev.clear();
      for (const auto& v : cj) {
        if (!v.is_number()) throw InputError("probe.carriers_ev: expected numbers");
        ps.carriers_ev.push_back(v.get<double>());
      }
    }
    ps.intensity_tw = p.finite("intensity_tw_cm2", ps.intensity_tw);
    ps.width_fs = p.positive("gamma_fs", ps.width_fs);
    ps.phase = p.angle("phase", 0.0);
    if (ps.intensity_tw <= 0.0) throw InputError("probe.intensity_tw_cm2: must be positive");
    p.done();
    c.probe = ps;
  }

  if (o.has("grid")) {
    Obj g = o.child("grid");
    c.grid.t_start_fs = g.finite("t_start_fs", c.grid.t_start_fs);
    c.grid.t_end_fs = g.finite("t_end_fs", c.grid.t_end_fs);
    c.grid.dt_as = g.positive("dt_as", c.grid.dt_as);
    c.grid.store_stride_fs = g.finite("store_stride_fs", c.grid.store_stride_fs);
    if (c.grid.t_end_fs <= c.grid.t_start_fs) throw InputError("config.grid: t_end_fs must exceed t_start_fs");
    if (c.grid.store_stride_fs < 0.0) throw InputError("config.grid.store_stride_fs: must be non-negative");
    g.done();
    // a twin pair without an explicit centre sits in the middle of the grid
    if (c.control.kind == ControlKind::Twin && !root.at("control").contains("center_fs"))
      c.control.twin_center_fs = 0.5 * (c.grid.t_start_fs + c.grid.t_end_fs);
  }

  if (o.has("scan")) {
    Obj s = o.child("scan");
    ScanBlock sb;
    sb.axis1 = parse_axis(s.child("axis1"));
    sb.axis2 = parse_axis(s.child("axis2"));
    if (sb.axis1.name == sb.axis2.name) throw InputError("config.scan: the two axes must differ");
    sb.margin_gamma = s.positive("margin_gamma", sb.margin_gamma);
    if (s.has("optimize")) {
      Obj op = s.child("optimize");
      OptimizeBlock ob;
      ob.target_beta = op.angle("target_beta", kNaN);
      if (!std::isfinite(ob.target_beta)) throw InputError("scan.optimize: target_beta_rad is required");
      Obj fr = op.child("free");
      for (const auto& [name, range] : op.at("free").items()) {
        if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number())
          throw InputError("scan.optimize.free." + name + ": expected [lo, hi]");
        ob.free[axis_internal_name(name, "scan.optimize.free")] = {range[0].get<double>(), range[1].get<double>()};
        fr.at(name);
      }
      fr.done();
      ob.coarse_points = op.count("coarse_points", ob.coarse_points);
      op.done();
      sb.optimize = ob;
    }
    s.done();
    c.scan = sb;
  }

  if (o.has("atas")) {
    Obj a = o.child("atas");
    AtasBlock ab;
    Obj d = a.child("delays_fs");
    ab.delay_start_fs = d.finite("start", kNaN);
    ab.delay_stop_fs = d.finite("stop", kNaN);
    ab.delay_count = d.count("count", 0);
    d.done();
    if (ab.delay_count < 1) throw InputError("atas.delays_fs.count: at least one delay");
    ab.tau_fs = a.positive("tau_fs", ab.tau_fs);
    ab.span_after_fs = a.positive("span_after_fs", ab.span_after_fs);
    ab.lead_fs = a.finite("lead_fs", ab.lead_fs);
    if (a.has("energy_ev")) {
      Obj e = a.child("energy_ev");
      ab.e_min_ev = e.finite("min", ab.e_min_ev);
      ab.e_max_ev = e.finite("max", ab.e_max_ev);
      ab.e_step_ev = e.positive("step", ab.e_step_ev);
      e.done();
    }
    ab.line_tolerance_ev = a.positive("line_tolerance_ev", ab.line_tolerance_ev);
    a.done();
    c.atas = ab;
  }

  if (o.has("outputs")) {
    Obj out = o.child("outputs");
    c.output_dir = out.str("directory", c.output_dir.string());
    c.dipole_binary = out.flag("dipole_binary", c.dipole_binary);
    out.done();
  }
  c.seed = o.count("seed", c.seed);
  c.threads = static_cast<unsigned>(o.count("threads", c.threads));
  o.done();
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["scenario"] = to_string(scenario);
  j["levels_path"] = levels_path.string();
  j["dipole_overrides_path"] = dipole_overrides_path.string();
  j["lines_path"] = lines_path.string();
  j["z_charge"] = z_charge;
  j["m_projection"] = m_projection;
  j["states"] = {{"s1", states[0]}, {"s2", states[1]}, {"s3", states[2]}};
  j["coupling"] = model == ModelKind::Full ? "full" : "three_level";

  json init{{"alpha_rad", initial.alpha}, {"relative_phase_rad", initial.relative_phase}};
  if (initial.amplitudes) {
    init["amplitudes"] = json::array();
    for (const auto& a : *initial.amplitudes) init["amplitudes"].push_back({a.real(), a.imag()});
  }
  j["initial_state"] = init;

  json ctl;
  switch (control.kind) {
    case ControlKind::None:
      ctl = {{"type", "none"}};
      break;
    case ControlKind::Gaussian:
      ctl = {{"type", "gaussian"}, {"pump", gaussian_json(control.pump)}, {"stokes", gaussian_json(control.stokes)}};
      break;
    case ControlKind::Composite: {
      const auto& cp = control.composite;
      ctl = {{"type", "composite"},
             {"alpha_rad", cp.alpha},
             {"beta_rad", cp.beta},
             {"pump_intensity_tw_cm2", cp.pump_intensity_tw},
             {"stokes_intensity_tw_cm2", cp.stokes_intensity_tw},
             {"t_left_fs", cp.t_left_fs},
             {"t_right_fs", cp.t_right_fs},
             {"gamma_left_fs", cp.gamma_left_fs},
             {"gamma_right_fs", cp.gamma_right_fs},
             {"compare_fit", cp.compare_fit},
             {"pump_carrier_ev", maybe(control.pump_carrier_ev)},
             {"stokes_carrier_ev", maybe(control.stokes_carrier_ev)},
             {"stokes_phase_rad", control.stokes_phase}};
      break;
    }
    case ControlKind::Twin:
      ctl = {{"type", "twin"},
             {"intensity_tw_cm2", control.twin.intensity_tw},
             {"gamma_fs", control.twin.gamma_fs},
             {"delta_t_fs", control.twin.delta_t_fs},
             {"phi_rad", control.twin.phi},
             {"center_fs", control.twin_center_fs},
             {"pump_carrier_ev", maybe(control.pump_carrier_ev)},
             {"stokes_carrier_ev", maybe(control.stokes_carrier_ev)}};
      break;
  }
  j["control"] = ctl;

  if (probe)
    j["probe"] = {{"carriers_ev", probe->carriers_ev},
                  {"intensity_tw_cm2", probe->intensity_tw},
                  {"gamma_fs", probe->width_fs},
                  {"phase_rad", probe->phase}};
  j["grid"] = {{"t_start_fs", grid.t_start_fs},
               {"t_end_fs", grid.t_end_fs},
               {"dt_as", grid.dt_as},
               {"store_stride_fs", grid.store_stride_fs}};
  if (scan) {
    json s{{"axis1", axis_json(scan->axis1)},
           {"axis2", axis_json(scan->axis2)},
           {"margin_gamma", scan->margin_gamma}};
    if (scan->optimize) {
      json fr = json::object();
      for (const auto& [k, v] : scan->optimize->free) fr[axis_config_name(k)] = {v.first, v.second};
      s["optimize"] = {{"target_beta_rad", scan->optimize->target_beta},
                       {"free", fr},
                       {"coarse_points", scan->optimize->coarse_points}};
    }
    j["scan"] = s;
  }
  if (atas)
    j["atas"] = {{"delays_fs", {{"start", atas->delay_start_fs}, {"stop", atas->delay_stop_fs}, {"count", atas->delay_count}}},
                 {"tau_fs", atas->tau_fs},
                 {"span_after_fs", atas->span_after_fs},
                 {"lead_fs", atas->lead_fs},
                 {"energy_ev", {{"min", atas->e_min_ev}, {"max", atas->e_max_ev}, {"step", atas->e_step_ev}}},
                 {"line_tolerance_ev", atas->line_tolerance_ev}};
  j["outputs"] = {{"directory", output_dir.string()}, {"dipole_binary", dipole_binary}};
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

fs::path preset_path(const std::string& name) {
  if (name.empty() || name.find('/') != std::string::npos || name.find('.') != std::string::npos)
    throw InputError("bad preset name '" + name + "'");
  const fs::path p = fs::path(STIRAP_PRESET_DIR) / (name + ".json");
  if (!fs::exists(p)) throw InputError("unknown preset '" + name + "'");
  return p;
}

RunConfig load_preset(const std::string& name) { return load_config(preset_path(name)); }

}  // namespace stirap
