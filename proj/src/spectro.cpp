#include "stirap/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/FFT>
#include <json.hpp>

#include "stirap/error.hpp"
#include "stirap/io.hpp"
#include "stirap/parallel.hpp"
#include "stirap/units.hpp"

namespace stirap {

std::vector<double> apply_window(const std::vector<double>& series, const std::vector<double>& t_fs,
                                 double t_probe_fs, double tau_fs) {
  if (series.size() != t_fs.size()) throw InputError("window: series and time grid differ in length");
  if (!(tau_fs > 0.0)) throw InputError("window decay time must be positive");
  std::vector<double> out = series;
  if (std::isinf(tau_fs)) return out;
  for (std::size_t k = 0; k < out.size(); ++k)
    if (t_fs[k] > t_probe_fs) out[k] *= std::exp(-(t_fs[k] - t_probe_fs) / tau_fs);
  return out;
}

std::vector<std::complex<double>> fourier(const std::vector<double>& series, double t0_fs, double dt_fs,
                                          const std::vector<double>& energies_ev) {
  std::vector<std::complex<double>> out(energies_ev.size());
  const double dt_au = units::fs_to_au(dt_fs);
  for (std::size_t j = 0; j < energies_ev.size(); ++j) {
    const double w = units::ev_to_au(energies_ev[j]);
    std::complex<double> s = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
      if (series[k] == 0.0) continue;
      const double t = units::fs_to_au(t0_fs) + static_cast<double>(k) * dt_au;
      s += series[k] * std::polar(1.0, w * t);
    }
    out[j] = s * dt_au;
  }
  return out;
}

std::vector<double> cross_section(const std::vector<double>& dipole, const std::vector<double>& probe_field,
                                  double t0_fs, double dt_fs, double t_probe_fs, double tau_fs,
                                  const std::vector<double>& energies_ev, double floor) {
  if (dipole.size() != probe_field.size()) throw InputError("dipole and probe series differ in length");
  std::vector<double> t(dipole.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = t0_fs + static_cast<double>(k) * dt_fs;
  const auto dw = fourier(apply_window(dipole, t, t_probe_fs, tau_fs), t0_fs, dt_fs, energies_ev);
  const auto ew = fourier(probe_field, t0_fs, dt_fs, energies_ev);
  std::vector<double> sigma(energies_ev.size());
  for (std::size_t j = 0; j < sigma.size(); ++j) {
    if (!(std::abs(ew[j]) > floor)) {
      std::ostringstream os;
      os << "probe spectrum vanishes at " << energies_ev[j] << " eV";
      throw NumericError(os.str());
    }
    const double w = units::ev_to_au(energies_ev[j]);
    sigma[j] = 4.0 * units::kPi * w / units::kSpeedOfLightAu * std::imag(dw[j] / ew[j]);
  }
  return sigma;
}

double parseval_mismatch(const std::vector<double>& series) {
  if (series.empty()) return 0.0;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, series);
  double et = 0.0, ef = 0.0;
  for (double x : series) et += x * x;
  // the real-input transform returns the full spectrum unless half-spectrum mode is on
  for (const auto& c : spec) ef += std::norm(c);
  ef /= static_cast<double>(series.size());
  if (et == 0.0) return ef;
  return std::abs(et - ef) / et;
}

std::vector<Peak> find_peaks(const std::vector<double>& e, const std::vector<double>& v, double relative_threshold) {
  if (e.size() != v.size()) throw InputError("peak finder: grid and values differ in length");
  std::vector<Peak> peaks;
  if (v.size() < 3) return peaks;
  const double top = *std::max_element(v.begin(), v.end());
  if (!(top > 0.0)) return peaks;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (!(v[i] > v[i - 1] && v[i] >= v[i + 1]) || v[i] < relative_threshold * top) continue;
    const double a = v[i - 1], b = v[i], c = v[i + 1];
    const double denom = a - 2 * b + c;
    double shift = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
    shift = std::clamp(shift, -0.5, 0.5);
    const double h = e[i + 1] - e[i];
    peaks.push_back({e[i] + shift * h, b - 0.25 * (a - c) * shift});
  }
  return peaks;
}

std::vector<SpectralLine> load_lines(const std::filesystem::path& path) {
  const auto table = io::parse_csv(io::read_file(path));
  const int s = table.column("symbol"), en = table.column("energy_eV");
  if (s < 0 || en < 0) throw ParseError(path.string() + ": need columns symbol and energy_eV");
  std::vector<SpectralLine> out;
  for (const auto& row : table.rows) {
    if (static_cast<int>(row.fields.size()) <= std::max(s, en))
      throw ParseError(path.string() + ":" + std::to_string(row.line) + ": missing field");
    try {
      out.push_back({row.fields[s], std::stod(row.fields[en])});
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(row.line) + ": bad energy '" + row.fields[en] + "'");
    }
  }
  return out;
}

void Spectrogram::export_csv(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << "energy_eV";
  for (double d : delays_fs) os << ',' << io::format_double(d);
  os << '\n';
  for (std::size_t j = 0; j < energies_ev.size(); ++j) {
    os << io::format_double(energies_ev[j]);
    for (std::size_t i = 0; i < delays_fs.size(); ++i) os << ',' << io::format_double(sigma[i][j]);
    os << '\n';
  }
  io::write_file(path, os.str());
}

void Spectrogram::export_peaks_json(const std::filesystem::path& path) const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : lines) {
    nlohmann::json j;
    j["label"] = l.line.symbol;
    j["energy_eV"] = l.line.energy_ev;
    if (std::isfinite(l.found_energy_ev))
      j["found_energy_eV"] = l.found_energy_ev;
    else
      j["found_energy_eV"] = nullptr;
    j["delay_trace"] = nlohmann::json::array();
    for (std::size_t i = 0; i < delays_fs.size(); ++i)
      j["delay_trace"].push_back({{"delay_fs", delays_fs[i]}, {"sigma", l.peak_values[i]}});
    out.push_back(std::move(j));
  }
  io::write_file(path, out.dump(2) + "\n");
}

std::vector<ControlField> ProbeSettings::fields(double delay_fs) const {
  std::vector<ControlField> out;
  // carrier phases are fixed relative to the probe center, so the waveform is
  // rigidly translated with the delay
  for (double c : carriers_ev) {
    const double shift = units::ev_to_au(c) * units::fs_to_au(delay_fs);
    out.push_back(make_field(GaussianParams{intensity_tw, delay_fs, width_fs, c, phase - shift}, FieldRole::Probe));
  }
  return out;
}

namespace {

std::size_t nearest_index(const std::vector<double>& grid, double x) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), x);
  if (it == grid.begin()) return 0;
  if (it == grid.end()) return grid.size() - 1;
  const auto i = static_cast<std::size_t>(it - grid.begin());
  return (x - grid[i - 1] <= grid[i] - x) ? i - 1 : i;
}

}  // namespace

Spectrogram atas_scan(const AtasSetup& s, const std::vector<double>& delays) {
  if (!s.dipoles) throw InputError("ATAS scan needs a dipole table");
  if (delays.empty()) throw InputError("ATAS scan needs at least one delay");
  if (!(s.e_step_ev > 0.0) || !(s.e_max_ev > s.e_min_ev)) throw InputError("invalid energy grid");
  for (double d : delays)
    if (d - s.lead_fs < s.t_start_fs)
      throw InputError("probe delay " + std::to_string(d) + " fs lies before the propagation window");

  Spectrogram out;
  out.delays_fs = delays;
  const auto ne = static_cast<std::size_t>(std::llround((s.e_max_ev - s.e_min_ev) / s.e_step_ev)) + 1;
  out.energies_ev = linspace(s.e_min_ev, s.e_min_ev + s.e_step_ev * static_cast<double>(ne - 1), ne);

  const double t_end = *std::max_element(delays.begin(), delays.end()) + s.span_after_fs;
  const TimeGrid ref_grid = TimeGrid::make(s.t_start_fs, t_end, s.dt_as);
  const Eigen::MatrixXd& mu = s.dipoles->matrix();
  const Propagator reference = Propagator::lab_frame(*s.dipoles, s.control);
  PropagationOptions ref_opt;
  ref_opt.store_stride_fs = 0.0;
  ref_opt.record_dipole = true;
  ref_opt.dipole = &mu;
  const Trajectory ref = reference.run(s.initial, ref_grid, ref_opt);

  out.sigma.assign(delays.size(), {});
  parallel_for(delays.size(), s.threads, [&](std::size_t i) {
    const double t0 = delays[i];
    const auto k0 = static_cast<std::size_t>(std::floor((t0 - s.lead_fs - s.t_start_fs) / ref_grid.dt_fs()));
    const auto k1 = std::min(ref_grid.n_steps,
                             static_cast<std::size_t>(std::ceil((t0 + s.span_after_fs - s.t_start_fs) / ref_grid.dt_fs())));
    TimeGrid g;
    g.t_start_fs = ref_grid.time_fs(k0);
    g.dt_as = s.dt_as;
    g.n_steps = k1 - k0;
    g.t_end_fs = g.time_fs(g.n_steps);

    auto fields = s.control;
    const auto probe = s.probe.fields(t0);
    fields.insert(fields.end(), probe.begin(), probe.end());
    const Propagator prop = Propagator::lab_frame(*s.dipoles, fields);
    PropagationOptions opt;
    opt.store_stride_fs = 1e9;
    opt.record_dipole = true;
    opt.dipole = &mu;
    const Trajectory tr = prop.run(ref.amplitudes[k0], g, opt);

    std::vector<double> dd(tr.dipole.size()), ep(tr.dipole.size());
    for (std::size_t k = 0; k < dd.size(); ++k) {
      dd[k] = tr.dipole[k] - ref.dipole[k0 + k];
      double e = 0.0;
      for (const auto& f : probe) e += f.value(g.time_fs(k));
      ep[k] = e;
    }
    out.sigma[i] = cross_section(dd, ep, g.t_start_fs, g.dt_fs(), t0, s.tau_fs, out.energies_ev);
  });

  std::vector<double> mean(out.energies_ev.size(), 0.0);
  for (const auto& col : out.sigma)
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += col[j] / static_cast<double>(out.sigma.size());
  const auto peaks = find_peaks(out.energies_ev, mean);
  for (const auto& line : s.lines) {
    if (line.energy_ev < s.e_min_ev || line.energy_ev > s.e_max_ev) continue;
    LineTrace tr;
    tr.line = line;
    tr.found_energy_ev = std::numeric_limits<double>::quiet_NaN();
    double best = s.line_tolerance_ev;
    for (const auto& p : peaks) {
      if (std::abs(p.energy_ev - line.energy_ev) <= best) {
        best = std::abs(p.energy_ev - line.energy_ev);
        tr.found_energy_ev = p.energy_ev;
      }
    }
    const std::size_t j =
        nearest_index(out.energies_ev, std::isfinite(tr.found_energy_ev) ? tr.found_energy_ev : line.energy_ev);
    for (const auto& col : out.sigma) tr.peak_values.push_back(col[j]);
    out.lines.push_back(std::move(tr));
  }
  return out;
}

namespace {

struct SinusoidFit {
  Eigen::Vector3d coef;  // mean, cosine, sine
  double residual = 0.0;
};

SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& y, double period) {
  if (t.size() != y.size() || t.size() < 3) throw InputError("oscillation fit needs at least three samples");
  const double w = 2.0 * units::kPi / period;
  Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(t.size()));
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    a(r, 0) = 1.0;
    a(r, 1) = std::cos(w * t[k]);
    a(r, 2) = std::sin(w * t[k]);
    b[r] = y[k];
  }
  SinusoidFit f;
  f.coef = a.colPivHouseholderQr().solve(b);
  f.residual = (a * f.coef - b).squaredNorm();
  return f;
}

}  // namespace

Oscillation fit_fixed_period(const std::vector<double>& t, const std::vector<double>& y, double period) {
  const auto f = fit_sinusoid(t, y, period);
  return {period, std::hypot(f.coef[1], f.coef[2]), f.coef[0]};
}

Oscillation fit_oscillation(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw InputError("invalid period range");
  auto cost = [&](double period) { return fit_sinusoid(t, y, period).residual; };
  const int n = 400;
  double best_p = lo, best_c = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    const double p = lo + (hi - lo) * i / n;
    const double c = cost(p);
    if (c < best_c) {
      best_c = c;
      best_p = p;
    }
  }
  const double h = (hi - lo) / n;
  double a = std::max(lo, best_p - h), b = std::min(hi, best_p + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  for (int it = 0; it < 100 && b - a > 1e-10 * best_p; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = cost(x2);
    }
  }
  return fit_fixed_period(t, y, 0.5 * (a + b));
}

}  // namespace stirap
