#include "stirap/scanner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "stirap/error.hpp"
#include "stirap/io.hpp"
#include "stirap/parallel.hpp"
#include "stirap/units.hpp"

namespace stirap {

std::vector<ControlField> TwinPulses::fields(double t_mid_fs) const {
  const double t_p = t_mid_fs - 0.5 * delta_t_fs;
  const double t_s = t_mid_fs + 0.5 * delta_t_fs;
  return {make_field(GaussianParams{intensity_tw, t_p, gamma_fs, pump_ev, 0.0}, FieldRole::Pump),
          make_field(GaussianParams{intensity_tw, t_s, gamma_fs, stokes_ev, phi}, FieldRole::Stokes)};
}

double TwinPulses::get(const std::string& name) const {
  if (name == "delta_t_fs") return delta_t_fs;
  if (name == "phi") return phi;
  if (name == "intensity_tw") return intensity_tw;
  if (name == "gamma_fs") return gamma_fs;
  throw InputError("unknown pulse parameter '" + name + "'");
}

void TwinPulses::set(const std::string& name, double value) {
  if (name == "delta_t_fs")
    delta_t_fs = value;
  else if (name == "phi")
    phi = value;
  else if (name == "intensity_tw")
    intensity_tw = value;
  else if (name == "gamma_fs")
    gamma_fs = value;
  else
    throw InputError("unknown pulse parameter '" + name + "'");
}

Eigen::VectorXcd TransferModel::initial(double alpha) const {
  if (!dipoles) throw InputError("transfer model has no dipole table");
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dipoles->size()));
  psi[static_cast<Eigen::Index>(s1)] = std::cos(alpha);
  psi[static_cast<Eigen::Index>(s3)] += std::polar(std::sin(alpha), initial_phase);
  return psi;
}

double TransferModel::t_mid(const TwinPulses& p) const { return margin * p.gamma_fs + 0.5 * std::abs(p.delta_t_fs); }

TimeGrid TransferModel::grid(const TwinPulses& p) const { return TimeGrid::make(0.0, 2.0 * t_mid(p), dt_as); }

Propagator TransferModel::propagator(const std::vector<ControlField>& fields) const {
  if (!dipoles) throw InputError("transfer model has no dipole table");
  if (kind == ModelKind::ThreeLevel) return Propagator::three_level(*dipoles, s1, s2, s3, fields);
  return Propagator::lab_frame(*dipoles, fields);
}

Trajectory TransferModel::run(const TwinPulses& p, double alpha, const PropagationOptions& opt) const {
  return propagator(p.fields(t_mid(p))).run(initial(alpha), grid(p), opt);
}

std::array<double, 3> TransferModel::final_populations(const TwinPulses& p, double alpha) const {
  PropagationOptions opt;
  opt.store_stride_fs = 1e9;
  const auto psi = run(p, alpha, opt).final_state();
  return {std::norm(psi[static_cast<Eigen::Index>(s1)]), std::norm(psi[static_cast<Eigen::Index>(s2)]),
          std::norm(psi[static_cast<Eigen::Index>(s3)])};
}

std::pair<double, double> TransferModel::resonant_carriers_ev() const {
  const auto& b = dipoles->basis();
  return {b[s2].energy_ev - b[s1].energy_ev, b[s2].energy_ev - b[s3].energy_ev};
}

std::vector<double> ScanAxis::values() const {
  if (n < 2) throw InputError("scan axis '" + name + "' needs at least two points");
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw InputError("scan axis '" + name + "' must be finite");
  return linspace(lo, hi, n);
}

std::size_t Landscape::missing() const {
  return static_cast<std::size_t>(std::count_if(p1.begin(), p1.end(), [](double v) { return std::isnan(v); }));
}

double Landscape::closure_error() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < p1.size(); ++k)
    if (!std::isnan(p1[k])) worst = std::max(worst, std::abs(p1[k] + p2[k] + p3[k] - 1.0));
  return worst;
}

double Landscape::max_neighbor_step() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < axis1.n; ++i)
    for (std::size_t j = 0; j < axis2.n; ++j) {
      const double v = p1[index(i, j)];
      if (std::isnan(v)) continue;
      if (i + 1 < axis1.n && !std::isnan(p1[index(i + 1, j)])) worst = std::max(worst, std::abs(p1[index(i + 1, j)] - v));
      if (j + 1 < axis2.n && !std::isnan(p1[index(i, j + 1)])) worst = std::max(worst, std::abs(p1[index(i, j + 1)] - v));
    }
  return worst;
}

void Landscape::export_csv(const std::filesystem::path& path) const {
  std::ostringstream os;
  os << axis1.name << ',' << axis2.name << ",P1,P2,P3\n";
  const auto v1 = axis1.values(), v2 = axis2.values();
  for (std::size_t i = 0; i < axis1.n; ++i)
    for (std::size_t j = 0; j < axis2.n; ++j) {
      const auto k = index(i, j);
      os << io::format_double(v1[i]) << ',' << io::format_double(v2[j]);
      for (double p : {p1[k], p2[k], p3[k]}) os << ',' << (std::isnan(p) ? std::string("nan") : io::format_double(p));
      os << '\n';
    }
  io::write_file(path, os.str());
}

Landscape scan(const TransferModel& model, const TwinPulses& base, double alpha, const ScanAxis& axis1,
               const ScanAxis& axis2, unsigned threads) {
  const auto v1 = axis1.values(), v2 = axis2.values();
  TwinPulses probe = base;
  for (const auto* ax : {&axis1, &axis2})
    if (ax->name != "alpha") probe.set(ax->name, probe.get(ax->name));  // validates the name

  Landscape out;
  out.axis1 = axis1;
  out.axis2 = axis2;
  const std::size_t n = axis1.n * axis2.n;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.p1.assign(n, nan);
  out.p2.assign(n, nan);
  out.p3.assign(n, nan);
  std::vector<std::string> errors(n);

  parallel_for(n, threads, [&](std::size_t k) {
    TwinPulses p = base;
    double a = alpha;
    const std::pair<const ScanAxis*, double> coords[] = {{&axis1, v1[k / axis2.n]}, {&axis2, v2[k % axis2.n]}};
    for (const auto& [ax, value] : coords) {
      if (ax->name == "alpha")
        a = value;
      else
        p.set(ax->name, value);
    }
    try {
      const auto pops = model.final_populations(p, a);
      out.p1[k] = pops[0];
      out.p2[k] = pops[1];
      out.p3[k] = pops[2];
    } catch (const NumericError& e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < n; ++k)
    if (!errors[k].empty()) {
      std::ostringstream os;
      os << axis1.name << '=' << v1[k / axis2.n] << ", " << axis2.name << '=' << v2[k % axis2.n] << ": " << errors[k];
      out.failures.push_back(os.str());
    }
  return out;
}

Landscape scan_delay(const TransferModel& model, const TwinPulses& base, const ScanAxis& alpha,
                     const ScanAxis& delta_t, unsigned threads) {
  ScanAxis a = alpha, d = delta_t;
  a.name = "alpha";
  d.name = "delta_t_fs";
  return scan(model, base, 0.0, a, d, threads);
}

Landscape scan_phase(const TransferModel& model, const TwinPulses& base, const ScanAxis& alpha, const ScanAxis& phi,
                     unsigned threads) {
  ScanAxis a = alpha, f = phi;
  a.name = "alpha";
  f.name = "phi";
  return scan(model, base, 0.0, a, f, threads);
}

double mixing_fidelity(const Eigen::VectorXcd& psi, std::size_t s1, std::size_t s3, double beta) {
  const double v = std::cos(beta) * std::abs(psi[static_cast<Eigen::Index>(s1)]) +
                   std::sin(beta) * std::abs(psi[static_cast<Eigen::Index>(s3)]);
  return v * v;
}

OptimizeResult optimize_transfer(const TransferModel& model, const TwinPulses& base, double alpha, double beta,
                                 const std::map<std::string, std::pair<double, double>>& free, std::uint64_t seed,
                                 std::size_t coarse_points, unsigned threads) {
  if (free.empty() || free.size() > 3) throw InputError("optimize_transfer takes one to three free parameters");
  if (coarse_points < 2) throw InputError("coarse grid needs at least two points per parameter");
  std::vector<std::string> names;
  std::vector<std::pair<double, double>> bounds;
  for (const auto& [name, b] : free) {
    TwinPulses check = base;
    check.set(name, check.get(name));
    if (!(b.second > b.first)) throw InputError("bounds for '" + name + "' are empty");
    names.push_back(name);
    bounds.push_back(b);
  }
  const std::size_t dim = names.size();

  auto with = [&](const std::vector<double>& x) {
    TwinPulses p = base;
    for (std::size_t d = 0; d < dim; ++d) p.set(names[d], std::clamp(x[d], bounds[d].first, bounds[d].second));
    return p;
  };
  OptimizeResult res;
  auto evaluate = [&](const TwinPulses& p) {
    PropagationOptions opt;
    opt.store_stride_fs = 1e9;
    try {
      return mixing_fidelity(model.run(p, alpha, opt).final_state(), model.s1, model.s3, beta);
    } catch (const NumericError&) {
      return -1.0;
    }
  };

  res.baseline_fidelity = evaluate(base);
  res.best = base;
  res.fidelity = res.baseline_fidelity;
  res.evaluations = 1;

  std::size_t total = 1;
  for (std::size_t d = 0; d < dim; ++d) total *= coarse_points;
  std::vector<std::vector<double>> points(total, std::vector<double>(dim));
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    for (std::size_t d = 0; d < dim; ++d) {
      const std::size_t i = r % coarse_points;
      r /= coarse_points;
      points[k][d] = bounds[d].first + (bounds[d].second - bounds[d].first) * static_cast<double>(i) /
                                           static_cast<double>(coarse_points - 1);
    }
  }
  std::vector<double> values(total);
  parallel_for(total, threads, [&](std::size_t k) { values[k] = evaluate(with(points[k])); });
  res.evaluations += total;
  const auto best_k = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
  std::vector<double> best_x = points[best_k];
  double best_f = values[best_k];

  // pattern search: poll ± step along each axis, halve the step on failure
  auto refine = [&](std::vector<double> x, double fx) {
    std::vector<double> step(dim);
    for (std::size_t d = 0; d < dim; ++d)
      step[d] = (bounds[d].second - bounds[d].first) / static_cast<double>(coarse_points - 1) / 2;
    for (int it = 0; it < 40; ++it) {
      bool moved = false;
      for (std::size_t d = 0; d < dim; ++d)
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> y = x;
          y[d] = std::clamp(y[d] + sgn * step[d], bounds[d].first, bounds[d].second);
          if (y[d] == x[d]) continue;
          const double fy = evaluate(with(y));
          ++res.evaluations;
          if (fy > fx) {
            x = y;
            fx = fy;
            moved = true;
          }
        }
      if (!moved) {
        bool tiny = true;
        for (std::size_t d = 0; d < dim; ++d) {
          step[d] /= 2;
          if (step[d] > 1e-4 * (bounds[d].second - bounds[d].first)) tiny = false;
        }
        if (tiny) break;
      }
    }
    return std::make_pair(x, fx);
  };

  auto [x0, f0] = refine(best_x, best_f);
  best_x = x0;
  best_f = f0;
  std::mt19937_64 rng(seed);
  for (int restart = 0; restart < 2; ++restart) {
    std::vector<double> y = best_x;
    for (std::size_t d = 0; d < dim; ++d) {
      const double h = (bounds[d].second - bounds[d].first) / static_cast<double>(coarse_points - 1);
      y[d] = std::clamp(y[d] + std::uniform_real_distribution<double>(-h, h)(rng), bounds[d].first, bounds[d].second);
    }
    const double fy = evaluate(with(y));
    ++res.evaluations;
    auto [x1, f1] = refine(y, fy);
    if (f1 > best_f) {
      best_x = x1;
      best_f = f1;
    }
  }

  // gains below the propagation round-off are not an improvement
  if (best_f > res.baseline_fidelity + 1e-9) {
    res.best = with(best_x);
    res.fidelity = best_f;
    res.improved = true;
  }
  PropagationOptions opt;
  opt.store_stride_fs = 1e9;
  const auto psi = model.run(res.best, alpha, opt).final_state();
  for (std::size_t i = 0; i < 3; ++i)
    res.populations[i] = std::norm(psi[static_cast<Eigen::Index>(std::array{model.s1, model.s2, model.s3}[i])]);
  return res;
}

}  // namespace stirap
