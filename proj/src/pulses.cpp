#include "stirap/pulses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "stirap/io.hpp"
#include "stirap/units.hpp"

namespace stirap {

void GaussianParams::validate() const {
  if (!(peak_intensity_tw >= 0.0) || !std::isfinite(peak_intensity_tw))
    throw InputError("peak intensity must be finite and non-negative");
  if (!(width_fs > 0.0) || !std::isfinite(width_fs)) throw InputError("pulse width must be positive");
  if (!std::isfinite(center_fs) || !std::isfinite(carrier_ev) || !std::isfinite(phase))
    throw InputError("pulse parameters must be finite");
}

Envelope::Envelope(double amplitude_au, std::vector<Term> terms) : amplitude_(amplitude_au), terms_(std::move(terms)) {
  if (!std::isfinite(amplitude_au)) throw InputError("envelope amplitude must be finite");
  for (const auto& t : terms_) {
    if (!(t.width_fs > 0.0)) throw InputError("envelope term width must be positive");
    if (!std::isfinite(t.weight) || !std::isfinite(t.center_fs)) throw InputError("envelope term must be finite");
  }
}

Envelope Envelope::gaussian(double amplitude_au, double center_fs, double width_fs) {
  return Envelope(amplitude_au, {Term{1.0, center_fs, width_fs}});
}

Envelope Envelope::from(const GaussianParams& p) {
  p.validate();
  return gaussian(units::intensity_to_amplitude(p.peak_intensity_tw), p.center_fs, p.width_fs);
}

double Envelope::operator()(double t_fs) const {
  double s = 0.0;
  for (const auto& term : terms_) {
    if (term.weight == 0.0) continue;
    const double u = (t_fs - term.center_fs) / term.width_fs;
    s += term.weight * std::exp(-u * u);
  }
  return amplitude_ * s;
}

Envelope Envelope::scaled(double factor) const { return Envelope(amplitude_ * factor, terms_); }

std::pair<double, double> Envelope::support() const {
  // exp(-u^2) < 1e-30 for |u| > sqrt(30 ln 10)
  const double reach = std::sqrt(30.0 * std::log(10.0));
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& term : terms_) {
    if (term.weight == 0.0) continue;
    const double a = term.center_fs - reach * term.width_fs;
    const double b = term.center_fs + reach * term.width_fs;
    lo = any ? std::min(lo, a) : a;
    hi = any ? std::max(hi, b) : b;
    any = true;
  }
  return {lo, hi};
}

double ControlField::value(double t_fs) const {
  const double w = units::ev_to_au(carrier_ev);
  return envelope(t_fs) * std::cos(w * units::fs_to_au(t_fs) + phase);
}

ControlField make_field(const GaussianParams& p, FieldRole role) {
  return ControlField{Envelope::from(p), p.carrier_ev, p.phase, role};
}

CompositePulses composite_envelopes(double alpha, double beta, double amp_pump_au, double amp_stokes_au,
                                    double t_left_fs, double t_right_fs, double gamma_left_fs,
                                    double gamma_right_fs) {
  const double half_pi = units::kPi / 2;
  // tolerate rounding of π/2 given in decimal
  const double eps = 1e-12;
  if (!(alpha >= -eps && alpha <= half_pi + eps)) throw InputError("alpha must lie in [0, pi/2]");
  if (!(beta >= -eps && beta <= half_pi + eps)) throw InputError("beta must lie in [0, pi/2]");
  if (!(gamma_left_fs > 0.0) || !(gamma_right_fs > 0.0)) throw InputError("composite widths must be positive");
  if (!(amp_pump_au >= 0.0) || !(amp_stokes_au >= 0.0)) throw InputError("composite amplitudes must be non-negative");
  CompositePulses out;
  out.pump = Envelope(amp_pump_au, {{std::sin(alpha), t_left_fs, gamma_left_fs},
                                    {std::sin(beta), t_right_fs, gamma_right_fs}});
  out.stokes = Envelope(amp_stokes_au, {{std::cos(alpha), t_left_fs, gamma_left_fs},
                                        {std::cos(beta), t_right_fs, gamma_right_fs}});
  return out;
}

double GaussianFit::intensity_tw() const { return units::amplitude_to_intensity(amplitude_au); }

GaussianFit moment_guess(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 3) throw InputError("fit needs at least three samples of equal length");
  double w = 0.0, m1 = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double a = std::abs(y[i]);
    w += a;
    m1 += a * t[i];
    if (a > std::abs(peak)) peak = y[i];
  }
  if (!(w > 0.0)) throw NumericError("cannot fit a Gaussian to an all-zero envelope");
  m1 /= w;
  double var = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) var += std::abs(y[i]) * (t[i] - m1) * (t[i] - m1);
  var /= w;
  GaussianFit g;
  g.amplitude_au = peak;
  g.center_fs = m1;
  // |y| ∝ exp(-(t-t0)²/γ²) has variance γ²/2
  g.width_fs = std::sqrt(std::max(2.0 * var, 1e-300));
  return g;
}

namespace {

double sum_squares(const std::vector<double>& t, const std::vector<double>& y, const Eigen::Vector3d& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double u = (t[i] - p[1]) / p[2];
    const double r = y[i] - p[0] * std::exp(-u * u);
    s += r * r;
  }
  return s;
}

}  // namespace

GaussianFit fit_gaussian(const std::vector<double>& t, const std::vector<double>& y, const GaussianFit& guess,
                         int max_iterations, double tolerance) {
  if (t.size() != y.size() || t.size() < 3) throw InputError("fit needs at least three samples of equal length");
  if (!(guess.width_fs > 0.0)) throw InputError("initial width must be positive");

  Eigen::Vector3d p(guess.amplitude_au, guess.center_fs, guess.width_fs);
  double cost = sum_squares(t, y, p);
  double yscale = 0.0;
  for (double v : y) yscale += v * v;

  GaussianFit best;
  auto record = [&](int it) {
    best.amplitude_au = p[0];
    best.center_fs = p[1];
    best.width_fs = p[2];
    best.residual = cost;
    best.iterations = it;
  };
  record(0);
  best.residual_history.push_back(cost);

  double lambda = 1e-3;
  const std::size_t n = t.size();
  Eigen::MatrixXd J(n, 3);
  Eigen::VectorXd r(n);
  for (int it = 1; it <= max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (t[i] - p[1]) / p[2];
      const double e = std::exp(-u * u);
      r[i] = y[i] - p[0] * e;
      J(i, 0) = e;
      J(i, 1) = p[0] * e * 2.0 * u / p[2];
      J(i, 2) = p[0] * e * 2.0 * u * u / p[2];
    }
    const Eigen::Matrix3d JtJ = J.transpose() * J;
    const Eigen::Vector3d g = J.transpose() * r;
    if (g.norm() == 0.0) {
      record(it);
      return best;
    }

    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      Eigen::Matrix3d A = JtJ;
      for (int k = 0; k < 3; ++k) A(k, k) += lambda * std::max(JtJ(k, k), 1e-300);
      const Eigen::Vector3d step = A.ldlt().solve(g);
      Eigen::Vector3d trial = p + step;
      if (!step.allFinite() || !(trial[2] > 0.0)) {
        lambda *= 10.0;
        continue;
      }
      const double c = sum_squares(t, y, trial);
      if (c < cost) {
        const double drop = cost - c;
        const double rel_step = step.cwiseAbs().cwiseQuotient(p.cwiseAbs().cwiseMax(1e-300)).maxCoeff();
        p = trial;
        cost = c;
        lambda = std::max(lambda / 10.0, 1e-12);
        record(it);
        best.residual_history.push_back(cost);
        accepted = true;
        if (drop <= tolerance * std::max(yscale, 1e-300) || rel_step < 1e-13) return best;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // no downhill step at any damping: a stationary point for working precision
      if (cost <= 1e-20 * std::max(yscale, 1e-300) || lambda > 1e20) return best;
      std::ostringstream os;
      os << "Gaussian fit stalled at iteration " << it << " with residual " << cost;
      throw FitError(os.str(), best);
    }
  }
  std::ostringstream os;
  os << "Gaussian fit did not converge in " << max_iterations << " iterations (residual " << cost << ")";
  throw FitError(os.str(), best);
}

GaussianFit fit_gaussian(const std::vector<double>& t, const std::vector<double>& y) {
  return fit_gaussian(t, y, moment_guess(t, y));
}

BoundaryResiduals stirap_boundary_residuals(const Envelope& pump, const Envelope& stokes, double alpha, double beta,
                                            const std::vector<double>& t_fs, double floor) {
  std::size_t first = t_fs.size(), last = t_fs.size();
  for (std::size_t i = 0; i < t_fs.size(); ++i) {
    if (std::abs(pump(t_fs[i])) > floor && std::abs(stokes(t_fs[i])) > floor) {
      if (first == t_fs.size()) first = i;
      last = i;
    }
  }
  if (first == t_fs.size())
    throw NumericError("pump and Stokes envelopes never overlap above the numerical floor");
  BoundaryResiduals out;
  out.initial = std::abs(pump(t_fs[first]) / stokes(t_fs[first]) - std::tan(alpha));
  out.final = std::abs(pump(t_fs[last]) / stokes(t_fs[last]) - std::tan(beta));
  return out;
}

void export_envelopes_csv(const std::filesystem::path& path, const Envelope& pump, const Envelope& stokes,
                          double mu_pump, double mu_stokes, const std::vector<double>& t_fs) {
  std::ostringstream os;
  os << "t_fs,omega_P,omega_S\n";
  for (double t : t_fs)
    os << io::format_double(t) << ',' << io::format_double(mu_pump * pump(t)) << ','
       << io::format_double(mu_stokes * stokes(t)) << '\n';
  io::write_file(path, os.str());
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace stirap
