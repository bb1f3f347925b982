#include "stirap/rwa.hpp"

#include <cmath>
#include <sstream>

#include "stirap/error.hpp"
#include "stirap/io.hpp"
#include "stirap/units.hpp"

namespace stirap {

namespace {
const cplx I(0.0, 1.0);
}

RwaParameters RwaParameters::resonant(double delta, double phi, std::function<double(double)> rabi_P,
                                      std::function<double(double)> rabi_S) {
  return RwaParameters{delta, delta, phi, std::move(rabi_P), std::move(rabi_S)};
}

bool RwaParameters::two_photon_resonant() const {
  return std::abs(delta12 - delta23) <= 1e-12 * std::max(1.0, std::abs(delta12));
}

Mat3c rwa_hamiltonian(const RwaParameters& p, double t_fs) {
  const double wp = p.rabi_P ? p.rabi_P(t_fs) : 0.0;
  const double ws = p.rabi_S ? p.rabi_S(t_fs) : 0.0;
  Mat3c h = Mat3c::Zero();
  h(0, 0) = p.delta12;
  h(2, 2) = p.delta23;
  h(0, 1) = h(1, 0) = -0.5 * wp;
  h(1, 2) = -0.5 * ws * std::exp(I * p.phi);
  h(2, 1) = -0.5 * ws * std::exp(-I * p.phi);
  return h;
}

AdiabaticPoint adiabatic_point(double delta, double phi, double rabi_P, double rabi_S, double theta) {
  AdiabaticPoint a;
  a.omega = std::hypot(rabi_P, rabi_S);
  a.theta = (rabi_P == 0.0 && rabi_S == 0.0) ? theta : std::atan2(rabi_P, rabi_S);
  a.phi_mix = -0.5 * std::atan2(a.omega, delta);
  const double root = std::hypot(delta, a.omega);
  a.e0 = delta;
  a.e_plus = 0.5 * delta + 0.5 * root;
  a.e_minus = 0.5 * delta - 0.5 * root;

  const double ct = std::cos(a.theta), st = std::sin(a.theta);
  const double cf = std::cos(a.phi_mix), sf = std::sin(a.phi_mix);
  const cplx ph = std::exp(-I * phi);
  const Vec3c b(st, 0.0, ph * ct);
  const Vec3c two(0.0, 1.0, 0.0);
  a.psi0 = Vec3c(ct, 0.0, -ph * st);
  a.psi_plus = cf * b + sf * two;
  a.psi_minus = sf * b - cf * two;
  return a;
}

AdiabaticFrame adiabatic_frame(const RwaParameters& p, const std::vector<double>& t_fs, double floor) {
  if (!p.two_photon_resonant()) throw InputError("adiabatic frame requires two-photon resonance");
  AdiabaticFrame f;
  f.t_fs = t_fs;
  f.points.reserve(t_fs.size());

  std::vector<double> wp(t_fs.size()), ws(t_fs.size());
  double first_theta = 0.0;
  bool found = false;
  for (std::size_t i = 0; i < t_fs.size(); ++i) {
    wp[i] = p.rabi_P ? p.rabi_P(t_fs[i]) : 0.0;
    ws[i] = p.rabi_S ? p.rabi_S(t_fs[i]) : 0.0;
    if (!found && (std::abs(wp[i]) > floor || std::abs(ws[i]) > floor)) {
      first_theta = std::atan2(wp[i], ws[i]);
      found = true;
    }
  }
  double held = first_theta;
  for (std::size_t i = 0; i < t_fs.size(); ++i) {
    const bool defined = std::abs(wp[i]) > floor || std::abs(ws[i]) > floor;
    AdiabaticPoint a = adiabatic_point(p.delta12, p.phi, defined ? wp[i] : 0.0, defined ? ws[i] : 0.0, held);
    if (defined) held = a.theta;
    f.points.push_back(std::move(a));
  }
  return f;
}

std::array<double, 3> adiabatic_populations(const Vec3c& state, const AdiabaticPoint& point) {
  return {std::norm(point.psi0.dot(state)), std::norm(point.psi_plus.dot(state)),
          std::norm(point.psi_minus.dot(state))};
}

namespace {

Vec3c frame_phases(double t_fs, double omega_P, double omega_S, double E2, double phase_P) {
  const double t = units::fs_to_au(t_fs);
  return Vec3c(std::exp(I * ((E2 - omega_P) * t - phase_P)), std::exp(I * (E2 * t)),
               std::exp(I * ((E2 - omega_S) * t)));
}

}  // namespace

Vec3c rotating_frame_transform(const Vec3c& lab, double t_fs, double omega_P, double omega_S, double E2,
                               double phase_P) {
  return frame_phases(t_fs, omega_P, omega_S, E2, phase_P).cwiseProduct(lab);
}

Vec3c inverse_rotating_frame_transform(const Vec3c& rot, double t_fs, double omega_P, double omega_S, double E2,
                                       double phase_P) {
  return frame_phases(t_fs, omega_P, omega_S, E2, phase_P).conjugate().cwiseProduct(rot);
}

RwaParameters rwa_from_lab(const ControlField& pump, const ControlField& stokes, double mu12, double mu23,
                           const std::array<double, 3>& e) {
  const double wp = units::ev_to_au(pump.carrier_ev);
  const double ws = units::ev_to_au(stokes.carrier_ev);
  RwaParameters p;
  p.delta12 = wp - (e[1] - e[0]);
  p.delta23 = ws - (e[1] - e[2]);
  p.phi = -stokes.phase;
  Envelope ep = pump.envelope, es = stokes.envelope;
  p.rabi_P = [ep, mu12](double t) { return mu12 * ep(t); };
  p.rabi_S = [es, mu23](double t) { return mu23 * es(t); };
  return p;
}

std::array<double, 3> RwaTrajectory::populations(std::size_t i) const {
  const Vec3c& c = states.at(i);
  return {std::norm(c[0]), std::norm(c[1]), std::norm(c[2])};
}

RwaTrajectory propagate_rwa(const RwaParameters& p, const Vec3c& initial, double t0_fs, double t1_fs,
                            double dt_fs) {
  if (!(dt_fs > 0.0) || !(t1_fs >= t0_fs)) throw InputError("invalid time grid");
  const auto steps = static_cast<std::size_t>(std::llround((t1_fs - t0_fs) / dt_fs));
  const double h = steps ? (t1_fs - t0_fs) / static_cast<double>(steps) : 0.0;
  const double h_au = units::fs_to_au(h);
  RwaTrajectory tr;
  tr.t_fs.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  Vec3c c = initial;
  tr.t_fs.push_back(t0_fs);
  tr.states.push_back(c);
  Eigen::SelfAdjointEigenSolver<Mat3c> es;
  for (std::size_t k = 0; k < steps; ++k) {
    const double tm = t0_fs + (static_cast<double>(k) + 0.5) * h;
    es.compute(rwa_hamiltonian(p, tm));
    const Eigen::Vector3cd phase = (-I * h_au * es.eigenvalues().cast<cplx>()).array().exp();
    c = es.eigenvectors() * phase.cwiseProduct(es.eigenvectors().adjoint() * c);
    tr.t_fs.push_back(t0_fs + static_cast<double>(k + 1) * h);
    tr.states.push_back(c);
  }
  const double drift = std::abs(c.squaredNorm() - initial.squaredNorm());
  if (drift > 1e-8) throw NumericError("norm drift in rotating-frame propagation");
  return tr;
}

void export_adiabatic_csv(const std::filesystem::path& path, const AdiabaticFrame& frame,
                          const RwaTrajectory* trajectory) {
  if (trajectory && trajectory->t_fs.size() != frame.t_fs.size())
    throw InputError("trajectory and adiabatic frame use different grids");
  std::ostringstream os;
  os << "t_fs,theta,phi_mix,E0,E_plus,E_minus";
  if (trajectory) os << ",P0,P_plus,P_minus";
  os << '\n';
  using io::format_double;
  for (std::size_t i = 0; i < frame.t_fs.size(); ++i) {
    const auto& a = frame.points[i];
    os << format_double(frame.t_fs[i]) << ',' << format_double(a.theta) << ',' << format_double(a.phi_mix) << ','
       << format_double(a.e0) << ',' << format_double(a.e_plus) << ',' << format_double(a.e_minus);
    if (trajectory) {
      const auto pops = adiabatic_populations(trajectory->states[i], a);
      os << ',' << format_double(pops[0]) << ',' << format_double(pops[1]) << ',' << format_double(pops[2]);
    }
    os << '\n';
  }
  io::write_file(path, os.str());
}

}  // namespace stirap
