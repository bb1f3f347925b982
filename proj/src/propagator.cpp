#include "stirap/propagator.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "stirap/error.hpp"
#include "stirap/io.hpp"
#include "stirap/units.hpp"

namespace stirap {

namespace {
const std::complex<double> I(0.0, 1.0);
}

TimeGrid TimeGrid::make(double t_start_fs, double t_end_fs, double dt_as) {
  if (!(dt_as > 0.0) || !std::isfinite(dt_as)) throw InputError("time step must be positive");
  if (!(t_end_fs > t_start_fs)) throw InputError("time grid end must exceed its start");
  TimeGrid g;
  g.t_start_fs = t_start_fs;
  g.dt_as = dt_as;
  g.n_steps = static_cast<std::size_t>(std::llround((t_end_fs - t_start_fs) / (dt_as * 1e-3)));
  if (g.n_steps == 0) g.n_steps = 1;
  g.t_end_fs = g.time_fs(g.n_steps);
  return g;
}

Propagator::Propagator(Eigen::VectorXd energies_au, std::vector<Channel> channels)
    : energies_(std::move(energies_au)) {
  const auto n = energies_.size();
  for (auto& ch : channels) {
    if (ch.coupling.rows() != n || ch.coupling.cols() != n)
      throw InputError("channel coupling matrix does not match the level count");
    if ((ch.coupling - ch.coupling.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + ch.coupling.cwiseAbs().maxCoeff()))
      throw InputError("channel coupling matrix is not symmetric");
    if (ch.fields.empty()) continue;
    Block b;
    for (Eigen::Index i = 0; i < n; ++i)
      if (ch.coupling.row(i).cwiseAbs().maxCoeff() > 0.0) b.active.push_back(i);
    if (b.active.empty()) continue;
    const auto k = static_cast<Eigen::Index>(b.active.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index r = 0; r < k; ++r)
      for (Eigen::Index c = 0; c < k; ++c) sub(r, c) = ch.coupling(b.active[r], b.active[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    b.vectors = es.eigenvectors();
    b.values = es.eigenvalues();
    b.fields = std::move(ch.fields);
    blocks_.push_back(std::move(b));
  }
}

Propagator Propagator::lab_frame(const DipoleTable& dip, std::vector<ControlField> fields) {
  return Propagator(level_energies_au(dip.basis()), {Channel{dip.matrix(), std::move(fields)}});
}

Propagator Propagator::three_level(const DipoleTable& dip, std::size_t a, std::size_t b, std::size_t c,
                                   const std::vector<ControlField>& fields) {
  const auto n = static_cast<Eigen::Index>(dip.size());
  if (a >= dip.size() || b >= dip.size() || c >= dip.size()) throw InputError("state index out of range");
  Channel pump{Eigen::MatrixXd::Zero(n, n), {}};
  Channel stokes{Eigen::MatrixXd::Zero(n, n), {}};
  Channel probe{dip.matrix(), {}};
  pump.coupling(a, b) = pump.coupling(b, a) = dip(a, b);
  stokes.coupling(b, c) = stokes.coupling(c, b) = dip(b, c);
  for (const auto& f : fields) {
    switch (f.role) {
      case FieldRole::Pump: pump.fields.push_back(f); break;
      case FieldRole::Stokes: stokes.fields.push_back(f); break;
      case FieldRole::Probe: probe.fields.push_back(f); break;
    }
  }
  return Propagator(level_energies_au(dip.basis()), {std::move(pump), std::move(stokes), std::move(probe)});
}

void Propagator::apply_field(Eigen::VectorXcd& psi, const Block& b, double t_mid_fs, double dt_au) const {
  double e = 0.0;
  for (const auto& f : b.fields) e += f.value(t_mid_fs);
  if (e == 0.0) return;
  const auto k = static_cast<Eigen::Index>(b.active.size());
  Eigen::VectorXcd sub(k);
  for (Eigen::Index i = 0; i < k; ++i) sub[i] = psi[b.active[i]];
  // H = -E μ, so exp(-iH dt) = V exp(i E λ dt) V^T
  Eigen::VectorXcd y = b.vectors.transpose() * sub;
  for (Eigen::Index i = 0; i < k; ++i) y[i] *= std::exp(I * (e * b.values[i] * dt_au));
  sub = b.vectors * y;
  for (Eigen::Index i = 0; i < k; ++i) psi[b.active[i]] = sub[i];
}

void Propagator::apply_energy(Eigen::VectorXcd& psi, double dt_au) const {
  for (Eigen::Index i = 0; i < psi.size(); ++i) psi[i] *= std::exp(-I * (energies_[i] * dt_au));
}

void Propagator::step(Eigen::VectorXcd& psi, double t_mid, double dt_au, Splitting splitting) const {
  // blocks need not commute; a palindromic sweep keeps the product symmetric
  auto fields = [&](double h) {
    const std::size_t n = blocks_.size();
    if (n == 0) return;
    for (std::size_t i = 0; i + 1 < n; ++i) apply_field(psi, blocks_[i], t_mid, 0.5 * h);
    apply_field(psi, blocks_[n - 1], t_mid, h);
    for (std::size_t i = n - 1; i-- > 0;) apply_field(psi, blocks_[i], t_mid, 0.5 * h);
  };
  if (splitting == Splitting::EnergyOuter) {
    apply_energy(psi, 0.5 * dt_au);
    fields(dt_au);
    apply_energy(psi, 0.5 * dt_au);
  } else {
    fields(0.5 * dt_au);
    apply_energy(psi, dt_au);
    fields(0.5 * dt_au);
  }
}

Trajectory Propagator::run(const Eigen::VectorXcd& initial, const TimeGrid& grid,
                           const PropagationOptions& opt) const {
  if (initial.size() != energies_.size()) throw InputError("initial state has the wrong dimension");
  if (std::abs(initial.norm() - 1.0) > 1e-10) throw InputError("initial state is not normalized");
  if (opt.record_dipole && (!opt.dipole || opt.dipole->rows() != energies_.size()))
    throw InputError("dipole recording needs a matching dipole matrix");
  if (grid.n_steps == 0 || !(grid.dt_as > 0.0)) throw InputError("empty time grid");

  const double dt_au = units::fs_to_au(grid.dt_fs());
  std::size_t stride = 1;
  if (opt.store_stride_fs > 0.0)
    stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.store_stride_fs / grid.dt_fs())));

  Trajectory tr;
  tr.grid = grid;
  Eigen::VectorXcd psi = initial;
  auto store = [&](std::size_t k) {
    const double dev = std::abs(psi.norm() - 1.0);
    if (dev > opt.norm_tolerance) {
      std::ostringstream os;
      os << "norm drift " << dev << " at t = " << grid.time_fs(k) << " fs exceeds " << opt.norm_tolerance;
      throw NumericError(os.str());
    }
    tr.steps.push_back(k);
    tr.amplitudes.push_back(psi);
    tr.norm_log.push_back(dev);
  };
  auto record = [&]() {
    if (opt.record_dipole) tr.dipole.push_back(std::real(psi.dot(*opt.dipole * psi)));
  };
  if (opt.record_dipole) tr.dipole.reserve(grid.n_steps + 1);

  store(0);
  record();
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    step(psi, grid.time_fs(k) + 0.5 * grid.dt_fs(), dt_au, opt.splitting);
    record();
    if ((k + 1) % stride == 0 || k + 1 == grid.n_steps) store(k + 1);
  }
  return tr;
}

Eigen::VectorXcd Propagator::evolve(Eigen::VectorXcd psi, const TimeGrid& grid, bool backward,
                                    Splitting splitting) const {
  const double dt_au = units::fs_to_au(grid.dt_fs());
  if (!backward) {
    for (std::size_t k = 0; k < grid.n_steps; ++k) step(psi, grid.time_fs(k) + 0.5 * grid.dt_fs(), dt_au, splitting);
  } else {
    for (std::size_t k = grid.n_steps; k-- > 0;) step(psi, grid.time_fs(k) + 0.5 * grid.dt_fs(), -dt_au, splitting);
  }
  return psi;
}

Eigen::VectorXd level_energies_au(const LevelSet& ls) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(ls.size()));
  for (std::size_t i = 0; i < ls.size(); ++i) e[static_cast<Eigen::Index>(i)] = units::ev_to_au(ls[i].energy_ev);
  return e;
}

std::vector<std::vector<double>> populations(const Trajectory& traj, const std::vector<std::size_t>& indices) {
  std::vector<std::vector<double>> out;
  out.reserve(traj.amplitudes.size());
  for (const auto& a : traj.amplitudes) {
    std::vector<double> row;
    row.reserve(indices.size());
    for (auto i : indices) {
      if (i >= static_cast<std::size_t>(a.size())) throw InputError("population index out of range");
      row.push_back(std::norm(a[static_cast<Eigen::Index>(i)]));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<double> dipole_expectation(const Trajectory& traj, const Eigen::MatrixXd& mu) {
  std::vector<double> d;
  d.reserve(traj.amplitudes.size());
  for (const auto& a : traj.amplitudes) d.push_back(std::real(a.dot(mu * a)));
  return d;
}

double reverse_check(const Propagator& prop, const Trajectory& traj) {
  const Eigen::VectorXcd back = prop.evolve(traj.final_state(), traj.grid, true, Splitting::FieldOuter);
  return 1.0 - std::abs(back.dot(traj.amplitudes.front()));
}

void export_populations_csv(const std::filesystem::path& path, const Trajectory& traj,
                            const std::vector<std::size_t>& indices, const std::vector<std::string>& names) {
  if (names.size() != indices.size()) throw InputError("one name per exported state is required");
  std::ostringstream os;
  os << "t_fs";
  for (const auto& n : names) os << ",P_" << n;
  os << '\n';
  const auto pops = populations(traj, indices);
  for (std::size_t s = 0; s < pops.size(); ++s) {
    os << io::format_double(traj.time_fs(s));
    for (double p : pops[s]) os << ',' << io::format_double(p);
    os << '\n';
  }
  io::write_file(path, os.str());
}

void export_dipole_binary(const std::filesystem::path& path, const Trajectory& traj) {
  std::string bytes;
  bytes.resize(traj.dipole.size() * 2 * sizeof(double));
  char* out = bytes.data();
  for (std::size_t k = 0; k < traj.dipole.size(); ++k) {
    const double pair[2] = {traj.grid.time_fs(k), traj.dipole[k]};
    std::memcpy(out, pair, sizeof pair);
    out += sizeof pair;
  }
  io::write_file(path, bytes);
}

}  // namespace stirap
