#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "stirap/propagator.hpp"
#include "stirap/rwa.hpp"
#include "stirap/units.hpp"

using namespace stirap;
using namespace stirap::literals;
using units::kPi;

namespace {

const std::filesystem::path kData = STIRAP_DATA_DIR;

struct ThreeLevel {
  DipoleTable dip;
  std::size_t s1, s2, s3;
};

ThreeLevel three_level() {
  const LevelSet ls = select_subspace(load_levels(kData / "three_level.csv"), 1_half);
  DipoleTable dip = build_dipole_matrix(ls, 2.0, load_dipole_overrides(kData / "three_level_dipoles.csv"));
  return {dip, dip.basis().index_of("5s2.5p5 2P*3/2", 1_half), dip.basis().index_of("5s.5p6 2S1/2", 1_half),
          dip.basis().index_of("5s2.5p5 2P*1/2", 1_half)};
}

// Composite pulses centered at 100 fs, resonant carriers, lab Stokes phase π.
std::vector<ControlField> composite_fields(const ThreeLevel& m) {
  const double E = units::intensity_to_amplitude(10.88);
  auto c = composite_envelopes(kPi / 3, kPi / 4, E, E, 100 - 6.22, 100 + 6.22, 12.0, 12.0);
  const auto& b = m.dip.basis();
  const double wp = b[m.s2].energy_ev - b[m.s1].energy_ev;
  const double ws = b[m.s2].energy_ev - b[m.s3].energy_ev;
  return {ControlField{c.pump, wp, 0.0, FieldRole::Pump}, ControlField{c.stokes, ws, kPi, FieldRole::Stokes}};
}

Eigen::VectorXcd composite_initial(const ThreeLevel& m) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(3);
  psi[m.s1] = 0.5;
  psi[m.s3] = std::sqrt(3.0) / 2;
  return psi;
}

}  // namespace

TEST(Propagator, GridRounding) {
  auto g = TimeGrid::make(0.0, 650.0, 13.0);
  EXPECT_EQ(g.n_steps, 50000u);
  EXPECT_NEAR(g.t_end_fs, 650.0, 1e-9);
  auto h = TimeGrid::make(0.0, 1.0, 300.0);
  EXPECT_LE(std::abs(h.t_end_fs - 1.0), 0.15);
  EXPECT_THROW(TimeGrid::make(0.0, 1.0, 0.0), InputError);
  EXPECT_THROW(TimeGrid::make(1.0, 0.0, 1.0), InputError);
}

TEST(Propagator, FreeEvolutionPhases) {
  auto m = three_level();
  Propagator p = Propagator::lab_frame(m.dip, {});
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(3);
  psi[m.s2] = 1.0;
  auto g = TimeGrid::make(0.0, 10.0, 50.0);
  auto tr = p.run(psi, g);
  const double e = units::ev_to_au(m.dip.basis()[m.s2].energy_ev);
  const auto expect = std::exp(std::complex<double>(0, -e * units::fs_to_au(g.t_end_fs)));
  EXPECT_LT(std::abs(tr.final_state()[m.s2] - expect), 1e-12);
  for (double d : dipole_expectation(tr, m.dip.matrix())) EXPECT_EQ(d, 0.0);
  EXPECT_LT(reverse_check(p, tr), 1e-12);
}

TEST(Propagator, ResonantRabiOscillation) {
  const double w = 0.5, e0 = 0.001;
  Eigen::MatrixXd mu(2, 2);
  mu << 0, 1, 1, 0;
  ControlField f{Envelope::gaussian(e0, 0.0, 1e9), units::au_to_ev(w), 0.0, FieldRole::Probe};
  Propagator p(Eigen::Vector2d(0.0, w), {Channel{mu, {f}}});
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(2);
  psi[0] = 1.0;
  auto tr = p.run(psi, TimeGrid::make(0.0, 100.0, 5.0), {.store_stride_fs = 1.0});
  for (std::size_t s = 0; s < tr.steps.size(); ++s) {
    const double t = units::fs_to_au(tr.time_fs(s));
    EXPECT_NEAR(std::norm(tr.amplitudes[s][1]), std::pow(std::sin(e0 * t / 2), 2), 1e-3);
  }
}

TEST(Propagator, NormConservedOverManySteps) {
  auto m = three_level();
  auto p = Propagator::three_level(m.dip, m.s1, m.s2, m.s3, composite_fields(m));
  auto tr = p.run(composite_initial(m), TimeGrid::make(0.0, 200.0, 2.0), {.store_stride_fs = 0.0});
  ASSERT_EQ(tr.amplitudes.size(), 100001u);
  double worst = 0.0;
  for (double d : tr.norm_log) worst = std::max(worst, d);
  EXPECT_LT(worst, 1e-10);
  for (const auto& row : populations(tr, {0, 1, 2})) EXPECT_NEAR(row[0] + row[1] + row[2], 1.0, 1e-10);
}

TEST(Propagator, CompositePulsesGiveEqualSuperposition) {
  auto m = three_level();
  auto p = Propagator::three_level(m.dip, m.s1, m.s2, m.s3, composite_fields(m));
  auto tr = p.run(composite_initial(m), TimeGrid::make(0.0, 200.0, 5.0));
  const auto& f = tr.final_state();
  EXPECT_NEAR(std::norm(f[m.s1]), 0.5, 0.02);
  EXPECT_NEAR(std::norm(f[m.s3]), 0.5, 0.02);
  EXPECT_LT(std::norm(f[m.s2]), 0.01);
}

TEST(Propagator, AgreesWithRotatingFrameModel) {
  auto m = three_level();
  auto fields = composite_fields(m);
  auto p = Propagator::three_level(m.dip, m.s1, m.s2, m.s3, fields);
  auto tr = p.run(composite_initial(m), TimeGrid::make(0.0, 200.0, 5.0));
  const auto& b = m.dip.basis();
  auto model = rwa_from_lab(fields[0], fields[1], m.dip(m.s1, m.s2), m.dip(m.s2, m.s3),
                            {units::ev_to_au(b[m.s1].energy_ev), units::ev_to_au(b[m.s2].energy_ev),
                             units::ev_to_au(b[m.s3].energy_ev)});
  auto rw = propagate_rwa(model, Vec3c(0.5, 0.0, std::sqrt(3.0) / 2), 0.0, 200.0, 0.05);
  auto pr = rw.populations(rw.states.size() - 1);
  const auto& f = tr.final_state();
  EXPECT_NEAR(std::norm(f[m.s1]), pr[0], 0.02);
  EXPECT_NEAR(std::norm(f[m.s2]), pr[1], 0.02);
  EXPECT_NEAR(std::norm(f[m.s3]), pr[2], 0.02);
}

TEST(Propagator, SecondOrderInTimeStep) {
  auto m = three_level();
  auto p = Propagator::three_level(m.dip, m.s1, m.s2, m.s3, composite_fields(m));
  auto psi = composite_initial(m);
  auto a = p.run(psi, TimeGrid::make(0.0, 200.0, 8.0)).final_state();
  auto b = p.run(psi, TimeGrid::make(0.0, 200.0, 4.0)).final_state();
  auto c = p.run(psi, TimeGrid::make(0.0, 200.0, 2.0)).final_state();
  EXPECT_NEAR((a - b).norm() / (b - c).norm(), 4.0, 0.4);
}

TEST(Propagator, ReverseDeficitSmallAndSecondOrder) {
  auto m = three_level();
  auto p = Propagator::three_level(m.dip, m.s1, m.s2, m.s3, composite_fields(m));
  auto psi = composite_initial(m);
  const double d13 = reverse_check(p, p.run(psi, TimeGrid::make(0.0, 200.0, 13.0)));
  EXPECT_LT(d13, 1e-6);
  const double d26 = reverse_check(p, p.run(psi, TimeGrid::make(0.0, 200.0, 26.0)));
  const double d6 = reverse_check(p, p.run(psi, TimeGrid::make(0.0, 200.0, 6.5)));
  // the overlap deficit is quadratic in the state error, so 4x in the error is 16x here
  EXPECT_GT(d26 / d13, 8.0);
  EXPECT_LT(d26 / d13, 32.0);
  EXPECT_GT(d13 / d6, 8.0);
  EXPECT_LT(d13 / d6, 32.0);
}

TEST(Propagator, EnergyOffsetIsGlobalPhase) {
  auto m = three_level();
  auto fields = composite_fields(m);
  Eigen::VectorXd e = level_energies_au(m.dip.basis());
  Eigen::MatrixXd full = m.dip.matrix();
  Propagator a(e, {Channel{full, fields}});
  Propagator b((e.array() + 0.37).matrix(), {Channel{full, fields}});
  auto psi = composite_initial(m);
  Eigen::MatrixXd mu = m.dip.matrix();
  auto ta = a.run(psi, TimeGrid::make(0.0, 200.0, 5.0), {.store_stride_fs = 0.5});
  auto tb = b.run(psi, TimeGrid::make(0.0, 200.0, 5.0), {.store_stride_fs = 0.5});
  auto da = dipole_expectation(ta, mu), db = dipole_expectation(tb, mu);
  for (std::size_t s = 0; s < da.size(); ++s) EXPECT_NEAR(da[s], db[s], 1e-10);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(std::norm(ta.final_state()[i]), std::norm(tb.final_state()[i]), 1e-10);
}

TEST(Propagator, RecordsDipoleEveryStep) {
  auto m = three_level();
  auto p = Propagator::lab_frame(m.dip, composite_fields(m));
  Eigen::MatrixXd mu = m.dip.matrix();
  auto g = TimeGrid::make(0.0, 20.0, 10.0);
  auto tr = p.run(composite_initial(m), g, {.store_stride_fs = 0.0, .record_dipole = true, .dipole = &mu});
  ASSERT_EQ(tr.dipole.size(), g.n_steps + 1);
  auto d = dipole_expectation(tr, mu);
  for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(tr.dipole[k], d[k], 1e-15);
  auto path = std::filesystem::temp_directory_path() / "stirap_prop_test" / "d.bin";
  export_dipole_binary(path, tr);
  EXPECT_EQ(std::filesystem::file_size(path), (g.n_steps + 1) * 16);
  export_populations_csv(path.parent_path() / "p.csv", tr, {m.s1, m.s2, m.s3}, {"1", "2", "3"});
  std::ifstream in(path.parent_path() / "p.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t_fs,P_1,P_2,P_3");
  std::filesystem::remove_all(path.parent_path());
}

TEST(Propagator, RejectsBadInput) {
  auto m = three_level();
  auto p = Propagator::lab_frame(m.dip, {});
  EXPECT_THROW(p.run(Eigen::VectorXcd::Ones(3), TimeGrid::make(0, 1, 10)), InputError);
  EXPECT_THROW(p.run(Eigen::VectorXcd::Zero(2), TimeGrid::make(0, 1, 10)), InputError);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(3);
  psi[0] = 1.0;
  EXPECT_THROW(p.run(psi, TimeGrid::make(0, 1, 10), {.norm_tolerance = -1.0}), NumericError);
  EXPECT_THROW(populations(p.run(psi, TimeGrid::make(0, 1, 10)), {5}), InputError);
}
