#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "stirap/scanner.hpp"
#include "stirap/units.hpp"

using namespace stirap;
using namespace stirap::literals;
using units::kPi;

namespace {

const std::filesystem::path kData = STIRAP_DATA_DIR;

struct Fixture {
  DipoleTable dip;
  TransferModel model;
  TwinPulses pulses;
};

Fixture three_level() {
  const LevelSet ls = select_subspace(load_levels(kData / "three_level.csv"), 1_half);
  Fixture f{build_dipole_matrix(ls, 2.0, load_dipole_overrides(kData / "three_level_dipoles.csv")), {}, {}};
  return f;
}

void wire(Fixture& f) {
  const auto& b = f.dip.basis();
  f.model.dipoles = &f.dip;
  f.model.s1 = b.index_of("5s2.5p5 2P*3/2", 1_half);
  f.model.s2 = b.index_of("5s.5p6 2S1/2", 1_half);
  f.model.s3 = b.index_of("5s2.5p5 2P*1/2", 1_half);
  f.model.dt_as = 20.0;
  auto [wp, ws] = f.model.resonant_carriers_ev();
  f.pulses.pump_ev = wp;
  f.pulses.stokes_ev = ws;
  f.pulses.phi = 1.14 * kPi;
  f.pulses.delta_t_fs = -12.75;
}

}  // namespace

TEST(Scanner, PulsePlacementAndParameters) {
  TwinPulses p;
  p.delta_t_fs = 20.0;
  p.pump_ev = 11.0;
  p.stokes_ev = 9.7;
  p.phi = 0.3;
  auto f = p.fields(100.0);
  EXPECT_DOUBLE_EQ(f[0].envelope.terms()[0].center_fs, 90.0);
  EXPECT_DOUBLE_EQ(f[1].envelope.terms()[0].center_fs, 110.0);
  EXPECT_EQ(f[0].role, FieldRole::Pump);
  EXPECT_DOUBLE_EQ(f[1].phase, 0.3);
  EXPECT_THROW(p.set("bogus", 1.0), InputError);
  EXPECT_THROW((ScanAxis{"phi", 0, 1, 1}.values()), InputError);
}

TEST(Scanner, ClosureAndBounds) {
  auto f = three_level();
  wire(f);
  auto l = scan_delay(f.model, f.pulses, {"alpha", 0, kPi / 2, 4}, {"delta_t_fs", -30, 30, 4});
  EXPECT_EQ(l.missing(), 0u);
  EXPECT_LT(l.closure_error(), 1e-8);
  for (std::size_t k = 0; k < l.p1.size(); ++k)
    for (double p : {l.p1[k], l.p2[k], l.p3[k]}) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0 + 1e-12);
    }
}

TEST(Scanner, ZeroIntensityKeepsInitialPopulations) {
  auto f = three_level();
  wire(f);
  f.pulses.intensity_tw = 0.0;
  auto l = scan_phase(f.model, f.pulses, {"alpha", 0, kPi / 2, 3}, {"phi", 0, 2 * kPi, 3});
  const auto alphas = l.axis1.values();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(l.p1[l.index(i, j)], std::pow(std::cos(alphas[i]), 2), 1e-10);
      EXPECT_NEAR(l.p3[l.index(i, j)], std::pow(std::sin(alphas[i]), 2), 1e-10);
    }
}

TEST(Scanner, PhaseIsPeriodic) {
  auto f = three_level();
  wire(f);
  auto l = scan_phase(f.model, f.pulses, {"alpha", 0.3, 1.2, 2}, {"phi", 0.7, 0.7 + 2 * kPi, 2});
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(l.p1[l.index(i, 0)], l.p1[l.index(i, 1)], 1e-10);
    EXPECT_NEAR(l.p3[l.index(i, 0)], l.p3[l.index(i, 1)], 1e-10);
  }
}

TEST(Scanner, DeterministicAcrossThreadCounts) {
  auto f = three_level();
  wire(f);
  const ScanAxis a{"alpha", 0, kPi / 2, 3}, d{"delta_t_fs", -20, 20, 3};
  auto s1 = scan_delay(f.model, f.pulses, a, d, 1);
  auto s2 = scan_delay(f.model, f.pulses, a, d, 1);
  auto p = scan_delay(f.model, f.pulses, a, d, 3);
  EXPECT_EQ(s1.p1, s2.p1);
  EXPECT_EQ(s1.p3, s2.p3);
  for (std::size_t k = 0; k < s1.p1.size(); ++k) EXPECT_NEAR(s1.p1[k], p.p1[k], 1e-12);
}

TEST(Scanner, EigenstateRowsAreContinuousInDelay) {
  auto f = three_level();
  wire(f);
  auto coarse = scan_delay(f.model, f.pulses, {"alpha", 0, 0.01, 2}, {"delta_t_fs", -40, 40, 17});
  auto fine = scan_delay(f.model, f.pulses, {"alpha", 0, 0.01, 2}, {"delta_t_fs", -40, 40, 33});
  // neighbouring differences of a continuous map shrink with the spacing
  EXPECT_LT(fine.max_neighbor_step(), 0.75 * coarse.max_neighbor_step());
}

TEST(Scanner, OptimizerMatchesExhaustiveGrid) {
  auto f = three_level();
  wire(f);
  const double alpha = kPi / 4, beta = kPi / 2;
  auto r = optimize_transfer(f.model, f.pulses, alpha, beta,
                             {{"delta_t_fs", {-40.0, 40.0}}, {"phi", {0.0, 2 * kPi}}}, 42, 9);
  auto grid = scan(f.model, f.pulses, alpha, {"delta_t_fs", -40, 40, 25}, {"phi", 0, 2 * kPi, 25});
  double oracle = 0.0;
  for (double p3 : grid.p3) oracle = std::max(oracle, p3);
  EXPECT_GE(r.fidelity, oracle - 0.005);
  EXPECT_LE(r.fidelity, oracle + 0.02);
  EXPECT_NEAR(r.fidelity, r.populations[2], 1e-12);
  EXPECT_TRUE(r.improved);

  // slightly below 3.38 TW/cm² the bright-state area is a multiple of 2π and the transfer is near complete
  auto weaker = f.pulses;
  weaker.intensity_tw = 3.2;
  auto w = optimize_transfer(f.model, weaker, alpha, beta,
                             {{"delta_t_fs", {-40.0, 40.0}}, {"phi", {0.0, 2 * kPi}}}, 42, 9);
  EXPECT_GT(w.fidelity, 0.95);
}

TEST(Scanner, OptimizerFindsZeroFieldForIdentityTarget) {
  auto f = three_level();
  wire(f);
  auto r = optimize_transfer(f.model, f.pulses, 0.6, 0.6, {{"intensity_tw", {0.0, 3.38}}}, 1, 5);
  EXPECT_NEAR(r.fidelity, 1.0, 1e-12);
  EXPECT_NEAR(r.best.intensity_tw, 0.0, 1e-12);
  EXPECT_TRUE(r.improved);
  auto z = f.pulses;
  z.intensity_tw = 0.0;
  auto flat = optimize_transfer(f.model, z, 0.6, 0.6, {{"delta_t_fs", {-10.0, 10.0}}}, 1, 3);
  EXPECT_FALSE(flat.improved);
  EXPECT_NEAR(flat.fidelity, flat.baseline_fidelity, 1e-9);
  EXPECT_THROW(optimize_transfer(f.model, z, 0.6, 0.6, {}, 1), InputError);
}

TEST(Scanner, SeededOptimizerIsReproducible) {
  auto f = three_level();
  wire(f);
  auto a = optimize_transfer(f.model, f.pulses, 0.3, 1.2, {{"phi", {0.0, 2 * kPi}}}, 7, 5);
  auto b = optimize_transfer(f.model, f.pulses, 0.3, 1.2, {{"phi", {0.0, 2 * kPi}}}, 7, 5);
  EXPECT_EQ(a.fidelity, b.fidelity);
  EXPECT_EQ(a.best.phi, b.best.phi);
}

TEST(Scanner, LandscapeCsv) {
  auto f = three_level();
  wire(f);
  auto l = scan_phase(f.model, f.pulses, {"alpha", 0, 1, 2}, {"phi", 0, 1, 2});
  auto path = std::filesystem::temp_directory_path() / "stirap_scan_test" / "l.csv";
  l.export_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "alpha,phi,P1,P2,P3");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, 4);
  std::filesystem::remove_all(path.parent_path());
}
