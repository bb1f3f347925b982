#include "stirap/dipoles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stirap/angular.hpp"
#include "stirap/error.hpp"
#include "stirap/io.hpp"

namespace stirap {
namespace {

double hydrogenic_radial(int n, int l, double Z, double r) {
  const double rho = 2.0 * Z * r / n;
  const double log_norm =
      1.5 * std::log(2.0 * Z / n) + 0.5 * (std::lgamma(n - l) - std::log(2.0 * n) - std::lgamma(n + l + 1));
  return std::exp(log_norm - 0.5 * rho) * std::pow(rho, l) *
         std::assoc_laguerre(static_cast<unsigned>(n - l - 1), static_cast<unsigned>(2 * l + 1), rho);
}

void check_orbital(int n, int l) {
  if (n < 1 || l < 0 || l >= n) throw InputError("invalid hydrogenic orbital n=" + std::to_string(n) + " l=" + std::to_string(l));
}

std::mutex radial_mutex;
std::map<std::tuple<int, int, int, int, double>, double> radial_cache;

using Orbital = std::pair<int, int>;  // (n, l)

std::map<Orbital, int> occupations(const QuantumNumbers& q) {
  std::map<Orbital, int> occ;
  for (const Shell& s : q.core) occ[{s.n, s.l}] += s.occupancy;
  if (q.scheme == Coupling::JK) occ[{q.n, q.l}] += 1;
  return occ;
}

bool fills_before(const Orbital& a, const Orbital& b) {
  return std::make_pair(a.first + a.second, a.first) < std::make_pair(b.first + b.second, b.first);
}

// Configurations omit closed inner subshells ("5s2.5p5" vs "4s.5s2.5p6"): a
// subshell named only by the other configuration is full here when it fills
// before everything this configuration lists.
void complete_inner_shells(std::map<Orbital, int>& occ, const std::map<Orbital, int>& other) {
  if (occ.empty()) return;
  const Orbital first = std::min_element(occ.begin(), occ.end(), [](const auto& x, const auto& y) {
                          return fills_before(x.first, y.first);
                        })->first;
  for (const auto& [orb, count] : other)
    if (!occ.count(orb) && fills_before(orb, first)) occ[orb] = 2 * (2 * orb.second + 1);
}

// The orbital that loses an electron going from ket to bra, and the one that gains it.
std::optional<std::pair<Orbital, Orbital>> one_electron_jump(const QuantumNumbers& bra, const QuantumNumbers& ket) {
  auto b = occupations(bra);
  auto k = occupations(ket);
  const auto b_listed = b;
  complete_inner_shells(b, k);
  complete_inner_shells(k, b_listed);
  std::map<Orbital, int> diff = k;
  for (const auto& [orb, occ] : b) diff[orb] -= occ;
  std::optional<Orbital> from, to;
  for (const auto& [orb, d] : diff) {
    if (d == 0) continue;
    if (d == 1 && !from) {
      from = orb;
    } else if (d == -1 && !to) {
      to = orb;
    } else {
      return std::nullopt;
    }
  }
  if (!from || !to) return std::nullopt;
  return std::make_pair(*from, *to);
}

}  // namespace

double radial_integral(int n, int l, int n2, int l2, double Z) {
  check_orbital(n, l);
  check_orbital(n2, l2);
  if (!(Z > 0.0)) throw InputError("nuclear charge must be positive");
  auto key = std::make_tuple(n, l, n2, l2, Z);
  if (std::make_pair(n2, l2) < std::make_pair(n, l)) key = std::make_tuple(n2, l2, n, l, Z);
  {
    std::lock_guard lock(radial_mutex);
    if (auto it = radial_cache.find(key); it != radial_cache.end()) return it->second;
  }
  // Rescale so the integrand decays on a unit length scale.
  const double decay = Z / n + Z / n2;
  auto integrand = [&](double x) {
    const double r = x / decay;
    return hydrogenic_radial(n, l, Z, r) * hydrogenic_radial(n2, l2, Z, r) * r * r * r;
  };
  // Polynomial degree n + n2 + 1 times exp(-x): beyond x_max the tail is below 1e-17 of the peak.
  const double degree = n + n2 + 1;
  const double x_max = degree + 12.0 * std::sqrt(degree + 1.0) + 45.0;
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, x_max, 12, 1e-13, &error) / decay;
  std::lock_guard lock(radial_mutex);
  radial_cache.emplace(key, value);
  return value;
}

double reduced_rY(int n, int l, int n2, int l2, double Z) {
  if (std::abs(l - l2) != 1) return 0.0;
  const double angular = (l2 % 2 ? -1.0 : 1.0) * std::sqrt((2.0 * l2 + 1) * (2.0 * l + 1) * 3.0 / (4.0 * std::numbers::pi)) *
                         wigner3j(HalfInt::integer(l2), HalfInt::integer(1), HalfInt::integer(l), HalfInt{}, HalfInt{}, HalfInt{});
  if (angular == 0.0) return 0.0;
  return angular * radial_integral(n, l, n2, l2, Z);
}

double jk_jk_reduced(const QuantumNumbers& bra, const QuantumNumbers& ket, double Z) {
  if (bra.scheme != Coupling::JK || ket.scheme != Coupling::JK) return 0.0;
  if (bra.parent != ket.parent || bra.S_E != ket.S_E || bra.core != ket.core) return 0.0;
  const HalfInt one = HalfInt::integer(1);
  const HalfInt Jp = ket.parent->J_p;
  const HalfInt exponent = bra.L_E + Jp + ket.K + one + bra.K + ket.S_E + ket.J + one;
  const double six1 = wigner6j(bra.L_E, bra.K, Jp, ket.K, ket.L_E, one);
  if (six1 == 0.0) return 0.0;
  const double six2 = wigner6j(bra.K, bra.J, ket.S_E, ket.J, ket.K, one);
  if (six2 == 0.0) return 0.0;
  const double dims = std::sqrt((ket.K.twice() + 1.0) * (bra.K.twice() + 1.0) * (ket.J.twice() + 1.0) * (bra.J.twice() + 1.0));
  return phase(exponent) * dims * six1 * six2 * reduced_rY(ket.n, ket.l, bra.n, bra.l, Z);
}

double ls_jk_reduced(const QuantumNumbers& ground, const QuantumNumbers& excited, double Z) {
  if (ground.scheme != Coupling::LS || excited.scheme != Coupling::JK) return 0.0;
  if (ground.parity == excited.parity) return 0.0;
  const auto jump = one_electron_jump(excited, ground);
  if (!jump) return 0.0;
  const auto [from, to] = *jump;
  return reduced_rY(from.first, from.second, to.first, to.second, Z);
}

double reduced_element(const QuantumNumbers& bra, const QuantumNumbers& ket, double Z) {
  if (bra.parity == ket.parity) return 0.0;
  if (bra.scheme == Coupling::JK && ket.scheme == Coupling::JK) return jk_jk_reduced(bra, ket, Z);
  // LS-LS and LS-JK pairs: a single electron changes orbital, with no recoupling of the rest.
  const auto jump = one_electron_jump(bra, ket);
  if (!jump) return 0.0;
  const auto [from, to] = *jump;
  return reduced_rY(from.first, from.second, to.first, to.second, Z);
}

std::vector<DipoleOverride> load_dipole_overrides(const std::filesystem::path& path) {
  const io::CsvTable table = io::parse_csv(io::read_file(path));
  const int ci = table.column("label_i"), cj = table.column("label_j"), cm = table.column("mu_au");
  if (ci < 0 || cj < 0 || cm < 0) throw InputError(path.string() + ": expected columns label_i,label_j,mu_au");
  std::vector<DipoleOverride> out;
  for (const auto& row : table.rows) {
    const std::string where = path.string() + ":" + std::to_string(row.line);
    if (row.fields.size() <= static_cast<std::size_t>(std::max({ci, cj, cm}))) throw ParseError(where + ": too few columns");
    DipoleOverride o;
    try {
      o.label_i = normalize_term(row.fields[ci]);
      o.label_j = normalize_term(row.fields[cj]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    std::size_t used = 0;
    try {
      o.mu_au = std::stod(row.fields[cm], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != row.fields[cm].size()) throw ParseError(where + ": bad mu_au '" + row.fields[cm] + "'");
    out.push_back(o);
  }
  return out;
}

DipoleTable::DipoleTable(LevelSet basis, Eigen::MatrixXd matrix) : basis_(std::move(basis)), matrix_(std::move(matrix)) {
  if (matrix_.rows() != static_cast<Eigen::Index>(basis_.size()) || matrix_.cols() != matrix_.rows())
    throw InputError("dipole matrix size does not match the level set");
  if (matrix_.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix_);
    if (solver.info() != Eigen::Success) throw NumericError("dipole eigendecomposition failed");
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
  }
}

std::size_t DipoleTable::nonzero_count() const {
  return static_cast<std::size_t>((matrix_.array() != 0.0).count());
}

std::vector<DipoleTable::Entry> DipoleTable::largest(std::size_t count) const {
  std::vector<Entry> entries;
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i)
    for (Eigen::Index j = i + 1; j < matrix_.cols(); ++j)
      if (matrix_(i, j) != 0.0) entries.push_back({std::size_t(i), std::size_t(j), matrix_(i, j)});
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return std::abs(a.mu_au) > std::abs(b.mu_au); });
  if (entries.size() > count) entries.resize(count);
  return entries;
}

void DipoleTable::export_csv(const std::filesystem::path& path) const {
  std::string out = "i,j,label_i,m_i,label_j,m_j,mu_au\n";
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < matrix_.cols(); ++j) {
      if (matrix_(i, j) == 0.0) continue;
      const Level& a = basis_[i];
      const Level& b = basis_[j];
      out += std::to_string(i) + ',' + std::to_string(j) + ",\"" + a.label + "\"," + a.m.str() + ",\"" + b.label +
             "\"," + b.m.str() + ',' + io::format_double(matrix_(i, j)) + '\n';
    }
  }
  io::write_file(path, out);
}

DipoleTable build_dipole_matrix(const LevelSet& ls, double Z, const std::vector<DipoleOverride>& overrides) {
  const std::size_t n = ls.size();
  Eigen::MatrixXd mu = Eigen::MatrixXd::Zero(n, n);
  const HalfInt one = HalfInt::integer(1);
  // Reduced elements depend only on the pair of J-levels, not on m.
  std::map<std::pair<std::string, std::string>, double> reduced_cache;
  for (std::size_t i = 0; i < n; ++i) {
    const Level& a = ls[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Level& b = ls[j];
      if (a.m != b.m || a.qn.parity == b.qn.parity) continue;
      if (std::abs(a.qn.J.twice() - b.qn.J.twice()) > 2) continue;
      // The upper level is the bra. For JK pairs either order gives the same
      // element; for the one-electron approximations this fixes the sign.
      const double w3j = wigner3j(b.qn.J, one, a.qn.J, -b.m, HalfInt{}, a.m);
      if (w3j == 0.0) continue;
      const auto key = std::make_pair(b.label, a.label);
      auto it = reduced_cache.find(key);
      if (it == reduced_cache.end()) it = reduced_cache.emplace(key, reduced_element(b.qn, a.qn, Z)).first;
      mu(i, j) = mu(j, i) = phase(b.qn.J - b.m) * w3j * it->second;
    }
  }
  for (const DipoleOverride& o : overrides) {
    bool matched = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (ls[i].label != o.label_i) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (ls[j].label != o.label_j || ls[j].m != ls[i].m) continue;
        mu(i, j) = mu(j, i) = o.mu_au;
        matched = true;
      }
    }
    if (!matched) throw InputError("dipole override '" + o.label_i + "' <-> '" + o.label_j + "' matches no level pair");
  }
  return DipoleTable(ls, std::move(mu));
}

std::vector<std::size_t> connected_levels(const DipoleTable& dip, const std::vector<std::size_t>& seeds) {
  const std::size_t n = dip.size();
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> todo;
  for (std::size_t s : seeds) {
    if (s >= n) throw InputError("seed level out of range");
    if (!seen[s]) {
      seen[s] = true;
      todo.push(s);
    }
  }
  while (!todo.empty()) {
    const std::size_t i = todo.front();
    todo.pop();
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && dip(i, j) != 0.0) {
        seen[j] = true;
        todo.push(j);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if (seen[i]) out.push_back(i);
  return out;
}

}  // namespace stirap
