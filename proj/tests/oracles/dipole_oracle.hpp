#pragma once

// Test-only reference dipole elements. Radial integrals come from term-by-term
// analytic integration of the hydrogenic polynomials in 50-digit arithmetic;
// angular integrals from Gauss-Legendre quadrature of spherical harmonics; JK
// states are expanded into uncoupled product states with Clebsch-Gordan
// coefficients from racah_oracle.hpp.

#include <cmath>
#include <map>
#include <tuple>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "oracles/racah_oracle.hpp"

namespace oracle {

inline Big binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  return Big(fact(n)) / Big(fact(k) * fact(n - k));
}

// Coefficients of R_nl(r) = sum_p c_p r^p exp(-Z r / n).
inline std::vector<Big> radial_polynomial(int n, int l, const Big& Z) {
  const Big scale = 2 * Z / n;
  const Big norm = sqrt(scale * scale * scale * Big(fact(n - l - 1)) / (Big(2 * n) * Big(fact(n + l))));
  std::vector<Big> c(n, Big(0));
  for (int i = 0; i <= n - l - 1; ++i) {
    Big term = binomial(n + l, n - l - 1 - i) / Big(fact(i)) * pow(scale, l + i) * norm;
    c[l + i] = (i % 2 == 0) ? term : Big(-term);
  }
  return c;
}

inline double radial_exact(int n, int l, int n2, int l2, double Z_in) {
  static std::map<std::tuple<int, int, int, int, double>, double> memo;
  const auto key = std::make_tuple(n, l, n2, l2, Z_in);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  const Big Z(Z_in);
  const auto a = radial_polynomial(n, l, Z);
  const auto b = radial_polynomial(n2, l2, Z);
  const Big decay = Z / n + Z / n2;
  Big sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (a[i] == 0 || b[k] == 0) continue;
      const int p = static_cast<int>(i + k) + 3;
      sum += a[i] * b[k] * Big(fact(p)) / pow(decay, p + 1);
    }
  return memo[key] = sum.convert_to<double>();
}

// Integral of conj(Y_{l2 m}) Y_{1 0} Y_{l m} over the sphere.
inline double gaunt(int l2, int l, int m) {
  static std::map<std::tuple<int, int, int>, double> memo;
  if (auto it = memo.find({l2, l, m}); it != memo.end()) return it->second;
  const unsigned am = static_cast<unsigned>(std::abs(m));
  if (am > static_cast<unsigned>(l) || am > static_cast<unsigned>(l2)) return memo[{l2, l, m}] = 0.0;
  auto f = [&](double x) {
    const double th = std::acos(x);
    return std::sph_legendre(l2, am, th) * std::sph_legendre(1, 0, th) * std::sph_legendre(l, am, th);
  };
  return memo[{l2, l, m}] = 2 * std::numbers::pi * boost::math::quadrature::gauss<double, 30>::integrate(f, -1.0, 1.0);
}

// <n2 l2 m | r Y_10 | n l m>
inline double one_electron(int n2, int l2, int n, int l, int m, double Z) {
  const double g = gaunt(l2, l, m);
  if (g == 0.0) return 0.0;
  return g * radial_exact(n, l, n2, l2, Z);
}

struct JkState {
  int n, l;   // outer electron
  int jp2;    // twice parent J
  int k2;     // twice K
  int j2;     // twice J
  int parent_ls = 0;  // distinguishes parents of equal J_p (e.g. 100*L_p + S_p twice)
};

// <bra J' M | r Y_10 | ket J M> with |((l, J_p) K, s) J M> expanded into |l m_l>|J_p m_p>|s m_s>.
inline double jk_matrix_element(const JkState& bra, const JkState& ket, int M2, double Z) {
  if (bra.jp2 != ket.jp2 || bra.parent_ls != ket.parent_ls) return 0.0;
  double total = 0.0;
  for (int ms = -1; ms <= 1; ms += 2)
    for (int mp = -ket.jp2; mp <= ket.jp2; mp += 2) {
      const int mk_ket = M2 - ms, mk_bra = M2 - ms;
      const int ml2 = mk_ket - mp;  // same for bra and ket (q = 0)
      if (ml2 % 2) continue;
      const int ml = ml2 / 2;
      if (std::abs(ml) > ket.l || std::abs(ml) > bra.l) continue;
      const double cket = cg2(ket.k2, mk_ket, 1, ms, ket.j2, M2) * cg2(2 * ket.l, ml2, ket.jp2, mp, ket.k2, mk_ket);
      const double cbra = cg2(bra.k2, mk_bra, 1, ms, bra.j2, M2) * cg2(2 * bra.l, ml2, bra.jp2, mp, bra.k2, mk_bra);
      if (cket == 0.0 || cbra == 0.0) continue;
      total += cbra * cket * one_electron(bra.n, bra.l, ket.n, ket.l, ml, Z);
    }
  return total;
}

// Reduced element from a matrix element via Wigner-Eckart, choosing the projection
// with the largest 3j coefficient.
template <class Element>
double reduce(int jbra2, int jket2, Element element) {
  int best = 0;
  double best3j = 0.0;
  for (int M2 = -std::min(jbra2, jket2); M2 <= std::min(jbra2, jket2); M2 += 2) {
    const double w = threej2(jbra2, 2, jket2, -M2, 0, M2);
    if (std::abs(w) > std::abs(best3j)) {
      best3j = w;
      best = M2;
    }
  }
  if (best3j == 0.0) return 0.0;
  const double s = (((jbra2 - best) / 2) % 2 == 0) ? 1.0 : -1.0;
  return element(best) / (s * best3j);
}

inline double jk_reduced(const JkState& bra, const JkState& ket, double Z) {
  return reduce(bra.j2, ket.j2, [&](int M2) { return jk_matrix_element(bra, ket, M2, Z); });
}

// <n2 l2 || r Y_1 || n l> from the m = 0 angular integral.
inline double one_electron_reduced(int n2, int l2, int n, int l, double Z) {
  return reduce(2 * l2, 2 * l, [&](int M2) { return one_electron(n2, l2, n, l, M2 / 2, Z); });
}

}  // namespace oracle
