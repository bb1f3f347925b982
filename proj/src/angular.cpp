#include "stirap/angular.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "stirap/error.hpp"

namespace stirap {

HalfInt HalfInt::from_double(double value) {
  const double twice = 2.0 * value;
  const double rounded = std::round(twice);
  if (!std::isfinite(value) || std::abs(twice - rounded) > 1e-9) {
    throw InputError("not a multiple of 1/2: " + std::to_string(value));
  }
  return HalfInt(static_cast<int>(rounded));
}

HalfInt HalfInt::parse(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw InputError("trailing characters");
      return from_double(v);
    }
    std::size_t used = 0;
    const int num = std::stoi(text.substr(0, slash), &used);
    if (used != slash) throw InputError("bad numerator");
    const std::string den_text = text.substr(slash + 1);
    const int den = std::stoi(den_text, &used);
    if (used != den_text.size()) throw InputError("bad denominator");
    if (den == 2) return HalfInt(num);
    if (den == 1) return HalfInt(2 * num);
    throw InputError("denominator must be 1 or 2");
  } catch (const std::logic_error&) {
    throw InputError("not a half-integer: '" + text + "'");
  }
}

std::string HalfInt::str() const {
  if (is_integer()) return std::to_string(twice_ / 2);
  return std::to_string(twice_) + "/2";
}

bool triangle_ok(HalfInt a, HalfInt b, HalfInt c) {
  const int ta = a.twice(), tb = b.twice(), tc = c.twice();
  if (ta < 0 || tb < 0 || tc < 0) return false;
  if ((ta + tb + tc) % 2 != 0) return false;
  return tc >= std::abs(ta - tb) && tc <= ta + tb;
}

int phase(HalfInt x) {
  if (!x.is_integer()) throw InputError("phase of non-integral exponent " + x.str());
  return (x.twice() / 2) % 2 == 0 ? 1 : -1;
}

namespace {

using boost::multiprecision::cpp_int;
using Exponents = std::vector<int>;

constexpr int kMaxFactorial = 600;

// Exponents of every prime <= kMaxFactorial in n!, n = 0..kMaxFactorial.
struct PrimeTable {
  std::vector<int> primes;
  std::vector<Exponents> factorial;

  PrimeTable() {
    std::vector<bool> composite(kMaxFactorial + 1, false);
    for (int p = 2; p <= kMaxFactorial; ++p) {
      if (composite[p]) continue;
      primes.push_back(p);
      for (int q = 2 * p; q <= kMaxFactorial; q += p) composite[q] = true;
    }
    factorial.assign(kMaxFactorial + 1, Exponents(primes.size(), 0));
    for (int n = 0; n <= kMaxFactorial; ++n) {
      for (std::size_t k = 0; k < primes.size(); ++k) {
        int e = 0;
        for (long pk = primes[k]; pk <= n; pk *= primes[k]) e += static_cast<int>(n / pk);
        factorial[n][k] = e;
      }
    }
  }
};

const PrimeTable& primes() {
  static const PrimeTable table;
  return table;
}

void add_factorial(Exponents& e, int n, int sign) {
  if (n < 0) throw std::logic_error("negative factorial argument");
  if (n > kMaxFactorial) throw InputError("angular momentum too large for exact evaluation");
  const auto& f = primes().factorial[n];
  for (std::size_t k = 0; k < e.size(); ++k) e[k] += sign * f[k];
}

// Nearest double to num/den, computed from a ~64-bit integer quotient.
double ratio_to_double(cpp_int num, cpp_int den) {
  if (num == 0) return 0.0;
  const bool negative = (num < 0) != (den < 0);
  num = abs(num);
  den = abs(den);
  const long shift = 64 + static_cast<long>(msb(den)) - static_cast<long>(msb(num));
  cpp_int q = shift >= 0 ? cpp_int(num << shift) / den : num / cpp_int(den << -shift);
  const double value = std::ldexp(q.convert_to<double>(), static_cast<int>(-shift));
  return negative ? -value : value;
}

struct Term {
  int sign;
  Exponents exponents;
};

// overall_sign * sqrt(radicand) * sum_k sign_k * prod p^{e_k}, exactly up to the final rounding.
double evaluate(int overall_sign, const Exponents& radicand, const std::vector<Term>& terms) {
  if (terms.empty()) return 0.0;
  const auto& ps = primes().primes;
  const std::size_t np = ps.size();
  Exponents floor_exp = terms.front().exponents;
  for (const auto& t : terms)
    for (std::size_t k = 0; k < np; ++k) floor_exp[k] = std::min(floor_exp[k], t.exponents[k]);

  cpp_int sum = 0;
  for (const auto& t : terms) {
    cpp_int value = 1;
    for (std::size_t k = 0; k < np; ++k) {
      const int e = t.exponents[k] - floor_exp[k];
      if (e > 0) value *= boost::multiprecision::pow(cpp_int(ps[k]), static_cast<unsigned>(e));
    }
    if (t.sign > 0) sum += value; else sum -= value;
  }
  if (sum == 0) return 0.0;

  cpp_int num = 1, den = 1, rad = 1;
  for (std::size_t k = 0; k < np; ++k) {
    const int total = radicand[k] + 2 * floor_exp[k];
    const int q = total >= 0 ? total / 2 : -((-total + 1) / 2);
    const int r = total - 2 * q;
    if (q > 0) num *= boost::multiprecision::pow(cpp_int(ps[k]), static_cast<unsigned>(q));
    if (q < 0) den *= boost::multiprecision::pow(cpp_int(ps[k]), static_cast<unsigned>(-q));
    if (r == 1) rad *= ps[k];
  }
  return overall_sign * ratio_to_double(sum * num, den) * std::sqrt(rad.convert_to<double>());
}

// Arguments are twice-values that already passed every selection rule.
double racah_3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  const std::size_t np = primes().primes.size();
  Exponents radicand(np, 0);
  add_factorial(radicand, (j1 + j2 - j3) / 2, +1);
  add_factorial(radicand, (j1 - j2 + j3) / 2, +1);
  add_factorial(radicand, (-j1 + j2 + j3) / 2, +1);
  add_factorial(radicand, (j1 + j2 + j3) / 2 + 1, -1);
  add_factorial(radicand, (j1 + m1) / 2, +1);
  add_factorial(radicand, (j1 - m1) / 2, +1);
  add_factorial(radicand, (j2 + m2) / 2, +1);
  add_factorial(radicand, (j2 - m2) / 2, +1);
  add_factorial(radicand, (j3 + m3) / 2, +1);
  add_factorial(radicand, (j3 - m3) / 2, +1);

  const int kmin = std::max({0, (j2 - j3 - m1) / 2, (j1 - j3 + m2) / 2});
  const int kmax = std::min({(j1 + j2 - j3) / 2, (j1 - m1) / 2, (j2 + m2) / 2});
  std::vector<Term> terms;
  for (int k = kmin; k <= kmax; ++k) {
    Term t{k % 2 == 0 ? 1 : -1, Exponents(np, 0)};
    add_factorial(t.exponents, k, -1);
    add_factorial(t.exponents, (j3 - j2 + m1) / 2 + k, -1);
    add_factorial(t.exponents, (j3 - j1 - m2) / 2 + k, -1);
    add_factorial(t.exponents, (j1 + j2 - j3) / 2 - k, -1);
    add_factorial(t.exponents, (j1 - m1) / 2 - k, -1);
    add_factorial(t.exponents, (j2 + m2) / 2 - k, -1);
    terms.push_back(std::move(t));
  }
  const int exponent = (j1 - j2 - m3) / 2;
  return evaluate(exponent % 2 == 0 ? 1 : -1, radicand, terms);
}

void add_delta(Exponents& e, int a, int b, int c) {
  add_factorial(e, (a + b - c) / 2, +1);
  add_factorial(e, (a - b + c) / 2, +1);
  add_factorial(e, (-a + b + c) / 2, +1);
  add_factorial(e, (a + b + c) / 2 + 1, -1);
}

double racah_6j(int j1, int j2, int j3, int j4, int j5, int j6) {
  const std::size_t np = primes().primes.size();
  Exponents radicand(np, 0);
  add_delta(radicand, j1, j2, j3);
  add_delta(radicand, j1, j5, j6);
  add_delta(radicand, j4, j2, j6);
  add_delta(radicand, j4, j5, j3);

  const std::array<int, 4> a{(j1 + j2 + j3) / 2, (j1 + j5 + j6) / 2, (j4 + j2 + j6) / 2, (j4 + j5 + j3) / 2};
  const std::array<int, 3> b{(j1 + j2 + j4 + j5) / 2, (j2 + j3 + j5 + j6) / 2, (j3 + j1 + j6 + j4) / 2};
  const int tmin = *std::max_element(a.begin(), a.end());
  const int tmax = *std::min_element(b.begin(), b.end());
  std::vector<Term> terms;
  for (int t = tmin; t <= tmax; ++t) {
    Term term{t % 2 == 0 ? 1 : -1, Exponents(np, 0)};
    add_factorial(term.exponents, t + 1, +1);
    for (int ai : a) add_factorial(term.exponents, t - ai, -1);
    for (int bi : b) add_factorial(term.exponents, bi - t, -1);
    terms.push_back(std::move(term));
  }
  return evaluate(1, radicand, terms);
}

// --- symmetry-reduced cache ---------------------------------------------------

std::uint64_t pack(const std::array<int, 6>& v) {
  std::uint64_t key = 0;
  for (int x : v) key = (key << 10) | static_cast<std::uint64_t>(x + 512);
  return key;
}

class SymbolCache {
 public:
  template <class Compute>
  double get(std::uint64_t key, Compute&& compute) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = map_.find(key); it != map_.end()) {
        hits_.fetch_add(1, std::memory_order_relaxed);
        return it->second;
      }
    }
    misses_.fetch_add(1, std::memory_order_relaxed);
    const double value = compute();
    std::unique_lock lock(mutex_);
    map_.emplace(key, value);
    return value;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
  }
  void clear() {
    std::unique_lock lock(mutex_);
    map_.clear();
    hits_ = 0;
    misses_ = 0;
  }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, double> map_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

SymbolCache& cache_3j() {
  static SymbolCache c;
  return c;
}
SymbolCache& cache_6j() {
  static SymbolCache c;
  return c;
}

void check_magnitude(HalfInt j) {
  if (j.twice() < 0) throw InputError("negative angular momentum " + j.str());
  if (j.twice() > 400) throw InputError("angular momentum too large: " + j.str());
}

}  // namespace

double wigner3j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3) {
  const std::array<HalfInt, 3> js{j1, j2, j3};
  const std::array<HalfInt, 3> ms{m1, m2, m3};
  for (int i = 0; i < 3; ++i) {
    check_magnitude(js[i]);
    if ((js[i].twice() - ms[i].twice()) % 2 != 0) {
      throw InputError("j=" + js[i].str() + " and m=" + ms[i].str() + " differ in parity");
    }
  }
  if ((m1 + m2 + m3).twice() != 0) return 0.0;
  if (!triangle_ok(j1, j2, j3)) return 0.0;
  for (int i = 0; i < 3; ++i)
    if (std::abs(ms[i].twice()) > js[i].twice()) return 0.0;

  // Canonical representative under column permutations and m -> -m.
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}}};
  std::array<int, 6> best{};
  bool best_odd = false;
  bool first = true;
  for (int p = 0; p < 6; ++p) {
    for (int flip = 0; flip < 2; ++flip) {
      std::array<int, 6> v{};
      for (int c = 0; c < 3; ++c) {
        v[c] = js[perms[p][c]].twice();
        v[3 + c] = (flip ? -1 : 1) * ms[perms[p][c]].twice();
      }
      if (first || v < best) {
        best = v;
        best_odd = (p >= 3) != (flip == 1);
        first = false;
      }
    }
  }
  const double value = cache_3j().get(pack(best), [&] {
    return racah_3j(best[0], best[1], best[2], best[3], best[4], best[5]);
  });
  const int total = (j1 + j2 + j3).twice() / 2;
  return (best_odd && total % 2 != 0) ? -value : value;
}

double wigner6j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6) {
  for (HalfInt j : {j1, j2, j3, j4, j5, j6}) check_magnitude(j);
  if (!triangle_ok(j1, j2, j3) || !triangle_ok(j1, j5, j6) || !triangle_ok(j4, j2, j6) ||
      !triangle_ok(j4, j5, j3)) {
    return 0.0;
  }
  // Columns (upper, lower); symmetric under column permutations and under
  // exchanging upper and lower entries in any two columns.
  const std::array<std::array<int, 2>, 3> cols{
      {{j1.twice(), j4.twice()}, {j2.twice(), j5.twice()}, {j3.twice(), j6.twice()}}};
  static constexpr std::array<std::array<int, 3>, 6> perms{
      {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}}};
  static constexpr std::array<std::array<bool, 3>, 4> swaps{
      {{false, false, false}, {true, true, false}, {true, false, true}, {false, true, true}}};
  std::array<int, 6> best{};
  bool first = true;
  for (const auto& p : perms) {
    for (const auto& s : swaps) {
      std::array<int, 6> v{};
      for (int c = 0; c < 3; ++c) {
        const auto& col = cols[p[c]];
        v[c] = s[c] ? col[1] : col[0];
        v[3 + c] = s[c] ? col[0] : col[1];
      }
      if (first || v < best) {
        best = v;
        first = false;
      }
    }
  }
  return cache_6j().get(pack(best), [&] {
    return racah_6j(best[0], best[1], best[2], best[3], best[4], best[5]);
  });
}

double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M) {
  // <j1 m1 j2 m2|J M> = (-1)^{j1-j2+M} sqrt(2J+1) (j1 j2 J; m1 m2 -M)
  const double w = wigner3j(j1, j2, J, m1, m2, -M);
  if (w == 0.0) return 0.0;
  return phase(j1 - j2 + M) * std::sqrt(J.twice() + 1.0) * w;
}

SymbolCacheStats symbol_cache_stats() {
  return {cache_3j().hits() + cache_6j().hits(), cache_3j().misses() + cache_6j().misses(),
          cache_3j().size() + cache_6j().size()};
}

void clear_symbol_cache() {
  cache_3j().clear();
  cache_6j().clear();
}

}  // namespace stirap
