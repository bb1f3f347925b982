#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace stirap {

/// Angular momentum or projection stored as twice its value, so 3/2 is 3.
class HalfInt {
 public:
  constexpr HalfInt() = default;

  static constexpr HalfInt from_twice(int twice) { return HalfInt(twice); }
  static constexpr HalfInt integer(int value) { return HalfInt(2 * value); }
  /// Throws InputError unless `value` is a multiple of 1/2.
  static HalfInt from_double(double value);
  /// Accepts "3/2", "2", "-1/2", "1.5".
  static HalfInt parse(const std::string& text);

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  constexpr HalfInt operator-() const { return HalfInt(-twice_); }
  constexpr HalfInt operator+(HalfInt o) const { return HalfInt(twice_ + o.twice_); }
  constexpr HalfInt operator-(HalfInt o) const { return HalfInt(twice_ - o.twice_); }
  constexpr auto operator<=>(const HalfInt&) const = default;

  /// "3/2" for half-integers, "2" for integers.
  std::string str() const;

 private:
  constexpr explicit HalfInt(int twice) : twice_(twice) {}
  int twice_ = 0;
};

namespace literals {
constexpr HalfInt operator""_h(unsigned long long v) { return HalfInt::integer(static_cast<int>(v)); }
/// 3_half == 3/2
constexpr HalfInt operator""_half(unsigned long long v) { return HalfInt::from_twice(static_cast<int>(v)); }
}  // namespace literals

/// |a-b| <= c <= a+b and a+b+c integral.
bool triangle_ok(HalfInt a, HalfInt b, HalfInt c);

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3).
///
/// Evaluated with the Racah sum in exact integer arithmetic (factorials held as
/// prime-exponent vectors), converted to double only at the end. Returns exactly
/// zero when m1+m2+m3 != 0, when |mi| > ji, or when the triangle rule fails.
/// Throws InputError when some ji is negative or ji and mi differ in parity.
double wigner3j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt m1, HalfInt m2, HalfInt m3);

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}; zero when any of the four triads
/// (j1 j2 j3), (j1 j5 j6), (j4 j2 j6), (j4 j5 j3) fails the triangle rule.
double wigner6j(HalfInt j1, HalfInt j2, HalfInt j3, HalfInt j4, HalfInt j5, HalfInt j6);

/// <j1 m1 j2 m2 | J M>, via the 3j symbol.
double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2, HalfInt J, HalfInt M);

/// (-1)^x for integral x.
int phase(HalfInt x);

struct SymbolCacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::size_t entries = 0;
};
SymbolCacheStats symbol_cache_stats();
void clear_symbol_cache();

}  // namespace stirap
