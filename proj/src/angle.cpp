#include "jigsaw/angle.hpp"

#include <numeric>
#include <vector>

#include "jigsaw/errors.hpp"

namespace jigsaw {

namespace {
using u128 = unsigned __int128;
}

Angle::Angle(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw Error(ErrorKind::BadInput, "angle with zero denominator");
  num %= den;
  std::uint64_t g = std::gcd(num, den);
  if (g == 0) g = den;
  num_ = num / g;
  den_ = den / g;
}

Angle Angle::times(std::uint64_t k) const {
  return Angle(static_cast<std::uint64_t>((static_cast<u128>(num_) * k) % den_), den_);
}

Angle Angle::times_pow(std::uint64_t k, int n) const {
  std::uint64_t m = num_;
  for (int i = 0; i < n; ++i) m = static_cast<std::uint64_t>((static_cast<u128>(m) * k) % den_);
  return Angle(m, den_);
}

double Angle::frac_times_pow(std::uint64_t k, int n) const {
  return times_pow(k, n).value();
}

int Angle::preperiod(std::uint64_t k) const {
  // Iterate until a repeat; denominators here are small enough for a direct walk.
  std::vector<std::uint64_t> seen;
  std::uint64_t m = num_;
  for (int i = 0; i < 4096; ++i) {
    for (std::size_t j = 0; j < seen.size(); ++j)
      if (seen[j] == m) return static_cast<int>(j);
    seen.push_back(m);
    m = static_cast<std::uint64_t>((static_cast<u128>(m) * k) % den_);
  }
  return -1;
}

int Angle::period(std::uint64_t k) const {
  int pre = preperiod(k);
  if (pre < 0) return -1;
  Angle start = times_pow(k, pre);
  Angle a = start.times(k);
  int p = 1;
  while (!(a == start)) {
    a = a.times(k);
    ++p;
    if (p > 4096) return -1;
  }
  return p;
}

std::string Angle::str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

Angle Angle::parse(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) {
    std::uint64_t n = std::stoull(text);
    if (n != 0) throw Error(ErrorKind::BadInput, "angle must lie in [0,1): " + text);
    return Angle(0, 1);
  }
  return Angle(std::stoull(text.substr(0, slash)), std::stoull(text.substr(slash + 1)));
}

std::strong_ordering operator<=>(const Angle& a, const Angle& b) {
  u128 l = static_cast<u128>(a.num_) * b.den_;
  u128 r = static_cast<u128>(b.num_) * a.den_;
  if (l < r) return std::strong_ordering::less;
  if (l > r) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace jigsaw
