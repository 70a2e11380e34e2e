#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace jigsaw {

// Exact external angle num/den in [0,1), kept reduced.
class Angle {
 public:
  Angle() = default;
  Angle(std::uint64_t num, std::uint64_t den);

  std::uint64_t num() const { return num_; }
  std::uint64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Multiplication by k modulo 1 (k = degree for the angle dynamics).
  Angle times(std::uint64_t k) const;
  Angle times_pow(std::uint64_t k, int n) const;
  // Fractional part of k^n * angle as a double, computed without losing bits.
  double frac_times_pow(std::uint64_t k, int n) const;

  // Period and preperiod under multiplication by k (den coprime part decides).
  int period(std::uint64_t k) const;
  int preperiod(std::uint64_t k) const;

  std::string str() const;
  static Angle parse(const std::string& text);

  friend bool operator==(const Angle&, const Angle&) = default;
  friend std::strong_ordering operator<=>(const Angle& a, const Angle& b);

 private:
  std::uint64_t num_ = 0;
  std::uint64_t den_ = 1;
};

}  // namespace jigsaw
