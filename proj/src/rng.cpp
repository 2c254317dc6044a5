#include "samid/rng.hpp"

#include <cmath>
#include <numbers>

namespace samid {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::below(std::size_t n) {
  const auto bound = static_cast<std::uint64_t>(n);
  // Reject the tail that would bias the modulo.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t v = engine_();
  while (v >= limit) v = engine_();
  return static_cast<std::size_t>(v % bound);
}

}  // namespace samid
