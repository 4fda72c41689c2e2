#pragma once

#include <cstdint>
#include <string_view>

namespace sprobe {

// splitmix64 finalizer; the building block for every seeded stream below.
std::uint64_t mix64(std::uint64_t x);

// Combines values into one 64-bit key (order-sensitive).
std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value);
std::uint64_t hash_string(std::string_view s);

// Sequential generator with a portable output sequence. std::mt19937 plus
// std:: distributions would differ across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  double gaussian();

 private:
  std::uint64_t state_;
};

// Counter-based standard normal draw: the value depends only on (key, counter),
// so any slice of a noise field can be regenerated independently.
double counter_gaussian(std::uint64_t key, std::uint64_t counter);

}  // namespace sprobe
