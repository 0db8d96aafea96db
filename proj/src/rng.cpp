#include "htb/rng.hpp"

#include <cmath>
#include <numbers>

namespace htb {

double Rng::normal() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_run_seed(std::uint64_t master, std::string_view algorithm, std::uint64_t d,
                              std::uint64_t rep) noexcept {
  // FNV-1a over the algorithm name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : algorithm) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t s = split_seed(master, h);
  s = split_seed(s, d);
  return split_seed(s, rep);
}

}  // namespace htb
