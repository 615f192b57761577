#include "causaldq/rng.hpp"

namespace causaldq {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, SeedTag tag, std::uint64_t index) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
  return splitmix64(h ^ (index * 0x2545f4914f6cdd1dULL));
}

}  // namespace causaldq
