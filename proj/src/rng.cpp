#include "robustpulse/rng.hpp"

#include <algorithm>

namespace robustpulse {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = splitmix64(root ^ splitmix64(fnv1a(tag)));
  for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x632be59bd9b4e019ULL));
  return h;
}

std::mt19937_64 make_stream(std::uint64_t root, std::string_view tag,
                            std::initializer_list<std::uint64_t> indices) {
  return std::mt19937_64(derive_seed(root, tag, indices));
}

double sample_fraction(double p, int shots, std::mt19937_64& rng) {
  p = std::clamp(p, 0.0, 1.0);
  if (shots <= 0) return p;
  std::binomial_distribution<int> dist(shots, p);
  return static_cast<double>(dist(rng)) / shots;
}

}  // namespace robustpulse
