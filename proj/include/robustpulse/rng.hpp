#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace robustpulse {

// Hierarchical seed derivation: every random stream is keyed by
// (root seed, module tag, indices) so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t root, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices = {});

std::mt19937_64 make_stream(std::uint64_t root, std::string_view tag,
                            std::initializer_list<std::uint64_t> indices = {});

// Fraction of successes in `shots` Bernoulli trials; shots == 0 returns p.
double sample_fraction(double p, int shots, std::mt19937_64& rng);

}  // namespace robustpulse
