#include "confts/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "confts/error.hpp"

namespace confts {

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::invalid_argument, "Rng::below bound must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % bound;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index) noexcept {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ index);
}

std::uint64_t series_seed(std::uint64_t run_seed, std::string_view series_id) noexcept {
  std::uint64_t fnv = 0xcbf29ce484222325ULL;
  for (unsigned char c : series_id) {
    fnv ^= c;
    fnv *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(run_seed) ^ fnv);
}

std::vector<std::size_t> draw_with_replacement(Rng& rng, std::size_t population,
                                               std::size_t count) {
  if (population == 0) throw Error(Errc::empty_input, "cannot resample an empty population");
  std::vector<std::size_t> out(count);
  for (auto& idx : out) idx = static_cast<std::size_t>(rng.below(population));
  return out;
}

std::vector<std::size_t> draw_without_replacement(Rng& rng, std::size_t population,
                                                  std::size_t count) {
  if (count > population) {
    throw Error(Errc::invalid_argument, "sample larger than population");
  }
  std::vector<std::size_t> pool(population);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots end up a uniform subset.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(population - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace confts
