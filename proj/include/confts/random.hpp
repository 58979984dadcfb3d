#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace confts {

// Portable seeded generator. The bit stream comes from std::mt19937_64, whose
// output is fixed by the standard; all derived draws below are computed here
// instead of through <random> distributions, which are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, bound), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t bound);

  // Standard normal via Box-Muller (cosine branch only, one variate per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Named sub-streams of a run seed. Each consumer of randomness gets its own
// stream so results never depend on call order or thread schedule.
enum class Stream : std::uint64_t {
  bootstrap = 1,
  member_training = 2,
  window_sample = 3,
  single_model = 4,
};

std::uint64_t derive_seed(std::uint64_t base, Stream stream, std::uint64_t index) noexcept;

// Seed for a named series (FNV-1a of the id mixed with the run seed).
std::uint64_t series_seed(std::uint64_t run_seed, std::string_view series_id) noexcept;

// Draw `count` indices in [0, population) with replacement.
std::vector<std::size_t> draw_with_replacement(Rng& rng, std::size_t population,
                                               std::size_t count);

// Draw `count` distinct indices in [0, population), returned in ascending order.
std::vector<std::size_t> draw_without_replacement(Rng& rng, std::size_t population,
                                                  std::size_t count);

}  // namespace confts
