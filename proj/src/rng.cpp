#include "gmf/rng.hpp"

namespace gmf {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t base_seed, std::uint64_t run, std::uint64_t stream) {
  std::uint64_t state = base_seed;
  splitmix64(state);
  state ^= run;
  splitmix64(state);
  state ^= stream;
  const std::uint64_t seed = splitmix64(state);
  return std::mt19937_64(seed);
}

Eigen::VectorXd sample_gaussian(const Gaussian& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd u(g.dim());
  for (int i = 0; i < g.dim(); ++i) u(i) = nd(rng);
  return g.mean() + g.chol() * u;
}

}  // namespace gmf
