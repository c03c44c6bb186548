#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "gmf/gaussian.hpp"

namespace gmf {

/// One step of the splitmix64 sequence: advances state and returns the
/// next output. Used to derive independent seeds from a base seed.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Deterministic engine for a (base seed, run index, stream index) triple.
/// Distinct triples produce unrelated seeds, so per-run and per-purpose
/// streams can be replayed independently of execution order.
std::mt19937_64 seeded_engine(std::uint64_t base_seed, std::uint64_t run, std::uint64_t stream);

/// Draw mean + L u with u standard normal and L the stored Cholesky factor.
Eigen::VectorXd sample_gaussian(const Gaussian& g, std::mt19937_64& rng);

}  // namespace gmf
