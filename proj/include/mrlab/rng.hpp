#pragma once

#include <cstdint>
#include <random>

#include "mrlab/tensor.hpp"

namespace mrlab {

using Rng = std::mt19937_64;

/// Independent generator for one purpose (init, data, noise, ...) of a seeded run.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

/// Entries i.i.d. N(0, 1).
Tensor standard_normal(std::size_t rows, std::size_t cols, Rng& rng);
Tensor uniform(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);

}  // namespace mrlab
