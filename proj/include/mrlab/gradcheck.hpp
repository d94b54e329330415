#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mrlab {

struct GradcheckItem {
  std::string name;
  double worst_rel_error = 0.0;
  double threshold = 0.0;

  bool passed() const { return worst_rel_error <= threshold; }
};

struct GradcheckOptions {
  double h = 1e-5;
  double op_threshold = 1e-6;
  double loss_threshold = 1e-3;
  std::uint64_t seed = 7;
  /// Adds a fixture op whose registered derivative is wrong (negative control).
  bool corrupted_fixture = false;
};

/// Finite-difference check of every tape op on random inputs, then of every
/// variant's full generator objective (and the discriminator / MLE losses) on
/// random 3-hidden-layer MLPs.
std::vector<GradcheckItem> run_gradcheck(const GradcheckOptions& opts = {});

}  // namespace mrlab
