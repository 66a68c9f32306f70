#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "kga/gradkit/graph.hpp"

namespace kga::gradkit {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_slot = 0;
  std::size_t worst_index = 0;
  bool ok = true;           // false when a comparison was non-finite
  std::string failure;
};

/// Compares reverse-mode gradients of the scalar node `output` against
/// central finite differences with step `perturbation`, entry by entry over
/// every parameter. Relative error per entry is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const Graph& graph, NodeId output, const Bindings& bindings,
                           double perturbation = 1e-5);

}  // namespace kga::gradkit
