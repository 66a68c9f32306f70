#include "kga/gradkit/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace kga::gradkit {

GradCheckResult grad_check(const Graph& graph, NodeId output, const Bindings& bindings, double perturbation) {
  GradCheckResult result;
  if (graph.rows(output) != 1 || graph.cols(output) != 1) {
    result.ok = false;
    result.failure = "grad_check: output is not scalar";
    return result;
  }

  std::vector<DenseArray> params(bindings.parameters.begin(), bindings.parameters.end());
  Bindings probe{bindings.inputs, params};

  std::vector<DenseArray> analytic;
  try {
    const Evaluation base = forward(graph, probe);
    analytic = backward(base, output);
  } catch (const std::exception& e) {
    result.ok = false;
    result.failure = e.what();
    return result;
  }

  auto evaluate = [&]() -> double {
    try {
      return forward(graph, probe).scalar(output);
    } catch (const NonFiniteError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  for (std::size_t slot = 0; slot < params.size(); ++slot) {
    for (std::size_t k = 0; k < params[slot].size(); ++k) {
      const double saved = params[slot][k];
      params[slot][k] = saved + perturbation;
      const double up = evaluate();
      params[slot][k] = saved - perturbation;
      const double down = evaluate();
      params[slot][k] = saved;

      const double numeric = (up - down) / (2.0 * perturbation);
      const double exact = analytic[slot][k];
      if (!std::isfinite(numeric) || !std::isfinite(exact)) {
        result.ok = false;
        result.failure = "non-finite comparison at slot " + std::to_string(slot) + " entry " + std::to_string(k);
        result.max_relative_error = std::numeric_limits<double>::infinity();
        result.worst_slot = slot;
        result.worst_index = k;
        return result;
      }
      const double denom = std::max({std::fabs(exact), std::fabs(numeric), 1e-8});
      const double error = std::fabs(exact - numeric) / denom;
      if (error > result.max_relative_error) {
        result.max_relative_error = error;
        result.worst_slot = slot;
        result.worst_index = k;
      }
    }
  }
  return result;
}

}  // namespace kga::gradkit
