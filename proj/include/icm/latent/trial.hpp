#pragma once

#include <cstddef>
#include <optional>
#include <string>

namespace icm::latent {

/// One simulated trial of a latent-model experiment.
struct TrialRecord {
  std::size_t trial_index = 0;
  double performance = 0.0;                 // in [0, 1]
  double generic_ratio_estimated = 0.0;     // NaN when the diagnostic failed
  double generic_ratio_ground_truth = 0.0;
  bool converged = false;
  std::optional<double> p_value;
  std::string error;                        // non-empty when the trial failed
};

}  // namespace icm::latent
