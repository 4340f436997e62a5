#pragma once

#include <string>
#include <vector>

#include "blockiot/core/types.hpp"

namespace blockiot {

// Returns every invariant violation; empty means the observation is valid.
// Violations are data, not faults.
std::vector<std::string> validate_observation(const CanonicalObservation &o);

} // namespace blockiot
