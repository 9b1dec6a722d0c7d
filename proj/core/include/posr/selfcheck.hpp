#pragma once

#include <iosfwd>

namespace posr {

// Built-in verification sweep: finite-difference gradient checks over every
// op and block, adversarial-loss equilibrium identities, metric
// recomputation oracles and resampling kernel sanity. Prints one line per
// check; returns true when everything passes.
bool run_selfcheck(std::ostream& out);

} // namespace posr
