#pragma once

#include <functional>
#include <string>
#include <vector>

#include "posr/tape.hpp"
#include "posr/tensor.hpp"

namespace posr {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::int64_t checked_elements = 0;

    bool pass(double rtol) const { return max_rel_err < rtol; }
    std::string str() const;
};

// A deterministic scalar-valued function rebuilt per evaluation.
using ScalarFn = std::function<Tensor(Tape&)>;

// Central finite differences vs the tape gradient for every element of every
// listed parameter. `f` must re-read the parameters on each call so that the
// probe perturbations are visible.
GradCheckReport finite_diff_check(const ScalarFn& f,
                                  const std::vector<std::pair<std::string, Tensor*>>& params,
                                  double rtol = 1e-4, double step = 1e-4);

} // namespace posr
