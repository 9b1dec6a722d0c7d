#include "posr/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "posr/error.hpp"

namespace posr {

std::string GradCheckReport::str() const {
    std::ostringstream os;
    os.precision(6);
    os << "max_rel_err=" << max_rel_err;
    if (!worst_param.empty()) {
        os << " at " << worst_param << '[' << worst_index << ']'
           << " analytic=" << analytic_at_worst << " numeric=" << numeric_at_worst;
    }
    os << " over " << checked_elements << " elements";
    return os.str();
}

GradCheckReport finite_diff_check(const ScalarFn& f,
                                  const std::vector<std::pair<std::string, Tensor*>>& params,
                                  double rtol, double step) {
    (void)rtol;
    GradCheckReport report;

    // One analytic pass gives every parameter gradient at once.
    std::vector<std::vector<real_t>> analytic;
    {
        Tape tape;
        Tensor loss = f(tape);
        tape.backward(loss);
        for (const auto& [name, p] : params) {
            auto g = tape.grad(*p);
            analytic.emplace_back(g.begin(), g.end());
        }
    }

    const auto eval = [&]() -> double {
        Tape tape;
        return static_cast<double>(f(tape).item());
    };

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const auto& name = params[pi].first;
        Tensor& p = *params[pi].second;
        auto values = p.mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const real_t saved = values[i];
            values[i] = saved + static_cast<real_t>(step);
            const double up = eval();
            values[i] = saved - static_cast<real_t>(step);
            const double down = eval();
            values[i] = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double exact = static_cast<double>(analytic[pi][i]);
            const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
            const double rel = std::abs(numeric - exact) / denom;
            ++report.checked_elements;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_index = static_cast<std::int64_t>(i);
                report.analytic_at_worst = exact;
                report.numeric_at_worst = numeric;
            }
        }
    }
    return report;
}

} // namespace posr
