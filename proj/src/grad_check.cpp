#include "engage/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "engage/common.hpp"

namespace engage {

double grad_check(const std::function<double()>& loss_fn,
                  const std::vector<ParamRef>& params,
                  double epsilon) {
    if (epsilon <= 0.0) throw ValidationError("grad_check: epsilon must be positive");
    if (params.empty()) return 0.0;

    zero_grads(params);
    double base = loss_fn();
    if (!std::isfinite(base))
        throw NumericError("grad_check: non-finite loss at unperturbed point (params start at '" +
                           params.front().name + "')");

    // Snapshot the analytic gradients; later evaluations overwrite them.
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.param->grad);

    double max_rel = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Param& p = *params[pi].param;
        for (size_t i = 0; i < p.value.size(); ++i) {
            double saved = p.value.data()[i];

            p.value.data()[i] = saved + epsilon;
            double f_plus = loss_fn();
            p.value.data()[i] = saved - epsilon;
            double f_minus = loss_fn();
            p.value.data()[i] = saved;

            if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                throw NumericError("grad_check: non-finite loss while perturbing parameter '" +
                                   params[pi].name + "' element " + std::to_string(i));

            double numeric = (f_plus - f_minus) / (2.0 * epsilon);
            double a = analytic[pi].data()[i];
            double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

} // namespace engage
