#ifndef ENGAGE_GRAD_CHECK_HPP
#define ENGAGE_GRAD_CHECK_HPP

#include <functional>
#include <vector>

#include "engage/matrix.hpp"

namespace engage {

// Central-difference gradient checker.
//
// `loss_fn` must be deterministic in the parameter values and, when
// invoked, accumulate analytic gradients into each Param's grad. The
// checker zeroes all grads, runs `loss_fn` once to capture the analytic
// gradient, then perturbs every parameter element by +/-epsilon and
// compares against (f(x+eps) - f(x-eps)) / (2 eps).
//
// Returns max over elements of |analytic - numeric| / max(|analytic|,
// |numeric|, 1e-8); 0 for an empty parameter list. A non-finite loss
// value raises NumericError naming the offending parameter.
double grad_check(const std::function<double()>& loss_fn,
                  const std::vector<ParamRef>& params,
                  double epsilon);

} // namespace engage

#endif
