#pragma once

#include <functional>

#include "hmmrates/linalg.hpp"

namespace hmmrates {

struct MinimizeResult {
    Vector x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Objective returning f(x) and writing the gradient.
using Objective = std::function<double(const Vector& x, Vector& grad)>;

// BFGS with Armijo backtracking. Converged when the gradient sup-norm falls
// below `grad_tol`.
MinimizeResult minimize_bfgs(const Objective& f, Vector x0, int max_iters = 500, double grad_tol = 1e-9);

}  // namespace hmmrates
