#include "hmmrates/optim.hpp"

#include <cmath>

namespace hmmrates {

MinimizeResult minimize_bfgs(const Objective& f, Vector x0, int max_iters, double grad_tol) {
    const auto n = x0.size();
    MinimizeResult out;
    out.x = std::move(x0);
    Vector grad(n);
    out.value = f(out.x, grad);
    Matrix inv_hess = Matrix::Identity(n, n);

    for (int it = 0; it < max_iters; ++it) {
        out.iterations = it;
        if (!std::isfinite(out.value) || !grad.allFinite()) return out;
        if (grad.lpNorm<Eigen::Infinity>() < grad_tol) {
            out.converged = true;
            return out;
        }
        Vector dir = -inv_hess * grad;
        double slope = grad.dot(dir);
        if (!(slope < 0.0)) {
            inv_hess.setIdentity();
            dir = -grad;
            slope = -grad.squaredNorm();
        }

        double step = 1.0;
        Vector x_new(n), g_new(n);
        double f_new = 0.0;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            x_new = out.x + step * dir;
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= out.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
        }
        if (!accepted) return out;

        const Vector s = x_new - out.x;
        const Vector y = g_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Matrix eye = Matrix::Identity(n, n);
            inv_hess = (eye - rho * s * y.transpose()) * inv_hess * (eye - rho * y * s.transpose()) +
                       rho * s * s.transpose();
        }
        out.x = x_new;
        out.value = f_new;
        grad = g_new;
    }
    out.iterations = max_iters;
    out.converged = grad.lpNorm<Eigen::Infinity>() < grad_tol;
    return out;
}

}  // namespace hmmrates
