#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "fkpam/errors.hpp"

namespace fkpam {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t intervals = 0;
};

/// Adaptive Gauss-Kronrod 15(7) on [a,b]. Bisection is driven by a worst-
/// interval heap; integrable endpoint singularities converge through repeated
/// splitting. Throws QuadratureError if the tolerance is not met within
/// max_intervals.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    double rel_tol = 1e-10, double abs_tol = 0.0,
                                    std::size_t max_intervals = 200000);

/// Convenience wrapper returning just the value.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 0.0);

/// Fixed-order Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights);

/// Gauss-Hermite nodes/weights for weight exp(-u^2) on the real line.
void gauss_hermite(int order, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace fkpam
