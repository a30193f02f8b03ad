#pragma once

#include <functional>
#include <vector>

#include "fscat/types.hpp"

namespace fscat {

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Nodes/weights for the n-point rule, computed once and cached.
const GaussLegendre& gauss_legendre(int n);

struct QuadOptions {
    double tol = 1e-10;      // absolute tolerance on the doubling estimate
    int panel_order = 16;    // fixed Gauss-Legendre order per panel
    int min_panels = 4;
    int max_panels = 1 << 14;
};

struct QuadResult {
    cplx value{};
    double error_estimate = 0.0;  // |I(2n panels) - I(n panels)|
    int panels = 0;
    bool converged = false;
};

// Composite fixed-order Gauss-Legendre over [a, b] with `panels` equal panels.
cplx integrate_panels(const std::function<cplx(double)>& f, double a, double b,
                      int panels, int order);

// Panel-doubling driver: doubles the panel count until successive estimates
// agree to opts.tol (or max_panels is exceeded, in which case converged=false).
QuadResult integrate_adaptive(const std::function<cplx(double)>& f, double a,
                              double b, const QuadOptions& opts = {});

}  // namespace fscat
