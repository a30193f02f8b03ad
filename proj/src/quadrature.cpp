#include "fscat/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace fscat {

namespace {

// Newton iteration on P_n with the Chebyshev-like initial guess; the roots of
// the Legendre polynomial converge in a handful of steps at any practical n.
GaussLegendre compute_rule(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GaussLegendre rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        double x = std::cos(pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Recurrence for P_n(x) and P_{n-1}(x).
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[n - 1 - k] = x;  // ascending order
        rule.weights[n - 1 - k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace

const GaussLegendre& gauss_legendre(int n) {
    static std::map<int, GaussLegendre> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_rule(n)).first;
    return it->second;
}

cplx integrate_panels(const std::function<cplx(double)>& f, double a, double b,
                      int panels, int order) {
    const GaussLegendre& gl = gauss_legendre(order);
    const double h = (b - a) / panels;
    cplx sum{};
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        cplx local{};
        for (int k = 0; k < order; ++k)
            local += gl.weights[k] * f(mid + 0.5 * h * gl.nodes[k]);
        sum += 0.5 * h * local;
    }
    return sum;
}

QuadResult integrate_adaptive(const std::function<cplx(double)>& f, double a,
                              double b, const QuadOptions& opts) {
    QuadResult res;
    if (a == b) {
        res.converged = true;
        return res;
    }
    int panels = opts.min_panels;
    cplx prev = integrate_panels(f, a, b, panels, opts.panel_order);
    while (panels <= opts.max_panels / 2) {
        panels *= 2;
        cplx cur = integrate_panels(f, a, b, panels, opts.panel_order);
        res.error_estimate = std::abs(cur - prev);
        res.value = cur;
        res.panels = panels;
        if (res.error_estimate < opts.tol) {
            res.converged = true;
            return res;
        }
        prev = cur;
    }
    return res;  // converged stays false
}

}  // namespace fscat
