#include "fscat/envelope.hpp"

#include <algorithm>
#include <cmath>

namespace fscat {

namespace {

// Real periodic part of f1: i sum_{m!=0} Gamma_m e^{-i m Omega t} / (m Omega),
// with the +-m pairs combined so the result is manifestly real.
double f_osc(const RateSpectrum& rs, double t) {
    double s = 0.0;
    for (const auto& [m, gm] : rs.harmonics) {
        if (m <= 0) continue;
        const double mw = m * rs.omega;
        s -= 2.0 * std::imag(gm * std::exp(-iu * mw * t)) / mw;
    }
    return s;
}

double gamma_dot(const RateSpectrum& rs, double t) {
    cplx s{};
    for (const auto& [m, gm] : rs.harmonics)
        s += gm * (-iu * (m * rs.omega)) * std::exp(-iu * static_cast<double>(m) * rs.omega * t);
    return s.real();
}

// Geometric reduction factor 1/(1-q) with q = e^{-(Gamma_0 - i delta) T}.
cplx geometric_factor(const ScatterParams& sp) {
    const double T = sp.period();
    const cplx q = std::exp(-(sp.gamma0() - iu * sp.delta) * T);
    const cplx denom = 1.0 - q;
    const double cond = (1.0 + std::abs(q)) / std::abs(denom);
    if (!(cond < 1e12))
        throw NumericalError(
            "scaled_tail: periodic reduction ill-conditioned, |1-q|=" +
            std::to_string(std::abs(denom)) + " (condition ~" + std::to_string(cond) +
            "); Gamma_0 T and delta T are both too small");
    return 1.0 / denom;
}

}  // namespace

ScatterParams::ScatterParams(DriveProtocol p, double delta_in, double kerr_in)
    : protocol(std::move(p)), rates(rate_spectrum(protocol)), delta(delta_in), kerr(kerr_in) {
    if (rates.zero_coupling)
        throw std::invalid_argument(
            "ScatterParams: coupling vanishes identically; scattering is trivial");
}

cplx f1(const ScatterParams& sp, double t) {
    return (sp.gamma0() - iu * sp.delta) * t + f_osc(sp.rates, t);
}

cplx f1_diff(const ScatterParams& sp, double t2, double t1) {
    return (sp.gamma0() - iu * sp.delta) * (t2 - t1) + (f_osc(sp.rates, t2) - f_osc(sp.rates, t1));
}

cplx little_w(const ScatterParams& sp, double tau_c) {
    return std::sqrt(pi) * eval_g(sp.protocol, tau_c) * std::exp(-f1(sp, tau_c));
}

cplx scaled_tail(const ScatterParams& sp, double tau_c, const QuadOptions& quad) {
    const cplx geom = geometric_factor(sp);
    const double T = sp.period();
    auto integrand = [&](double tp) {
        // Re f1_diff <= 0 on [tau_c - T, tau_c], so the factor never overflows.
        return std::exp(f1_diff(sp, tp, tau_c)) * std::sqrt(pi) * eval_g(sp.protocol, tp);
    };
    QuadResult res = integrate_adaptive(integrand, tau_c - T, tau_c, quad);
    if (!res.converged)
        throw NumericalError("scaled_tail: quadrature stalled at " +
                             std::to_string(res.panels) + " panels, est. error " +
                             std::to_string(res.error_estimate));
    return res.value * geom;
}

cplx big_w(const ScatterParams& sp, double tau_c, const QuadOptions& quad) {
    return std::exp(f1(sp, tau_c)) * scaled_tail(sp, tau_c, quad);
}

cplx envelope_A(const ScatterParams& sp, double tau_c, const QuadOptions& quad) {
    return -std::sqrt(pi) * eval_g(sp.protocol, tau_c) * scaled_tail(sp, tau_c, quad);
}

EnvelopeGrid envelope_grid(const ScatterParams& sp, int n_samples, const QuadOptions& quad) {
    if (n_samples < 8)
        throw std::invalid_argument("envelope_grid: need at least 8 samples");
    const double T = sp.period();
    EnvelopeGrid grid;
    grid.period = T;
    grid.tau_c.resize(n_samples);
    grid.A.resize(n_samples);
    grid.r.resize(n_samples);
    grid.t.resize(n_samples);
    grid.g1_rr.resize(n_samples);
    grid.g1_ll.resize(n_samples);
    double max_gdot = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double tc = -0.5 * T + i * T / n_samples;
        const cplx A = envelope_A(sp, tc, quad);
        grid.tau_c[i] = tc;
        grid.A[i] = A;
        grid.r[i] = A;
        grid.t[i] = 1.0 + A;
        grid.g1_ll[i] = std::norm(A);
        grid.g1_rr[i] = std::norm(1.0 + A);
        max_gdot = std::max(max_gdot, std::abs(gamma_dot(sp.rates, tc)));
    }
    // Flux conservation across one period, evaluated by the same quadrature
    // driver (not the plot grid): (1/T) int (|r|^2 + |t|^2) - 1
    //                            = (2/T) int (|A|^2 + Re A).
    auto defect_integrand = [&](double tc) -> cplx {
        const cplx A = envelope_A(sp, tc, quad);
        return std::norm(A) + A.real();
    };
    QuadOptions defect_quad = quad;
    defect_quad.tol = std::max(quad.tol, 1e-12) * T;
    QuadResult res = integrate_adaptive(defect_integrand, -0.5 * T, 0.5 * T, defect_quad);
    grid.unitarity_defect = 2.0 / T * res.value.real();
    grid.adiabaticity = max_gdot / (sp.gamma0() * sp.gamma0());
    return grid;
}

cplx asymptotic_A(const ScatterParams& sp, Asymptote which, double tau_c) {
    switch (which) {
        case Asymptote::slow: {
            // Cavity relaxes instantly on the drive scale: the static-coupling
            // reflection evaluated at the frozen rate Gamma(tau_c).
            const double gam = sp.rates.gamma_t(tau_c);
            if (gam == 0.0 && sp.delta == 0.0) return 0.0;
            return -gam / cplx(gam, -sp.delta);
        }
        case Asymptote::fast: {
            // Sidebands average out: only the mean harmonic g_0 feeds the cavity.
            const double gmean = sp.protocol.harmonics.count(0)
                                     ? sp.protocol.harmonics.at(0).real()
                                     : 0.0;
            return -pi * eval_g(sp.protocol, tau_c) * gmean / cplx(sp.gamma0(), -sp.delta);
        }
    }
    throw std::invalid_argument("asymptotic_A: unknown asymptote");
}

std::vector<double> find_nodes(const ScatterParams& sp, const EnvelopeGrid& grid,
                               double abs_tol, const QuadOptions& quad) {
    const int n = static_cast<int>(grid.tau_c.size());
    if (n < 8) throw std::invalid_argument("find_nodes: grid too coarse");
    const double T = grid.period;

    std::vector<double> absA(n);
    double max_abs = 0.0;
    for (int i = 0; i < n; ++i) {
        absA[i] = std::abs(grid.A[i]);
        max_abs = std::max(max_abs, absA[i]);
    }
    if (abs_tol <= 0.0) abs_tol = 1e-6 * max_abs;

    auto eval_abs = [&](double tc) { return std::abs(envelope_A(sp, tc, quad)); };
    auto wrap = [&](double tc) {
        double u = std::fmod(tc + 0.5 * T, T);
        if (u < 0.0) u += T;
        return u - 0.5 * T;
    };

    std::vector<double> nodes;
    const double h = T / n;
    const double inv_golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < n; ++i) {
        // Cyclic local minima of |A| seed a golden-section refinement; the
        // evaluator is periodic, so brackets may reach past the seam.
        if (!(absA[i] <= absA[(i + n - 1) % n] && absA[i] <= absA[(i + 1) % n])) continue;
        double a = grid.tau_c[i] - h, b = grid.tau_c[i] + h;
        double x1 = b - inv_golden * (b - a), x2 = a + inv_golden * (b - a);
        double f1v = eval_abs(x1), f2v = eval_abs(x2);
        while (b - a > 1e-12 * T) {
            if (f1v < f2v) {
                b = x2;
                x2 = x1;
                f2v = f1v;
                x1 = b - inv_golden * (b - a);
                f1v = eval_abs(x1);
            } else {
                a = x1;
                x1 = x2;
                f1v = f2v;
                x2 = a + inv_golden * (b - a);
                f2v = eval_abs(x2);
            }
        }
        const double xmin = 0.5 * (a + b);
        if (eval_abs(xmin) < abs_tol) nodes.push_back(wrap(xmin));
    }

    std::sort(nodes.begin(), nodes.end());
    // Merge refinements that landed on the same zero (also across the seam).
    std::vector<double> merged;
    for (double x : nodes) {
        if (!merged.empty() && x - merged.back() < 1e-8 * T) continue;
        merged.push_back(x);
    }
    if (merged.size() > 1 && (merged.front() + T) - merged.back() < 1e-8 * T)
        merged.pop_back();
    return merged;
}

}  // namespace fscat
