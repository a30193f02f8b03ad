#include "fscat/coherence.hpp"

#include <cmath>
#include <limits>

namespace fscat {

namespace {

// 1/(1 - rho) with the same conditioning guard as the single-photon reduction.
cplx two_photon_geometric(const ScatterParams& sp) {
    const double T = sp.period();
    const cplx rho = std::exp(-(2.0 * sp.gamma0() - 2.0 * iu * sp.delta + iu * sp.kerr) * T);
    const cplx denom = 1.0 - rho;
    const double cond = (1.0 + std::abs(rho)) / std::abs(denom);
    if (!(cond < 1e12))
        throw NumericalError("big_B: two-photon periodic reduction ill-conditioned, |1-rho|=" +
                             std::to_string(std::abs(denom)));
    return 1.0 / denom;
}

cplx oscillating_tail_j(const ScatterParams& sp, double tau_c, const QuadOptions& quad) {
    const double T = sp.period();
    auto integrand = [&](double tp) {
        // Re f1_diff(tp, tau_c) <= 0 on the window and V is bounded, so the
        // integrand cannot overflow even at Gamma_0 T >> 1.
        const cplx v = scaled_tail(sp, tp, quad);
        return std::exp(iu * sp.kerr * (tp - tau_c) + 2.0 * f1_diff(sp, tp, tau_c)) * v * v;
    };
    QuadResult res = integrate_adaptive(integrand, tau_c - T, tau_c, quad);
    if (!res.converged)
        throw NumericalError("big_B: tail quadrature stalled at " + std::to_string(res.panels) +
                             " panels, est. error " + std::to_string(res.error_estimate));
    return res.value;
}

double g2_from_amplitudes(cplx B, cplx amp_late, cplx amp_early, double node_floor) {
    if (std::min(std::abs(amp_late), std::abs(amp_early)) < node_floor)
        return std::numeric_limits<double>::quiet_NaN();
    return std::norm(1.0 + B / (amp_late * amp_early));
}

}  // namespace

cplx big_B(const ScatterParams& sp, double tau_c, double tau_d, const QuadOptions& quad) {
    if (tau_d < 0.0)
        throw std::invalid_argument("big_B: tau_d must be >= 0 (later detection second)");
    if (sp.kerr == 0.0) return {};  // linear cavity: envelopes factorize exactly
    const cplx geom = two_photon_geometric(sp);
    const cplx E = std::exp(-f1_diff(sp, tau_c + tau_d, tau_c));
    const cplx J = oscillating_tail_j(sp, tau_c, quad);
    return -iu * pi * sp.kerr * eval_g(sp.protocol, tau_c + tau_d) *
           eval_g(sp.protocol, tau_c) * E * J * geom;
}

double g2_ll(const ScatterParams& sp, double tau_c, double tau_d, const QuadOptions& quad,
             double node_floor) {
    const cplx B = big_B(sp, tau_c, tau_d, quad);
    const cplx r_late = envelope_A(sp, tau_c + tau_d, quad);
    const cplx r_early = envelope_A(sp, tau_c, quad);
    return g2_from_amplitudes(B, r_late, r_early, node_floor);
}

double g2_rr(const ScatterParams& sp, double tau_c, double tau_d, const QuadOptions& quad,
             double node_floor) {
    const cplx B = big_B(sp, tau_c, tau_d, quad);
    const cplx t_late = 1.0 + envelope_A(sp, tau_c + tau_d, quad);
    const cplx t_early = 1.0 + envelope_A(sp, tau_c, quad);
    return g2_from_amplitudes(B, t_late, t_early, node_floor);
}

CoherenceMap coherence_map(const ScatterParams& sp, int n_tau_c, int n_tau_d,
                           double tau_d_max, const QuadOptions& quad, double node_floor) {
    if (n_tau_c < 1 || n_tau_d < 2)
        throw std::invalid_argument("coherence_map: need n_tau_c >= 1, n_tau_d >= 2");
    const double T = sp.period();
    if (tau_d_max <= 0.0)
        tau_d_max = (sp.rates.beta >= 1.0) ? 3.0 * T : 10.0 / sp.gamma0();

    CoherenceMap map;
    map.period = T;
    map.node_floor = node_floor;
    map.tau_c.resize(n_tau_c);
    map.tau_d.resize(n_tau_d);
    for (int i = 0; i < n_tau_c; ++i) map.tau_c[i] = -0.5 * T + i * T / n_tau_c;
    for (int j = 0; j < n_tau_d; ++j) map.tau_d[j] = j * tau_d_max / (n_tau_d - 1);

    const std::size_t cells = static_cast<std::size_t>(n_tau_c) * n_tau_d;
    map.B.resize(cells);
    map.g2_ll.resize(cells);
    map.g2_rr.resize(cells);
    map.node_mask.assign(cells, 0);

    const bool linear = (sp.kerr == 0.0);
    const cplx geom = linear ? cplx{} : two_photon_geometric(sp);
    for (int i = 0; i < n_tau_c; ++i) {
        const double tc = map.tau_c[i];
        // J and the early-time amplitudes depend on tau_c only: hoist per column.
        const cplx J = linear ? cplx{} : oscillating_tail_j(sp, tc, quad);
        const cplx A_early = envelope_A(sp, tc, quad);
        const double g_early = eval_g(sp.protocol, tc);
        for (int j = 0; j < n_tau_d; ++j) {
            const double td = map.tau_d[j];
            const cplx A_late = envelope_A(sp, tc + td, quad);
            cplx B{};
            if (!linear) {
                const cplx E = std::exp(-f1_diff(sp, tc + td, tc));
                B = -iu * pi * sp.kerr * eval_g(sp.protocol, tc + td) * g_early * E * J * geom;
            }
            const std::size_t c = map.idx(i, j);
            map.B[c] = B;
            map.g2_ll[c] = g2_from_amplitudes(B, A_late, A_early, node_floor);
            map.g2_rr[c] = g2_from_amplitudes(B, 1.0 + A_late, 1.0 + A_early, node_floor);
            if (std::isnan(map.g2_ll[c]) || std::isnan(map.g2_rr[c])) map.node_mask[c] = 1;
        }
    }
    return map;
}

}  // namespace fscat
