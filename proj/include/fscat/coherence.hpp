#pragma once

#include <cstdint>
#include <vector>

#include "fscat/envelope.hpp"

namespace fscat {

// Two-photon bound-state amplitude B(tau_c, tau_d): the correction on top of
// the product of single-photon envelopes when two excitations overlap in the
// cavity and feel the Kerr shift U. tau_c is the (reduced) time of the earlier
// detection, tau_d >= 0 the delay to the later one. Computed from the
// overflow-safe form
//
//   B = -i pi U g(tau_c+tau_d) g(tau_c) E(tau_c,tau_d) J(tau_c) / (1 - rho),
//   E = e^{-[f1(tau_c+tau_d) - f1(tau_c)]},
//   J = int_{tau_c-T}^{tau_c} e^{iU(t'-tau_c)} e^{2[f1(t') - f1(tau_c)]} V(t')^2 dt',
//   rho = e^{-(2 Gamma_0 - 2 i delta + i U) T},
//
// where V is the scaled tail of the envelope module. |E| <= 1 and the J
// integrand is bounded, so the evaluation is overflow-safe at any drive speed;
// the geometric factor 1/(1-rho) resums the earlier periods of the t' tail.
cplx big_B(const ScatterParams& sp, double tau_c, double tau_d,
           const QuadOptions& quad = {});

// Normalized second-order coherences of the reflected (ll) and transmitted
// (rr) beams for a weak coherent input:
//
//   g2_ll = |1 + B / (r(tau_c+tau_d) r(tau_c))|^2,   r = A,
//   g2_rr = |1 + B / (t(tau_c+tau_d) t(tau_c))|^2,   t = 1 + A.
//
// Near a node of the respective envelope (|r| or |t| below node_floor) the
// normalization diverges; the value is then NaN and the caller should consult
// the node mask of coherence_map.
double g2_ll(const ScatterParams& sp, double tau_c, double tau_d,
             const QuadOptions& quad = {}, double node_floor = 1e-6);
double g2_rr(const ScatterParams& sp, double tau_c, double tau_d,
             const QuadOptions& quad = {}, double node_floor = 1e-6);

struct CoherenceMap {
    std::vector<double> tau_c;  // n_c uniform samples tiling [-T/2, T/2)
    std::vector<double> tau_d;  // n_d uniform samples of [0, tau_d_max]
    // Row-major over (tau_c, tau_d): index ic * n_d + id.
    std::vector<cplx> B;
    std::vector<double> g2_ll, g2_rr;  // NaN where the node mask is set
    std::vector<std::uint8_t> node_mask;
    double period = 0.0;
    double node_floor = 0.0;

    std::size_t idx(std::size_t ic, std::size_t id) const { return ic * tau_d.size() + id; }
};

// tau_d_max <= 0 selects the default window: 3 periods when beta >= 1 (the
// structure repeats per period) and 10/Gamma_0 otherwise (the bound-state
// contribution has decayed by then).
CoherenceMap coherence_map(const ScatterParams& sp, int n_tau_c, int n_tau_d,
                           double tau_d_max = 0.0, const QuadOptions& quad = {},
                           double node_floor = 1e-6);

}  // namespace fscat
