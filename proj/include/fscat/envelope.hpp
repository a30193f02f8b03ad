#pragma once

#include <vector>

#include "fscat/protocol.hpp"
#include "fscat/quadrature.hpp"

namespace fscat {

// Scattering problem for a monochromatic drive of detuning delta from the
// cavity, with cavity anharmonicity (Kerr shift) kerr acting only in the
// two-excitation sector. Energies are angular frequencies; time is carried in
// the same inverse units.
struct ScatterParams {
    DriveProtocol protocol;
    RateSpectrum rates;
    double delta = 0.0;
    double kerr = 0.0;

    ScatterParams(DriveProtocol p, double delta_in, double kerr_in = 0.0);

    double period() const { return protocol.period(); }
    double omega() const { return protocol.omega; }
    double gamma0() const { return rates.gamma0; }
};

// Integrated complex phase of the dressed cavity amplitude,
//
//     f1(t) = (Gamma_0 - i delta) t + i sum_{m!=0} Gamma_m e^{-i m Omega t}/(m Omega),
//
// so that df1/dt = Gamma(t) - i delta. The oscillatory part is real and
// periodic; Re f1 is nondecreasing because Gamma(t) >= 0.
cplx f1(const ScatterParams& sp, double t);
// f1(t2) - f1(t1), assembled without forming the (possibly huge) secular
// terms separately.
cplx f1_diff(const ScatterParams& sp, double t2, double t1);

// w(tau_c) = sqrt(pi) g(tau_c) e^{-f1(tau_c)}. Grows like e^{Gamma_0 |tau_c|}
// for tau_c < 0, so it is only representable within a few periods of zero.
cplx little_w(const ScatterParams& sp, double tau_c);

// W(tau_c) = int_{-inf}^{tau_c} e^{f1(t')} sqrt(pi) g(t') dt'. Computed as
// e^{f1(tau_c)} * scaled_tail(tau_c); overflows in the same regime as e^{f1}.
cplx big_w(const ScatterParams& sp, double tau_c, const QuadOptions& quad = {});

// The overflow-safe workhorse
//
//     V(tau_c) = e^{-f1(tau_c)} W(tau_c)
//              = int_{-inf}^{tau_c} e^{f1(t') - f1(tau_c)} sqrt(pi) g(t') dt'.
//
// The integrand has modulus <= sqrt(pi)|g| because Re f1 is nondecreasing, and
// V is periodic. The tail over all earlier periods sums to a geometric factor
// 1/(1 - q), q = e^{-(Gamma_0 - i delta) T}; a one-period quadrature then
// suffices at any drive speed. Throws NumericalError when |1 - q| is so small
// the reduction is ill-conditioned.
cplx scaled_tail(const ScatterParams& sp, double tau_c, const QuadOptions& quad = {});

// Reflection envelope A(tau_c) = -w(tau_c) W(tau_c) = -sqrt(pi) g(tau_c) V(tau_c).
// r(tau_c) = A, t(tau_c) = 1 + A.
cplx envelope_A(const ScatterParams& sp, double tau_c, const QuadOptions& quad = {});

struct EnvelopeGrid {
    std::vector<double> tau_c;  // n uniform samples tiling [-T/2, T/2)
    std::vector<cplx> A, r, t;
    std::vector<double> g1_rr;  // |t|^2: transmitted-beam intensity correlation
    std::vector<double> g1_ll;  // |r|^2: reflected-beam intensity correlation
    double period = 0.0;
    // (1/T) int (|r|^2 + |t|^2) dtau_c - 1, by the same adaptive quadrature;
    // vanishes for an exact solution (flux conservation of the chopped beam).
    double unitarity_defect = 0.0;
    // max_t |dGamma/dt| / Gamma^2, a heuristic slow-drive measure (small when
    // the cavity follows the drive adiabatically). Scales linearly with beta.
    double adiabaticity = 0.0;
};

EnvelopeGrid envelope_grid(const ScatterParams& sp, int n_samples,
                           const QuadOptions& quad = {});

// Closed-form limiting envelopes used as cross-checks.
enum class Asymptote {
    slow,  // cavity adiabatically follows g: A = -Gamma(tau_c)/(Gamma(tau_c) - i delta)
    fast,  // only the mean harmonic couples: A = -pi g(tau_c) g_0 / (Gamma_0 - i delta)
};
cplx asymptotic_A(const ScatterParams& sp, Asymptote which, double tau_c);

// Zeros of |A(tau_c)| within one period [-T/2, T/2): grid minima refined by
// golden-section search on the continuous evaluator. A node is accepted when
// the refined minimum falls below abs_tol (default 1e-6 * max_grid |A|).
std::vector<double> find_nodes(const ScatterParams& sp, const EnvelopeGrid& grid,
                               double abs_tol = -1.0, const QuadOptions& quad = {});

}  // namespace fscat
