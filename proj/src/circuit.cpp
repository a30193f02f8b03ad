#include "fscat/circuit.hpp"

#include <cmath>
#include <limits>

#include "fscat/envelope.hpp"

namespace fscat {

namespace {

void validate_positive(const CircuitParams& cp) {
    if (!(cp.ejp > 0.0 && cp.la > 0.0 && cp.lb > 0.0 && cp.ej > 0.0 && cp.ec > 0.0 &&
          cp.phi0 > 0.0))
        throw std::invalid_argument("circuit: E'_J, L_a, L_b, E_J, E_C, phi0 must be positive");
}

void validate_working_point(const CircuitParams& cp) {
    if (std::abs(cp.flux - 0.5 * cp.phi0) > 1e-9 * cp.phi0)
        throw std::invalid_argument(
            "circuit: ring must be biased at flux = phi0/2; away from it the quadratic "
            "X-Y mixing survives and the pure three-wave reduction does not apply");
}

}  // namespace

JrmCoefficients jrm_coefficients(const CircuitParams& cp) {
    validate_positive(cp);
    validate_working_point(cp);
    JrmCoefficients c;
    const double p2 = pi * pi / (cp.phi0 * cp.phi0);
    c.lambda = -2.0 * std::sqrt(2.0) * pi * p2 * cp.ejp / cp.phi0;
    c.mu_z = std::sqrt(2.0) * p2 * cp.ejp;
    c.mu_x = c.mu_z + 1.0 / (2.0 * cp.la);
    c.mu_y = c.mu_z + 1.0 / (2.0 * cp.lb);
    return c;
}

double jrm_ring_energy(const CircuitParams& cp, double phi_x, double phi_y, double phi_z) {
    validate_positive(cp);
    const double half = pi * cp.flux / (2.0 * cp.phi0);
    const double ax = pi * phi_x / cp.phi0;
    const double ay = pi * phi_y / cp.phi0;
    const double az = pi * phi_z / cp.phi0;
    return -4.0 * cp.ejp * (std::cos(half) * std::cos(ax) * std::cos(ay) * std::cos(az) +
                            std::sin(half) * std::sin(ax) * std::sin(ay) * std::sin(az));
}

TransmonParams transmon_params(const CircuitParams& cp) {
    validate_positive(cp);
    TransmonParams tp;
    tp.omega_c = std::sqrt(8.0 * cp.ej * cp.ec);
    tp.kerr = -cp.ec;
    tp.ej_ec_ratio = cp.ej / cp.ec;
    return tp;
}

double coupling_per_current(const CircuitParams& cp) {
    const JrmCoefficients c = jrm_coefficients(cp);
    return c.lambda * cp.f_k0 * std::sqrt(2.0 * cp.ec / cp.ej) / (4.0 * c.mu_z);
}

DriveProtocol coupling_waveform(const CircuitParams& cp,
                                const std::map<int, cplx>& pump_harmonics,
                                double pump_omega) {
    const double dgdi = coupling_per_current(cp);
    std::map<int, cplx> g;
    for (const auto& [m, im] : pump_harmonics)
        if (std::abs(im) > 0.0) g[m] = dgdi * im;
    return make_custom(std::move(g), pump_omega, "circuit");
}

ValidityReport validity_report(const CircuitParams& cp, const DriveProtocol& g,
                               double ratio_threshold) {
    const TransmonParams tp = transmon_params(cp);
    const RateSpectrum rs = rate_spectrum(g);
    const double omega0 = cp.omega0 > 0.0 ? cp.omega0 : tp.omega_c;
    const double detuning = std::abs(omega0 - tp.omega_c);
    const double inf = std::numeric_limits<double>::infinity();

    ValidityReport rep;
    rep.ej_ec_ratio = tp.ej_ec_ratio;
    rep.carrier_over_drive = omega0 / g.omega;
    rep.carrier_over_rate = rs.gamma0 > 0.0 ? omega0 / rs.gamma0 : inf;
    rep.carrier_over_detuning = detuning > 0.0 ? omega0 / detuning : inf;

    // Peak pump phase excursion pi |Phi_Z| / phi0 controls the truncation of
    // sin(pi Phi_Z/phi0) ~ pi Phi_Z/phi0 behind the linear pump map.
    const double dgdi = coupling_per_current(cp);
    const JrmCoefficients c = jrm_coefficients(cp);
    double peak_g = 0.0;
    const double T = g.period();
    for (int i = 0; i < 256; ++i) peak_g = std::max(peak_g, std::abs(eval_g(g, i * T / 256)));
    const double peak_phiz = (dgdi != 0.0) ? std::abs(peak_g / dgdi) / (4.0 * c.mu_z) : 0.0;
    rep.pump_phase_excursion = pi * peak_phiz / cp.phi0;

    auto flag = [&rep](bool bad, const std::string& msg) {
        if (bad) {
            rep.ok = false;
            rep.warnings.push_back(msg);
        }
    };
    flag(rep.ej_ec_ratio < ratio_threshold,
         "transmon limit marginal: E_J/E_C below the ratio threshold");
    flag(rep.carrier_over_drive < ratio_threshold,
         "drive not slow compared to the carrier (RWA strained)");
    flag(rep.carrier_over_rate < ratio_threshold,
         "decay rate too large compared to the carrier");
    flag(rep.carrier_over_detuning < ratio_threshold,
         "probe too far off the transmon carrier");
    // Informational only: a large excursion degrades the linear pump map
    // smoothly rather than invalidating the mapping outright.
    if (rep.pump_phase_excursion > 0.3)
        rep.warnings.push_back("pump phase excursion strains the linear pump map");
    return rep;
}

}  // namespace fscat
