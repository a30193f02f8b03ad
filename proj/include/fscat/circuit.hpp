#pragma once

#include <string>
#include <vector>

#include "fscat/protocol.hpp"

namespace fscat {

// Microwave realization: a transmission line coupled to a transmon through a
// Josephson ring modulator (JRM) biased at half a flux quantum, where the ring
// reduces to a three-wave mixer lambda Phi_X Phi_Y Phi_Z. Driving the Z mode
// with a classical pump current then modulates the line-transmon coupling.
//
// Unit convention: energies are supplied as angular frequencies (hbar = 1,
// line phase velocity v = 1); fluxes in the same units as phi0. The waveguide
// mode amplitude f_k0 carries dimension [flux]^2 [time]^{1/2} in this system,
// so that the resulting g(t) has the scattering-model dimension [time]^{-1/2}
// (decay rate Gamma = pi g^2). The dimensional consistency of this convention
// is covered by a unit-rescaling test.
struct CircuitParams {
    double ejp = 0.0;    // ring junction Josephson energy E'_J
    double la = 0.0;     // left-arm inductance (X mode)
    double lb = 0.0;     // right-arm inductance (Y mode)
    double ej = 0.0;     // transmon Josephson energy
    double ec = 0.0;     // transmon charging energy
    double f_k0 = 0.0;   // line mode amplitude at the probe wavevector
    double phi0 = 1.0;   // flux quantum
    double flux = 0.5;   // static flux through the ring; must equal phi0/2
    double omega0 = 0.0; // probe carrier frequency
};

struct JrmCoefficients {
    double lambda = 0.0;  // three-wave mixing strength  -2 sqrt2 pi^3 E'_J / phi0^3
    double mu_x = 0.0;    // quadratic confinements; mu_z = sqrt2 pi^2 E'_J / phi0^2
    double mu_y = 0.0;
    double mu_z = 0.0;
};

// Quadratic + cubic coefficients of the ring expansion about the half-quantum
// working point. Throws std::invalid_argument away from flux = phi0/2, where
// quadratic X Y mixing would contaminate the three-wave term.
JrmCoefficients jrm_coefficients(const CircuitParams& cp);

// Full (unexpanded) nonlinear ring energy at given mode fluxes; the Taylor
// coefficients above must emerge from its derivatives at the working point.
double jrm_ring_energy(const CircuitParams& cp, double phi_x, double phi_y, double phi_z);

struct TransmonParams {
    double omega_c = 0.0;  // sqrt(8 E_J E_C)
    double kerr = 0.0;     // U = -E_C
    double ej_ec_ratio = 0.0;
};

TransmonParams transmon_params(const CircuitParams& cp);

// dg / dI_p: the pump current I_p pins Phi_Z = I_p / (4 mu_z), and the mixer
// turns it into the line-transmon coupling g = lambda f_k0 sqrt(2E_C/E_J)
// * I_p / (4 mu_z).
double coupling_per_current(const CircuitParams& cp);

// Pump-current harmonics -> coupling-protocol harmonics (a linear map).
DriveProtocol coupling_waveform(const CircuitParams& cp,
                                const std::map<int, cplx>& pump_harmonics,
                                double pump_omega);

struct ValidityReport {
    double ej_ec_ratio = 0.0;           // transmon limit: want >= threshold
    double carrier_over_drive = 0.0;    // omega0 / Omega: RWA wants >= threshold
    double carrier_over_rate = 0.0;     // omega0 / Gamma_0
    double carrier_over_detuning = 0.0; // omega0 / |omega0 - omega_c|; +inf on resonance
    double pump_phase_excursion = 0.0;  // pi max|Phi_Z| / phi0: linearization premise
    bool ok = true;
    std::vector<std::string> warnings;
};

// Checks the regime assumptions behind the mapping for a realized coupling
// waveform: the carrier must dominate the drive frequency, the decay rate and
// the detuning by ratio_threshold, and E_J/E_C must clear the same threshold.
// Zero detuning counts as satisfied. The pump phase excursion is reported and
// warned about but never flips ok (it degrades the map gracefully). A zero
// omega0 in the params means "probe on resonance with the transmon".
ValidityReport validity_report(const CircuitParams& cp, const DriveProtocol& g,
                               double ratio_threshold = 20.0);

}  // namespace fscat
