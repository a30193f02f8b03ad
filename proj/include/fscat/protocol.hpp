#pragma once

#include <map>
#include <string>

#include "fscat/types.hpp"

namespace fscat {

// Time-periodic cavity-waveguide coupling
//
//     g(t) = sum_m g_m exp(-i m Omega t),
//
// held as a sparse harmonic map. g(t) is a real amplitude, so the map must
// satisfy g_{-m} = conj(g_m); this is validated at construction.
struct DriveProtocol {
    std::map<int, cplx> harmonics;
    double omega = 0.0;  // modulation angular frequency, > 0
    std::string label = "custom";

    double period() const { return 2.0 * pi / omega; }
    // Largest |m| with a nonzero coefficient (0 for constant coupling).
    int max_harmonic() const;
};

// g(t) = g0 (1 + cos Omega t): coupling pinched off once per period.
DriveProtocol make_on_off(double g0, double omega);
// g(t) = g0 cos Omega t: coupling amplitude crosses zero twice per period.
DriveProtocol make_sign_change(double g0, double omega);
// Static coupling; omega_ref only fixes the bookkeeping period downstream.
DriveProtocol make_constant(double g0, double omega_ref = 1.0);
// Arbitrary harmonic content; throws std::invalid_argument unless Hermitian.
DriveProtocol make_custom(std::map<int, cplx> harmonics, double omega,
                          std::string label = "custom");

double eval_g(const DriveProtocol& p, double t);
double eval_g_dot(const DriveProtocol& p, double t);

// Harmonics of the instantaneous decay rate Gamma(t) = pi g(t)^2, i.e. the
// discrete self-convolution
//
//     Gamma_m = pi sum_n g_{m-n} g_n,
//
// supported on |m| <= 2 max_harmonic. Gamma_0 is the cycle-averaged rate and
// beta = Omega / Gamma_0 is the dimensionless drive speed.
struct RateSpectrum {
    std::map<int, cplx> harmonics;
    double gamma0 = 0.0;
    double omega = 0.0;
    double beta = 0.0;           // undefined (0) when zero_coupling
    bool zero_coupling = false;  // all g_m vanish; downstream ops reject this

    double period() const { return 2.0 * pi / omega; }
    cplx harmonic(int m) const;
    // Gamma(t) reconstructed from the harmonics; real and >= 0 pointwise.
    double gamma_t(double t) const;
};

RateSpectrum rate_spectrum(const DriveProtocol& p);

}  // namespace fscat
