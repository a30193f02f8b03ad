#pragma once

#include <Eigen/Dense>
#include <map>

#include "fscat/envelope.hpp"

namespace fscat {

// Matrix over the harmonic ladder m, m' in [-M, M]; storage index is m + M.
struct FloquetBlock {
    int cutoff = 0;  // M
    Eigen::MatrixXcd mat;

    int dim() const { return 2 * cutoff + 1; }
    cplx at(int m, int mp) const { return mat(m + cutoff, mp + cutoff); }
};

// Cavity self-energy from elimination of the waveguide continuum,
// Sigma^{m m'} = -i Gamma_{m - m'}: a Toeplitz block built from the rate
// harmonics (the flat-band continuum makes it energy independent).
FloquetBlock self_energy_block(const RateSpectrum& rs, int cutoff);

// Dressed cavity propagator on resonance ladder rungs delta + m Omega:
// inverse of K_{m m'} = (delta + m Omega) delta_{m m'} - Sigma^{m m'}.
// Throws NumericalError if the inversion residual indicates (near-)singularity.
FloquetBlock dressed_green(const ScatterParams& sp, int cutoff);

// Sideband amplitudes of the scattered monochromatic beam: component m' rides
// at frequency delta + m' Omega. r_{m'} = -i pi sum_{n n'} g_{m'-n} G^{n n'} g_{n'},
// t_{m'} = delta_{m',0} + r_{m'}.
struct SidebandAmplitudes {
    int cutoff = 0;
    double omega = 0.0;
    std::map<int, cplx> r, t;

    cplx r_at(int m) const;
    cplx t_at(int m) const;
};

SidebandAmplitudes single_photon_sidebands(const ScatterParams& sp, int cutoff);

// | sum_m (|r_m|^2 + |t_m|^2) - 1 |: photon-number conservation across
// sidebands; decays with cutoff for a converged ladder.
double sideband_unitarity(const SidebandAmplitudes& amps);

// Time-domain envelope reassembled from the sidebands,
// A(tau_c) = sum_m r_m e^{-i m Omega tau_c}: must agree with the direct
// time-domain evaluation of envelope_A.
cplx reconstruct_A(const SidebandAmplitudes& amps, double tau_c);

}  // namespace fscat
