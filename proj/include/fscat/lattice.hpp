#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "fscat/envelope.hpp"

// Brute-force cross-check of the analytic envelopes: a chiral (even-mode)
// waveguide discretized on a 1D lattice with central differences, a Kerr
// cavity side-coupled through a narrow Gaussian window, and RK4 time stepping.
// No rotating-frame or periodicity tricks are shared with the analytic path;
// agreement between the two is a genuine end-to-end validation.
namespace fscat::lattice {

struct Config {
    // Discretization knobs.
    double dx = 0.05;
    double dt_factor = 0.25;   // dt = dt_factor * dx; stability demands <= 0.25
    double smear_factor = 1.5; // coupling window sigma in units of dx; the
                               // smearing kills the spurious band-edge doubler
                               // mode of the central-difference stencil
    int guard_cells = 8;       // absorbing nothing: just monitored dead zones

    // Probe pulse: Gaussian wavepacket, amplitude std pulse_sigma in x,
    // bandwidth = 1/(2 pulse_sigma) in k. Carrier NaN means "at sp.delta",
    // i.e. resonant frame bookkeeping is carried by the cavity term.
    double pulse_bandwidth = 0.08;
    double pulse_carrier = std::numeric_limits<double>::quiet_NaN();
    double support_nsigma = 8.5;  // half-width treated as nonzero during layout

    // Horizon: padding after the trailing edge passes the cavity, in units of
    // 1/Gamma_0, so that the ring-down is emitted before the final snapshot.
    double decay_tail = 22.0;

    // Derived by finalize(); any value set here (> 0) is kept as an override.
    int n_sites = 0;
    double dt = 0.0;
    double smear_sigma = 0.0;
    double pulse_sigma = 0.0;
    double pulse_center_x = 0.0;
    double cavity_x = 0.0;
    double readout_x = 0.0;
    double total_time = 0.0;
};

// Lays out pulse, cavity, readout, horizon and wall so that (a) the pulse
// starts clear of the coupling window, (b) the scattered front never touches
// the far wall, (c) emissions for another extra_span of time (two-photon
// delays) still fit. Validates the stability margin dt <= dx/4.
Config finalize(Config cfg, const ScatterParams& sp, double extra_span = 0.0);

struct FieldSeries {
    std::vector<double> t;       // one sample per RK4 step
    std::vector<cplx> out;       // readout-site amplitude, coupled run
    std::vector<cplx> ref;       // same site, free (g = 0) run
    Config cfg;
    double period = 0.0;
    double norm_drift = 0.0;     // |norm(t_final) - norm(0)| of the coupled run
    double guard_max = 0.0;      // peak |amplitude|^2 seen in any guard cell
};

// Scatters a single-photon pulse off the driven cavity and records the
// even-mode field just behind the coupling window, together with a free
// reference run of the same pulse (the ratio cancels lattice dispersion).
FieldSeries run_single_photon(const ScatterParams& sp, const Config& cfg);

struct FoldedEnvelope {
    std::vector<double> tau_c;   // bin centers tiling [-T/2, T/2)
    std::vector<cplx> A;
    std::vector<double> se_re, se_im;  // weighted standard errors per bin
    std::vector<long> count;
};

// Folds the transfer ratio out/ref = 1 + 2A onto the reduced central time
// tau_c = (t - (x_readout - x_cavity)) mod T. Samples where the reference
// amplitude is below rel_floor * max|ref| carry no usable normalization and
// are dropped; the rest are averaged with weight |ref|^2.
FoldedEnvelope extract_envelope(const FieldSeries& fs, int n_bins, double rel_floor = 3e-3);

struct TwoPhotonMap {
    std::vector<double> tau_c;   // phase-bin centers tiling [-T/2, T/2)
    std::vector<double> tau_d;   // realized delays (snapped to the x grid)
    std::vector<double> g2_ll, g2_rr;   // idx = ic * n_d + id; NaN where starved
    std::vector<std::uint8_t> ll_ok, rr_ok;
    // Per-bin means of the reference-normalized pair intensities: num is
    // |A A + B|^2 (resp. |t t + B|^2), den the product of single-photon
    // intensities |A A|^2 (resp. |t t|^2). Directly comparable to phase
    // averages of the analytic amplitudes, and better conditioned than the
    // ratio when the denominator passes near a single-photon zero.
    std::vector<double> num_ll, den_ll, num_rr, den_rr;
    std::vector<long> count;  // samples folded into each bin
    double norm_drift = 0.0;     // two-excitation run
    double guard_max = 0.0;
    Config cfg;

    std::size_t idx(std::size_t ic, std::size_t id) const { return ic * tau_d.size() + id; }
};

// Full two-excitation evolution (symmetric two-field sheet + field-cavity
// strip + doubly occupied cavity) of a product pulse, plus the one-excitation
// and free runs needed to disentangle the connected part. Pairs are read as
// time series at fixed detectors just past the coupling window, one common
// near site and one far site per delay, so a sample at time t is the
// detection pair (tau_c, tau_c + tau_d) with tau_c the emission phase of the
// earlier photon. Each sample is normalized by the free reference pair,
// which cancels the pulse envelope and the lattice dispersion over the
// common path. Bins whose denominator mean falls below weight_floor_rel of
// the best bin keep their histograms but have g2 set to NaN.
TwoPhotonMap run_two_photon(const ScatterParams& sp, const Config& cfg, int n_phase_bins,
                            const std::vector<double>& tau_d_requested,
                            double weight_floor_rel = 1e-3);

}  // namespace fscat::lattice
