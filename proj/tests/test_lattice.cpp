#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fscat/lattice.hpp"

using namespace fscat;
using lattice::Config;

namespace {

// Coarse, fast lattices: these tests exercise correctness properties that are
// exact on any lattice (norm flow, product-state factorization, fold logic),
// plus one physics run at a tolerance matched to the resolution.
Config coarse_config() {
    Config cfg;
    cfg.dx = 0.1;
    cfg.pulse_bandwidth = 0.25;
    cfg.decay_tail = 8.0;
    return cfg;
}

}  // namespace

TEST_CASE("layout invariants after finalize") {
    const ScatterParams sp(make_constant(std::sqrt(1.0 / pi)), 0.0);  // Gamma = 1
    const Config cfg = lattice::finalize(coarse_config(), sp);
    CHECK(cfg.dt == doctest::Approx(0.25 * cfg.dx));
    CHECK(cfg.pulse_center_x < cfg.cavity_x);
    CHECK(cfg.cavity_x < cfg.readout_x);
    CHECK(cfg.readout_x < cfg.n_sites * cfg.dx);
    CHECK(cfg.total_time > 0.0);
    CHECK(cfg.smear_sigma == doctest::Approx(1.5 * cfg.dx));

    Config unstable = coarse_config();
    unstable.dt_factor = 0.4;
    CHECK_THROWS_AS(lattice::finalize(unstable, sp), std::invalid_argument);
}

TEST_CASE("period folding recovers a synthetic envelope") {
    // Hand-built series: out = ref (1 + 2 A(tau)) with a known A; no dynamics
    // involved, so this isolates the fold, weighting and binning logic.
    const double T = 2.0, delay = 4.0, omega = 2.0 * pi / T;
    lattice::FieldSeries fs;
    fs.period = T;
    fs.cfg.cavity_x = 10.0;
    fs.cfg.readout_x = 10.0 + delay;
    auto A_true = [&](double tau) { return 0.3 * std::exp(-iu * omega * tau) - cplx(0.1, 0.0); };
    for (double t = 0.0; t <= 40.0; t += 0.01) {
        const cplx ref = std::exp(-std::pow((t - 20.0) / 8.0, 2)) * std::exp(iu * 0.3 * t);
        fs.t.push_back(t);
        fs.ref.push_back(ref);
        fs.out.push_back(ref * (1.0 + 2.0 * A_true(t - delay)));
    }
    const lattice::FoldedEnvelope env = lattice::extract_envelope(fs, 8);
    for (int b = 0; b < 8; ++b) {
        REQUIRE(env.count[b] > 0);
        // In-bin variation of A biases the average at second order in the
        // bin width; 2e-2 covers it at 8 bins.
        CHECK(std::abs(env.A[b] - A_true(env.tau_c[b])) < 2e-2);
    }
}

TEST_CASE("constant coupling on resonance reflects the full pulse") {
    const ScatterParams sp(make_constant(std::sqrt(1.0 / pi)), 0.0);  // Gamma = 1
    Config cfg = coarse_config();
    cfg.dx = 0.08;
    cfg.pulse_bandwidth = 0.1;
    cfg.decay_tail = 15.0;
    const lattice::FieldSeries fs = lattice::run_single_photon(sp, cfg);
    CHECK(fs.norm_drift < 1e-8);
    const lattice::FoldedEnvelope env = lattice::extract_envelope(fs, 8);
    double lo = 1e9, hi = -1e9;
    for (int b = 0; b < 8; ++b) {
        REQUIRE(env.count[b] > 0);
        CHECK(std::abs(env.A[b] + 1.0) < 2.5e-2);
        lo = std::min(lo, std::abs(env.A[b]));
        hi = std::max(hi, std::abs(env.A[b]));
    }
    CHECK(hi - lo < 2e-2);  // nothing modulates a static coupling
}

TEST_CASE("integrator error falls by two to the fourth under step halving") {
    const ScatterParams sp(make_on_off(std::sqrt(2.0 / (3.0 * pi)), 1.0), 0.0);
    Config base = coarse_config();
    // Freeze the horizon to a multiple of the base step so the three runs
    // share an exactly nested time grid.
    const Config probe = lattice::finalize(base, sp);
    const double dt1 = 0.25 * probe.dx;
    base.total_time = std::ceil(probe.total_time / dt1) * dt1;

    auto run = [&](double f) {
        Config cfg = base;
        cfg.dt_factor = f;
        return lattice::run_single_photon(sp, cfg);
    };
    const lattice::FieldSeries r1 = run(0.25);
    const lattice::FieldSeries r2 = run(0.125);
    const lattice::FieldSeries r4 = run(0.0625);
    // This lattice is deliberately coarse, so the base-step drift only has to
    // be small, not at the default-resolution 1e-8 level; quartering the step
    // must shrink it by ~4^6 (the stability function is sixth order in the
    // step-eigenvalue product).
    CHECK(r1.norm_drift < 1e-6);
    CHECK(r4.norm_drift < 1e-3 * r1.norm_drift);

    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < r1.out.size(); ++i) {
        e1 = std::max(e1, std::abs(r1.out[i] - r4.out[4 * i]));
        e2 = std::max(e2, std::abs(r2.out[2 * i] - r4.out[4 * i]));
    }
    REQUIRE(e1 > 0.0);
    // Fourth-order: with the dt/4 run as reference the ideal ratio is
    // (1 - 1/256) / (1/16 - 1/256) = 17.
    const double ratio = e1 / e2;
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("two-photon sector factorizes exactly for a linear cavity") {
    // With U = 0 the two-excitation evolution is the product of two
    // one-excitation evolutions, so every correlation estimate must come out
    // at exactly one: this pins the sqrt(2) couplings of the doubly occupied
    // ladder and the 1/16 normalization of the connected part.
    const ScatterParams sp(make_constant(std::sqrt(1.0 / pi)), 0.0, 0.0);
    Config cfg;
    cfg.dx = 0.18;
    cfg.pulse_bandwidth = 0.35;
    cfg.decay_tail = 8.0;
    const lattice::TwoPhotonMap map = lattice::run_two_photon(sp, cfg, 2, {0.0, 0.9, 1.8});
    CHECK(map.norm_drift < 1e-6);  // coarse-step run; see the halving test
    int usable = 0;
    for (std::size_t ic = 0; ic < map.tau_c.size(); ++ic) {
        for (std::size_t id = 0; id < map.tau_d.size(); ++id) {
            const std::size_t k = map.idx(ic, id);
            if (map.ll_ok[k]) {
                ++usable;
                CHECK(map.g2_ll[k] == doctest::Approx(1.0).epsilon(1e-4));
            }
            if (map.rr_ok[k]) CHECK(map.g2_rr[k] == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
    CHECK(usable >= 3);
}

TEST_CASE("oversized two-photon sheets are refused up front") {
    const ScatterParams sp(make_constant(std::sqrt(1.0 / pi)), 0.0, 0.0);
    Config cfg;
    cfg.dx = 0.005;  // ~4000 sites: the sheet would not fit
    CHECK_THROWS_AS(lattice::run_two_photon(sp, cfg, 2, {0.0}), std::invalid_argument);
}
