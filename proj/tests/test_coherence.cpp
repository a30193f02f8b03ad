#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fscat/coherence.hpp"
#include "fscat/quadrature.hpp"

using namespace fscat;

namespace {

const double g0_sign = std::sqrt(2.0 / pi);  // Gamma_0 = 1
const double g0_on_off = std::sqrt(2.0 / (3.0 * pi));

// Two-photon bound-state amplitude by plain nested quadrature: the inner
// single-photon tail and the outer memory integral are both truncated sums,
// with no use of the periodic resummations under test.
cplx brute_force_B(const ScatterParams& sp, double tau_c, double tau_d) {
    auto tail = [&](double t) {
        const double span = 40.0 / sp.gamma0();
        auto inner = [&](double s) {
            return std::exp(f1_diff(sp, s, t)) * std::sqrt(pi) * eval_g(sp.protocol, s);
        };
        const int panels = 200 + static_cast<int>(span / sp.period()) * 8;
        return integrate_panels(inner, t - span, t, panels, 16);
    };
    const double span = 20.0 / sp.gamma0();
    auto outer = [&](double tp) {
        const cplx v = tail(tp);
        return std::exp(iu * sp.kerr * (tp - tau_c) + 2.0 * f1_diff(sp, tp, tau_c)) * v * v;
    };
    const int panels = 100 + static_cast<int>(span / sp.period()) * 16;
    const cplx memory = integrate_panels(outer, tau_c - span, tau_c, panels, 12);
    const cplx E = std::exp(-f1_diff(sp, tau_c + tau_d, tau_c));
    return -iu * pi * sp.kerr * eval_g(sp.protocol, tau_c + tau_d) * eval_g(sp.protocol, tau_c) *
           E * memory;
}

}  // namespace

TEST_CASE("constant coupling reproduces the closed-form bound-state amplitude") {
    const double gamma = pi;  // g0 = 1
    for (double dg : {-2.0, 0.0, 2.0}) {
        for (double ug : {-4.0, -2.0, -0.5}) {
            const double delta = dg * gamma, u = ug * gamma;
            const ScatterParams sp(make_constant(1.0), delta, u);
            const cplx r = -iu * gamma / (delta + iu * gamma);
            for (int i = 0; i <= 10; ++i) {
                const double tau_d = i / gamma;
                const cplx expected = r * r * u / (2.0 * delta + 2.0 * iu * gamma - u) *
                                      std::exp((iu * delta - gamma) * tau_d);
                CHECK(std::abs(big_B(sp, 0.4, tau_d) - expected) < 1e-8);
            }
        }
    }
}

TEST_CASE("antibunching dip hits one half at the critical interaction") {
    const double gamma = pi;
    for (double sign : {1.0, -1.0}) {
        const ScatterParams sp(make_constant(1.0), 0.0, sign * 2.0 * gamma);
        CHECK(std::abs(g2_ll(sp, 0.0, 0.0) - 0.5) < 1e-8);
    }
}

TEST_CASE("a linear cavity leaves the photons uncorrelated") {
    const ScatterParams sp(make_constant(1.0), 0.5 * pi, 0.0);
    CHECK(big_B(sp, 0.2, 1.3) == cplx{});
    CHECK(g2_ll(sp, 0.2, 1.3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g2_rr(sp, 0.2, 1.3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("driven bound-state amplitude agrees with nested brute-force quadrature") {
    const ScatterParams sp(make_sign_change(g0_sign, 1.0), 0.3, -4.0);
    const double T = sp.period();
    for (auto [tc, td] : {std::pair{0.0, 0.0}, {0.3 * T, 0.7}, {-0.2 * T, 1.3}}) {
        const cplx fast_path = big_B(sp, tc, td);
        const cplx brute = brute_force_B(sp, tc, td);
        CHECK(std::abs(fast_path - brute) < 1e-6 * (1.0 + std::abs(brute)));
    }
}

TEST_CASE("bound-state amplitude is periodic in the central time") {
    const ScatterParams sp(make_on_off(g0_on_off, 1.0), 0.2, -2.0);
    const double T = sp.period();
    for (double td : {0.0, 0.9}) {
        const cplx a = big_B(sp, 0.17 * T, td);
        const cplx b = big_B(sp, 0.17 * T + T, td);
        CHECK(std::abs(a - b) < 1e-9 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("bound-state amplitude decays at long delay") {
    const ScatterParams sp(make_sign_change(g0_sign, 1.0), 0.0, -4.0);
    CHECK(std::abs(big_B(sp, 0.1, 20.0)) < 1e-6);
}

TEST_CASE("negative delay is rejected") {
    const ScatterParams sp(make_constant(1.0), 0.0, -1.0);
    CHECK_THROWS_AS(big_B(sp, 0.0, -0.1), std::invalid_argument);
}

TEST_CASE("coherence map masks the coupling quenches and is finite elsewhere") {
    const ScatterParams sp(make_sign_change(g0_sign, 1.0), 0.0, -4.0);
    // n_tau_c divisible by 4 puts samples exactly on g(tau_c) = 0.
    const CoherenceMap map = coherence_map(sp, 8, 4, 2.0);
    REQUIRE(map.tau_c.size() == 8);
    REQUIRE(map.tau_d.size() == 4);
    for (int j = 0; j < 4; ++j) {
        CHECK(map.node_mask[map.idx(2, j)] == 1);  // tau_c = -T/4
        CHECK(map.node_mask[map.idx(6, j)] == 1);  // tau_c = +T/4
        CHECK(std::isnan(map.g2_ll[map.idx(2, j)]));
    }
    for (std::size_t c = 0; c < map.g2_ll.size(); ++c) {
        if (map.node_mask[c]) continue;
        CHECK(std::isfinite(map.g2_ll[c]));
        CHECK(map.g2_ll[c] >= 0.0);
        CHECK(std::isfinite(map.g2_rr[c]));
    }
}

TEST_CASE("reflected-beam correlations relax to unity at long delay") {
    const ScatterParams sp(make_sign_change(g0_sign, 1.0), 0.0, -4.0);
    const double T = sp.period();
    double acc = 0.0;
    int used = 0;
    for (int i = 0; i < 16; ++i) {
        const double tc = -0.5 * T + i * T / 16.0;
        const double g2 = g2_ll(sp, tc, 10.0);
        if (std::isnan(g2)) continue;
        acc += std::abs(g2 - 1.0);
        ++used;
    }
    REQUIRE(used >= 12);
    CHECK(acc / used < 0.05);
}
