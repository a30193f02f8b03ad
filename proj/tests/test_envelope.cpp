#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fscat/envelope.hpp"
#include "fscat/quadrature.hpp"

using namespace fscat;

namespace {

// Gamma_0 = 1 normalizations: pi g0^2 (1 + 1/2) = 1 resp. pi g0^2 / 2 = 1.
const double g0_on_off = std::sqrt(2.0 / (3.0 * pi));
const double g0_sign = std::sqrt(2.0 / pi);

ScatterParams on_off_unit_rate(double beta, double delta = 0.0) {
    return ScatterParams(make_on_off(g0_on_off, beta), delta);
}

ScatterParams sign_unit_rate(double beta, double delta = 0.0) {
    return ScatterParams(make_sign_change(g0_sign, beta), delta);
}

// W scaled to its value at tau_c, by plain truncated quadrature: no periodic
// resummation, so it is an independent check of the geometric reduction.
cplx brute_force_tail(const ScatterParams& sp, double tau_c) {
    const double span = 40.0 / sp.gamma0();  // e^{-40} below double precision
    auto integrand = [&](double t) {
        return std::exp(f1_diff(sp, t, tau_c)) * std::sqrt(pi) * eval_g(sp.protocol, t);
    };
    const int panels = 200 + static_cast<int>(span / sp.period()) * 8;
    return integrate_panels(integrand, tau_c - span, tau_c, panels, 16);
}

}  // namespace

TEST_CASE("constant coupling reproduces the static reflection coefficient") {
    const double gamma = pi;  // g0 = 1
    const ScatterParams base(make_constant(1.0), 0.0);
    for (int i = 0; i <= 40; ++i) {
        const double delta = (-5.0 + 0.25 * i) * gamma;
        const ScatterParams sp(make_constant(1.0), delta);
        const cplx expected = -iu * gamma / (delta + iu * gamma);
        CHECK(std::abs(envelope_A(sp, 0.3, {}) - expected) < 1e-10);
    }
    (void)base;
}

TEST_CASE("f1 differentiates to the instantaneous rate minus i delta") {
    for (double delta : {0.0, 0.8}) {
        const ScatterParams sp = on_off_unit_rate(1.0, delta);
        const double h = 1e-6;
        for (int i = -4; i <= 4; ++i) {
            const double t = 0.23 * i;
            const cplx fd = (f1(sp, t + h) - f1(sp, t - h)) / (2.0 * h);
            const cplx expected(sp.rates.gamma_t(t), -delta);
            CHECK(std::abs(fd - expected) < 1e-7);
        }
    }
}

TEST_CASE("periodic resummation of W agrees with plain truncated quadrature") {
    for (double delta : {0.0, 0.7}) {
        for (double beta : {0.6, 1.0, 3.0}) {
            const ScatterParams sp = sign_unit_rate(beta, delta);
            for (double tau_c : {-0.31 * sp.period(), 0.0, 0.18 * sp.period()}) {
                const cplx resummed = scaled_tail(sp, tau_c);
                const cplx brute = brute_force_tail(sp, tau_c);
                CHECK(std::abs(resummed - brute) < 1e-8 * (1.0 + std::abs(brute)));
            }
        }
    }
}

TEST_CASE("scaled tail is periodic in the central time") {
    const ScatterParams sp = on_off_unit_rate(0.8, 0.4);
    const double T = sp.period();
    for (double tau_c : {-0.4 * T, 0.1 * T}) {
        const cplx a = scaled_tail(sp, tau_c);
        const cplx b = scaled_tail(sp, tau_c + T);
        CHECK(std::abs(a - b) < 1e-10 * (1.0 + std::abs(a)));
    }
}

TEST_CASE("envelope equals minus the product of the two partial amplitudes") {
    const ScatterParams sp = on_off_unit_rate(1.0, 0.5);
    for (double tau_c : {-0.45 * sp.period(), -0.1 * sp.period(), 0.37 * sp.period()}) {
        const cplx direct = envelope_A(sp, tau_c, {});
        const cplx product = -little_w(sp, tau_c) * big_w(sp, tau_c);
        CHECK(std::abs(direct - product) < 1e-10 * (1.0 + std::abs(direct)));
    }
}

TEST_CASE("flux is conserved across drive speeds and protocols") {
    for (double beta : {0.1, 1.0, 10.0}) {
        for (int which : {0, 1}) {
            const ScatterParams sp = which ? sign_unit_rate(beta) : on_off_unit_rate(beta);
            const EnvelopeGrid grid = envelope_grid(sp, 16);
            CHECK(std::abs(grid.unitarity_defect) < 1e-8);
        }
    }
}

TEST_CASE("slow drive freezes the static reflection at the instantaneous rate") {
    for (int which : {0, 1}) {
        const ScatterParams sp = which ? sign_unit_rate(0.01) : on_off_unit_rate(0.01);
        const double T = sp.period();
        CHECK(std::abs(envelope_A(sp, 0.0, {}) + 1.0) < 0.01);
        // Away from the quench points the adiabatic formula holds pointwise.
        for (double tau_c : {-0.125 * T, 0.0, 0.125 * T}) {
            const cplx slow = asymptotic_A(sp, Asymptote::slow, tau_c);
            CHECK(std::abs(envelope_A(sp, tau_c, {}) - slow) < 0.02);
        }
    }
    // Detuned variant: the frozen formula keeps the full delta dependence.
    const ScatterParams spd = on_off_unit_rate(0.01, 0.5);
    const cplx slow = asymptotic_A(spd, Asymptote::slow, 0.0);
    CHECK(std::abs(envelope_A(spd, 0.0, {}) - slow) < 0.02 * std::abs(slow));
}

TEST_CASE("fast drive averages the coupling to its mean harmonic") {
    const double beta = 100.0;
    const ScatterParams on = on_off_unit_rate(beta);
    const double T = on.period();
    for (int i = 0; i < 64; ++i) {
        const double tau_c = -0.5 * T + i * T / 64.0;
        const cplx fast = asymptotic_A(on, Asymptote::fast, tau_c);
        // Mean-harmonic limit in closed form: -(2/3)(1 + cos Omega tau_c).
        const cplx closed = -(2.0 / 3.0) * (1.0 + std::cos(on.omega() * tau_c));
        CHECK(std::abs(fast - closed) < 1e-12);
        CHECK(std::abs(envelope_A(on, tau_c, {}) - fast) < 0.07);
    }
    // Zero-mean coupling: the leading term vanishes and the first correction
    // -(1/beta) sin(2 Omega tau_c) carries the whole envelope.
    const ScatterParams sign = sign_unit_rate(beta);
    const double Ts = sign.period();
    for (int i = 0; i < 64; ++i) {
        const double tau_c = -0.5 * Ts + i * Ts / 64.0;
        const cplx first = -(1.0 / beta) * std::sin(2.0 * sign.omega() * tau_c);
        CHECK(std::abs(envelope_A(sign, tau_c, {}) - first) < 0.2 / beta);
    }
}

TEST_CASE("on-off envelope vanishes at the coupling quench") {
    for (double beta : {0.2, 1.0, 5.0}) {
        const ScatterParams sp = on_off_unit_rate(beta);
        const double edge = 0.5 * sp.period();  // Omega tau_c = +-pi
        CHECK(std::abs(envelope_A(sp, -edge, {})) < 1e-10);
        CHECK(std::abs(envelope_A(sp, edge, {})) < 1e-10);
    }
}

TEST_CASE("on-off at unit speed has a single node per period") {
    const ScatterParams sp = on_off_unit_rate(1.0);
    const EnvelopeGrid grid = envelope_grid(sp, 64);
    const std::vector<double> nodes = find_nodes(sp, grid);
    REQUIRE(nodes.size() == 1);
    CHECK(std::abs(nodes[0] + 0.5 * sp.period()) < 1e-6 * sp.period());
}

TEST_CASE("sign-change envelope repeats every half period") {
    const ScatterParams sp = sign_unit_rate(1.0);
    const double T = sp.period();
    for (double tau_c : {-0.4 * T, -0.13 * T, 0.22 * T}) {
        const cplx a = envelope_A(sp, tau_c, {});
        const cplx b = envelope_A(sp, tau_c + 0.5 * T, {});
        CHECK(std::abs(a - b) < 1e-9);
    }
}

TEST_CASE("sign-change node structure: quench zeros plus one extra per half cell") {
    const ScatterParams sp = sign_unit_rate(1.0);
    const double T = sp.period();
    const EnvelopeGrid grid = envelope_grid(sp, 64);
    const std::vector<double> nodes = find_nodes(sp, grid);
    REQUIRE(nodes.size() == 4);
    // Sorted: extra node, quench at -T/4, its half-period copy, quench at T/4
    // fall wherever they fall; identify by location instead of order.
    int quench = 0, extra = 0;
    double extra_loc = 0.0;
    for (double x : nodes) {
        if (std::abs(std::abs(x) - 0.25 * T) < 1e-6 * T) {
            ++quench;
        } else {
            ++extra;
            if (x > -0.25 * T && x < 0.0) extra_loc = x;
        }
    }
    CHECK(quench == 2);
    CHECK(extra == 2);
    CHECK(extra_loc < 0.0);
    CHECK(extra_loc > -0.25 * T);
    // The two extra zeros are half-period translates of each other.
    std::vector<double> extras;
    for (double x : nodes)
        if (std::abs(std::abs(x) - 0.25 * T) >= 1e-6 * T) extras.push_back(x);
    REQUIRE(extras.size() == 2);
    CHECK(std::abs(extras[1] - extras[0] - 0.5 * T) < 1e-6 * T);
}

TEST_CASE("ill-conditioned periodic reduction is reported, not returned") {
    // Gamma_0 T ~ 6e-13: the geometric factor would amplify roundoff past
    // any useful precision, so the evaluator must refuse.
    const ScatterParams sp = on_off_unit_rate(1e13);
    CHECK_THROWS_AS(envelope_A(sp, 0.0, {}), NumericalError);
}

TEST_CASE("identically zero coupling is rejected up front") {
    CHECK_THROWS_AS(ScatterParams(make_custom({}, 1.0, "empty"), 0.0), std::invalid_argument);
}
