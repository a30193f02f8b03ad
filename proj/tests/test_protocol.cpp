#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fscat/protocol.hpp"

using namespace fscat;

namespace {

cplx harmonic_or_zero(const RateSpectrum& rs, int m) {
    auto it = rs.harmonics.find(m);
    return it == rs.harmonics.end() ? cplx(0.0) : it->second;
}

}  // namespace

TEST_CASE("on-off protocol carries the expected harmonics and rates") {
    const DriveProtocol p = make_on_off(1.0, 2.0);
    CHECK(p.harmonics.at(0) == cplx(1.0));
    CHECK(p.harmonics.at(1) == cplx(0.5));
    CHECK(p.harmonics.at(-1) == cplx(0.5));
    CHECK(p.max_harmonic() == 1);
    CHECK(p.period() == doctest::Approx(pi));

    // Gamma_m = pi sum_n g_{m-n} g_n for g(t) = 1 + cos(Omega t).
    const RateSpectrum rs = rate_spectrum(p);
    CHECK(rs.gamma0 == doctest::Approx(1.5 * pi).epsilon(1e-14));
    CHECK(harmonic_or_zero(rs, 1).real() == doctest::Approx(pi).epsilon(1e-14));
    CHECK(harmonic_or_zero(rs, -1).real() == doctest::Approx(pi).epsilon(1e-14));
    CHECK(harmonic_or_zero(rs, 2).real() == doctest::Approx(0.25 * pi).epsilon(1e-14));
    CHECK(harmonic_or_zero(rs, -2).real() == doctest::Approx(0.25 * pi).epsilon(1e-14));
    CHECK(rs.harmonics.count(3) == 0);
    CHECK(rs.beta == doctest::Approx(2.0 / (1.5 * pi)));
}

TEST_CASE("sign-change protocol carries the expected harmonics and rates") {
    const DriveProtocol p = make_sign_change(1.0, 1.0);
    CHECK(p.harmonics.count(0) == 0);
    CHECK(p.harmonics.at(1) == cplx(0.5));
    CHECK(p.harmonics.at(-1) == cplx(0.5));

    const RateSpectrum rs = rate_spectrum(p);
    CHECK(rs.gamma0 == doctest::Approx(0.5 * pi).epsilon(1e-14));
    CHECK(harmonic_or_zero(rs, 2).real() == doctest::Approx(0.25 * pi).epsilon(1e-14));
    CHECK(rs.harmonics.count(1) == 0);  // odd rate harmonics cancel
    CHECK(rs.beta == doctest::Approx(2.0 / pi).epsilon(1e-14));
}

TEST_CASE("constant protocol reduces to a single harmonic") {
    const DriveProtocol p = make_constant(0.7);
    CHECK(p.harmonics.size() == 1);
    CHECK(p.harmonics.at(0) == cplx(0.7));
    const RateSpectrum rs = rate_spectrum(p);
    CHECK(rs.gamma0 == doctest::Approx(pi * 0.49).epsilon(1e-14));
    CHECK(rs.harmonics.size() == 1);
}

TEST_CASE("time-domain coupling matches the closed forms") {
    const double omega = 3.0;
    const DriveProtocol on = make_on_off(0.8, omega);
    const DriveProtocol sign = make_sign_change(0.8, omega);
    for (int i = 0; i < 40; ++i) {
        const double t = -2.0 + 0.1 * i;
        CHECK(std::abs(eval_g(on, t) - 0.8 * (1.0 + std::cos(omega * t))) < 1e-13);
        CHECK(std::abs(eval_g(sign, t) - 0.8 * std::cos(omega * t)) < 1e-13);
        CHECK(std::abs(eval_g_dot(on, t) + 0.8 * omega * std::sin(omega * t)) < 1e-12);
    }
}

TEST_CASE("rate spectrum resums to pi g(t)^2 pointwise") {
    // Independent of the harmonic bookkeeping: Gamma(t) must equal pi g(t)^2
    // for any real protocol, here including a second drive harmonic.
    const DriveProtocol p = make_custom(
        {{0, 0.5}, {1, 0.3}, {-1, 0.3}, {2, cplx(0.1, 0.05)}, {-2, cplx(0.1, -0.05)}}, 1.7);
    const RateSpectrum rs = rate_spectrum(p);
    for (int i = 0; i <= 50; ++i) {
        const double t = i * p.period() / 50.0;
        const double g = eval_g(p, t);
        CHECK(std::abs(rs.gamma_t(t) - pi * g * g) < 1e-12);
    }
    // Support of the rate spectrum is twice the coupling support.
    for (const auto& [m, gm] : rs.harmonics) {
        (void)gm;
        CHECK(std::abs(m) <= 2 * p.max_harmonic());
    }
}

TEST_CASE("rate harmonics obey the hermiticity constraint") {
    const DriveProtocol p =
        make_custom({{0, 0.4}, {1, cplx(0.2, 0.1)}, {-1, cplx(0.2, -0.1)}}, 2.2);
    const RateSpectrum rs = rate_spectrum(p);
    for (const auto& [m, gm] : rs.harmonics)
        CHECK(std::abs(std::conj(gm) - harmonic_or_zero(rs, -m)) < 1e-14);
}

TEST_CASE("non-hermitian custom harmonics are rejected") {
    CHECK_THROWS_AS(make_custom({{1, cplx(0.5, 0.0)}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_custom({{1, cplx(0.5, 0.1)}, {-1, cplx(0.5, 0.1)}}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(make_custom({{0, cplx(0.5, 0.2)}}, 1.0), std::invalid_argument);
}

TEST_CASE("vanishing coupling is flagged") {
    const RateSpectrum rs = rate_spectrum(make_custom({}, 1.0, "empty"));
    CHECK(rs.zero_coupling);
    CHECK(rs.gamma0 == 0.0);
}
