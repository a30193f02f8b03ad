#include "fscat/protocol.hpp"

#include <cmath>

namespace fscat {

namespace {

void validate_reality(const std::map<int, cplx>& harmonics) {
    for (const auto& [m, gm] : harmonics) {
        cplx conj_partner{};
        if (auto it = harmonics.find(-m); it != harmonics.end())
            conj_partner = it->second;
        if (std::abs(conj_partner - std::conj(gm)) > 1e-14 * (1.0 + std::abs(gm)))
            throw std::invalid_argument(
                "DriveProtocol: harmonics must satisfy g(-m) = conj(g(m)) so "
                "that g(t) is real (violated at m=" + std::to_string(m) + ")");
    }
}

void validate_omega(double omega) {
    if (!(omega > 0.0))
        throw std::invalid_argument("DriveProtocol: omega must be positive");
}

}  // namespace

int DriveProtocol::max_harmonic() const {
    int k = 0;
    for (const auto& [m, gm] : harmonics)
        if (std::abs(gm) > 0.0) k = std::max(k, std::abs(m));
    return k;
}

DriveProtocol make_on_off(double g0, double omega) {
    validate_omega(omega);
    if (!(g0 > 0.0))
        throw std::invalid_argument("make_on_off: g0 must be positive");
    DriveProtocol p;
    p.omega = omega;
    p.label = "on_off";
    p.harmonics = {{0, g0}, {1, 0.5 * g0}, {-1, 0.5 * g0}};
    return p;
}

DriveProtocol make_sign_change(double g0, double omega) {
    validate_omega(omega);
    if (!(g0 > 0.0))
        throw std::invalid_argument("make_sign_change: g0 must be positive");
    DriveProtocol p;
    p.omega = omega;
    p.label = "sign_change";
    p.harmonics = {{1, 0.5 * g0}, {-1, 0.5 * g0}};
    return p;
}

DriveProtocol make_constant(double g0, double omega_ref) {
    validate_omega(omega_ref);
    if (g0 < 0.0)
        throw std::invalid_argument("make_constant: g0 must be >= 0");
    DriveProtocol p;
    p.omega = omega_ref;
    p.label = "constant";
    p.harmonics = {{0, g0}};
    return p;
}

DriveProtocol make_custom(std::map<int, cplx> harmonics, double omega,
                          std::string label) {
    validate_omega(omega);
    validate_reality(harmonics);
    DriveProtocol p;
    p.omega = omega;
    p.label = std::move(label);
    p.harmonics = std::move(harmonics);
    return p;
}

double eval_g(const DriveProtocol& p, double t) {
    cplx g{};
    for (const auto& [m, gm] : p.harmonics)
        g += gm * std::exp(-iu * static_cast<double>(m) * p.omega * t);
    return g.real();  // imaginary part vanishes by the Hermiticity constraint
}

double eval_g_dot(const DriveProtocol& p, double t) {
    cplx gd{};
    for (const auto& [m, gm] : p.harmonics) {
        const double mw = m * p.omega;
        gd += gm * (-iu * mw) * std::exp(-iu * mw * t);
    }
    return gd.real();
}

cplx RateSpectrum::harmonic(int m) const {
    auto it = harmonics.find(m);
    return it == harmonics.end() ? cplx{} : it->second;
}

double RateSpectrum::gamma_t(double t) const {
    cplx g{};
    for (const auto& [m, gm] : harmonics)
        g += gm * std::exp(-iu * static_cast<double>(m) * omega * t);
    return g.real();
}

RateSpectrum rate_spectrum(const DriveProtocol& p) {
    validate_omega(p.omega);
    validate_reality(p.harmonics);
    RateSpectrum rs;
    rs.omega = p.omega;
    for (const auto& [n1, g1] : p.harmonics)
        for (const auto& [n2, g2] : p.harmonics) rs.harmonics[n1 + n2] += pi * g1 * g2;
    // Drop numerically empty entries so max-support queries stay meaningful.
    for (auto it = rs.harmonics.begin(); it != rs.harmonics.end();)
        it = (std::abs(it->second) == 0.0) ? rs.harmonics.erase(it) : std::next(it);
    rs.gamma0 = rs.harmonic(0).real();
    rs.zero_coupling = rs.harmonics.empty();
    rs.beta = rs.zero_coupling ? 0.0 : p.omega / rs.gamma0;
    return rs;
}

}  // namespace fscat
