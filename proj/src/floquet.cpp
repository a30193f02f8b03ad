#include "fscat/floquet.hpp"

#include <cmath>

namespace fscat {

FloquetBlock self_energy_block(const RateSpectrum& rs, int cutoff) {
    if (cutoff < 0) throw std::invalid_argument("self_energy_block: cutoff must be >= 0");
    FloquetBlock blk;
    blk.cutoff = cutoff;
    const int n = blk.dim();
    blk.mat = Eigen::MatrixXcd::Zero(n, n);
    for (int m = -cutoff; m <= cutoff; ++m)
        for (int mp = -cutoff; mp <= cutoff; ++mp)
            blk.mat(m + cutoff, mp + cutoff) = -iu * rs.harmonic(m - mp);
    return blk;
}

namespace {

Eigen::MatrixXcd ladder_operator(const ScatterParams& sp, int cutoff) {
    const FloquetBlock sigma = self_energy_block(sp.rates, cutoff);
    Eigen::MatrixXcd K = -sigma.mat;
    for (int m = -cutoff; m <= cutoff; ++m)
        K(m + cutoff, m + cutoff) += sp.delta + m * sp.omega();
    return K;
}

}  // namespace

FloquetBlock dressed_green(const ScatterParams& sp, int cutoff) {
    const Eigen::MatrixXcd K = ladder_operator(sp, cutoff);
    const int n = static_cast<int>(K.rows());
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(K);
    FloquetBlock G;
    G.cutoff = cutoff;
    G.mat = lu.solve(Eigen::MatrixXcd::Identity(n, n));
    const double resid = (K * G.mat - Eigen::MatrixXcd::Identity(n, n)).norm();
    if (!(resid < 1e-8 * std::max(1.0, K.norm())))
        throw NumericalError("dressed_green: ladder operator is (near-)singular, residual " +
                             std::to_string(resid));
    return G;
}

SidebandAmplitudes single_photon_sidebands(const ScatterParams& sp, int cutoff) {
    const int kg = sp.protocol.max_harmonic();
    const Eigen::MatrixXcd K = ladder_operator(sp, cutoff);
    const int n = static_cast<int>(K.rows());

    Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n);
    for (const auto& [m, gm] : sp.protocol.harmonics)
        if (std::abs(m) <= cutoff) u(m + cutoff) = gm;

    Eigen::VectorXcd y = Eigen::PartialPivLU<Eigen::MatrixXcd>(K).solve(u);
    const double resid = (K * y - u).norm();
    if (!(resid < 1e-10 * std::max(1.0, u.norm())))
        throw NumericalError("single_photon_sidebands: ladder solve failed, residual " +
                             std::to_string(resid));

    SidebandAmplitudes amps;
    amps.cutoff = cutoff;
    amps.omega = sp.omega();
    for (int mp = -cutoff - kg; mp <= cutoff + kg; ++mp) {
        cplx r{};
        for (const auto& [dm, gdm] : sp.protocol.harmonics) {
            const int nidx = mp - dm;  // g_{m'-n} with n = m'-dm
            if (std::abs(nidx) <= cutoff) r += gdm * y(nidx + cutoff);
        }
        r *= -iu * pi;
        amps.r[mp] = r;
        amps.t[mp] = (mp == 0 ? 1.0 : 0.0) + r;
    }
    return amps;
}

cplx SidebandAmplitudes::r_at(int m) const {
    auto it = r.find(m);
    return it == r.end() ? cplx{} : it->second;
}

cplx SidebandAmplitudes::t_at(int m) const {
    auto it = t.find(m);
    return it == t.end() ? (m == 0 ? cplx{1.0} : cplx{}) : it->second;
}

double sideband_unitarity(const SidebandAmplitudes& amps) {
    double flux = 0.0;
    for (const auto& [m, rm] : amps.r) flux += std::norm(rm);
    for (const auto& [m, tm] : amps.t) flux += std::norm(tm);
    return std::abs(flux - 1.0);
}

cplx reconstruct_A(const SidebandAmplitudes& amps, double tau_c) {
    cplx A{};
    for (const auto& [m, rm] : amps.r)
        A += rm * std::exp(-iu * static_cast<double>(m) * amps.omega * tau_c);
    return A;
}

}  // namespace fscat
