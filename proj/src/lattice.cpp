#include "fscat/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace fscat::lattice {

namespace {

using Vec = std::vector<cplx>;

double wrap_period(double u, double T) {
    double v = std::fmod(u + 0.5 * T, T);
    if (v < 0.0) v += T;
    return v - 0.5 * T;
}

// Smeared coupling window. A point coupling on a central-difference lattice
// also resonates with the spurious band-edge mode at k ~ pi/dx (the doubler),
// which would steal roughly half the decay; smearing over sigma =
// smear_factor * dx suppresses that channel by ~e^{-(pi sigma/dx)^2 / 2}.
//
// A plain Gaussian profile is not good enough, though. The cavity talks to a
// chiral field, so whatever it emits at x' is reabsorbed at x > x' after a
// delay: the window induces the memory kernel K(s) = Gamma C(s), where C is
// the window autocorrelation. The first moment of C over s > 0 retards the
// cavity response and renormalizes the instantaneous decay rate at first
// order in sigma (for a Gaussian, Gamma_eff = Gamma (1 + 2 sigma Gamma /
// sqrt(pi))). Since C is even for any real profile, the moment cannot be
// cancelled by skewing; instead take
//
//   w(u) ~ N_sigma(u) + sqrt(2) sigma N_sigma'(u),  u = x - sqrt(2) sigma,
//
// whose autocorrelation has FT e^{-sigma^2 k^2} (1 + 2 sigma^2 k^2) with
// int_0^inf s C(s) ds = sigma/sqrt(pi) - 2 * sigma/(2 sqrt(pi)) = 0. The
// derivative term displaces the vertex center to -sqrt(2) sigma, and the
// u-shift moves it back, cancelling the vertex phase at every k to O(sigma^3).
// All first-order-in-sigma artifacts vanish -- including the Kerr-shift
// renormalization in the two-excitation sector, which rides on the same
// kernel moment -- so the window stands in for a point coupling to
// O(sigma^2) while staying Hermitian and norm conserving.
//
// kappa_j = sqrt(2 pi) w_j sqrt(dx) with sum_j w_j dx = 1 reproduces the
// continuum rate Gamma = pi g^2 on the lattice.
struct Window {
    int lo = 0;
    std::vector<double> kappa;
};

Window build_window(const Config& cfg) {
    const double sigma = cfg.smear_sigma;
    const double shift = std::sqrt(2.0) * sigma;
    const int jc = static_cast<int>(std::lround(cfg.cavity_x / cfg.dx));
    const int half = static_cast<int>(std::ceil((6.0 * sigma + shift) / cfg.dx)) + 1;
    Window win;
    win.lo = jc - half;
    win.kappa.resize(2 * half + 1);
    double norm = 0.0;
    for (std::size_t k = 0; k < win.kappa.size(); ++k) {
        const double x = (win.lo + static_cast<int>(k)) * cfg.dx - cfg.cavity_x;
        const double u = x - shift;
        win.kappa[k] = std::exp(-0.5 * u * u / (sigma * sigma)) * (1.0 - std::sqrt(2.0) * u / sigma);
        norm += win.kappa[k] * cfg.dx;
    }
    for (double& k : win.kappa)
        k = std::sqrt(2.0 * pi) * (k / norm) * std::sqrt(cfg.dx);
    return win;
}

// Classic RK4 with preallocated stage storage; states are flat complex vectors.
struct Rk4 {
    Vec k, tmp, acc;

    void resize(std::size_t m) {
        k.assign(m, cplx{});
        tmp.assign(m, cplx{});
        acc.assign(m, cplx{});
    }

    template <class RHS>
    void step(Vec& y, double t, double h, RHS&& rhs) {
        const std::size_t m = y.size();
        rhs(t, y, k);
        for (std::size_t i = 0; i < m; ++i) {
            acc[i] = y[i] + (h / 6.0) * k[i];
            tmp[i] = y[i] + (h / 2.0) * k[i];
        }
        rhs(t + h / 2.0, tmp, k);
        for (std::size_t i = 0; i < m; ++i) {
            acc[i] += (h / 3.0) * k[i];
            tmp[i] = y[i] + (h / 2.0) * k[i];
        }
        rhs(t + h / 2.0, tmp, k);
        for (std::size_t i = 0; i < m; ++i) {
            acc[i] += (h / 3.0) * k[i];
            tmp[i] = y[i] + h * k[i];
        }
        rhs(t + h, tmp, k);
        for (std::size_t i = 0; i < m; ++i) y[i] = acc[i] + (h / 6.0) * k[i];
    }
};

// One-excitation sector: field amplitudes c_j plus cavity amplitude b, stored
// as [c_0 .. c_{n-1}, b]. The frame is the cavity rest frame, so the cavity
// carries no phase term and the probe rides at carrier k0 = delta.
struct Runner1 {
    const DriveProtocol* protocol = nullptr;  // nullptr: free reference run
    Window win;
    int n = 0;
    double inv2dx = 0.0;

    void operator()(double t, const Vec& y, Vec& out) const {
        const cplx* c = y.data();
        cplx* o = out.data();
        // -i H_field: hard-wall central differences (Hermitian truncation).
        o[0] = -inv2dx * c[1];
        for (int j = 1; j < n - 1; ++j) o[j] = -inv2dx * (c[j + 1] - c[j - 1]);
        o[n - 1] = inv2dx * c[n - 2];
        cplx bdot{};
        if (protocol) {
            const double g = eval_g(*protocol, t);
            const cplx b = y[n];
            cplx s{};
            const int m = static_cast<int>(win.kappa.size());
            for (int k = 0; k < m; ++k) {
                const int j = win.lo + k;
                o[j] -= iu * g * win.kappa[k] * b;
                s += win.kappa[k] * c[j];
            }
            bdot = -iu * g * s;
        }
        out[n] = bdot;
    }
};

// Two-excitation sector of the even-mode problem:
//   psi2(a,b)  symmetric two-field sheet (full square, row-major),
//   psi1e(j)   one field quantum + singly occupied cavity,
//   ee         doubly occupied cavity (carries the Kerr shift U).
// Bosonic enhancement factors: g/sqrt(2) on psi2<->psi1e per symmetrized
// term and g sqrt(2) back, g sqrt(2) on psi1e<->ee. Layout: [psi2 | psi1e | ee].
struct Runner2 {
    const DriveProtocol* protocol = nullptr;
    double kerr = 0.0;
    Window win;
    int n = 0;
    double inv2dx = 0.0;
    Vec zero_row;

    void operator()(double t, const Vec& y, Vec& out) const {
        const std::size_t nn = static_cast<std::size_t>(n) * n;
        const cplx* p2 = y.data();
        const cplx* p1 = y.data() + nn;
        const cplx ee = y[nn + n];
        cplx* o2 = out.data();
        cplx* o1 = out.data() + nn;

        for (int a = 0; a < n; ++a) {
            const cplx* row = p2 + static_cast<std::size_t>(a) * n;
            const cplx* rm = (a > 0) ? row - n : zero_row.data();
            const cplx* rp = (a < n - 1) ? row + n : zero_row.data();
            cplx* o = o2 + static_cast<std::size_t>(a) * n;
            o[0] = -inv2dx * (rp[0] - rm[0] + row[1]);
            for (int b = 1; b < n - 1; ++b)
                o[b] = -inv2dx * (rp[b] - rm[b] + row[b + 1] - row[b - 1]);
            o[n - 1] = -inv2dx * (rp[n - 1] - rm[n - 1] - row[n - 2]);
        }

        const double g = eval_g(*protocol, t);
        const double s2 = std::sqrt(2.0);
        const int m = static_cast<int>(win.kappa.size());

        // psi2 gains (g/sqrt 2)(kappa_a psi1e(b) + kappa_b psi1e(a)).
        for (int k = 0; k < m; ++k) {
            const int a = win.lo + k;
            const cplx f = -iu * (g / s2) * win.kappa[k];
            cplx* o = o2 + static_cast<std::size_t>(a) * n;
            for (int b = 0; b < n; ++b) o[b] += f * p1[b];
        }
        for (int a = 0; a < n; ++a) {
            const cplx fa = -iu * (g / s2) * p1[a];
            cplx* o = o2 + static_cast<std::size_t>(a) * n;
            for (int k = 0; k < m; ++k) o[win.lo + k] += fa * win.kappa[k];
        }

        // psi1e: transport, drain from psi2, exchange with ee.
        o1[0] = -inv2dx * p1[1];
        for (int j = 1; j < n - 1; ++j) o1[j] = -inv2dx * (p1[j + 1] - p1[j - 1]);
        o1[n - 1] = inv2dx * p1[n - 2];
        for (int k = 0; k < m; ++k) {
            const int a = win.lo + k;
            const cplx f = -iu * g * s2 * win.kappa[k];
            const cplx* row = p2 + static_cast<std::size_t>(a) * n;
            for (int j = 0; j < n; ++j) o1[j] += f * row[j];
        }
        cplx s1{};
        for (int k = 0; k < m; ++k) {
            const int j = win.lo + k;
            o1[j] -= iu * g * s2 * win.kappa[k] * ee;
            s1 += win.kappa[k] * p1[j];
        }
        out[nn + n] = -iu * kerr * ee - iu * g * s2 * s1;
    }
};

Vec make_pulse(const Config& cfg) {
    Vec phi(cfg.n_sites);
    double norm = 0.0;
    for (int j = 0; j < cfg.n_sites; ++j) {
        const double x = j * cfg.dx - cfg.pulse_center_x;
        const double env = std::exp(-x * x / (4.0 * cfg.pulse_sigma * cfg.pulse_sigma));
        phi[j] = env * std::exp(iu * cfg.pulse_carrier * x);
        norm += std::norm(phi[j]);
    }
    const double scale = 1.0 / std::sqrt(norm);
    for (cplx& v : phi) v *= scale;
    return phi;
}

double guard_occupancy(const Vec& y, int n, int guard_cells) {
    double occ = 0.0;
    for (int j = 0; j < guard_cells; ++j) {
        occ = std::max(occ, std::norm(y[j]));
        occ = std::max(occ, std::norm(y[n - 1 - j]));
    }
    return occ;
}

double guard_occupancy2(const Vec& y, int n, int guard_cells) {
    // Reduced single-position density at the guard sites of the sheet plus
    // the field-cavity strip.
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    double occ = 0.0;
    for (int j = 0; j < guard_cells; ++j) {
        for (int edge : {j, n - 1 - j}) {
            double row = 0.0;
            const cplx* r = y.data() + static_cast<std::size_t>(edge) * n;
            for (int b = 0; b < n; ++b) row += std::norm(r[b]);
            occ = std::max(occ, row);
            occ = std::max(occ, std::norm(y[nn + edge]));
        }
    }
    return occ;
}

double norm_sq(const Vec& y) {
    double s = 0.0;
    for (const cplx& v : y) s += std::norm(v);
    return s;
}

}  // namespace

Config finalize(Config cfg, const ScatterParams& sp, double extra_span) {
    if (!(cfg.dx > 0.0)) throw std::invalid_argument("lattice: dx must be positive");
    if (cfg.dt <= 0.0) cfg.dt = cfg.dt_factor * cfg.dx;
    if (cfg.dt > 0.25 * cfg.dx * (1.0 + 1e-12))
        throw std::invalid_argument("lattice: stability margin requires dt <= dx/4");
    if (cfg.smear_sigma <= 0.0) cfg.smear_sigma = cfg.smear_factor * cfg.dx;
    if (cfg.pulse_sigma <= 0.0) {
        if (!(cfg.pulse_bandwidth > 0.0))
            throw std::invalid_argument("lattice: pulse_bandwidth must be positive");
        cfg.pulse_sigma = 1.0 / (2.0 * cfg.pulse_bandwidth);
    }
    if (std::isnan(cfg.pulse_carrier)) cfg.pulse_carrier = sp.delta;

    const double support = cfg.support_nsigma * cfg.pulse_sigma;
    const double win_half = 8.0 * cfg.smear_sigma;
    const double margin = 2.0;
    const double guard_x = cfg.guard_cells * cfg.dx;

    if (cfg.pulse_center_x <= 0.0) cfg.pulse_center_x = guard_x + margin + support;
    if (cfg.cavity_x <= 0.0)
        cfg.cavity_x = cfg.pulse_center_x + support + win_half + margin;
    cfg.cavity_x = std::lround(cfg.cavity_x / cfg.dx) * cfg.dx;
    if (cfg.readout_x <= 0.0) cfg.readout_x = cfg.cavity_x + win_half + margin;
    cfg.readout_x = std::lround(cfg.readout_x / cfg.dx) * cfg.dx;

    if (cfg.total_time <= 0.0)
        cfg.total_time = (cfg.cavity_x - cfg.pulse_center_x) + support + extra_span +
                         cfg.decay_tail / sp.gamma0();
    if (cfg.n_sites <= 0) {
        // The fastest lattice mode moves at |v| <= 1, so the initial front
        // x0 + support can advance at most total_time before the snapshot.
        const double wall =
            cfg.pulse_center_x + support + cfg.total_time + margin + guard_x;
        cfg.n_sites = static_cast<int>(std::ceil(wall / cfg.dx)) + 1;
    }

    if (cfg.pulse_center_x - support < guard_x)
        throw std::invalid_argument("lattice: pulse does not fit left of the cavity");
    if (cfg.readout_x >= (cfg.n_sites - 1 - cfg.guard_cells) * cfg.dx)
        throw std::invalid_argument("lattice: readout point collides with the far wall");
    return cfg;
}

FieldSeries run_single_photon(const ScatterParams& sp, const Config& cfg_in) {
    const Config cfg = finalize(cfg_in, sp);
    const int n = cfg.n_sites;
    const Window win = build_window(cfg);
    const int j_read = static_cast<int>(std::lround(cfg.readout_x / cfg.dx));

    const long steps = std::lround(std::ceil(cfg.total_time / cfg.dt));
    const double h = cfg.total_time / static_cast<double>(steps);

    FieldSeries fs;
    fs.cfg = cfg;
    fs.period = sp.period();
    fs.t.resize(steps + 1);
    fs.out.resize(steps + 1);
    fs.ref.resize(steps + 1);

    const Vec phi = make_pulse(cfg);
    Rk4 rk;
    rk.resize(static_cast<std::size_t>(n) + 1);
    for (int pass = 0; pass < 2; ++pass) {
        const bool coupled = (pass == 0);
        Runner1 rhs;
        rhs.protocol = coupled ? &sp.protocol : nullptr;
        rhs.win = win;
        rhs.n = n;
        rhs.inv2dx = 1.0 / (2.0 * cfg.dx);

        Vec y(static_cast<std::size_t>(n) + 1, cplx{});
        std::copy(phi.begin(), phi.end(), y.begin());
        const double norm0 = norm_sq(y);

        auto& series = coupled ? fs.out : fs.ref;
        series[0] = y[j_read];
        fs.t[0] = 0.0;
        for (long s = 0; s < steps; ++s) {
            const double t = s * h;
            rk.step(y, t, h, rhs);
            series[s + 1] = y[j_read];
            fs.t[s + 1] = (s + 1) * h;
            if (coupled && (s % 128 == 0))
                fs.guard_max = std::max(fs.guard_max, guard_occupancy(y, n, cfg.guard_cells));
        }
        if (coupled) {
            fs.norm_drift = std::abs(norm_sq(y) - norm0);
            fs.guard_max = std::max(fs.guard_max, guard_occupancy(y, n, cfg.guard_cells));
        }
    }
    if (fs.guard_max > 1e-7)
        throw NumericalError("run_single_photon: field wrapped into the guard cells (occupancy " +
                             std::to_string(fs.guard_max) + "); enlarge the lattice");
    return fs;
}

FoldedEnvelope extract_envelope(const FieldSeries& fs, int n_bins, double rel_floor) {
    if (n_bins < 2) throw std::invalid_argument("extract_envelope: need at least 2 bins");
    const double T = fs.period;
    const double delay = fs.cfg.readout_x - fs.cfg.cavity_x;

    double max_ref = 0.0;
    for (const cplx& v : fs.ref) max_ref = std::max(max_ref, std::abs(v));
    const double floor = rel_floor * max_ref;

    std::vector<double> sw(n_bins, 0.0), sw2(n_bins, 0.0);
    std::vector<double> s_re(n_bins, 0.0), s_im(n_bins, 0.0);
    std::vector<double> s_re2(n_bins, 0.0), s_im2(n_bins, 0.0);
    std::vector<long> count(n_bins, 0);

    for (std::size_t i = 0; i < fs.t.size(); ++i) {
        const double aref = std::abs(fs.ref[i]);
        if (aref < floor) continue;
        // out/ref = S_e = 1 + 2A: reference division cancels the propagation
        // phase and the lattice dispersion accumulated over the common path.
        const cplx A = 0.5 * (fs.out[i] / fs.ref[i] - 1.0);
        const double tau = wrap_period(fs.t[i] - delay, T);
        int b = static_cast<int>((tau / T + 0.5) * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        const double w = aref * aref;
        sw[b] += w;
        sw2[b] += w * w;
        s_re[b] += w * A.real();
        s_im[b] += w * A.imag();
        s_re2[b] += w * A.real() * A.real();
        s_im2[b] += w * A.imag() * A.imag();
        ++count[b];
    }

    FoldedEnvelope env;
    env.tau_c.resize(n_bins);
    env.A.resize(n_bins);
    env.se_re.resize(n_bins);
    env.se_im.resize(n_bins);
    env.count = count;
    for (int b = 0; b < n_bins; ++b) {
        env.tau_c[b] = -0.5 * T + (b + 0.5) * T / n_bins;
        if (count[b] == 0 || sw[b] <= 0.0) {
            env.A[b] = cplx(std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN());
            env.se_re[b] = env.se_im[b] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double m_re = s_re[b] / sw[b];
        const double m_im = s_im[b] / sw[b];
        env.A[b] = cplx(m_re, m_im);
        const double var_re = std::max(0.0, s_re2[b] / sw[b] - m_re * m_re);
        const double var_im = std::max(0.0, s_im2[b] / sw[b] - m_im * m_im);
        // Weighted standard error of the mean; in-bin samples are correlated
        // on the pulse-envelope scale, so this is a scatter diagnostic rather
        // than a strict confidence radius.
        env.se_re[b] = std::sqrt(var_re * sw2[b]) / sw[b];
        env.se_im[b] = std::sqrt(var_im * sw2[b]) / sw[b];
    }
    return env;
}

TwoPhotonMap run_two_photon(const ScatterParams& sp, const Config& cfg_in, int n_phase_bins,
                            const std::vector<double>& tau_d_requested,
                            double weight_floor_rel) {
    if (n_phase_bins < 1)
        throw std::invalid_argument("run_two_photon: need at least one phase bin");
    if (tau_d_requested.empty())
        throw std::invalid_argument("run_two_photon: no delays requested");
    double max_td = 0.0;
    for (double td : tau_d_requested) {
        if (td < 0.0) throw std::invalid_argument("run_two_photon: delays must be >= 0");
        max_td = std::max(max_td, td);
    }

    const Config cfg = finalize(cfg_in, sp, max_td);
    const int n = cfg.n_sites;
    if (static_cast<double>(n) * n > 9.5e6)
        throw std::invalid_argument(
            "run_two_photon: " + std::to_string(n) +
            " sites would need an oversized two-photon sheet; coarsen dx, narrow the "
            "pulse, or shorten the horizon");

    const Window win = build_window(cfg);
    const long steps = std::lround(std::ceil(cfg.total_time / cfg.dt));
    const double h = cfg.total_time / static_cast<double>(steps);
    const Vec phi = make_pulse(cfg);

    // Detector layout: the near detector sits at the single-photon readout
    // point just past the coupling window; each requested delay adds a far
    // detector tau_d upstream along the light cone. Keeping every detector
    // close to the cavity matters: the central-difference dispersion advances
    // sideband m by roughly (m Omega)^3 dx^2 / 6 per unit distance, so a
    // readout far downstream scrambles the sideband interference.
    const int j_near = static_cast<int>(std::lround(cfg.readout_x / cfg.dx));
    std::vector<int> jd;
    for (double td : tau_d_requested) jd.push_back(static_cast<int>(std::lround(td / cfg.dx)));
    const int nd = static_cast<int>(jd.size());
    for (int d = 0; d < nd; ++d)
        if (j_near + jd[d] >= n - cfg.guard_cells)
            throw std::invalid_argument("run_two_photon: delay exceeds the lattice span");

    // One-excitation reference series (free and coupled) at the detectors.
    std::vector<Vec> free_s(nd + 1), coup_s(nd + 1);  // index nd = near detector
    auto site_of = [&](int k) { return k < nd ? j_near + jd[k] : j_near; };
    {
        Rk4 rk;
        rk.resize(static_cast<std::size_t>(n) + 1);
        for (int pass = 0; pass < 2; ++pass) {
            Runner1 rhs;
            rhs.protocol = (pass == 0) ? nullptr : &sp.protocol;
            rhs.win = win;
            rhs.n = n;
            rhs.inv2dx = 1.0 / (2.0 * cfg.dx);
            Vec y(static_cast<std::size_t>(n) + 1, cplx{});
            std::copy(phi.begin(), phi.end(), y.begin());
            auto& rec = (pass == 0) ? free_s : coup_s;
            for (int k = 0; k <= nd; ++k) {
                rec[k].resize(steps + 1);
                rec[k][0] = y[site_of(k)];
            }
            for (long s = 0; s < steps; ++s) {
                rk.step(y, s * h, h, rhs);
                for (int k = 0; k <= nd; ++k) rec[k][s + 1] = y[site_of(k)];
            }
        }
    }

    // Two-excitation run from the product pulse; record the sheet amplitude
    // at each detector pair every step.
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    TwoPhotonMap map;
    map.cfg = cfg;
    std::vector<Vec> p2_s;
    {
        Runner2 rhs;
        rhs.protocol = &sp.protocol;
        rhs.kerr = sp.kerr;
        rhs.win = win;
        rhs.n = n;
        rhs.inv2dx = 1.0 / (2.0 * cfg.dx);
        rhs.zero_row.assign(n, cplx{});

        Vec y(nn + n + 1, cplx{});
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) y[static_cast<std::size_t>(a) * n + b] = phi[a] * phi[b];
        const double norm0 = norm_sq(y);

        p2_s.resize(nd);
        for (int d = 0; d < nd; ++d) {
            p2_s[d].resize(steps + 1);
            p2_s[d][0] = y[static_cast<std::size_t>(j_near + jd[d]) * n + j_near];
        }

        Rk4 rk;
        rk.resize(y.size());
        for (long s = 0; s < steps; ++s) {
            rk.step(y, s * h, h, rhs);
            for (int d = 0; d < nd; ++d)
                p2_s[d][s + 1] = y[static_cast<std::size_t>(j_near + jd[d]) * n + j_near];
            if (s % 512 == 0)
                map.guard_max = std::max(map.guard_max, guard_occupancy2(y, n, cfg.guard_cells));
        }
        map.guard_max = std::max(map.guard_max, guard_occupancy2(y, n, cfg.guard_cells));
        map.norm_drift = std::abs(norm_sq(y) - norm0);
        if (map.guard_max > 1e-7)
            throw NumericalError("run_two_photon: field wrapped into the guard cells");
    }

    const double T = sp.period();
    map.tau_d.resize(nd);
    for (int d = 0; d < nd; ++d) map.tau_d[d] = jd[d] * cfg.dx;
    map.tau_c.resize(n_phase_bins);
    for (int b = 0; b < n_phase_bins; ++b)
        map.tau_c[b] = -0.5 * T + (b + 0.5) * T / n_phase_bins;

    const std::size_t cells = static_cast<std::size_t>(n_phase_bins) * nd;
    std::vector<double> num_ll(cells, 0.0), den_ll(cells, 0.0);
    std::vector<double> num_rr(cells, 0.0), den_rr(cells, 0.0);
    std::vector<double> wsum(cells, 0.0);
    std::vector<long> cnt(cells, 0);

    // Skip samples in the envelope tails: dividing by the free reference
    // there amplifies the cavity ring-down into garbage ratios.
    std::vector<double> fmax(nd + 1, 0.0);
    for (int k = 0; k <= nd; ++k)
        for (const cplx& v : free_s[k]) fmax[k] = std::max(fmax[k], std::abs(v));

    const double near_delay = j_near * cfg.dx - cfg.cavity_x;
    for (long s = 0; s <= steps; ++s) {
        const cplx f_n = free_s[nd][s];
        if (std::abs(f_n) < 3e-3 * fmax[nd]) continue;
        // out/ref = 1 + 2A as in the single-photon fold; the division also
        // cancels the dispersion accumulated over the common path.
        const cplx r_n = coup_s[nd][s] / f_n;
        const cplx a_n = 0.5 * (r_n - 1.0), t_n = 0.5 * (r_n + 1.0);
        const double u_near = s * h - near_delay;
        for (int d = 0; d < nd; ++d) {
            const cplx f_f = free_s[d][s];
            if (std::abs(f_f) < 3e-3 * fmax[d]) continue;
            const cplx r_f = coup_s[d][s] / f_f;
            const cplx a_f = 0.5 * (r_f - 1.0), t_f = 0.5 * (r_f + 1.0);
            // The far photon crossed the cavity tau_d earlier; its emission
            // phase is the pair's tau_c.
            const double tau = wrap_period(u_near - map.tau_d[d], T);
            int b = static_cast<int>((tau / T + 0.5) * n_phase_bins);
            b = std::clamp(b, 0, n_phase_bins - 1);
            const std::size_t c = static_cast<std::size_t>(b) * nd + d;
            const cplx ff = f_f * f_n;
            const cplx q2 = p2_s[d][s] / ff;
            // Connected pair amplitudes relative to the free pair: the 1/4
            // calibrates them to A A + B and t t + B exactly (a linear cavity
            // keeps the product structure, so B -> 0 and g2 -> 1 at U = 0).
            const cplx g_ll = 0.25 * (q2 - r_f - r_n + 1.0);
            const cplx g_rr = 0.25 * (q2 + r_f + r_n + 1.0);
            // Weight by the free pair intensity: the weighted bin mean still
            // converges to the uniform phase average (the envelope folds onto
            // the period nearly flat), but ring-down tails drop out.
            const double w = std::norm(ff);
            num_ll[c] += w * std::norm(g_ll);
            den_ll[c] += w * std::norm(a_f * a_n);
            num_rr[c] += w * std::norm(g_rr);
            den_rr[c] += w * std::norm(t_f * t_n);
            wsum[c] += w;
            ++cnt[c];
        }
    }
    for (std::size_t c = 0; c < cells; ++c) {
        if (wsum[c] <= 0.0) continue;
        num_ll[c] /= wsum[c];
        den_ll[c] /= wsum[c];
        num_rr[c] /= wsum[c];
        den_rr[c] /= wsum[c];
    }

    map.g2_ll.assign(cells, std::numeric_limits<double>::quiet_NaN());
    map.g2_rr.assign(cells, std::numeric_limits<double>::quiet_NaN());
    map.ll_ok.assign(cells, 0);
    map.rr_ok.assign(cells, 0);
    double max_dll = 0.0, max_drr = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
        max_dll = std::max(max_dll, den_ll[c]);
        max_drr = std::max(max_drr, den_rr[c]);
    }
    for (std::size_t c = 0; c < cells; ++c) {
        if (cnt[c] == 0) continue;
        if (den_ll[c] > weight_floor_rel * max_dll) {
            map.g2_ll[c] = num_ll[c] / den_ll[c];
            map.ll_ok[c] = 1;
        }
        if (den_rr[c] > weight_floor_rel * max_drr) {
            map.g2_rr[c] = num_rr[c] / den_rr[c];
            map.rr_ok[c] = 1;
        }
    }
    map.num_ll = std::move(num_ll);
    map.den_ll = std::move(den_ll);
    map.num_rr = std::move(num_rr);
    map.den_rr = std::move(den_rr);
    map.count = std::move(cnt);
    return map;
}

}  // namespace fscat::lattice
