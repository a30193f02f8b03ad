#include "fscat/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace fscat {

namespace {

std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw std::invalid_argument("config: unknown key \"" + key + "\" in " + where);
    }
}

std::vector<double> as_list(const json& v, const std::string& what) {
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array() && !v.empty()) {
        for (const auto& e : v) {
            if (!e.is_number())
                throw std::invalid_argument("config: " + what + " must be numeric");
            out.push_back(e.get<double>());
        }
    } else {
        throw std::invalid_argument("config: " + what + " must be a number or array of numbers");
    }
    return out;
}

std::map<int, cplx> parse_harmonics(const json& arr, const std::string& where) {
    if (!arr.is_array() || arr.empty())
        throw std::invalid_argument("config: " + where + " must be a non-empty array");
    std::map<int, cplx> h;
    for (const auto& e : arr) {
        if (!e.is_array() || (e.size() != 2 && e.size() != 3))
            throw std::invalid_argument("config: " + where +
                                        " entries must be [m, re] or [m, re, im]");
        const int m = e[0].get<int>();
        const double re = e[1].get<double>();
        const double im = e.size() == 3 ? e[2].get<double>() : 0.0;
        h[m] = cplx(re, im);
    }
    return h;
}

void apply_override(json& cfg, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like path.to.key=value: " + kv);
    const std::string path = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings are convenient on the command line
    }
    json* node = &cfg;
    std::size_t pos = 0;
    while (true) {
        const std::size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty()) throw std::invalid_argument("override has an empty path segment: " + kv);
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

struct ProtocolSpec {
    std::string kind = "on_off";
    double g0 = 1.0;
    std::map<int, cplx> harmonics;  // custom only
    std::vector<double> beta;       // exactly one of beta/omega is non-empty
    std::vector<double> omega;
};

DriveProtocol build_protocol(const ProtocolSpec& ps, double omega) {
    if (ps.kind == "on_off") return make_on_off(ps.g0, omega);
    if (ps.kind == "sign_change") return make_sign_change(ps.g0, omega);
    if (ps.kind == "constant") return make_constant(ps.g0, omega);
    if (ps.kind == "custom") return make_custom(ps.harmonics, omega);
    throw std::invalid_argument("config: unknown protocol kind \"" + ps.kind + "\"");
}

}  // namespace

json config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file: " + path);
    json cfg;
    try {
        cfg = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw std::invalid_argument("config root must be a JSON object");
    return cfg;
}

LoadedConfig load_config(const json& cfg_in, const std::vector<std::string>& overrides) {
    json cfg = cfg_in;
    for (const auto& kv : overrides) apply_override(cfg, kv);
    check_keys(cfg, "top level",
               {"protocol", "scatter", "grid", "numerics", "compare", "circuit", "output",
                "workers"});

    LoadedConfig lc;
    lc.resolved = cfg;

    // Protocol and sweep axes.
    ProtocolSpec ps;
    if (cfg.contains("protocol")) {
        const json& p = cfg["protocol"];
        check_keys(p, "protocol", {"kind", "g0", "beta", "omega", "harmonics"});
        ps.kind = p.value("kind", ps.kind);
        ps.g0 = p.value("g0", ps.g0);
        if (p.contains("harmonics")) ps.harmonics = parse_harmonics(p["harmonics"], "protocol.harmonics");
        if (p.contains("beta")) ps.beta = as_list(p["beta"], "protocol.beta");
        if (p.contains("omega")) ps.omega = as_list(p["omega"], "protocol.omega");
    }
    if (ps.kind == "custom" && ps.harmonics.empty())
        throw std::invalid_argument("config: custom protocol needs protocol.harmonics");
    if (!ps.beta.empty() && !ps.omega.empty())
        throw std::invalid_argument("config: give protocol.beta or protocol.omega, not both");
    if (ps.kind == "constant") {
        if (!ps.beta.empty())
            throw std::invalid_argument("config: constant coupling has no drive speed beta");
        if (ps.omega.empty()) ps.omega = {1.0};
    }
    if (ps.beta.empty() && ps.omega.empty())
        throw std::invalid_argument("config: protocol needs beta (= Omega/Gamma_0) or omega");

    // Gamma_0 is independent of Omega, so a reference protocol resolves beta.
    const double gamma0 = rate_spectrum(build_protocol(ps, 1.0)).gamma0;
    if (!(gamma0 > 0.0)) throw std::invalid_argument("config: protocol has vanishing coupling");

    std::vector<double> omegas;
    const bool sweep_beta = !ps.beta.empty();
    const auto& speed_list = sweep_beta ? ps.beta : ps.omega;
    for (double s : speed_list) {
        if (!(s > 0.0)) throw std::invalid_argument("config: drive speed must be positive");
        omegas.push_back(sweep_beta ? s * gamma0 : s);
    }

    std::vector<double> deltas{0.0}, kerrs{0.0};
    bool delta_rel = false, kerr_rel = false;
    if (cfg.contains("scatter")) {
        const json& s = cfg["scatter"];
        check_keys(s, "scatter",
                   {"delta", "delta_over_gamma0", "kerr", "kerr_over_gamma0"});
        if (s.contains("delta") && s.contains("delta_over_gamma0"))
            throw std::invalid_argument("config: give delta or delta_over_gamma0, not both");
        if (s.contains("kerr") && s.contains("kerr_over_gamma0"))
            throw std::invalid_argument("config: give kerr or kerr_over_gamma0, not both");
        if (s.contains("delta")) deltas = as_list(s["delta"], "scatter.delta");
        if (s.contains("delta_over_gamma0")) {
            deltas = as_list(s["delta_over_gamma0"], "scatter.delta_over_gamma0");
            delta_rel = true;
        }
        if (s.contains("kerr")) kerrs = as_list(s["kerr"], "scatter.kerr");
        if (s.contains("kerr_over_gamma0")) {
            kerrs = as_list(s["kerr_over_gamma0"], "scatter.kerr_over_gamma0");
            kerr_rel = true;
        }
    }

    RunConfig base;
    double tau_d_max_periods = 0.0;
    if (cfg.contains("grid")) {
        const json& g = cfg["grid"];
        check_keys(g, "grid", {"n_tau_c", "n_tau_d", "tau_d_max", "tau_d_max_periods"});
        base.n_tau_c = g.value("n_tau_c", base.n_tau_c);
        base.n_tau_d = g.value("n_tau_d", base.n_tau_d);
        if (g.contains("tau_d_max") && g.contains("tau_d_max_periods"))
            throw std::invalid_argument("config: give tau_d_max or tau_d_max_periods, not both");
        base.tau_d_max = g.value("tau_d_max", 0.0);
        tau_d_max_periods = g.value("tau_d_max_periods", 0.0);
    }
    if (cfg.contains("numerics")) {
        const json& n = cfg["numerics"];
        check_keys(n, "numerics",
                   {"quad_tol", "panel_order", "max_panels", "cutoff", "node_floor", "lattice"});
        base.quad.tol = n.value("quad_tol", base.quad.tol);
        base.quad.panel_order = n.value("panel_order", base.quad.panel_order);
        base.quad.max_panels = n.value("max_panels", base.quad.max_panels);
        base.cutoff = n.value("cutoff", base.cutoff);
        base.node_floor = n.value("node_floor", base.node_floor);
        if (n.contains("lattice")) {
            const json& l = n["lattice"];
            check_keys(l, "numerics.lattice",
                       {"dx", "dt_factor", "smear_factor", "pulse_bandwidth", "support_nsigma",
                        "decay_tail", "guard_cells"});
            base.lat.dx = l.value("dx", base.lat.dx);
            base.lat.dt_factor = l.value("dt_factor", base.lat.dt_factor);
            base.lat.smear_factor = l.value("smear_factor", base.lat.smear_factor);
            base.lat.pulse_bandwidth = l.value("pulse_bandwidth", base.lat.pulse_bandwidth);
            base.lat.support_nsigma = l.value("support_nsigma", base.lat.support_nsigma);
            base.lat.decay_tail = l.value("decay_tail", base.lat.decay_tail);
            base.lat.guard_cells = l.value("guard_cells", base.lat.guard_cells);
        }
    }
    if (cfg.contains("compare")) {
        const json& c = cfg["compare"];
        check_keys(c, "compare",
                   {"with_lattice", "oracle_bins", "envelope_tol", "sideband_doubling_tol",
                    "lattice_tol"});
        base.with_lattice = c.value("with_lattice", base.with_lattice);
        base.oracle_bins = c.value("oracle_bins", base.oracle_bins);
        base.envelope_tol = c.value("envelope_tol", base.envelope_tol);
        base.sideband_doubling_tol = c.value("sideband_doubling_tol", base.sideband_doubling_tol);
        base.lattice_tol = c.value("lattice_tol", base.lattice_tol);
    }
    if (cfg.contains("output")) {
        const json& o = cfg["output"];
        check_keys(o, "output", {"dir", "force", "binary"});
        lc.output.dir = o.value("dir", lc.output.dir);
        lc.output.force = o.value("force", lc.output.force);
        lc.output.binary = o.value("binary", lc.output.binary);
    }
    lc.workers = cfg.value("workers", 1);
    if (lc.workers < 1) throw std::invalid_argument("config: workers must be >= 1");

    if (cfg.contains("circuit")) {
        const json& c = cfg["circuit"];
        check_keys(c, "circuit",
                   {"ejp", "la", "lb", "ej", "ec", "f_k0", "phi0", "flux", "omega0", "pump",
                    "ratio_threshold"});
        CircuitRun cr;
        cr.params.ejp = c.value("ejp", 0.0);
        cr.params.la = c.value("la", 0.0);
        cr.params.lb = c.value("lb", 0.0);
        cr.params.ej = c.value("ej", 0.0);
        cr.params.ec = c.value("ec", 0.0);
        cr.params.f_k0 = c.value("f_k0", 0.0);
        cr.params.phi0 = c.value("phi0", 1.0);
        cr.params.flux = c.value("flux", 0.5 * cr.params.phi0);
        cr.params.omega0 = c.value("omega0", 0.0);
        cr.ratio_threshold = c.value("ratio_threshold", 20.0);
        if (!c.contains("pump"))
            throw std::invalid_argument("config: circuit needs a pump block");
        const json& p = c["pump"];
        check_keys(p, "circuit.pump", {"kind", "i0", "omega", "harmonics"});
        const std::string kind = p.value("kind", "on_off");
        const double i0 = p.value("i0", 1.0);
        cr.pump_omega = p.value("omega", 0.0);
        if (!(cr.pump_omega > 0.0))
            throw std::invalid_argument("config: circuit.pump.omega must be positive");
        if (kind == "on_off")
            cr.pump_harmonics = {{0, i0}, {1, 0.5 * i0}, {-1, 0.5 * i0}};
        else if (kind == "sign_change")
            cr.pump_harmonics = {{1, 0.5 * i0}, {-1, 0.5 * i0}};
        else if (kind == "constant")
            cr.pump_harmonics = {{0, i0}};
        else if (kind == "custom")
            cr.pump_harmonics = parse_harmonics(p["harmonics"], "circuit.pump.harmonics");
        else
            throw std::invalid_argument("config: unknown pump kind \"" + kind + "\"");
        lc.circuit = std::move(cr);
    }

    // Expand the sweep (cartesian over drive speed, delta, kerr).
    for (std::size_t io = 0; io < omegas.size(); ++io) {
        for (std::size_t id = 0; id < deltas.size(); ++id) {
            for (std::size_t ik = 0; ik < kerrs.size(); ++ik) {
                RunConfig rc = base;
                rc.protocol = build_protocol(ps, omegas[io]);
                const double g0ref = rate_spectrum(rc.protocol).gamma0;
                rc.delta = delta_rel ? deltas[id] * g0ref : deltas[id];
                rc.kerr = kerr_rel ? kerrs[ik] * g0ref : kerrs[ik];
                if (tau_d_max_periods > 0.0)
                    rc.tau_d_max = tau_d_max_periods * rc.protocol.period();
                std::string label;
                if (speed_list.size() > 1)
                    label += (sweep_beta ? "beta" : "omega") + fmt_g(speed_list[io]);
                if (deltas.size() > 1)
                    label += (label.empty() ? "" : "_") + std::string("delta") + fmt_g(deltas[id]);
                if (kerrs.size() > 1)
                    label += (label.empty() ? "" : "_") + std::string("kerr") + fmt_g(kerrs[ik]);
                rc.label = label;
                lc.runs.push_back(std::move(rc));
            }
        }
    }
    return lc;
}

}  // namespace fscat
