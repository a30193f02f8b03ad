#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "fscat/circuit.hpp"
#include "fscat/coherence.hpp"
#include "fscat/envelope.hpp"
#include "fscat/floquet.hpp"
#include "fscat/io.hpp"
#include "fscat/lattice.hpp"
#include "fscat/run_config.hpp"

namespace fs = std::filesystem;
using namespace fscat;

namespace {

constexpr const char* kToolName = "fscat";

// Exit codes: 0 success, 2 config/usage error, 3 numerical failure,
// 4 comparison failure.
enum ExitCode { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_compare = 4 };

struct CompareFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliArgs {
    std::string config_path;
    std::string out_dir;  // --out beats FSCAT_OUT beats config output.dir
    bool force = false;
    std::vector<std::string> sets;
};

void add_common_options(CLI::App* sub, CliArgs& args) {
    sub->add_option("-c,--config", args.config_path, "run configuration (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("-o,--out", args.out_dir, "output directory (overrides FSCAT_OUT and config)");
    sub->add_flag("-f,--force", args.force, "overwrite existing output files");
    sub->add_option("-s,--set", args.sets,
                    "config override as dotted.path=value (value parsed as JSON, repeatable)");
}

// ---------------------------------------------------------------------------
// Artifact plumbing: each run computes in memory; writes happen serially in
// run order so that sweeps are deterministic regardless of worker count.

struct Artifacts {
    std::vector<std::pair<std::string, Table>> csv;
    std::vector<std::pair<std::string, Table>> bin;
    std::vector<std::pair<std::string, json>> jsonf;
    bool compare_pass = true;
};

std::string file_stem(const std::string& command, const std::string& label) {
    std::string stem = command;
    for (char& ch : stem)
        if (ch == '-') ch = '_';
    if (!label.empty()) stem += "_" + label;
    return stem;
}

json tool_stamp() {
    return json{{"name", kToolName}, {"version", FSCAT_VERSION}};
}

json protocol_json(const DriveProtocol& p) {
    json harm = json::array();
    for (const auto& [m, g] : p.harmonics)
        harm.push_back(json::array({m, g.real(), g.imag()}));
    return json{{"kind", p.label},
                {"omega", p.omega},
                {"period", p.period()},
                {"harmonics", harm}};
}

json meta_common(const RunConfig& rc, const std::string& command) {
    const ScatterParams sp = rc.scatter();
    return json{{"tool", tool_stamp()},
                {"command", command},
                {"label", rc.label},
                {"protocol", protocol_json(rc.protocol)},
                {"gamma0", sp.gamma0()},
                {"beta", sp.rates.beta},
                {"delta", rc.delta},
                {"kerr", rc.kerr},
                {"numerics",
                 {{"quad_tol", rc.quad.tol},
                  {"panel_order", rc.quad.panel_order},
                  {"cutoff", rc.cutoff},
                  {"node_floor", rc.node_floor}}}};
}

Table envelope_table(const EnvelopeGrid& g) {
    Table t;
    t.header = {"tau_c", "re_A", "im_A", "abs_r2", "abs_t2", "g1_rr", "g1_ll"};
    t.columns.assign(7, {});
    for (std::size_t i = 0; i < g.tau_c.size(); ++i) {
        t.columns[0].push_back(g.tau_c[i]);
        t.columns[1].push_back(g.A[i].real());
        t.columns[2].push_back(g.A[i].imag());
        t.columns[3].push_back(std::norm(g.r[i]));
        t.columns[4].push_back(std::norm(g.t[i]));
        t.columns[5].push_back(g.g1_rr[i]);
        t.columns[6].push_back(g.g1_ll[i]);
    }
    return t;
}

Table coherence_table(const CoherenceMap& m) {
    Table t;
    t.header = {"tau_c", "tau_d", "re_B", "im_B", "g2_ll", "g2_rr", "node_flag"};
    t.columns.assign(7, {});
    for (std::size_t ic = 0; ic < m.tau_c.size(); ++ic) {
        for (std::size_t id = 0; id < m.tau_d.size(); ++id) {
            const std::size_t k = m.idx(ic, id);
            t.columns[0].push_back(m.tau_c[ic]);
            t.columns[1].push_back(m.tau_d[id]);
            t.columns[2].push_back(m.B[k].real());
            t.columns[3].push_back(m.B[k].imag());
            t.columns[4].push_back(m.g2_ll[k]);
            t.columns[5].push_back(m.g2_rr[k]);
            t.columns[6].push_back(m.node_mask[k] ? 1.0 : 0.0);
        }
    }
    return t;
}

Table sideband_table(const SidebandAmplitudes& a) {
    Table t;
    t.header = {"m", "re_t", "im_t", "re_r", "im_r"};
    t.columns.assign(5, {});
    for (const auto& [m, r] : a.r) {
        const cplx tv = a.t_at(m);
        t.columns[0].push_back(static_cast<double>(m));
        t.columns[1].push_back(tv.real());
        t.columns[2].push_back(tv.imag());
        t.columns[3].push_back(r.real());
        t.columns[4].push_back(r.imag());
    }
    return t;
}

Table folded_table(const lattice::FoldedEnvelope& f) {
    Table t;
    t.header = {"tau_c", "re_A",  "im_A",  "abs_r2", "abs_t2",
                "g1_rr", "g1_ll", "se_re", "se_im"};
    t.columns.assign(9, {});
    for (std::size_t i = 0; i < f.tau_c.size(); ++i) {
        const cplx A = f.A[i];
        t.columns[0].push_back(f.tau_c[i]);
        t.columns[1].push_back(A.real());
        t.columns[2].push_back(A.imag());
        t.columns[3].push_back(std::norm(A));
        t.columns[4].push_back(std::norm(1.0 + A));
        t.columns[5].push_back(std::norm(1.0 + A));
        t.columns[6].push_back(std::norm(A));
        t.columns[7].push_back(f.se_re[i]);
        t.columns[8].push_back(f.se_im[i]);
    }
    return t;
}

// ---------------------------------------------------------------------------
// Command bodies.

Artifacts make_envelope(const RunConfig& rc) {
    const ScatterParams sp = rc.scatter();
    const EnvelopeGrid grid = envelope_grid(sp, rc.n_tau_c, rc.quad);
    const std::vector<double> nodes = find_nodes(sp, grid, -1.0, rc.quad);

    json meta = meta_common(rc, "envelope");
    meta["n_tau_c"] = rc.n_tau_c;
    meta["unitarity_defect"] = grid.unitarity_defect;
    meta["adiabaticity"] = grid.adiabaticity;
    meta["nodes"] = nodes;

    const std::string stem = file_stem("envelope", rc.label);
    Artifacts a;
    a.csv.emplace_back(stem + ".csv", envelope_table(grid));
    a.jsonf.emplace_back(stem + ".meta.json", std::move(meta));
    return a;
}

Artifacts make_g2_map(const RunConfig& rc, bool binary) {
    const ScatterParams sp = rc.scatter();
    const CoherenceMap cm =
        coherence_map(sp, rc.n_tau_c, rc.n_tau_d, rc.tau_d_max, rc.quad, rc.node_floor);

    json meta = meta_common(rc, "g2-map");
    meta["n_tau_c"] = rc.n_tau_c;
    meta["n_tau_d"] = rc.n_tau_d;
    meta["tau_d_max"] = cm.tau_d.empty() ? 0.0 : cm.tau_d.back();

    const std::string stem = file_stem("g2-map", rc.label);
    Artifacts a;
    Table tbl = coherence_table(cm);
    if (binary) a.bin.emplace_back(stem + ".bin", tbl);
    a.csv.emplace_back(stem + ".csv", std::move(tbl));
    a.jsonf.emplace_back(stem + ".meta.json", std::move(meta));
    return a;
}

Artifacts make_sidebands(const RunConfig& rc) {
    const ScatterParams sp = rc.scatter();
    const SidebandAmplitudes amps = single_photon_sidebands(sp, rc.cutoff);

    json meta = meta_common(rc, "sidebands");
    meta["unitarity_defect"] = sideband_unitarity(amps);

    const std::string stem = file_stem("sidebands", rc.label);
    Artifacts a;
    a.csv.emplace_back(stem + ".csv", sideband_table(amps));
    a.jsonf.emplace_back(stem + ".meta.json", std::move(meta));
    return a;
}

struct Deviation {
    double sup = 0.0;
    double l2 = 0.0;
};

Deviation deviation(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    Deviation d;
    double sum2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = std::abs(a[i] - b[i]);
        d.sup = std::max(d.sup, e);
        sum2 += e * e;
    }
    d.l2 = a.empty() ? 0.0 : std::sqrt(sum2 / static_cast<double>(a.size()));
    return d;
}

Artifacts make_compare(const RunConfig& rc) {
    const ScatterParams sp = rc.scatter();
    const std::string stem = file_stem("compare", rc.label);
    Artifacts a;
    json report = meta_common(rc, "oracle-compare");

    // Path 1: closed-form envelope.
    const EnvelopeGrid grid = envelope_grid(sp, rc.n_tau_c, rc.quad);
    a.csv.emplace_back(file_stem("envelope", rc.label) + ".csv", envelope_table(grid));

    // Path 2: Floquet ladder, with a cutoff-doubling convergence gate.
    const SidebandAmplitudes amps = single_photon_sidebands(sp, rc.cutoff);
    const SidebandAmplitudes amps2 = single_photon_sidebands(sp, 2 * rc.cutoff);
    double doubling2 = 0.0;
    for (const auto& [m, r] : amps.r) doubling2 += std::norm(amps2.r_at(m) - r);
    const double doubling = std::sqrt(doubling2);
    report["sideband_doubling"] = {{"cutoff", rc.cutoff},
                                   {"l2_change", doubling},
                                   {"tol", rc.sideband_doubling_tol}};
    if (!(doubling < rc.sideband_doubling_tol))
        throw NumericalError("sideband ladder not converged at cutoff " +
                             std::to_string(rc.cutoff) + ": doubling the cutoff moves r_m by " +
                             format_sci(doubling) + " (tol " +
                             format_sci(rc.sideband_doubling_tol) + ")");
    a.csv.emplace_back(file_stem("sidebands", rc.label) + ".csv", sideband_table(amps));

    std::vector<cplx> recon(grid.tau_c.size());
    for (std::size_t i = 0; i < grid.tau_c.size(); ++i)
        recon[i] = reconstruct_A(amps, grid.tau_c[i]);
    const Deviation dev_fs = deviation(grid.A, recon);
    const bool pass_fs = dev_fs.l2 < rc.envelope_tol;
    report["envelope_vs_sidebands"] = {{"sup", dev_fs.sup},
                                       {"l2", dev_fs.l2},
                                       {"tol", rc.envelope_tol},
                                       {"pass", pass_fs}};
    bool pass = pass_fs;

    // Path 3: brute-force lattice scattering, folded onto one period.
    if (rc.with_lattice) {
        const lattice::FieldSeries series = lattice::run_single_photon(sp, rc.lat);
        const lattice::FoldedEnvelope folded = lattice::extract_envelope(series, rc.oracle_bins);
        a.csv.emplace_back(file_stem("oracle", rc.label) + ".csv", folded_table(folded));

        std::vector<cplx> lat_a, ana_a;
        for (std::size_t i = 0; i < folded.tau_c.size(); ++i) {
            if (folded.count[i] == 0) continue;
            lat_a.push_back(folded.A[i]);
            ana_a.push_back(envelope_A(sp, folded.tau_c[i], rc.quad));
        }
        if (lat_a.size() * 5 < folded.tau_c.size() * 4)
            throw NumericalError("lattice envelope starved: only " +
                                 std::to_string(lat_a.size()) + " of " +
                                 std::to_string(folded.tau_c.size()) + " bins usable");
        const Deviation dev_lat = deviation(lat_a, ana_a);
        const bool pass_lat = dev_lat.sup < rc.lattice_tol;
        report["envelope_vs_lattice"] = {{"sup", dev_lat.sup},
                                         {"l2", dev_lat.l2},
                                         {"tol", rc.lattice_tol},
                                         {"bins", rc.oracle_bins},
                                         {"norm_drift", series.norm_drift},
                                         {"guard_max", series.guard_max},
                                         {"pass", pass_lat}};
        pass = pass && pass_lat;
    }

    report["pass"] = pass;
    a.compare_pass = pass;
    a.jsonf.emplace_back(stem + ".json", std::move(report));
    return a;
}

json ratio_json(double x) {
    return std::isfinite(x) ? json(x) : json("inf");
}

Artifacts make_circuit_map(const LoadedConfig& lc) {
    if (!lc.circuit)
        throw std::invalid_argument("circuit-map needs a circuit block in the config");
    const CircuitRun& cr = *lc.circuit;
    const CircuitParams& cp = cr.params;

    const JrmCoefficients jc = jrm_coefficients(cp);
    const TransmonParams tp = transmon_params(cp);
    const double dgdi = coupling_per_current(cp);
    const DriveProtocol g = coupling_waveform(cp, cr.pump_harmonics, cr.pump_omega);
    const RateSpectrum rs = rate_spectrum(g);
    const ValidityReport rep = validity_report(cp, g, cr.ratio_threshold);

    const double omega0 = cp.omega0 > 0.0 ? cp.omega0 : tp.omega_c;
    const double delta = omega0 - tp.omega_c;

    json model = {
        {"tool", tool_stamp()},
        {"command", "circuit-map"},
        {"jrm", {{"lambda", jc.lambda}, {"mu_x", jc.mu_x}, {"mu_y", jc.mu_y}, {"mu_z", jc.mu_z}}},
        {"transmon",
         {{"omega_c", tp.omega_c}, {"kerr", tp.kerr}, {"ej_ec_ratio", tp.ej_ec_ratio}}},
        {"coupling_per_current", dgdi},
        {"protocol", protocol_json(g)},
        {"scatter",
         {{"gamma0", rs.gamma0},
          {"beta", rs.beta},
          {"delta", delta},
          {"kerr", tp.kerr},
          {"delta_over_gamma0", rs.gamma0 > 0.0 ? delta / rs.gamma0 : 0.0},
          {"kerr_over_gamma0", rs.gamma0 > 0.0 ? tp.kerr / rs.gamma0 : 0.0}}},
        {"validity",
         {{"ok", rep.ok},
          {"ej_ec_ratio", ratio_json(rep.ej_ec_ratio)},
          {"carrier_over_drive", ratio_json(rep.carrier_over_drive)},
          {"carrier_over_rate", ratio_json(rep.carrier_over_rate)},
          {"carrier_over_detuning", ratio_json(rep.carrier_over_detuning)},
          {"pump_phase_excursion", rep.pump_phase_excursion},
          {"ratio_threshold", cr.ratio_threshold},
          {"warnings", rep.warnings}}}};

    Artifacts a;
    a.jsonf.emplace_back("circuit_map.json", std::move(model));
    return a;
}

// ---------------------------------------------------------------------------
// Orchestration.

template <class Fn>
std::vector<Artifacts> compute_all(const std::vector<RunConfig>& runs, int workers, Fn&& fn) {
    const int n = static_cast<int>(runs.size());
    std::vector<Artifacts> out(runs.size());
    std::vector<std::exception_ptr> errors(runs.size());
    std::atomic<int> next{0};
    auto drain = [&] {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                out[i] = fn(runs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int pool = std::max(1, std::min(workers, n));
    if (pool == 1) {
        drain();
    } else {
        std::vector<std::thread> threads;
        for (int i = 0; i < pool; ++i) threads.emplace_back(drain);
        for (auto& t : threads) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

class OutputDir {
  public:
    OutputDir(std::string dir, bool force) : dir_(std::move(dir)), force_(force) {
        fs::create_directories(dir_);
    }

    std::string claim(const std::string& name) const {
        const fs::path p = fs::path(dir_) / name;
        if (!force_ && fs::exists(p))
            throw std::invalid_argument("refusing to overwrite " + p.string() +
                                        " (use --force or output.force)");
        return p.string();
    }

  private:
    std::string dir_;
    bool force_;
};

int run_command(const std::string& command, const CliArgs& args) {
    const json raw = config_from_file(args.config_path);
    const LoadedConfig lc = load_config(raw, args.sets);

    std::string dir = lc.output.dir;
    if (const char* env = std::getenv("FSCAT_OUT"); env && *env) dir = env;
    if (!args.out_dir.empty()) dir = args.out_dir;
    const OutputDir out(dir, args.force || lc.output.force);

    // The resolved config is always the first artifact, so a rerun into the
    // same directory refuses before any computation starts.
    const std::string resolved_path = out.claim("resolved_config.json");
    write_json_file(resolved_path,
                    json{{"tool", tool_stamp()}, {"command", command}, {"config", lc.resolved}});

    std::vector<Artifacts> artifacts;
    if (command == "envelope") {
        artifacts = compute_all(lc.runs, lc.workers, make_envelope);
    } else if (command == "g2-map") {
        const bool binary = lc.output.binary;
        artifacts = compute_all(lc.runs, lc.workers,
                                [binary](const RunConfig& rc) { return make_g2_map(rc, binary); });
    } else if (command == "sidebands") {
        artifacts = compute_all(lc.runs, lc.workers, make_sidebands);
    } else if (command == "oracle-compare") {
        artifacts = compute_all(lc.runs, lc.workers, make_compare);
    } else if (command == "circuit-map") {
        artifacts.push_back(make_circuit_map(lc));
    } else {
        throw std::invalid_argument("unknown command " + command);
    }

    bool all_pass = true;
    for (const Artifacts& a : artifacts) {
        for (const auto& [name, tbl] : a.csv) write_csv(out.claim(name), tbl);
        for (const auto& [name, tbl] : a.bin) write_binary(out.claim(name), tbl);
        for (const auto& [name, j] : a.jsonf) write_json_file(out.claim(name), j);
        all_pass = all_pass && a.compare_pass;
    }
    if (!all_pass)
        throw CompareFailure("computation paths disagree beyond tolerance; see the compare report in " +
                             dir);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floquet scattering of single- and two-photon pulses on a cavity with a "
                 "periodically modulated coupling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolName) + " " + FSCAT_VERSION);

    CliArgs args;
    const std::vector<std::string> commands = {"envelope", "g2-map", "sidebands",
                                               "oracle-compare", "circuit-map"};
    const std::vector<std::string> briefs = {
        "reflection/transmission envelopes over one drive period",
        "two-photon coherence map g2(tau_c, tau_d)",
        "Floquet sideband amplitudes r_m, t_m",
        "cross-check envelope, sideband and time-domain lattice paths",
        "map microwave circuit parameters onto the scattering model"};
    for (std::size_t i = 0; i < commands.size(); ++i)
        add_common_options(app.add_subcommand(commands[i], briefs[i]), args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    std::string command;
    for (const auto& name : commands)
        if (app.got_subcommand(name)) command = name;

    try {
        return run_command(command, args);
    } catch (const CompareFailure& e) {
        std::cerr << kToolName << ": comparison failure: " << e.what() << "\n";
        return exit_compare;
    } catch (const NumericalError& e) {
        std::cerr << kToolName << ": numerical failure: " << e.what() << "\n";
        return exit_numeric;
    } catch (const json::exception& e) {
        std::cerr << kToolName << ": config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << kToolName << ": config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << kToolName << ": " << e.what() << "\n";
        return exit_numeric;
    }
}
