#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fscat/circuit.hpp"
#include "fscat/envelope.hpp"
#include "fscat/io.hpp"
#include "fscat/lattice.hpp"

namespace fscat {

// One fully resolved scattering run: a sweep entry after expansion of any
// array-valued config fields.
struct RunConfig {
    DriveProtocol protocol;
    double delta = 0.0;
    double kerr = 0.0;

    int n_tau_c = 256;
    int n_tau_d = 64;
    double tau_d_max = 0.0;  // <= 0: module default window

    QuadOptions quad;
    int cutoff = 48;         // Floquet ladder half-width
    double node_floor = 1e-6;
    lattice::Config lat;

    bool with_lattice = false;      // oracle-compare: also run the time-domain check
    int oracle_bins = 24;           // folded-envelope bins for the comparison
    double envelope_tol = 1e-6;     // envelope vs sideband reconstruction (L2)
    double sideband_doubling_tol = 1e-8;  // cutoff convergence (L2, M vs 2M)
    double lattice_tol = 2e-2;      // folded oracle vs analytic envelope (sup)

    std::string label;       // sweep suffix, "" for a single run

    ScatterParams scatter() const { return ScatterParams(protocol, delta, kerr); }
};

struct OutputConfig {
    std::string dir = "out";
    bool force = false;
    bool binary = false;
};

struct CircuitRun {
    CircuitParams params;
    std::map<int, cplx> pump_harmonics;
    double pump_omega = 0.0;
    double ratio_threshold = 20.0;
};

struct LoadedConfig {
    std::vector<RunConfig> runs;
    OutputConfig output;
    std::optional<CircuitRun> circuit;
    int workers = 1;
    json resolved;  // input config with overrides applied (echoed to output)
};

// Parses a config JSON, applies dotted-path overrides ("a.b.c=value", parsed
// as JSON when possible, else as a string), expands sweep arrays
// (protocol.beta / scatter.delta* / scatter.kerr*) into individual runs.
// Throws std::invalid_argument on malformed input.
LoadedConfig load_config(const json& cfg, const std::vector<std::string>& overrides = {});

json config_from_file(const std::string& path);

}  // namespace fscat
