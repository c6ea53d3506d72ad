#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptc/formation.hpp"
#include "ptc/graph.hpp"
#include "ptc/protocol.hpp"
#include "ptc/sim.hpp"

namespace ptc {

/// Exit codes shared by the library runner and the CLI.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 1,
    kExitRunFailure = 2,
    kExitCertificationFailure = 3,
};

struct PtcSpec {
    std::string family; // exp_p | exp_sqrt | power_k | power_n
    double a = 1.0, b = 1.0, p = 0.5, q = 1.5, k = 1.0;
    PtcFunction build(int n) const;
};

struct GraphSpec {
    std::string source = "random"; // random | files
    int n = 10;
    int count = 1;
    std::vector<std::string> paths;
};

struct FormationSpec {
    std::vector<Eigen::Vector2d> reference;
    double comm_range = 0.5;
    double z0_lo = 1.0, z0_hi = 3.0;
};

enum class GainMode { AutoTheorem2, AutoTheorem3, Explicit };

struct ExperimentConfig {
    std::string mode = "consensus"; // consensus | formation | certify
    ProtocolKind protocol = ProtocolKind::EdgeWise;
    PtcSpec ptc;
    double t_c = 1.0;
    GainMode gain_mode = GainMode::AutoTheorem2;
    double explicit_kappa = 1.0;
    GraphSpec graph;
    double min_dwell = 0.1;
    double step = -1.0;    // <= 0 selects 1e-4 * t_c
    double horizon = -1.0; // <= 0 selects 1.25 * t_c
    double settle_tol = -1.0;
    std::vector<double> x0;      // empty: draw uniformly from x0_box
    double x0_lo = -25.0, x0_hi = 25.0;
    FormationSpec formation;
    int certify_trials = 10000;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig preset(const std::string& name);
};

/// The part of a run summary that is recomputable from the trace CSV alone.
struct TraceSummary {
    int agents = 0;
    long samples = 0;
    double initial_disagreement = 0.0;
    double final_disagreement = 0.0;
    double consensus_value = 0.0;   // final mean
    double conservation_error = 0.0; // |final mean - initial mean|
    bool settled = false;
    double t_settle = 0.0; // elapsed; valid when settled
    bool operator==(const TraceSummary&) const = default;
};

TraceSummary summarize(const SimulationTrace& trace, double settle_tol);

struct RunResult {
    int exit_code = kExitOk;
    TraceSummary summary;
    double gain = 0.0;
    double lambda = 0.0;
    bool gain_certified = false;
    std::string summary_text;
};

/// Executes the experiment: writes <out_dir>/trace.csv (consensus mode) or
/// <out_dir>/formation.csv, recomputes the summary from the written CSV, and
/// writes <out_dir>/summary.txt. Deterministic given (config, seed).
RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir, bool quiet,
                         std::ostream& log);

} // namespace ptc
