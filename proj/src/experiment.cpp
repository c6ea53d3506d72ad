#include "ptc/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ptc/ptcfun.hpp"
#include "ptc/rng.hpp"

namespace ptc {

using nlohmann::json;

PtcFunction PtcSpec::build(int n) const {
    if (family == "exp_p") return make_exp_p(p);
    if (family == "exp_sqrt") return make_exp_sqrt();
    if (family == "power_k") return make_power_k(a, b, p, q, k);
    if (family == "power_n") return make_power_n(a, b, p, q, n);
    throw std::invalid_argument("unknown consensus function family: " + family);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

PtcSpec ptc_spec_from_json(const json& j) {
    PtcSpec spec;
    spec.family = j.at("family").get<std::string>();
    if (j.contains("params")) {
        const auto& p = j.at("params");
        if (p.contains("a")) spec.a = p.at("a").get<double>();
        if (p.contains("b")) spec.b = p.at("b").get<double>();
        if (p.contains("p")) spec.p = p.at("p").get<double>();
        if (p.contains("q")) spec.q = p.at("q").get<double>();
        if (p.contains("k")) spec.k = p.at("k").get<double>();
    }
    return spec;
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    try {
        ExperimentConfig cfg;
        if (j.at("version").get<int>() != 1)
            throw std::invalid_argument("config: unsupported schema version");
        cfg.mode = j.at("mode").get<std::string>();
        if (cfg.mode != "consensus" && cfg.mode != "formation" && cfg.mode != "certify")
            throw std::invalid_argument("config: unknown mode " + cfg.mode);
        if (j.contains("protocol")) {
            const auto kind = j.at("protocol").get<std::string>();
            if (kind == "edgewise") cfg.protocol = ProtocolKind::EdgeWise;
            else if (kind == "nodewise") cfg.protocol = ProtocolKind::NodeWise;
            else throw std::invalid_argument("config: unknown protocol " + kind);
        }
        if (j.contains("ptc")) cfg.ptc = ptc_spec_from_json(j.at("ptc"));
        if (j.contains("T_c")) cfg.t_c = j.at("T_c").get<double>();
        if (!(cfg.t_c > 0.0)) throw std::invalid_argument("config: T_c must be positive");
        if (j.contains("gain")) {
            const auto& g = j.at("gain");
            const auto mode = g.at("mode").get<std::string>();
            if (mode == "auto_theorem2") cfg.gain_mode = GainMode::AutoTheorem2;
            else if (mode == "auto_theorem3") cfg.gain_mode = GainMode::AutoTheorem3;
            else if (mode == "explicit") {
                cfg.gain_mode = GainMode::Explicit;
                cfg.explicit_kappa = g.at("kappa").get<double>();
            } else throw std::invalid_argument("config: unknown gain mode " + mode);
        }
        if (j.contains("graph")) {
            const auto& g = j.at("graph");
            cfg.graph.source = g.at("source").get<std::string>();
            if (cfg.graph.source == "random") {
                cfg.graph.n = g.at("n").get<int>();
                cfg.graph.count = g.value("count", 1);
            } else if (cfg.graph.source == "files") {
                cfg.graph.paths = g.at("paths").get<std::vector<std::string>>();
                for (const auto& path : cfg.graph.paths)
                    if (!std::filesystem::exists(path))
                        throw std::invalid_argument("config: missing graph file " + path);
                cfg.graph.count = static_cast<int>(cfg.graph.paths.size());
            } else {
                throw std::invalid_argument("config: unknown graph source");
            }
        }
        if (j.contains("switching"))
            cfg.min_dwell = j.at("switching").value("min_dwell", 0.1);
        if (j.contains("integrator")) {
            const auto& i = j.at("integrator");
            cfg.step = i.value("step", -1.0);
            cfg.horizon = i.value("horizon", -1.0);
            cfg.settle_tol = i.value("settle_tol", -1.0);
        }
        if (j.contains("x0")) {
            const auto& x = j.at("x0");
            if (x.is_array()) {
                cfg.x0 = x.get<std::vector<double>>();
            } else {
                const auto box = x.at("uniform").get<std::vector<double>>();
                if (box.size() != 2) throw std::invalid_argument("config: x0.uniform needs [lo, hi]");
                cfg.x0_lo = box[0];
                cfg.x0_hi = box[1];
            }
        }
        if (j.contains("formation")) {
            const auto& f = j.at("formation");
            for (const auto& pt : f.at("reference"))
                cfg.formation.reference.emplace_back(pt.at(0).get<double>(),
                                                     pt.at(1).get<double>());
            cfg.formation.comm_range = f.value("comm_range", 0.5);
            if (f.contains("z0_box")) {
                cfg.formation.z0_lo = f.at("z0_box").at(0).get<double>();
                cfg.formation.z0_hi = f.at("z0_box").at(1).get<double>();
            }
        }
        if (j.contains("certify_trials"))
            cfg.certify_trials = j.at("certify_trials").get<int>();
        return cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config error: ") + e.what());
    }
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "example1") {
        // Switching average consensus, power-form function, Theorem-2 gain.
        cfg.mode = "consensus";
        cfg.protocol = ProtocolKind::EdgeWise;
        cfg.ptc = {"power_n", 1.0, 2.0, 0.2, 1.1, 1.0};
        cfg.gain_mode = GainMode::AutoTheorem2;
        cfg.graph = {"random", 10, 4, {}};
        cfg.x0 = {23.13, 18.33, 8.01, 20.45, 7.57, -22.77, 12.40, -9.22, 22.02, -10.66};
    } else if (name == "example2") {
        // Static network, single-evaluation protocol, Theorem-3 gain.
        cfg.mode = "consensus";
        cfg.protocol = ProtocolKind::NodeWise;
        cfg.ptc = {"exp_p", 1.0, 1.0, 0.5, 1.5, 1.0};
        cfg.gain_mode = GainMode::AutoTheorem3;
        cfg.graph = {"random", 10, 1, {}};
        cfg.x0 = {3.65, -8.99, -3.26, -0.03, 4.52, 13.53, 15.85, -0.53, -9.97, -13.91};
    } else if (name == "example3") {
        // Switching network with the single-evaluation protocol; the gain is
        // a reconstruction: Theorem-3 bound evaluated at the worst-family
        // algebraic connectivity.
        cfg.mode = "consensus";
        cfg.protocol = ProtocolKind::NodeWise;
        cfg.ptc = {"exp_p", 1.0, 1.0, 0.5, 1.5, 1.0};
        cfg.gain_mode = GainMode::AutoTheorem3;
        cfg.graph = {"random", 10, 4, {}};
        cfg.horizon = 2.5;
    } else if (name == "example4") {
        // Proximity-graph formation run; gain from the line-graph worst case.
        cfg.mode = "formation";
        cfg.protocol = ProtocolKind::EdgeWise;
        cfg.ptc = {"power_n", 1.0, 2.0, 0.2, 1.1, 1.0};
        cfg.gain_mode = GainMode::AutoTheorem2;
        for (int i = 0; i < 20; ++i)
            cfg.formation.reference.emplace_back(0.35 * (i % 5), 0.35 * (i / 5));
        cfg.formation.comm_range = 0.5;
    } else if (name == "certify") {
        cfg.mode = "certify";
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    return cfg;
}

TraceSummary summarize(const SimulationTrace& trace, double settle_tol) {
    TraceSummary s;
    s.agents = static_cast<int>(trace.states.front().size());
    s.samples = static_cast<long>(trace.times.size());
    s.initial_disagreement = trace.diagnostics.front().v_maxmin;
    s.final_disagreement = trace.diagnostics.back().v_maxmin;
    s.consensus_value = trace.diagnostics.back().mean_state;
    s.conservation_error =
        std::abs(trace.diagnostics.back().mean_state - trace.diagnostics.front().mean_state);
    const auto settle = settling_time(trace, settle_tol);
    s.settled = settle.has_value();
    s.t_settle = settle.value_or(0.0);
    return s;
}

namespace {

struct Prepared {
    std::vector<WeightedGraph> family;
    int n = 0;
    PtcFunction ptc;
    double step = 0.0;
    double horizon = 0.0;
};

WeightedGraph path_graph(int n) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
    return WeightedGraph(n, std::move(edges));
}

int run_consensus(const ExperimentConfig& cfg, std::uint64_t seed,
                  const std::string& out_dir, bool quiet, std::ostream& log,
                  RunResult& result) {
    SplitMix64 root(seed);
    SplitMix64 graph_rng = root.split(1);
    const std::uint64_t switch_seed = root.split(2).next();
    SplitMix64 x0_rng = root.split(3);

    std::vector<WeightedGraph> family;
    if (cfg.graph.source == "files") {
        for (const auto& path : cfg.graph.paths) family.push_back(read_edge_list_file(path));
    } else {
        for (int i = 0; i < cfg.graph.count; ++i)
            family.push_back(random_connected_graph(cfg.graph.n, graph_rng));
    }
    const int n = family.front().vertex_count();
    const PtcFunction ptc = cfg.ptc.build(n);
    const double step = cfg.step > 0.0 ? cfg.step : 1e-4 * cfg.t_c;
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 1.25 * cfg.t_c;

    const FamilyStats stats = family_stats(family);
    const double bound = cfg.protocol == ProtocolKind::EdgeWise
                             ? gain_theorem2(stats, ptc, cfg.t_c)
                             : gain_theorem3(stats.lambda, n, ptc, cfg.t_c);
    const double kappa =
        cfg.gain_mode == GainMode::Explicit ? cfg.explicit_kappa : bound;
    result.gain = kappa;
    result.lambda = stats.lambda;
    result.gain_certified = kappa >= bound * (1.0 - 1e-12);

    Eigen::VectorXd x0(n);
    if (!cfg.x0.empty()) {
        if (static_cast<int>(cfg.x0.size()) != n)
            throw std::invalid_argument("config: x0 dimension does not match graph");
        for (int i = 0; i < n; ++i) x0(i) = cfg.x0[static_cast<std::size_t>(i)];
    } else {
        for (int i = 0; i < n; ++i) x0(i) = x0_rng.uniform(cfg.x0_lo, cfg.x0_hi);
    }

    SwitchingSignal signal =
        family.size() > 1
            ? make_random_switching(static_cast<int>(family.size()), 0.0, horizon,
                                    cfg.min_dwell, switch_seed)
            : SwitchingSignal({0.0}, {0}, horizon);
    SwitchedNetwork net(family, std::move(signal));

    ProtocolConfig pcfg = ProtocolConfig::uniform(cfg.protocol, n, kappa, ptc, cfg.t_c);
    IntegratorConfig icfg;
    icfg.step = step;
    icfg.horizon = horizon;
    icfg.settle_tol = cfg.settle_tol;
    const SimulationTrace trace = simulate(net, pcfg, x0, icfg);

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/trace.csv";
    {
        std::ofstream out(csv_path, std::ios::binary);
        write_trace_csv(trace, out);
    }
    // The summary is recomputed from the file just written so that it is
    // reproducible from the CSV alone.
    std::ifstream in(csv_path);
    const SimulationTrace reread = read_trace_csv(in);
    const double tol = cfg.settle_tol > 0.0
                           ? cfg.settle_tol
                           : std::max(1e-6 * reread.diagnostics.front().v_maxmin, 1e-12);
    result.summary = summarize(reread, tol);

    std::ostringstream s;
    s << "mode: consensus\n"
      << "agents: " << result.summary.agents << "\n"
      << "samples: " << result.summary.samples << "\n"
      << "T_c: " << fmt(cfg.t_c) << "\n"
      << "gain: " << fmt(kappa) << "\n"
      << "gain_bound: " << fmt(bound) << "\n"
      << "lambda: " << fmt(stats.lambda) << "\n";
    if (!result.gain_certified) s << "warning: gain below certified bound\n";
    if (result.summary.settled) {
        s << "T_settle: " << fmt(result.summary.t_settle) << "\n"
          << "margin: " << fmt(cfg.t_c - result.summary.t_settle) << "\n";
    } else {
        s << "T_settle: NOT_SETTLED\nmargin: NOT_SETTLED\n";
    }
    s << "consensus_value: " << fmt(result.summary.consensus_value) << "\n"
      << "conservation_error: " << fmt(result.summary.conservation_error) << "\n"
      << "initial_disagreement: " << fmt(result.summary.initial_disagreement) << "\n"
      << "final_disagreement: " << fmt(result.summary.final_disagreement) << "\n"
      << "clamp_event: " << (trace.clamp_event ? "yes" : "no") << "\n";
    result.summary_text = s.str();
    {
        std::ofstream out(out_dir + "/summary.txt", std::ios::binary);
        out << result.summary_text;
    }
    if (!quiet) log << result.summary_text;

    if (trace.clamp_event) return kExitRunFailure;
    if (result.gain_certified && cfg.t_c <= horizon &&
        (!result.summary.settled || result.summary.t_settle > cfg.t_c))
        return kExitCertificationFailure;
    return kExitOk;
}

int run_formation(const ExperimentConfig& cfg, std::uint64_t seed,
                  const std::string& out_dir, bool quiet, std::ostream& log,
                  RunResult& result) {
    const int n = static_cast<int>(cfg.formation.reference.size());
    if (n < 2) throw std::invalid_argument("formation: need a reference placement");
    SplitMix64 root(seed);
    SplitMix64 z0_rng = root.split(4);

    const DisplacementSpec spec = DisplacementSpec::from_reference(cfg.formation.reference);
    const PtcFunction ptc = cfg.ptc.build(n);
    const double step = cfg.step > 0.0 ? cfg.step : 1e-4 * cfg.t_c;
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 1.25 * cfg.t_c;

    // Worst-case connected topology for the gain: the line graph.
    const double lambda_line = algebraic_connectivity(path_graph(n));
    FamilyStats stats;
    stats.lambda = lambda_line;
    stats.m_lo = n - 1;
    stats.m_hi = n * (n - 1) / 2;
    const double bound = gain_theorem2(stats, ptc, cfg.t_c);
    const double kappa = cfg.gain_mode == GainMode::Explicit ? cfg.explicit_kappa : bound;
    result.gain = kappa;
    result.lambda = lambda_line;
    result.gain_certified = kappa >= bound * (1.0 - 1e-12);

    Eigen::MatrixX2d z0(n, 2);
    bool connected0 = false;
    for (int attempt = 0; attempt < 1000 && !connected0; ++attempt) {
        std::vector<Eigen::Vector2d> pts;
        for (int i = 0; i < n; ++i) {
            z0(i, 0) = z0_rng.uniform(cfg.formation.z0_lo, cfg.formation.z0_hi);
            z0(i, 1) = z0_rng.uniform(cfg.formation.z0_lo, cfg.formation.z0_hi);
            pts.emplace_back(z0(i, 0), z0(i, 1));
        }
        connected0 = is_connected(proximity_graph(pts, cfg.formation.comm_range));
    }
    if (!connected0)
        throw std::runtime_error("formation: could not draw a connected initial placement");

    ProtocolConfig pcfg = ProtocolConfig::uniform(cfg.protocol, n, kappa, ptc, cfg.t_c);
    IntegratorConfig icfg;
    icfg.step = step;
    icfg.horizon = horizon;
    icfg.settle_tol = cfg.settle_tol;
    const FormationTrace trace =
        simulate_formation(z0, spec, pcfg, icfg, cfg.formation.comm_range);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/formation.csv", std::ios::binary);
        write_formation_csv(trace, out);
    }
    // Formation error at the sample closest to T_c.
    double error_at_tc = trace.formation_error.back();
    for (std::size_t k = 0; k < trace.times.size(); ++k)
        if (trace.times[k] >= cfg.t_c - 0.5 * step) {
            error_at_tc = trace.formation_error[k];
            break;
        }

    result.summary.agents = n;
    result.summary.samples = static_cast<long>(trace.times.size());
    result.summary.final_disagreement = error_at_tc;
    result.summary.settled = trace.settled_at.has_value();
    result.summary.t_settle = trace.settled_at.value_or(0.0);

    std::ostringstream s;
    s << "mode: formation\n"
      << "agents: " << n << "\n"
      << "T_c: " << fmt(cfg.t_c) << "\n"
      << "gain: " << fmt(kappa) << "\n"
      << "lambda_line: " << fmt(lambda_line) << "\n"
      << "formation_error_at_T_c: " << fmt(error_at_tc) << "\n"
      << "disconnected: " << (trace.ever_disconnected ? "yes" : "no") << "\n"
      << "clamp_event: " << (trace.clamp_event ? "yes" : "no") << "\n";
    if (!result.gain_certified) s << "warning: gain below certified bound\n";
    result.summary_text = s.str();
    {
        std::ofstream out(out_dir + "/summary.txt", std::ios::binary);
        out << result.summary_text;
    }
    if (!quiet) log << result.summary_text;

    if (trace.clamp_event) return kExitRunFailure;
    if (trace.ever_disconnected) return kExitOk; // reported, not certified
    if (result.gain_certified && error_at_tc >= 1e-3) return kExitCertificationFailure;
    return kExitOk;
}

int run_certify(const ExperimentConfig& cfg, std::uint64_t seed,
                const std::string& out_dir, bool quiet, std::ostream& log,
                RunResult& result) {
    struct Entry {
        std::string name;
        PtcFunction f;
    };
    const std::vector<Entry> catalog = {
        {"exp_p(0.5)", make_exp_p(0.5)},
        {"exp_sqrt", make_exp_sqrt()},
        {"power_k(1,2,0.2,1.1,1)", make_power_k(1, 2, 0.2, 1.1, 1)},
        {"power_k(1,1,0.5,1.5,1)", make_power_k(1, 1, 0.5, 1.5, 1)},
        {"power_n(1,1,0.5,1.5,n=10)", make_power_n(1, 1, 0.5, 1.5, 10)},
    };
    const int sizes[] = {1, 2, 5, 10, 50};
    bool all_pass = true;
    std::ostringstream s;
    s << "mode: certify\n";
    SplitMix64 root(seed);
    for (const auto& entry : catalog) {
        const double residual = certify_assumption1(entry.f);
        double worst = -1.0;
        for (int n : sizes)
            worst = std::max(worst, check_inequality6(entry.f, n, cfg.certify_trials,
                                                      root.split(static_cast<std::uint64_t>(n)).next()));
        const bool pass = residual < 1e-3 && worst <= 1e-9;
        all_pass = all_pass && pass;
        s << entry.name << ": residual=" << fmt(residual)
          << " worst_violation=" << fmt(worst) << " " << (pass ? "PASS" : "FAIL")
          << "\n";
    }
    result.summary_text = s.str();
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/summary.txt", std::ios::binary);
        out << result.summary_text;
    }
    if (!quiet) log << result.summary_text;
    return all_pass ? kExitOk : kExitCertificationFailure;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir, bool quiet, std::ostream& log) {
    RunResult result;
    if (cfg.mode == "consensus")
        result.exit_code = run_consensus(cfg, seed, out_dir, quiet, log, result);
    else if (cfg.mode == "formation")
        result.exit_code = run_formation(cfg, seed, out_dir, quiet, log, result);
    else if (cfg.mode == "certify")
        result.exit_code = run_certify(cfg, seed, out_dir, quiet, log, result);
    else
        throw std::invalid_argument("unknown mode: " + cfg.mode);
    return result;
}

} // namespace ptc
