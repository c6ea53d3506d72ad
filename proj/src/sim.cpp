#include "ptc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ptc {

void IntegratorConfig::validate() const {
    if (!(step > 0.0)) throw std::invalid_argument("IntegratorConfig: step must be positive");
    if (!(horizon > t0)) throw std::invalid_argument("IntegratorConfig: horizon must exceed t0");
    if (max_substeps < 1) throw std::invalid_argument("IntegratorConfig: max_substeps");
}

double IntegratorConfig::resolve_settle_tol(double initial_disagreement) const {
    if (settle_tol > 0.0) return settle_tol;
    return std::max(1e-6 * initial_disagreement, 1e-12);
}

double disagreement(const Eigen::VectorXd& x) {
    if (x.size() < 1) throw std::invalid_argument("disagreement: empty state");
    return x.maxCoeff() - x.minCoeff();
}

namespace {

// One classical 4th-order step over a fixed topology.
void rk4_step(Eigen::VectorXd& x, double dt, const WeightedGraph& g,
              const ProtocolConfig& cfg, bool* clamped) {
    const Eigen::VectorXd k1 = drift(x, g, cfg, clamped);
    const Eigen::VectorXd k2 = drift(x + 0.5 * dt * k1, g, cfg, clamped);
    const Eigen::VectorXd k3 = drift(x + 0.5 * dt * k2, g, cfg, clamped);
    const Eigen::VectorXd k4 = drift(x + dt * k3, g, cfg, clamped);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

SimulationTrace simulate(const SwitchedNetwork& net, const ProtocolConfig& cfg,
                         const Eigen::VectorXd& x0, const IntegratorConfig& icfg) {
    icfg.validate();
    const int n = net.vertex_count();
    if (x0.size() != n) throw std::invalid_argument("simulate: x0 dimension mismatch");
    cfg.validate(n);

    const SwitchingSignal signal = net.signal().snapped_to_grid(icfg.step);
    const FamilyStats stats = family_stats(net.family());
    const double delta_coef = std::sqrt(stats.lambda) * cfg.ptc.beta(stats.m_hi);
    const double alpha = x0.mean();

    SimulationTrace trace;
    trace.settle_tol = icfg.resolve_settle_tol(disagreement(x0));

    const auto steps =
        static_cast<long>(std::llround((icfg.horizon - icfg.t0) / icfg.step));
    Eigen::VectorXd x = x0;
    bool settled = false;

    for (long k = 0; k <= steps; ++k) {
        const double t = icfg.t0 + k * icfg.step;
        TraceDiagnostics diag;
        diag.v_maxmin = disagreement(x);
        diag.v_delta =
            delta_coef * (x - Eigen::VectorXd::Constant(n, alpha)).norm();
        diag.mean_state = x.mean();
        trace.times.push_back(t);
        trace.states.push_back(x);
        trace.sigma.push_back(signal.index_at(t + 0.5 * icfg.step));
        trace.diagnostics.push_back(diag);
        if (k == steps) break;

        if (!settled && diag.v_maxmin < trace.settle_tol) {
            settled = true;
            trace.settled_at = t;
        }
        if (settled) continue;

        const WeightedGraph& g = net.active_graph(t + 0.5 * icfg.step);
        double remaining = icfg.step;
        int iters = 0;
        while (remaining > 1e-12 * icfg.step) {
            const double v = disagreement(x);
            if (v < trace.settle_tol) {
                settled = true;
                trace.settled_at = t + (icfg.step - remaining);
                break;
            }
            const Eigen::VectorXd u = drift(x, g, cfg, &trace.clamp_event);
            const double amax = u.cwiseAbs().maxCoeff();
            if (amax == 0.0) break;
            // Cap the substep so no node moves more than ~20% of the current
            // disagreement; the sharp transient of the exponential families
            // is then traversed in O(log) substeps while time barely advances.
            double dt =
                std::min(remaining, 0.2 * std::max(v, trace.settle_tol) / amax);
            // Trial step with halving: the steep nonlinearities can blow up an
            // intermediate stage even under the movement cap, so a step is
            // rejected while it leaves the finite range or expands the
            // disagreement. dt -> 0 reproduces x, so this terminates.
            const double slack =
                1e-12 * v + 8e-15 * (1.0 + x.cwiseAbs().maxCoeff());
            Eigen::VectorXd candidate;
            bool accepted = false;
            for (int halvings = 0; halvings < 200; ++halvings) {
                candidate = x;
                bool clamp = false;
                rk4_step(candidate, dt, g, cfg, &clamp);
                if (candidate.allFinite() &&
                    (disagreement(candidate) <= v + slack || halvings >= 80)) {
                    trace.clamp_event = trace.clamp_event || clamp;
                    accepted = true;
                    break;
                }
                dt *= 0.5;
            }
            if (!accepted) {
                std::ostringstream msg;
                msg << "simulate: non-finite state; last valid time "
                    << t + (icfg.step - remaining);
                throw std::runtime_error(msg.str());
            }
            x = candidate;
            remaining -= dt;
            if (++iters > icfg.max_substeps) {
                std::ostringstream msg;
                msg << "simulate: integration stalled at t=" << t
                    << " (disagreement " << disagreement(x) << ")";
                throw std::runtime_error(msg.str());
            }
        }
    }
    return trace;
}

SimulationTrace simulate(const WeightedGraph& g, const ProtocolConfig& cfg,
                         const Eigen::VectorXd& x0, const IntegratorConfig& icfg) {
    SwitchingSignal constant({icfg.t0}, {0}, icfg.horizon - icfg.t0);
    return simulate(SwitchedNetwork({g}, std::move(constant)), cfg, x0, icfg);
}

std::optional<double> settling_time(const SimulationTrace& trace, double tol) {
    if (trace.times.empty()) throw std::invalid_argument("settling_time: empty trace");
    std::size_t first_ok = trace.times.size();
    for (std::size_t k = trace.times.size(); k-- > 0;) {
        if (trace.diagnostics[k].v_maxmin < tol)
            first_ok = k;
        else
            break;
    }
    if (first_ok == trace.times.size()) return std::nullopt;
    return trace.times[first_ok] - trace.times.front();
}

void write_trace_csv(const SimulationTrace& trace, std::ostream& out) {
    if (trace.states.empty()) throw std::invalid_argument("write_trace_csv: empty trace");
    const Eigen::Index n = trace.states.front().size();
    out << "t,sigma";
    for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i;
    out << ",V_maxmin,V_delta,mean\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
        put(trace.times[k]);
        out << ',' << trace.sigma[k];
        for (Eigen::Index i = 0; i < n; ++i) {
            out << ',';
            put(trace.states[k](i));
        }
        out << ',';
        put(trace.diagnostics[k].v_maxmin);
        out << ',';
        put(trace.diagnostics[k].v_delta);
        out << ',';
        put(trace.diagnostics[k].mean_state);
        out << '\n';
    }
}

SimulationTrace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace csv: missing header");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns < 6) throw std::runtime_error("trace csv: malformed header");
    const auto n = static_cast<Eigen::Index>(columns - 5);
    SimulationTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        auto next = [&]() -> double {
            if (!std::getline(ss, cell, ',')) throw std::runtime_error("trace csv: short row");
            return std::stod(cell);
        };
        trace.times.push_back(next());
        trace.sigma.push_back(static_cast<int>(next()));
        Eigen::VectorXd x(n);
        for (Eigen::Index i = 0; i < n; ++i) x(i) = next();
        trace.states.push_back(std::move(x));
        TraceDiagnostics diag;
        diag.v_maxmin = next();
        diag.v_delta = next();
        diag.mean_state = next();
        trace.diagnostics.push_back(diag);
    }
    if (trace.times.empty()) throw std::runtime_error("trace csv: no samples");
    return trace;
}

} // namespace ptc
