#include "ptc/formation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ptc {

DisplacementSpec::DisplacementSpec(std::vector<Eigen::Vector2d> zstar)
    : zstar_(std::move(zstar)) {
    if (zstar_.empty()) throw std::invalid_argument("DisplacementSpec: need n >= 1");
}

DisplacementSpec DisplacementSpec::from_reference(std::vector<Eigen::Vector2d> zstar) {
    return DisplacementSpec(std::move(zstar));
}

DisplacementSpec DisplacementSpec::from_pairs(int n,
                                              const std::vector<Requirement>& pairs) {
    if (n < 1) throw std::invalid_argument("DisplacementSpec: need n >= 1");
    std::vector<std::vector<std::pair<int, Eigen::Vector2d>>> adj(
        static_cast<std::size_t>(n));
    for (const auto& r : pairs) {
        if (r.i < 0 || r.i >= n || r.j < 0 || r.j >= n)
            throw std::invalid_argument("DisplacementSpec: vertex out of range");
        adj[static_cast<std::size_t>(r.i)].push_back({r.j, r.dstar});
        adj[static_cast<std::size_t>(r.j)].push_back({r.i, -r.dstar});
    }
    // Anchor vertex 0 at the origin and propagate.
    std::vector<Eigen::Vector2d> zstar(static_cast<std::size_t>(n),
                                       Eigen::Vector2d::Zero());
    std::vector<char> placed(static_cast<std::size_t>(n), 0);
    placed[0] = 1;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (const auto& [j, d] : adj[static_cast<std::size_t>(i)]) {
            if (!placed[static_cast<std::size_t>(j)]) {
                zstar[static_cast<std::size_t>(j)] =
                    zstar[static_cast<std::size_t>(i)] + d;
                placed[static_cast<std::size_t>(j)] = 1;
                stack.push_back(j);
            }
        }
    }
    for (char p : placed)
        if (!p)
            throw std::invalid_argument(
                "DisplacementSpec: requirements leave a vertex unconstrained");
    for (const auto& r : pairs) {
        const Eigen::Vector2d got = zstar[static_cast<std::size_t>(r.j)] -
                                    zstar[static_cast<std::size_t>(r.i)];
        if ((got - r.dstar).norm() > 1e-9)
            throw std::invalid_argument(
                "DisplacementSpec: infeasible (cycle-inconsistent) requirements");
    }
    return DisplacementSpec(std::move(zstar));
}

Eigen::MatrixX2d drift_formation(const Eigen::MatrixX2d& z, const WeightedGraph& g,
                                 const DisplacementSpec& spec,
                                 const ProtocolConfig& cfg, bool* clamped) {
    const int n = g.vertex_count();
    if (z.rows() != n || spec.agent_count() != n)
        throw std::invalid_argument("drift_formation: dimension mismatch");
    Eigen::MatrixX2d u = Eigen::MatrixX2d::Zero(n, 2);
    if (cfg.kind == ProtocolKind::EdgeWise) {
        for (const auto& e : g.edges()) {
            const double s = std::sqrt(e.weight);
            const Eigen::Vector2d shifted =
                z.row(e.j).transpose() - z.row(e.i).transpose() - spec.dstar(e.j, e.i);
            for (int c = 0; c < 2; ++c) {
                const double v = pt_map(s * shifted(c), cfg.ptc, clamped);
                u(e.i, c) += cfg.kappa(e.i) * s * v;
                u(e.j, c) -= cfg.kappa(e.j) * s * v;
            }
        }
    } else {
        Eigen::MatrixX2d agg = Eigen::MatrixX2d::Zero(n, 2);
        for (const auto& e : g.edges()) {
            const Eigen::Vector2d shifted =
                z.row(e.j).transpose() - z.row(e.i).transpose() - spec.dstar(e.j, e.i);
            agg.row(e.i) += e.weight * shifted.transpose();
            agg.row(e.j) -= e.weight * shifted.transpose();
        }
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < 2; ++c)
                u(i, c) = cfg.kappa(i) * pt_map(agg(i, c), cfg.ptc, clamped);
    }
    // Summed clamped edge terms can still overflow; keep the field finite.
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < 2; ++c) {
            if (u(i, c) > 1e308) {
                u(i, c) = 1e308;
                if (clamped) *clamped = true;
            } else if (u(i, c) < -1e308) {
                u(i, c) = -1e308;
                if (clamped) *clamped = true;
            }
        }
    return u;
}

namespace {

// The integrator works in the shifted variable x = z - z*, where the
// dynamics are an exact per-coordinate consensus and "in formation" means
// literal equality of rows. Positions z are reconstructed only for the
// proximity graph and the recorded trace.

Eigen::MatrixX2d shifted_from_positions(const Eigen::MatrixX2d& z,
                                        const DisplacementSpec& spec) {
    Eigen::MatrixX2d x(z.rows(), 2);
    for (Eigen::Index i = 0; i < z.rows(); ++i)
        x.row(i) =
            z.row(i) - spec.reference()[static_cast<std::size_t>(i)].transpose();
    return x;
}

Eigen::MatrixX2d positions_from_shifted(const Eigen::MatrixX2d& x,
                                        const DisplacementSpec& spec) {
    Eigen::MatrixX2d z(x.rows(), 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        z.row(i) =
            x.row(i) + spec.reference()[static_cast<std::size_t>(i)].transpose();
    return z;
}

std::vector<Eigen::Vector2d> to_points(const Eigen::MatrixX2d& z) {
    std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) pts[static_cast<std::size_t>(i)] = z.row(i);
    return pts;
}

// Consensus drift applied to each coordinate of the shifted variable.
Eigen::MatrixX2d shifted_drift(const Eigen::MatrixX2d& x, const WeightedGraph& g,
                               const ProtocolConfig& cfg, bool* clamped) {
    Eigen::MatrixX2d u(x.rows(), 2);
    for (int c = 0; c < 2; ++c)
        u.col(c) = drift(x.col(c), g, cfg, clamped);
    return u;
}

// Max-min disagreement of x, worst coordinate.
double shifted_disagreement(const Eigen::MatrixX2d& x) {
    return std::max(x.col(0).maxCoeff() - x.col(0).minCoeff(),
                    x.col(1).maxCoeff() - x.col(1).minCoeff());
}

// Connected-component labels of g; returns the number of components.
int component_labels(const WeightedGraph& g, std::vector<int>& label) {
    const int n = g.vertex_count();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& e : g.edges()) {
        adj[static_cast<std::size_t>(e.i)].push_back(e.j);
        adj[static_cast<std::size_t>(e.j)].push_back(e.i);
    }
    label.assign(static_cast<std::size_t>(n), -1);
    int count = 0;
    std::vector<int> stack;
    for (int start = 0; start < n; ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0) continue;
        label[static_cast<std::size_t>(start)] = count;
        stack.push_back(start);
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            for (int j : adj[static_cast<std::size_t>(i)])
                if (label[static_cast<std::size_t>(j)] < 0) {
                    label[static_cast<std::size_t>(j)] = count;
                    stack.push_back(j);
                }
        }
        ++count;
    }
    return count;
}

// Per-component disagreement of x, worst coordinate each.
std::vector<double> component_disagreements(const Eigen::MatrixX2d& x,
                                            const std::vector<int>& label,
                                            int count) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> lo(static_cast<std::size_t>(2 * count), inf);
    std::vector<double> hi(static_cast<std::size_t>(2 * count), -inf);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int k = label[static_cast<std::size_t>(i)];
        for (int c = 0; c < 2; ++c) {
            lo[static_cast<std::size_t>(2 * k + c)] =
                std::min(lo[static_cast<std::size_t>(2 * k + c)], x(i, c));
            hi[static_cast<std::size_t>(2 * k + c)] =
                std::max(hi[static_cast<std::size_t>(2 * k + c)], x(i, c));
        }
    }
    std::vector<double> dis(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k)
        dis[static_cast<std::size_t>(k)] =
            std::max(hi[static_cast<std::size_t>(2 * k)] - lo[static_cast<std::size_t>(2 * k)],
                     hi[static_cast<std::size_t>(2 * k + 1)] -
                         lo[static_cast<std::size_t>(2 * k + 1)]);
    return dis;
}

// Snaps every component whose disagreement is below tol to its componentwise
// mean. Members then hold bitwise-identical values, the intra-component
// drift is exactly zero (removable singularity of the map), and the
// finite-time endgame ends in one snap instead of an ever-stiffer tail of
// explicit steps. Moves each agent by less than tol and conserves component
// centroids.
void collapse_settled_components(Eigen::MatrixX2d& x, const std::vector<int>& label,
                                 int count, double tol) {
    const std::vector<double> dis = component_disagreements(x, label, count);
    for (int k = 0; k < count; ++k) {
        if (!(dis[static_cast<std::size_t>(k)] > 0.0) ||
            dis[static_cast<std::size_t>(k)] >= tol)
            continue;
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        int members = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (label[static_cast<std::size_t>(i)] == k) {
                mean += x.row(i).transpose();
                ++members;
            }
        mean /= static_cast<double>(members);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (label[static_cast<std::size_t>(i)] == k) x.row(i) = mean.transpose();
    }
}

Eigen::MatrixX2d rk4_shifted(const Eigen::MatrixX2d& x, double dt,
                             const WeightedGraph& g, const ProtocolConfig& cfg,
                             bool* clamp) {
    const Eigen::MatrixX2d k1 = shifted_drift(x, g, cfg, clamp);
    const Eigen::MatrixX2d k2 = shifted_drift(x + 0.5 * dt * k1, g, cfg, clamp);
    const Eigen::MatrixX2d k3 = shifted_drift(x + 0.5 * dt * k2, g, cfg, clamp);
    const Eigen::MatrixX2d k4 = shifted_drift(x + dt * k3, g, cfg, clamp);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double formation_error(const Eigen::MatrixX2d& x, const WeightedGraph& g) {
    double worst = 0.0;
    for (const auto& e : g.edges()) {
        const Eigen::Vector2d err = x.row(e.j).transpose() - x.row(e.i).transpose();
        worst = std::max(worst, err.norm());
    }
    return worst;
}

} // namespace

FormationTrace simulate_formation(const Eigen::MatrixX2d& z0,
                                  const DisplacementSpec& spec,
                                  const ProtocolConfig& cfg,
                                  const IntegratorConfig& icfg, double comm_range,
                                  double edge_weight) {
    icfg.validate();
    const int n = spec.agent_count();
    if (z0.rows() != n) throw std::invalid_argument("simulate_formation: z0 dimension");
    cfg.validate(n);
    {
        WeightedGraph g0 = proximity_graph(to_points(z0), comm_range, edge_weight);
        if (!is_connected(g0))
            throw std::invalid_argument(
                "simulate_formation: initial proximity graph is disconnected");
    }

    FormationTrace trace;
    Eigen::MatrixX2d x = shifted_from_positions(z0, spec);
    const double settle_tol = icfg.resolve_settle_tol(shifted_disagreement(x));
    const auto steps =
        static_cast<long>(std::llround((icfg.horizon - icfg.t0) / icfg.step));
    bool settled = false;

    for (long k = 0; k <= steps; ++k) {
        const double t = icfg.t0 + k * icfg.step;
        const Eigen::MatrixX2d z = positions_from_shifted(x, spec);
        WeightedGraph g = proximity_graph(to_points(z), comm_range, edge_weight);
        const bool conn = is_connected(g);
        trace.times.push_back(t);
        trace.positions.push_back(z);
        trace.formation_error.push_back(formation_error(x, g));
        trace.connected.push_back(conn);
        if (!conn) trace.ever_disconnected = true;
        if (k == steps) break;

        if (!settled && shifted_disagreement(x) < settle_tol) {
            settled = true;
            trace.settled_at = t;
        }
        if (settled) continue;

        // The topology g stays fixed within the sampling interval; inside it
        // the step is subdivided adaptively.
        std::vector<int> label;
        const int comp_count = component_labels(g, label);
        double remaining = icfg.step;
        int iters = 0;
        double dt_prev = icfg.step;
        while (remaining > 1e-12 * icfg.step) {
            collapse_settled_components(x, label, comp_count, settle_tol);
            const double v = shifted_disagreement(x);
            if (v < settle_tol) {
                settled = true;
                trace.settled_at = t + (icfg.step - remaining);
                break;
            }
            const std::vector<double> dis_before =
                component_disagreements(x, label, comp_count);
            const Eigen::MatrixX2d k1 = shifted_drift(x, g, cfg, &trace.clamp_event);
            if (k1.cwiseAbs().maxCoeff() == 0.0) break;
            // Step-size control by step doubling: one step of size dt is
            // compared against two steps of dt/2 and the step is rejected when
            // they disagree beyond a tolerance proportional to the current
            // disagreement, when the state leaves the finite range, or when
            // any component's disagreement expands beyond rounding
            // (componentwise max-min is non-increasing along exact
            // trajectories). Rejecting inaccurate steps keeps the explicit
            // scheme in its damped regime, so the state cannot hover on a
            // marginally stable oscillation that never contracts.
            double dt = std::min(remaining, 2.0 * dt_prev);
            const double atol = 1e-3 * std::max(v, settle_tol);
            const double abs_slack = 8e-15 * (1.0 + x.cwiseAbs().maxCoeff());
            Eigen::MatrixX2d candidate;
            bool accepted = false;
            bool clamp = false;
            double err = 0.0;
            for (int halvings = 0; halvings < 200; ++halvings) {
                clamp = false;
                const Eigen::MatrixX2d full = rk4_shifted(x, dt, g, cfg, &clamp);
                const Eigen::MatrixX2d half =
                    rk4_shifted(rk4_shifted(x, 0.5 * dt, g, cfg, &clamp), 0.5 * dt,
                                g, cfg, &clamp);
                candidate = half;
                bool ok = full.allFinite() && half.allFinite();
                if (ok) {
                    err = (full - half).cwiseAbs().maxCoeff();
                    ok = err <= atol;
                }
                if (ok) {
                    const std::vector<double> dis_after =
                        component_disagreements(candidate, label, comp_count);
                    for (int kc = 0; kc < comp_count && ok; ++kc)
                        ok = dis_after[static_cast<std::size_t>(kc)] <=
                             dis_before[static_cast<std::size_t>(kc)] *
                                     (1.0 + 1e-12) +
                                 abs_slack;
                }
                if (ok) {
                    accepted = true;
                    break;
                }
                dt *= 0.5;
            }
            if (!accepted) {
                std::ostringstream msg;
                msg << "simulate_formation: no acceptable substep; last valid time "
                    << t + (icfg.step - remaining);
                throw std::runtime_error(msg.str());
            }
            trace.clamp_event = trace.clamp_event || clamp;
            x = candidate;
            remaining -= dt;
            // Grow the next trial step faster when the error estimate left
            // plenty of margin (classical 1/5-power rule for a 4th-order pair).
            dt_prev = dt * std::min(4.0, std::max(1.0, 0.9 * std::pow(atol / std::max(err, 1e-300), 0.2)));
            if (++iters > icfg.max_substeps) {
                std::ostringstream msg;
                msg << "simulate_formation: integration stalled at t=" << t
                    << " (disagreement " << shifted_disagreement(x)
                    << ", components " << comp_count << ", dt " << dt
                    << ", remaining " << remaining << ")";
                throw std::runtime_error(msg.str());
            }
        }
    }
    return trace;
}

void write_formation_csv(const FormationTrace& trace, std::ostream& out) {
    if (trace.positions.empty())
        throw std::invalid_argument("write_formation_csv: empty trace");
    const Eigen::Index n = trace.positions.front().rows();
    out << "t";
    for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << i << ",y_" << i;
    out << ",formation_error,connected\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
        put(trace.times[k]);
        for (Eigen::Index i = 0; i < n; ++i) {
            out << ',';
            put(trace.positions[k](i, 0));
            out << ',';
            put(trace.positions[k](i, 1));
        }
        out << ',';
        put(trace.formation_error[k]);
        out << ',' << (trace.connected[k] ? 1 : 0) << '\n';
    }
}

} // namespace ptc
