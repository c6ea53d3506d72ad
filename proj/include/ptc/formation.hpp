#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

#include "ptc/protocol.hpp"
#include "ptc/sim.hpp"

namespace ptc {

/// Desired inter-agent displacements d*_ji = z*_j - z*_i, stored through a
/// reference placement z* (feasibility is equivalent to the existence of
/// such a placement).
class DisplacementSpec {
public:
    /// Builds the spec from a reference placement; feasible by construction.
    static DisplacementSpec from_reference(std::vector<Eigen::Vector2d> zstar);

    /// Reconstructs z* from pairwise requirements (j, i, d*_ji) by graph
    /// search from vertex 0 and verifies every given pair within 1e-9.
    /// Throws if the requirements are cyclically inconsistent or leave some
    /// vertex unconstrained.
    struct Requirement {
        int j = 0;
        int i = 0;
        Eigen::Vector2d dstar = Eigen::Vector2d::Zero();
    };
    static DisplacementSpec from_pairs(int n, const std::vector<Requirement>& pairs);

    int agent_count() const { return static_cast<int>(zstar_.size()); }
    Eigen::Vector2d dstar(int j, int i) const {
        return zstar_[static_cast<std::size_t>(j)] - zstar_[static_cast<std::size_t>(i)];
    }
    const std::vector<Eigen::Vector2d>& reference() const { return zstar_; }

private:
    explicit DisplacementSpec(std::vector<Eigen::Vector2d> zstar);
    std::vector<Eigen::Vector2d> zstar_;
};

/// Velocity field of the displacement protocols: the consensus drift applied
/// coordinatewise to the shifted errors z_j - z_i - d*_ji. Rows of z are
/// agent positions.
Eigen::MatrixX2d drift_formation(const Eigen::MatrixX2d& z, const WeightedGraph& g,
                                 const DisplacementSpec& spec,
                                 const ProtocolConfig& cfg, bool* clamped = nullptr);

struct FormationTrace {
    std::vector<double> times;
    std::vector<Eigen::MatrixX2d> positions;
    std::vector<double> formation_error; // max over present edges of |(z_j-z_i)-d*_ji|
    std::vector<bool> connected;
    bool ever_disconnected = false;
    bool clamp_event = false;
    std::optional<double> settled_at;
};

/// Integrates drift_formation with the proximity graph recomputed at every
/// integration step (state-dependent switching). Requires the initial graph
/// to be connected; if the graph later disconnects the run continues but is
/// flagged via ever_disconnected.
FormationTrace simulate_formation(const Eigen::MatrixX2d& z0,
                                  const DisplacementSpec& spec,
                                  const ProtocolConfig& cfg,
                                  const IntegratorConfig& icfg, double comm_range,
                                  double edge_weight = 1.0);

/// CSV: `t,x_0,y_0,...,x_{n-1},y_{n-1},formation_error,connected`.
void write_formation_csv(const FormationTrace& trace, std::ostream& out);

} // namespace ptc
