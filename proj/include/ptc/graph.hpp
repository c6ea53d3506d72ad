#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "ptc/rng.hpp"

namespace ptc {

struct Edge {
    int i = 0;
    int j = 0;
    double weight = 1.0;
};

/// Undirected weighted graph over vertices 0..n-1. No self-loops, no
/// duplicate unordered pairs, strictly positive weights; the constructor
/// validates and canonicalizes edges (i < j, sorted lexicographically) so
/// derived matrices are bit-reproducible across runs.
class WeightedGraph {
public:
    explicit WeightedGraph(int n, std::vector<Edge> edges = {});

    int vertex_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }

private:
    int n_;
    std::vector<Edge> edges_;
};

/// Vertex-by-edge incidence matrix D with +sqrt(a_ij) at the smaller
/// vertex index and -sqrt(a_ij) at the larger. Columns follow the
/// canonical edge order. Satisfies 1^T D = 0.
Eigen::MatrixXd incidence_matrix(const WeightedGraph& g);

/// Graph Laplacian Q = D D^T (symmetric positive semidefinite, zero row sums).
Eigen::MatrixXd laplacian(const WeightedGraph& g);

/// Algebraic connectivity: second-smallest Laplacian eigenvalue.
/// Returns 0 for disconnected graphs.
double algebraic_connectivity(const WeightedGraph& g);

bool is_connected(const WeightedGraph& g);

/// Unit-disk graph: edge (i,j) present iff |p_i - p_j| <= range, all edges
/// carrying the same weight.
WeightedGraph proximity_graph(const std::vector<Eigen::Vector2d>& positions,
                              double range, double weight = 1.0);

/// Erdos-Renyi with edge probability 2 ln(n)/n and unit weights,
/// rejection-sampled until connected.
WeightedGraph random_connected_graph(int n, SplitMix64& rng);

/// Edge-list text format: header line `n <count>`, then one `i j a_ij` line
/// per edge; `#` starts a comment.
WeightedGraph read_edge_list(std::istream& in);
WeightedGraph read_edge_list_file(const std::string& path);
void write_edge_list(const WeightedGraph& g, std::ostream& out);

/// Piecewise-constant switching signal over a graph family. Breakpoints are
/// strictly increasing, consecutive ones at least min_dwell apart (excludes
/// Zeno behavior); indices[k] is active on [breakpoints[k], breakpoints[k+1]).
class SwitchingSignal {
public:
    SwitchingSignal(std::vector<double> breakpoints, std::vector<int> indices,
                    double min_dwell);

    int index_at(double t) const;
    double start_time() const { return breakpoints_.front(); }
    double min_dwell() const { return min_dwell_; }
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<int>& indices() const { return indices_; }

    /// Copy with every breakpoint moved to the nearest multiple of `step`
    /// (relative to the first breakpoint). Collapses intervals that snap to
    /// zero length.
    SwitchingSignal snapped_to_grid(double step) const;

    int max_index() const;

private:
    std::vector<double> breakpoints_;
    std::vector<int> indices_;
    double min_dwell_;
};

/// Generates a seeded random signal with dwell times uniform in
/// [min_dwell, 3*min_dwell] and indices uniform over the family.
SwitchingSignal make_random_switching(int family_size, double t0, double horizon,
                                      double min_dwell, std::uint64_t seed);

/// Graph family plus switching signal. Every member must be connected and
/// share the same vertex count.
class SwitchedNetwork {
public:
    SwitchedNetwork(std::vector<WeightedGraph> family, SwitchingSignal signal);

    const std::vector<WeightedGraph>& family() const { return family_; }
    const SwitchingSignal& signal() const { return signal_; }
    int vertex_count() const { return family_.front().vertex_count(); }
    const WeightedGraph& active_graph(double t) const {
        return family_[static_cast<std::size_t>(signal_.index_at(t))];
    }

private:
    std::vector<WeightedGraph> family_;
    SwitchingSignal signal_;
};

} // namespace ptc
