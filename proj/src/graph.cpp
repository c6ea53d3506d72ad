#include "ptc/graph.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ptc {

WeightedGraph::WeightedGraph(int n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)) {
    if (n_ < 1) throw std::invalid_argument("WeightedGraph: vertex count must be >= 1");
    std::set<std::pair<int, int>> seen;
    for (auto& e : edges_) {
        if (e.i < 0 || e.i >= n_ || e.j < 0 || e.j >= n_)
            throw std::invalid_argument("WeightedGraph: vertex index out of range");
        if (e.i == e.j) throw std::invalid_argument("WeightedGraph: self-loop");
        if (!(e.weight > 0.0))
            throw std::invalid_argument("WeightedGraph: weight must be positive");
        if (e.i > e.j) std::swap(e.i, e.j);
        if (!seen.insert({e.i, e.j}).second)
            throw std::invalid_argument("WeightedGraph: duplicate edge");
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
        return std::pair{a.i, a.j} < std::pair{b.i, b.j};
    });
}

Eigen::MatrixXd incidence_matrix(const WeightedGraph& g) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(g.vertex_count(), g.edge_count());
    int col = 0;
    for (const auto& e : g.edges()) {
        const double s = std::sqrt(e.weight);
        d(e.i, col) = s;
        d(e.j, col) = -s;
        ++col;
    }
    return d;
}

Eigen::MatrixXd laplacian(const WeightedGraph& g) {
    const int n = g.vertex_count();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) {
        q(e.i, e.i) += e.weight;
        q(e.j, e.j) += e.weight;
        q(e.i, e.j) -= e.weight;
        q(e.j, e.i) -= e.weight;
    }
    return q;
}

double algebraic_connectivity(const WeightedGraph& g) {
    if (!is_connected(g)) return 0.0;
    if (g.vertex_count() == 1) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian(g),
                                                          Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("algebraic_connectivity: eigensolver failed");
    return solver.eigenvalues()(1); // eigenvalues sorted ascending
}

bool is_connected(const WeightedGraph& g) {
    const int n = g.vertex_count();
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& e : g.edges()) {
        adj[static_cast<std::size_t>(e.i)].push_back(e.j);
        adj[static_cast<std::size_t>(e.j)].push_back(e.i);
    }
    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    visited[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[static_cast<std::size_t>(v)]) {
            if (!visited[static_cast<std::size_t>(w)]) {
                visited[static_cast<std::size_t>(w)] = 1;
                ++count;
                stack.push_back(w);
            }
        }
    }
    return count == n;
}

WeightedGraph proximity_graph(const std::vector<Eigen::Vector2d>& positions,
                              double range, double weight) {
    const int n = static_cast<int>(positions.size());
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((positions[static_cast<std::size_t>(j)] -
                 positions[static_cast<std::size_t>(i)]).norm() <= range)
                edges.push_back({i, j, weight});
    return WeightedGraph(n, std::move(edges));
}

WeightedGraph random_connected_graph(int n, SplitMix64& rng) {
    if (n < 2) throw std::invalid_argument("random_connected_graph: need n >= 2");
    const double p = std::min(1.0, 2.0 * std::log(n) / n);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.uniform() < p) edges.push_back({i, j, 1.0});
        WeightedGraph g(n, std::move(edges));
        if (is_connected(g)) return g;
    }
    throw std::runtime_error("random_connected_graph: rejection sampling failed");
}

WeightedGraph read_edge_list(std::istream& in) {
    std::string line;
    int n = -1;
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first)) continue;
        if (first == "n") {
            if (!(ss >> n)) throw std::runtime_error("edge list: bad header line");
            continue;
        }
        if (n < 0) throw std::runtime_error("edge list: missing `n <count>` header");
        Edge e;
        e.i = std::stoi(first);
        if (!(ss >> e.j >> e.weight))
            throw std::runtime_error("edge list: bad edge line: " + line);
        edges.push_back(e);
    }
    if (n < 0) throw std::runtime_error("edge list: missing `n <count>` header");
    return WeightedGraph(n, std::move(edges));
}

WeightedGraph read_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list file: " + path);
    return read_edge_list(in);
}

void write_edge_list(const WeightedGraph& g, std::ostream& out) {
    out << "n " << g.vertex_count() << "\n";
    out.precision(17);
    for (const auto& e : g.edges()) out << e.i << " " << e.j << " " << e.weight << "\n";
}

SwitchingSignal::SwitchingSignal(std::vector<double> breakpoints,
                                 std::vector<int> indices, double min_dwell)
    : breakpoints_(std::move(breakpoints)), indices_(std::move(indices)),
      min_dwell_(min_dwell) {
    if (breakpoints_.empty() || indices_.size() != breakpoints_.size())
        throw std::invalid_argument("SwitchingSignal: need one index per breakpoint");
    if (!(min_dwell_ > 0.0))
        throw std::invalid_argument("SwitchingSignal: min_dwell must be positive");
    for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
        // Small slack for dwell times that were snapped to a step grid.
        if (breakpoints_[k] - breakpoints_[k - 1] < min_dwell_ * (1.0 - 1e-9))
            throw std::invalid_argument("SwitchingSignal: dwell below min_dwell");
    }
    for (int idx : indices_)
        if (idx < 0) throw std::invalid_argument("SwitchingSignal: negative index");
}

int SwitchingSignal::index_at(double t) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it == breakpoints_.begin()) return indices_.front();
    return indices_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

int SwitchingSignal::max_index() const {
    return *std::max_element(indices_.begin(), indices_.end());
}

SwitchingSignal SwitchingSignal::snapped_to_grid(double step) const {
    const double t0 = breakpoints_.front();
    std::vector<double> bp;
    std::vector<int> idx;
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
        double t = t0 + std::round((breakpoints_[k] - t0) / step) * step;
        if (!bp.empty() && t <= bp.back()) {
            idx.back() = indices_[k]; // interval collapsed, keep latest index
            continue;
        }
        bp.push_back(t);
        idx.push_back(indices_[k]);
    }
    const double dwell = std::min(min_dwell_, step);
    return SwitchingSignal(std::move(bp), std::move(idx), dwell);
}

SwitchingSignal make_random_switching(int family_size, double t0, double horizon,
                                      double min_dwell, std::uint64_t seed) {
    if (family_size < 1) throw std::invalid_argument("make_random_switching: empty family");
    if (!(min_dwell > 0.0)) throw std::invalid_argument("make_random_switching: min_dwell");
    SplitMix64 rng(seed);
    std::vector<double> bp;
    std::vector<int> idx;
    double t = t0;
    while (t < horizon) {
        bp.push_back(t);
        idx.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(family_size))));
        t += rng.uniform(min_dwell, 3.0 * min_dwell);
    }
    return SwitchingSignal(std::move(bp), std::move(idx), min_dwell);
}

SwitchedNetwork::SwitchedNetwork(std::vector<WeightedGraph> family,
                                 SwitchingSignal signal)
    : family_(std::move(family)), signal_(std::move(signal)) {
    if (family_.empty()) throw std::invalid_argument("SwitchedNetwork: empty family");
    const int n = family_.front().vertex_count();
    for (const auto& g : family_) {
        if (g.vertex_count() != n)
            throw std::invalid_argument("SwitchedNetwork: mismatched vertex counts");
        if (!is_connected(g))
            throw std::invalid_argument("SwitchedNetwork: family member is disconnected");
    }
    if (signal_.max_index() >= static_cast<int>(family_.size()))
        throw std::invalid_argument("SwitchedNetwork: signal index out of family bounds");
}

} // namespace ptc
