#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <set>
#include <sstream>

#include "ptc/graph.hpp"
#include "ptc/rng.hpp"

using namespace ptc;

namespace {

WeightedGraph fuzz_graph(SplitMix64& rng, int max_n, bool weights_one = false) {
    const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n - 1)));
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (rng.uniform() < 0.5) {
                const double w = weights_one ? 1.0 : rng.uniform(1e-3, 10.0);
                edges.push_back({i, j, w});
            }
    return WeightedGraph(n, std::move(edges));
}

WeightedGraph fuzz_connected_graph(SplitMix64& rng, int max_n) {
    for (;;) {
        WeightedGraph g = fuzz_graph(rng, max_n);
        if (is_connected(g)) return g;
    }
}

// Characteristic polynomial via Faddeev-LeVerrier; independent of the
// eigensolver (uses only matrix products and traces). Returns monic
// coefficients c[0..n] with p(x) = sum c[k] x^k, c[n] = 1.
std::vector<double> char_poly(const Eigen::MatrixXd& a) {
    const auto n = a.rows();
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    c[static_cast<std::size_t>(n)] = 1.0;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    double ck = 1.0;
    for (Eigen::Index k = 1; k <= n; ++k) {
        m = a * (m + ck * Eigen::MatrixXd::Identity(n, n));
        ck = -m.trace() / static_cast<double>(k);
        c[static_cast<std::size_t>(n - k)] = ck;
    }
    return c;
}

double poly_eval(const std::vector<double>& c, double x) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
    return acc;
}

// Magnitude of the largest term, for relative tolerance at x.
double poly_scale(const std::vector<double>& c, double x) {
    double scale = 1.0, pw = 1.0;
    for (double ck : c) {
        scale = std::max(scale, std::abs(ck * pw));
        pw *= x;
    }
    return scale;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
    std::vector<double> d(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) d[k - 1] = c[k] * static_cast<double>(k);
    return d;
}

double bisect_root(const std::vector<double>& c, double lo, double hi) {
    double flo = poly_eval(c, lo);
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = poly_eval(c, mid);
        if ((flo <= 0.0) == (fmid <= 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// All real roots of a polynomial with only real roots, by recursive
// interlacing with the derivative's roots.
std::vector<double> real_roots(const std::vector<double>& c, double lo, double hi) {
    if (c.size() == 2) return {-c[0] / c[1]};
    std::vector<double> crit = real_roots(poly_derivative(c), lo, hi);
    std::vector<double> pts{lo};
    pts.insert(pts.end(), crit.begin(), crit.end());
    pts.push_back(hi);
    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i], b = pts[i + 1];
        const double fa = poly_eval(c, a), fb = poly_eval(c, b);
        if ((fa <= 0.0) != (fb <= 0.0)) {
            roots.push_back(bisect_root(c, a, b));
        } else if (i + 1 < pts.size() - 1 &&
                   std::abs(fb) <= 1e-9 * poly_scale(c, b)) {
            roots.push_back(b); // multiple root sitting at a critical point
        }
    }
    return roots;
}

} // namespace

TEST_CASE("incidence matrix examples") {
    SUBCASE("single edge with weight 4") {
        WeightedGraph g(2, {{0, 1, 4.0}});
        Eigen::MatrixXd d = incidence_matrix(g);
        REQUIRE(d.rows() == 2);
        REQUIRE(d.cols() == 1);
        CHECK(d(0, 0) == doctest::Approx(2.0));
        CHECK(d(1, 0) == doctest::Approx(-2.0));
    }
    SUBCASE("empty edge set") {
        WeightedGraph g(3);
        Eigen::MatrixXd d = incidence_matrix(g);
        CHECK(d.rows() == 3);
        CHECK(d.cols() == 0);
    }
    SUBCASE("path graph, unit weights") {
        WeightedGraph g(3, {{0, 1, 1.0}, {1, 2, 1.0}});
        Eigen::MatrixXd d = incidence_matrix(g);
        Eigen::MatrixXd expected(3, 2);
        expected << 1, 0, -1, 1, 0, -1;
        CHECK((d - expected).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    }
}

TEST_CASE("laplacian examples") {
    SUBCASE("path P3") {
        Eigen::MatrixXd q = laplacian(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}));
        Eigen::MatrixXd expected(3, 3);
        expected << 1, -1, 0, -1, 2, -1, 0, -1, 1;
        CHECK((q - expected).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("edgeless graph") {
        CHECK(laplacian(WeightedGraph(4)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("complete graph K3") {
        Eigen::MatrixXd q =
            laplacian(WeightedGraph(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}}));
        Eigen::MatrixXd expected(3, 3);
        expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
        CHECK((q - expected).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("algebraic connectivity examples") {
    CHECK(algebraic_connectivity(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}})) ==
          doctest::Approx(1.0).epsilon(1e-10));
    for (int n = 3; n <= 6; ++n) {
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
        CHECK(algebraic_connectivity(WeightedGraph(n, edges)) ==
              doctest::Approx(static_cast<double>(n)).epsilon(1e-10));
    }
    // Two disjoint edges: disconnected, so 0 by contract.
    CHECK(algebraic_connectivity(WeightedGraph(4, {{0, 1, 1.0}, {2, 3, 1.0}})) == 0.0);
}

TEST_CASE("connectivity examples") {
    CHECK(is_connected(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}})));
    CHECK_FALSE(is_connected(WeightedGraph(4, {{0, 1, 1.0}, {2, 3, 1.0}})));
    CHECK(is_connected(WeightedGraph(1)));
}

TEST_CASE("proximity graph examples") {
    using V = Eigen::Vector2d;
    CHECK(proximity_graph({V(0, 0), V(0.3, 0)}, 0.5).edge_count() == 1);
    CHECK(proximity_graph({V(0, 0), V(1, 0)}, 0.5).edge_count() == 0);
    WeightedGraph g = proximity_graph({V(0, 0), V(0.4, 0), V(0.8, 0)}, 0.5);
    REQUIRE(g.edge_count() == 2);
    CHECK(g.edges()[0].i == 0);
    CHECK(g.edges()[0].j == 1);
    CHECK(g.edges()[1].i == 1);
    CHECK(g.edges()[1].j == 2);
}

TEST_CASE("graph invariant validation") {
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 1.0}, {1, 0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 1, 0.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(2, {{0, 2, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(WeightedGraph(0), std::invalid_argument);
}

TEST_CASE("incidence rows sum to zero and Q = D D^T on fuzzed graphs") {
    SplitMix64 rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        WeightedGraph g = fuzz_graph(rng, 20);
        Eigen::MatrixXd d = incidence_matrix(g);
        if (d.cols() > 0)
            CHECK(d.colwise().sum().cwiseAbs().maxCoeff() < 1e-12);
        CHECK((laplacian(g) - d * d.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("Rayleigh bound on random connected graphs") {
    SplitMix64 rng(202);
    for (int trial = 0; trial < 10; ++trial) {
        WeightedGraph g = fuzz_connected_graph(rng, 10);
        const int n = g.vertex_count();
        Eigen::MatrixXd q = laplacian(g);
        const double lambda2 = algebraic_connectivity(g);
        for (int s = 0; s < 100; ++s) {
            Eigen::VectorXd x(n);
            for (int i = 0; i < n; ++i) x(i) = rng.uniform(-1.0, 1.0);
            x.array() -= x.mean(); // project onto 1-perp
            if (x.norm() < 1e-12) continue;
            CHECK(x.dot(q * x) >= (lambda2 - 1e-8) * x.squaredNorm());
        }
    }
}

TEST_CASE("lambda2 positive iff connected") {
    SplitMix64 rng(303);
    for (int trial = 0; trial < 100; ++trial) {
        WeightedGraph g = fuzz_graph(rng, 12);
        const bool conn = is_connected(g);
        const double lambda2 = algebraic_connectivity(g);
        if (conn)
            CHECK(lambda2 > 1e-12);
        else
            CHECK(lambda2 == 0.0);
    }
}

TEST_CASE("eigenvalues agree with the characteristic-polynomial oracle, n <= 5") {
    SplitMix64 rng(404);
    for (int trial = 0; trial < 40; ++trial) {
        WeightedGraph g = fuzz_graph(rng, 5);
        Eigen::MatrixXd q = laplacian(g);
        const auto coeffs = char_poly(q);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q, Eigen::EigenvaluesOnly);
        const Eigen::VectorXd evals = solver.eigenvalues();
        const double hi = 2.0 * q.diagonal().maxCoeff() + 1.0;
        // Every eigenvalue must be a root of the independent polynomial ...
        for (Eigen::Index i = 0; i < evals.size(); ++i)
            CHECK(std::abs(poly_eval(coeffs, evals(i))) <=
                  1e-8 * poly_scale(coeffs, std::max(1.0, evals(i))));
        // ... and every located root must be near an eigenvalue.
        for (double r : real_roots(coeffs, -1.0, hi)) {
            double best = 1e300;
            for (Eigen::Index i = 0; i < evals.size(); ++i)
                best = std::min(best, std::abs(evals(i) - r));
            CHECK(best < 1e-6 * std::max(1.0, hi));
        }
    }
}

TEST_CASE("norm comparison inequality") {
    SplitMix64 rng(505);
    auto pnorm = [](const std::vector<double>& x, double p) {
        double acc = 0.0;
        for (double xi : x) acc += std::pow(std::abs(xi), p);
        return std::pow(acc, 1.0 / p);
    };
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(8));
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& xi : x) xi = rng.uniform(-5.0, 5.0);
        const double r = rng.uniform(0.1, 3.0);
        const double s = r + rng.uniform(0.1, 3.0);
        const double nr = pnorm(x, r), ns = pnorm(x, s);
        CHECK(ns <= nr * (1.0 + 1e-12));
        CHECK(nr <= std::pow(n, 1.0 / r - 1.0 / s) * ns * (1.0 + 1e-12));
    }
}

TEST_CASE("edge list round trip") {
    WeightedGraph g(4, {{0, 1, 2.5}, {1, 3, 0.75}});
    std::stringstream ss;
    write_edge_list(g, ss);
    WeightedGraph back = read_edge_list(ss);
    REQUIRE(back.vertex_count() == 4);
    REQUIRE(back.edge_count() == 2);
    CHECK(back.edges()[0].weight == doctest::Approx(2.5));
    CHECK(back.edges()[1].weight == doctest::Approx(0.75));
}

TEST_CASE("edge list parses comments and rejects malformed input") {
    std::stringstream ok("# header comment\nn 3\n0 1 1.0 # inline\n1 2 2.0\n");
    WeightedGraph g = read_edge_list(ok);
    CHECK(g.edge_count() == 2);
    std::stringstream missing_header("0 1 1.0\n");
    CHECK_THROWS_AS(read_edge_list(missing_header), std::runtime_error);
    std::stringstream bad_line("n 3\n0 1\n");
    CHECK_THROWS_AS(read_edge_list(bad_line), std::runtime_error);
}

TEST_CASE("switching signal invariants") {
    CHECK_THROWS_AS(SwitchingSignal({0.0, 0.05}, {0, 1}, 0.1), std::invalid_argument);
    SwitchingSignal sig({0.0, 0.5, 1.0}, {0, 1, 0}, 0.5);
    CHECK(sig.index_at(0.0) == 0);
    CHECK(sig.index_at(0.49) == 0);
    CHECK(sig.index_at(0.5) == 1);
    CHECK(sig.index_at(5.0) == 0);
}

TEST_CASE("snapping aligns breakpoints to the grid") {
    SwitchingSignal sig({0.0, 0.1234, 0.4567}, {0, 1, 2}, 0.1);
    SwitchingSignal snapped = sig.snapped_to_grid(0.01);
    for (double bp : snapped.breakpoints()) {
        const double offset = bp / 0.01;
        CHECK(std::abs(offset - std::round(offset)) < 1e-9);
    }
    CHECK(snapped.indices() == std::vector<int>{0, 1, 2});
}

TEST_CASE("random switching is reproducible and respects dwell bounds") {
    SwitchingSignal a = make_random_switching(3, 0.0, 1.0, 0.1, 7);
    SwitchingSignal b = make_random_switching(3, 0.0, 1.0, 0.1, 7);
    CHECK(a.breakpoints() == b.breakpoints());
    CHECK(a.indices() == b.indices());
    const auto intervals = a.breakpoints().size();
    CHECK(intervals >= 3);
    CHECK(intervals <= 10);
    for (std::size_t k = 1; k < a.breakpoints().size(); ++k) {
        const double dwell = a.breakpoints()[k] - a.breakpoints()[k - 1];
        CHECK(dwell >= 0.1);
        CHECK(dwell <= 0.3);
    }
    SwitchingSignal single = make_random_switching(1, 0.0, 1.0, 0.1, 9);
    for (int idx : single.indices()) CHECK(idx == 0);
}

TEST_CASE("switched network rejects invalid families") {
    WeightedGraph connected(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    WeightedGraph disconnected(3, {{0, 1, 1.0}});
    SwitchingSignal sig({0.0}, {0}, 1.0);
    CHECK_THROWS_AS(SwitchedNetwork({connected, disconnected}, sig),
                    std::invalid_argument);
    WeightedGraph other_n(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
    CHECK_THROWS_AS(SwitchedNetwork({connected, other_n}, sig), std::invalid_argument);
    SwitchingSignal out_of_range({0.0, 1.0}, {0, 1}, 1.0);
    CHECK_THROWS_AS(SwitchedNetwork({connected}, out_of_range), std::invalid_argument);
}

TEST_CASE("path graph closed-form lambda2") {
    std::vector<Edge> edges;
    for (int i = 0; i < 19; ++i) edges.push_back({i, i + 1, 1.0});
    const double lambda2 = algebraic_connectivity(WeightedGraph(20, edges));
    CHECK(lambda2 == doctest::Approx(2.0 * (1.0 - std::cos(M_PI / 20.0))).epsilon(1e-10));
}
