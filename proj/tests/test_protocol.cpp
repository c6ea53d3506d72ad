#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "ptc/graph.hpp"
#include "ptc/protocol.hpp"
#include "ptc/rng.hpp"

using namespace ptc;

namespace {

Eigen::VectorXd random_state(SplitMix64& rng, int n, double lo = -10.0,
                             double hi = 10.0) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.uniform(lo, hi);
    return x;
}

} // namespace

TEST_CASE("pt_map examples and symmetry") {
    PtcFunction f = make_power_k(1.0, 1.0, 0.5, 1.5, 1.0); // Omega(z) = pi z (sqrt z + z^1.5)
    CHECK(pt_map(1.0, f) == doctest::Approx(2.0 * M_PI).epsilon(1e-10));
    CHECK(pt_map(-1.0, f) == doctest::Approx(-2.0 * M_PI).epsilon(1e-10));
    CHECK(pt_map(0.0, f) == 0.0);
    SplitMix64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const double e = rng.uniform(1e-3, 100.0);
        CHECK(pt_map(-e, f) == doctest::Approx(-pt_map(e, f)));
        CHECK(pt_map(e, f) * e == doctest::Approx(f.omega(e)).epsilon(1e-12));
    }
}

TEST_CASE("pt_map clamps instead of overflowing") {
    PtcFunction f = make_exp_sqrt();
    bool clamped = false;
    const double v = pt_map(1e6, f, &clamped);
    CHECK(clamped);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1e308));
}

TEST_CASE("pt_map is small near the origin") {
    // The power forms behave like |e|^p near 0, so the map vanishes
    // continuously but not faster than the smallest exponent allows.
    PtcFunction f = make_power_n(1.0, 2.0, 0.2, 1.1, 10);
    for (double e : {1e-12, 1e-9}) {
        CHECK(std::abs(pt_map(e, f)) < 1e-1);
        CHECK(std::abs(pt_map(-e, f)) < 1e-1);
    }
    CHECK(std::abs(pt_map(1e-305, f)) == 0.0);
}

TEST_CASE("two-node edgewise drift") {
    WeightedGraph g(2, {{0, 1, 1.0}});
    PtcFunction f = make_power_k(1.0, 1.0, 0.5, 1.5, 1.0);
    ProtocolConfig cfg = ProtocolConfig::uniform(ProtocolKind::EdgeWise, 2, 1.0, f);
    Eigen::VectorXd x(2);
    x << 1.0, 0.0;
    Eigen::VectorXd u = drift_edgewise(x, g, cfg);
    // x_j - x_i = -1 at node 0, so u_0 = pt_map(-1) = -2pi.
    CHECK(u(0) == doctest::Approx(-2.0 * M_PI).epsilon(1e-10));
    CHECK(u(1) == doctest::Approx(2.0 * M_PI).epsilon(1e-10));
}

TEST_CASE("edgewise drift equals -D F(D^T x)") {
    SplitMix64 rng(21);
    PtcFunction f = make_power_n(1.0, 2.0, 0.2, 1.1, 8);
    for (int trial = 0; trial < 30; ++trial) {
        WeightedGraph g = random_connected_graph(8, rng);
        ProtocolConfig cfg = ProtocolConfig::uniform(ProtocolKind::EdgeWise, 8,
                                                     rng.uniform(0.5, 3.0), f);
        Eigen::VectorXd x = random_state(rng, 8);
        Eigen::MatrixXd d = incidence_matrix(g);
        Eigen::VectorXd y = d.transpose() * x;
        Eigen::VectorXd fy(y.size());
        for (Eigen::Index k = 0; k < y.size(); ++k) fy(k) = pt_map(y(k), f);
        Eigen::VectorXd expected = -cfg.kappa(0) * (d * fy);
        Eigen::VectorXd u = drift_edgewise(x, g, cfg);
        CHECK((u - expected).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, u.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("nodewise drift equals kappa .* F(-Qx)") {
    SplitMix64 rng(22);
    PtcFunction f = make_exp_p(0.5);
    for (int trial = 0; trial < 30; ++trial) {
        WeightedGraph g = random_connected_graph(7, rng);
        ProtocolConfig cfg = ProtocolConfig::uniform(ProtocolKind::NodeWise, 7,
                                                     rng.uniform(0.5, 3.0), f);
        Eigen::VectorXd x = random_state(rng, 7, -2.0, 2.0);
        Eigen::VectorXd e = -(laplacian(g) * x);
        Eigen::VectorXd u = drift_nodewise(x, g, cfg);
        for (int i = 0; i < 7; ++i)
            CHECK(u(i) == doctest::Approx(cfg.kappa(i) * pt_map(e(i), f)).epsilon(1e-9));
    }
}

TEST_CASE("edgewise drift conserves the mean") {
    SplitMix64 rng(23);
    PtcFunction f = make_power_n(1.0, 2.0, 0.2, 1.1, 10);
    for (int trial = 0; trial < 50; ++trial) {
        WeightedGraph g = random_connected_graph(10, rng);
        ProtocolConfig cfg = ProtocolConfig::uniform(ProtocolKind::EdgeWise, 10, 2.0, f);
        Eigen::VectorXd x = random_state(rng, 10, -25.0, 25.0);
        Eigen::VectorXd u = drift_edgewise(x, g, cfg);
        CHECK(std::abs(u.sum()) < 1e-9 * std::max(1.0, u.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("drift pushes extremes inward") {
    SplitMix64 rng(24);
    for (ProtocolKind kind : {ProtocolKind::EdgeWise, ProtocolKind::NodeWise}) {
        PtcFunction f = kind == ProtocolKind::EdgeWise
                            ? make_power_n(1.0, 2.0, 0.2, 1.1, 6)
                            : make_exp_p(0.5);
        for (int trial = 0; trial < 50; ++trial) {
            WeightedGraph g = random_connected_graph(6, rng);
            ProtocolConfig cfg = ProtocolConfig::uniform(kind, 6, 1.0, f);
            Eigen::VectorXd x = random_state(rng, 6, -5.0, 5.0);
            Eigen::VectorXd u = drift(x, g, cfg);
            int imax, imin;
            x.maxCoeff(&imax);
            x.minCoeff(&imin);
            CHECK(u(imax) <= 1e-12);
            CHECK(u(imin) >= -1e-12);
        }
    }
}

TEST_CASE("drift vanishes at consensus") {
    SplitMix64 rng(25);
    WeightedGraph g = random_connected_graph(5, rng);
    PtcFunction f = make_exp_sqrt();
    for (ProtocolKind kind : {ProtocolKind::EdgeWise, ProtocolKind::NodeWise}) {
        ProtocolConfig cfg = ProtocolConfig::uniform(kind, 5, 3.0, f);
        Eigen::VectorXd x = Eigen::VectorXd::Constant(5, 4.2);
        CHECK(drift(x, g, cfg).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("family statistics") {
    WeightedGraph p3(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    WeightedGraph k3(3, {{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0}});
    FamilyStats stats = family_stats({p3, k3});
    CHECK(stats.lambda == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(stats.m_lo == 2);
    CHECK(stats.m_hi == 3);
    WeightedGraph disconnected(3, {{0, 1, 1.0}});
    CHECK_THROWS_AS(family_stats({p3, disconnected}), std::invalid_argument);
}

TEST_CASE("gain rules reproduce the reference arithmetic") {
    SUBCASE("switching rule with the power family") {
        PtcFunction f = make_power_n(1.0, 2.0, 0.2, 1.1, 10);
        FamilyStats stats{0.2279, 10, 13};
        // beta == 1 so kappa = 1 / (lambda T_c).
        CHECK(gain_theorem2(stats, f, 1.0) ==
              doctest::Approx(1.0 / 0.2279).epsilon(1e-12));
        CHECK(gain_theorem2(stats, f, 2.0) ==
              doctest::Approx(0.5 / 0.2279).epsilon(1e-12));
    }
    SUBCASE("static rule with exp_p") {
        PtcFunction f = make_exp_p(0.5);
        // beta(n) = 1/n, d = 1: kappa = n / (lambda2 T_c).
        CHECK(gain_theorem3(0.27935, 10, f, 1.0) ==
              doctest::Approx(10.0 / 0.27935).epsilon(1e-12));
        CHECK(gain_theorem3(0.27935, 10, f, 0.5) ==
              doctest::Approx(20.0 / 0.27935).epsilon(1e-12));
    }
    SUBCASE("switching rule uses beta at the edge-count extremes") {
        PtcFunction f = make_exp_p(1.0); // beta(m) = 1/m, d = 1
        FamilyStats stats{0.5, 4, 8};
        // kappa = (1/4) / (0.5 * (1/8)^2 * 1) = 32.
        CHECK(gain_theorem2(stats, f, 1.0) == doctest::Approx(32.0).epsilon(1e-12));
    }
}

TEST_CASE("protocol config validation") {
    PtcFunction f = make_exp_p(0.5);
    ProtocolConfig cfg = ProtocolConfig::uniform(ProtocolKind::EdgeWise, 3, 1.0, f);
    CHECK_NOTHROW(cfg.validate(3));
    CHECK_THROWS_AS(cfg.validate(4), std::invalid_argument);
    cfg.kappa(1) = 0.0;
    CHECK_THROWS_AS(cfg.validate(3), std::invalid_argument);
    CHECK_THROWS_AS(ProtocolConfig::uniform(ProtocolKind::EdgeWise, 3, -1.0, f).validate(3),
                    std::invalid_argument);
}
