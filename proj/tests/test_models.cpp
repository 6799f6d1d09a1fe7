#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chemolab/chemolab.hpp>

#include <cmath>
#include <vector>

using namespace chemolab;

TEST_CASE("holling response") {
    CHECK(holling_response(0.0, 3.0, 2.0) == 0.0);
    CHECK(holling_response(1.0, 2.0, 1.0) == doctest::Approx(1.0));
    CHECK(holling_response(0.5, 1.0, 0.0) == doctest::Approx(0.5)); // b = 0: f(s) = a s

    // strictly increasing on s > -1/b, negative on (-1/b, 0)
    double prev = holling_response(-0.4, 2.0, 2.0);
    for (double s = -0.35; s < 2.0; s += 0.05) {
        const double cur = holling_response(s, 2.0, 2.0);
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK(holling_response(-0.25, 2.0, 2.0) < 0.0);

    CHECK_THROWS_AS(holling_response(-0.5, 1.0, 2.0), std::domain_error); // pole s = -1/b
}

TEST_CASE("nondimensionalization") {
    SUBCASE("direct substitution") {
        const DimensionlessParams q =
            nondimensionalize(DimensionalParams{2.0, 0.5, 1.0, 0.25, 3.0, 2.0});
        CHECK(q.a == doctest::Approx(4.0));
        CHECK(q.b == doctest::Approx(0.5));
        CHECK(q.m == doctest::Approx(3.0));
        CHECK(q.r == doctest::Approx(1.0));
    }
    SUBCASE("identity scaling") {
        const DimensionlessParams q =
            nondimensionalize(DimensionalParams{1.0, 1.0, 1.0, 1.0, 1.0, 0.0});
        CHECK(q.a == 1.0);
        CHECK(q.b == 1.0);
        CHECK(q.m == 1.0);
        CHECK(q.r == 0.0);
    }
    SUBCASE("invalid parameters rejected") {
        CHECK_THROWS_AS(nondimensionalize(DimensionalParams{0.0, 1, 1, 1, 1, 0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(nondimensionalize(DimensionalParams{1, 1, 1, 1, 1, -2.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("rescaled dimensional chemostat matches the dimensionless integration") {
    // integrate the dimensional mass-balance equations directly through the
    // generic interface and compare under s = S/C, x = X/C, t = D T
    const DimensionalParams dp{2.0, 0.5, 1.0, 0.25, 3.0, 2.0};
    const DimensionlessParams q = nondimensionalize(dp); // a=4 b=0.5 m=3 r=1

    auto dim_rhs = [&](const StateVec& cur, const StateVec& del) {
        const double S = cur[0], X = cur[1];
        const double Sd = del[0], Xd = del[1];
        const double fS = dp.A * S / (1.0 + dp.A * dp.B * S);
        const double fSd = dp.A * Sd / (1.0 + dp.A * dp.B * Sd);
        return StateVec::planar(dp.C * dp.D - dp.D * S - fS * X,
                                dp.M * std::exp(-dp.D * dp.R) * fSd * Xd - dp.D * X);
    };

    SolverOptions tight;
    tight.abs_tol = tight.rel_tol = 1e-10;

    const double s0 = 0.5, x0 = 0.25, t_end = 5.0;
    const History phi_dim =
        History::constant(StateVec::planar(dp.C * s0, dp.C * x0), dp.R);
    const Trajectory dim_traj =
        integrate_rhs(dim_rhs, 2, dp.R, phi_dim, t_end / dp.D, tight);

    const History phi = History::constant(StateVec::planar(s0, x0), q.r);
    const Trajectory traj = integrate(Model::chemostat(q), phi, t_end, tight);

    double sup = 0.0;
    for (int i = 0; i <= 400; ++i) {
        const double t = t_end * (i / 400.0);
        const StateVec v = traj.eval(t);
        const StateVec V = dim_traj.eval(t / dp.D);
        sup = std::max(sup, std::abs(v[0] - V[0] / dp.C));
        sup = std::max(sup, std::abs(v[1] - V[1] / dp.C));
    }
    CHECK(sup <= 1e-6);
}

TEST_CASE("right-hand sides") {
    SUBCASE("chemostat at its survival equilibrium annihilates the field") {
        const DimensionlessParams p{2.0, 0.5, 3.0, 1.0};
        const Model m = Model::chemostat(p);
        StateVec survival;
        for (const Equilibrium& eq : equilibria(m))
            if (eq.kind == Equilibrium::Kind::Survival) survival = eq.value;
        REQUIRE(survival.size() == 2);
        const StateVec f = rhs(m, survival, survival);
        CHECK(std::abs(f[0]) < 1e-12);
        CHECK(std::abs(f[1]) < 1e-12);
    }
    SUBCASE("wright with a zero current state returns minus the delayed state") {
        const Model w = Model::wright(1.0);
        const StateVec f = rhs(w, StateVec::scalar(0.0), StateVec::scalar(0.3));
        CHECK(f[0] == doctest::Approx(-0.3));
    }
    SUBCASE("chemo-logistic substitution") {
        const Model m = Model::chemo_logistic(2.0, 2.0, 0.0);
        const StateVec f = rhs(m, StateVec::scalar(1.0), StateVec::scalar(1.0));
        CHECK(f[0] == doctest::Approx(1.0)); // 2*2*1 - 1 - 2*1*1
    }
    SUBCASE("dimension mismatch is rejected") {
        const Model m = Model::chemostat(DimensionlessParams{1, 0, 2, 0});
        CHECK_THROWS_AS(rhs(m, StateVec::scalar(1.0), StateVec::scalar(1.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("hutchinson rearranged and product forms agree pointwise") {
    const DimensionlessParams p{1.5, 0.0, 2.0, 0.7};
    const Model m = Model::hutchinson(p.a, p.m, p.r);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(0.0, 3.0);
        const double xd = rng.uniform(0.0, 3.0);
        const double f1 = rhs(m, StateVec::scalar(x), StateVec::scalar(xd))[0];
        const double f2 = hutchinson_product_form(p, x, xd);
        CHECK(f1 == doctest::Approx(f2).epsilon(1e-13));
    }
    CHECK_THROWS_AS(hutchinson_product_form(DimensionlessParams{1, 0, 1, 0}, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("hyperbolic reduction") {
    const DimensionlessParams p{2.0, 0.5, 3.0, 1.0};
    const Model hyper = reduce_to_hyperbolic(p);
    CHECK(hyper.family() == ModelFamily::Hyperbolic);
    CHECK(hyper.params().a == p.a);
    CHECK(hyper.params().b == p.b);
    CHECK(hyper.params().m == p.m);
    CHECK(hyper.params().r == p.r);

    SUBCASE("b = 0 reduction is the chemo-logistic right-hand side") {
        const DimensionlessParams q{1.7, 0.0, 2.3, 0.6};
        const Model h0 = reduce_to_hyperbolic(q);
        const Model cl = Model::chemo_logistic(q.a, q.m, q.r);
        Rng rng(11);
        for (int i = 0; i < 200; ++i) {
            const double x = rng.uniform(0.0, h0.me_minus_r());
            const double xd = rng.uniform(0.0, h0.me_minus_r());
            const double f1 = rhs(h0, StateVec::scalar(x), StateVec::scalar(xd))[0];
            const double f2 = rhs(cl, StateVec::scalar(x), StateVec::scalar(xd))[0];
            CHECK(f1 == doctest::Approx(f2).epsilon(1e-12));
        }
    }

    SUBCASE("washout is the only equilibrium when f(1) < e^r/m") {
        // a/(1+b) = 0.4 < e^2/1 = 7.39
        const DimensionlessParams weak{0.8, 1.0, 1.0, 2.0};
        const auto eqs = equilibria(reduce_to_hyperbolic(weak));
        REQUIRE(eqs.size() == 1);
        CHECK(eqs[0].kind == Equilibrium::Kind::Washout);
        CHECK(eqs[0].value[0] == 0.0);
    }

    SUBCASE("delay-free limit is the plain logistic field") {
        // (am-1) x (1 - x/K), K = (am-1)/a
        const double a = 2.5, m = 1.7;
        const Model cl = Model::chemo_logistic(a, m, 0.0);
        const double growth = a * m - 1.0;
        const double capacity = growth / a;
        Rng rng(13);
        for (int i = 0; i < 200; ++i) {
            const double x = rng.uniform(0.0, 2.0 * capacity);
            const double f1 = rhs(cl, StateVec::scalar(x), StateVec::scalar(x))[0];
            const double f2 = growth * x * (1.0 - x / capacity);
            CHECK(f1 == doctest::Approx(f2).epsilon(1e-12));
        }
    }
}

TEST_CASE("wright change of variables") {
    SUBCASE("unit growth rate") {
        const WrightCoordinates wc = to_wright(DimensionlessParams{1.0, 0.0, 2.0, 1.0});
        CHECK(wc.time_scale == doctest::Approx(1.0));
        CHECK(wc.rho == doctest::Approx(1.0));
        CHECK(wc.carrying_capacity == doctest::Approx(1.0));
    }
    SUBCASE("scaled delay") {
        const WrightCoordinates wc = to_wright(DimensionlessParams{2.0, 0.0, 2.0, 0.5});
        CHECK(wc.rho == doctest::Approx(1.5));
        CHECK(wc.time_scale == doctest::Approx(3.0));
    }
    SUBCASE("no survival state below am = 1") {
        CHECK_THROWS_AS(to_wright(DimensionlessParams{0.5, 0.0, 1.0, 1.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("hutchinson trajectories are conjugate to wright trajectories") {
    const DimensionlessParams p{1.0, 0.0, 2.0, 1.0};
    const WrightCoordinates wc = to_wright(p);
    SolverOptions tight;
    tight.abs_tol = tight.rel_tol = 1e-10;

    const History phi_x = History::constant(StateVec::scalar(0.5), p.r);
    const Trajectory hutch = integrate(Model::hutchinson(p.a, p.m, p.r), phi_x, 20.0, tight);

    const History phi_xi = phi_x.map_affine(1.0 / wc.carrying_capacity, -1.0, wc.time_scale);
    const Trajectory wright =
        integrate(Model::wright(wc.rho), phi_xi, wc.to_tau(20.0), tight);

    double sup = 0.0;
    for (int i = 0; i <= 500; ++i) {
        const double t = 20.0 * (i / 500.0);
        const double mapped = wc.to_xi(hutch.eval(t)[0]);
        sup = std::max(sup, std::abs(mapped - wright.eval(wc.to_tau(t))[0]));
    }
    CHECK(sup <= 1e-6);
}

TEST_CASE("hyperbolic solutions stay inside [0, me^{-r}] and decay off the bound") {
    const DimensionlessParams p{3.0, 0.5, 2.0, 0.5};
    const Model m = Model::hyperbolic(p);
    const double cap = m.me_minus_r();

    SUBCASE("interior start") {
        const History phi = History::constant(StateVec::scalar(cap / 2), p.r);
        const Trajectory traj = integrate(m, phi, 40.0);
        CHECK(check_bounds(m, traj));
    }
    SUBCASE("washout history is invariant") {
        const History phi = History::constant(StateVec::scalar(0.0), p.r);
        const Trajectory traj = integrate(m, phi, 10.0);
        const auto [lo, hi] = component_extrema(traj, 0, 0.0, 10.0);
        CHECK(lo == 0.0);
        CHECK(hi == 0.0);
    }
    SUBCASE("start just below the bound decays inward") {
        const History phi = History::constant(StateVec::scalar(cap * 0.9999), p.r);
        const Trajectory traj = integrate(m, phi, 40.0);
        CHECK(check_bounds(m, traj));
        CHECK(traj.eval(5.0)[0] < cap * 0.9999);
    }
}

TEST_CASE("model parameter validation") {
    CHECK_THROWS_AS(Model::wright(-0.5), std::invalid_argument);
    CHECK_THROWS_AS(Model::hutchinson(0.0, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Model::chemostat(DimensionlessParams{1.0, -0.1, 1.0, 0.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(Model::linear(std::nan(""), 0.0, 0.0), std::invalid_argument);
    // survival-state validation is lazy: washout-only regimes construct fine
    const Model washout_only = Model::hutchinson(0.5, 1.0, 1.0); // am = 0.5 < 1
    CHECK(equilibria(washout_only).size() == 1);
}
