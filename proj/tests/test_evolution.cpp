#include <gtest/gtest.h>

#include "combust/evolution.hpp"
#include "fixtures.hpp"

using namespace combust;
using combust::testing::dc_profile;
using combust::testing::dc_spectral;

namespace {

const PerturbationRun& short_run() {
    static const PerturbationRun run = [] {
        PerturbationSpec ps;
        TrackOptions to;
        to.T = 50;
        const ExcitedKernel ek(dc_spectral());
        return perturb_and_track(*dc_profile(), ps, to, &ek);
    }();
    return run;
}

}  // namespace

TEST(Evolution, GridIsCellCentred) {
    const Grid g = Grid::uniform(10.0, 0.3);
    EXPECT_EQ(g.N, 67);
    EXPECT_NEAR(g.x.front(), -10.0 + 0.5 * g.dx, 1e-14);
    EXPECT_NEAR(g.x.back(), 10.0 - 0.5 * g.dx, 1e-14);
}

TEST(Evolution, DiscreteSteadyStateIsStationary) {
    const Profile& P = *dc_profile();
    const Grid g = Grid::uniform(45, (P.params.d / P.problem.s) / 8);
    const Evolver ev(P.params, P.problem.s, P.problem.u_minus, P.problem.u_plus, g);
    const SteadyStateReport ss = discrete_steady_state(ev, P);
    EXPECT_LT(ss.residual, 1e-9);
    const Field F0 = sample_profile(P, g);
    EXPECT_LT((F0.u - ss.state.u).abs().maxCoeff(), 1e-3);
    Field F = ss.state;
    ASSERT_TRUE(ev.evolve(F, 50.0, 0, nullptr));
    EXPECT_LT(std::max((F.u - ss.state.u).abs().maxCoeff(), (F.z - ss.state.z).abs().maxCoeff()), 1e-6);
}

TEST(Evolution, MassIsConserved) {
    const PerturbationRun& run = short_run();
    ASSERT_FALSE(run.aborted);
    const double m0 = run.snaps.front().mass;
    for (const auto& s : run.snaps) EXPECT_LT(std::abs(s.mass - m0), 1e-6 * std::abs(m0)) << "t=" << s.t;
}

TEST(Evolution, PerturbationNormsDecrease) {
    const PerturbationRun& run = short_run();
    EXPECT_LT(run.snaps.back().linf, run.snaps.front().linf);
    EXPECT_LT(run.snaps.back().l2, run.snaps.front().l2);
}

TEST(Evolution, PhaseShiftAgreesInSignWithKernelFormula) {
    const Snapshot& last = short_run().snaps.back();
    ASSERT_NE(last.delta_integral, 0.0);
    EXPECT_GT(last.delta * last.delta_integral, 0.0);
    EXPECT_LT(std::abs(last.delta - last.delta_integral), 0.2 * std::abs(last.delta_integral));
}

TEST(Evolution, ZeroPerturbationGivesZeroShift) {
    PerturbationSpec ps;
    ps.E0 = 0;
    TrackOptions to;
    to.T = 5;
    const PerturbationRun run = perturb_and_track(*dc_profile(), ps, to);
    ASSERT_FALSE(run.aborted);
    for (const auto& s : run.snaps) {
        EXPECT_LT(std::abs(s.delta), 1e-9);
        EXPECT_LT(s.linf, 1e-9);
    }
}

TEST(Evolution, BurgersShockPerturbationDecays) {
    ModelParams p;
    p.q = 0;
    const ProfileOutcome out = compute_strong_detonation(p, 0.0, 1.5);
    ASSERT_TRUE(out.connected());
    PerturbationSpec ps;
    TrackOptions to;
    to.T = 20;
    const PerturbationRun run = perturb_and_track(*out.profile, ps, to);
    ASSERT_FALSE(run.aborted);
    EXPECT_LT(run.snaps.back().l2, 0.5 * run.snaps.front().l2);
}

TEST(Evolution, SmallnessThresholdEnforced) {
    PerturbationSpec ps;
    ps.E0 = 1.0;
    EXPECT_THROW(perturb_and_track(*dc_profile(), ps), InputError);
}

TEST(Perturbation, WeightedNormIsE0) {
    const Grid g = Grid::uniform(20, 0.01);
    PerturbationSpec ps;
    ps.E0 = 2e-3;
    ps.center = 1.5;
    const Field U = make_perturbation(ps, g);
    double w = 0;
    for (int i = 0; i < g.N; ++i) w = std::max(w, std::pow(1 + std::abs(g.x[i]), 1.5) * std::hypot(U.u[i], U.z[i]));
    EXPECT_NEAR(w, 2e-3, 1e-15);
}

TEST(Templates, StrongDetonationHasOnlyDampedTemplate) {
    const DecayTemplates t = DecayTemplates::for_profile(*dc_profile());
    EXPECT_TRUE(t.theta_empty());
    EXPECT_EQ(t.theta(0.3, 5.0), 0.0);
    EXPECT_EQ(t.psi1(0.3, 5.0), 0.0);
    EXPECT_GT(t.psi2(0.3, 5.0), 0.0);
}

TEST(Source, RemainderStructure) {
    const Profile& P = *dc_profile();
    std::vector<double> x;
    std::vector<Vec2d> U;
    for (double xx = -30; xx <= 30; xx += 0.1) {
        x.push_back(xx);
        U.emplace_back(1e-3 * std::exp(-xx * xx / 4), -5e-4 * std::exp(-xx * xx / 9));
    }
    const SourceReport r = source_structure_check(P, x, U);
    EXPECT_GT(r.max_remainder, 0.0);
    EXPECT_EQ(r.max_remainder_cold, 0.0);
    EXPECT_LT(r.max_direction_error, 1e-15);
    EXPECT_NEAR(r.scaling_ratio, 0.25, 0.01);
}

TEST(RateFit, RecoversPowerLaw) {
    std::vector<double> t, v;
    for (double s = 1; s <= 200; s += 1) {
        t.push_back(s);
        v.push_back(3.0 * std::pow(1 + s, -0.5));
    }
    const RateFit f = loglog_fit(t, v, 10, 200);
    EXPECT_NEAR(f.exponent, -0.5, 0.02);
    EXPECT_EQ(f.points, 191);
}
