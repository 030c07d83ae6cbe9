#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace combust;
using combust::testing::dc_profile;

namespace {

WaveProblem dc_wave() { return solve_rh(default_config(), 0.0, 1.5).front(); }

}  // namespace

TEST(Equilibria, PlusSideIsTriangular) {
    const ModelParams p;
    const TravelingWaveODE ode(p, dc_wave());
    const auto ea = equilibrium_jacobian(ode, Side::Plus);
    EXPECT_NEAR(ea.eigenvalues[0], -7.5, 1e-10);
    EXPECT_NEAR(ea.eigenvalues[1], -1.5, 1e-10);
    EXPECT_NEAR(ea.eigenvalues[2], 0.0, 1e-10);
    EXPECT_EQ(ea.n_stable, 2);
}

TEST(Equilibria, MinusSideSignature) {
    const ModelParams p;
    const WaveProblem w = dc_wave();
    const auto ea = equilibrium_jacobian(TravelingWaveODE(p, w), Side::Minus);
    EXPECT_EQ(ea.n_unstable, 2);
    EXPECT_EQ(ea.n_stable, 1);

    const double kphi = p.k * p.ignition.phi(w.u_minus);
    const double b = w.s / p.d, c = -kphi / p.d;
    const double r1 = 0.5 * (-b + std::sqrt(b * b - 4 * c)), r2 = 0.5 * (-b - std::sqrt(b * b - 4 * c));
    std::vector<double> expect{w.alpha_hat_minus - w.s, r1, r2};
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(ea.eigenvalues[i], expect[i], 1e-10);
}

TEST(Equilibria, LeftRightEigenvectorsAreBiorthonormal) {
    const auto ea = equilibrium_jacobian(TravelingWaveODE(default_config(), dc_wave()), Side::Minus);
    EXPECT_LT((ea.left * ea.right - Eigen::Matrix3d::Identity()).norm(), 1e-12);
}

TEST(Profile, NonreactiveSeedIsTanh) {
    ModelParams p;
    p.q = 0;
    const ProfileOutcome out = compute_strong_detonation(p, 0.0, 1.5);
    ASSERT_TRUE(out.connected()) << out.diagnostic;
    const Profile& P = *out.profile;
    EXPECT_DOUBLE_EQ(P.problem.u_minus, 3.0);
    double err = 0;
    for (std::size_t i = 0; i < P.size(); ++i) err = std::max(err, std::abs(P.Y[i][0] - (1.5 - 1.5 * std::tanh(0.75 * P.xi[i]))));
    EXPECT_LT(err, 1e-10);
    EXPECT_LT(P.collocation_residual, 1e-10);
}

TEST(Profile, ReferenceDetonationConverges) {
    const Profile& P = *dc_profile();
    EXPECT_LT(P.collocation_residual, 1e-8);
    EXPECT_NEAR(P.Y.front()[0], P.problem.u_minus, 1e-6);
    EXPECT_NEAR(P.Y.back()[0], 0.0, 1e-6);
    EXPECT_NEAR(P.Y.front()[1], 0.0, 1e-6);
    EXPECT_NEAR(P.Y.back()[1], 1.0, 1e-6);
    const ProfilePoint c = P.at(0.0);
    EXPECT_NEAR(c.u, 0.5 * P.problem.u_minus, 1e-12);
    EXPECT_GT(c.z, 0.0);
    EXPECT_LT(c.z, 1.0);
}

TEST(Profile, InterpolantSolvesTravelingWaveOde) {
    const Profile& P = *dc_profile();
    const TravelingWaveODE ode = P.ode();
    double worst = 0;
    for (double x = -10; x <= 10; x += 0.0371) {
        const ProfilePoint pt = P.at(x);
        const Eigen::Vector3d r = ode.rhs(Eigen::Vector3d(pt.u, pt.z, pt.y)) - Eigen::Vector3d(pt.up, pt.zp, pt.yp);
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Profile, ReactionProgressIsMonotoneAndStateStaysInIgnitionBand) {
    const Profile& P = *dc_profile();
    const Ignition& ig = P.params.ignition;
    for (std::size_t i = 1; i < P.size(); ++i) EXPECT_GE(P.Y[i][1], P.Y[i - 1][1] - 1e-12);
    double umax = 0;
    for (const auto& y : P.Y) umax = std::max(umax, y[0]);
    EXPECT_GE(umax, P.problem.u_minus);
    EXPECT_LT(umax, ig.u_sup);
}

TEST(Profile, DecayRatesMatchEquilibria) {
    const DecayReport rep = verify_decay(*dc_profile());
    int fitted = 0;
    for (const auto& f : rep.fits) {
        if (!f.fit) continue;
        ++fitted;
        EXPECT_GT(f.rate, 0.0);
        EXPECT_LT(f.rel_error(), 0.05) << to_string(f.side) << " component " << f.component;
    }
    EXPECT_GE(fitted, 3);
}

TEST(Profile, NonreactiveMinusRateMatchesTanh) {
    ModelParams p;
    p.q = 0;
    const DecayReport rep = verify_decay(*compute_strong_detonation(p, 0.0, 1.5).profile);
    for (const auto& f : rep.fits)
        if (f.side == Side::Minus && f.component == 0) {
            ASSERT_TRUE(f.fit);
            EXPECT_NEAR(f.rate, 1.5, 0.015);
        }
}

TEST(Profile, GridRefinementIsStable) {
    ProfileOptions fine;
    fine.h = 0.005;
    const ProfileOutcome out = compute_strong_detonation(default_config(), 0.0, 1.5, fine);
    ASSERT_TRUE(out.connected());
    const Profile& A = *dc_profile();
    const Profile& B = *out.profile;
    EXPECT_LT(std::abs(A.at(0).u - B.at(0).u), 1e-6);
    double worst = 0;
    for (double x = -8; x <= 8; x += 0.05) worst = std::max(worst, std::abs(A.at(x).z - B.at(x).z));
    EXPECT_LT(worst, 1e-6);
}

TEST(Profile, StrongDeflagrationHasNoConnection) {
    const ModelParams p;
    const double um = 1.0, up = 3.8;
    const double s = (0.5 * (up * up - um * um)) / (p.q + up - um);
    const WaveProblem w = make_problem(p, um, up, s);
    ASSERT_EQ(w.cls, WaveClass::StrongDeflagration);
    ASSERT_LT(std::abs(w.rh_residual), 1e-12);
    const ProfileOutcome out = compute_profile(w, p);
    EXPECT_FALSE(out.connected());
    EXPECT_EQ(out.diagnostic.rfind("no connection", 0), 0u) << out.diagnostic;
}

TEST(Profile, InadmissibleEndStatesRejected) {
    const ModelParams p;
    EXPECT_THROW(compute_profile(make_problem(p, 2.0, 3.0, 1.5), p), InputError);
}

TEST(Transversality, ReferenceDetonationIsTransversal) {
    const double g = transversality_gamma(*dc_profile());
    EXPECT_GT(std::abs(g), 1e-6);
    EXPECT_NEAR(g, -0.93615, 1e-3);
}

TEST(Transversality, DegenerateAndSignFlip) {
    const Eigen::Vector3d e(1, 0.2, -0.1), a1(1, 0, 0), a2(0, 1, 0), b1(1, 0, 0.3), b2(0, 0.5, 1);
    EXPECT_EQ(plane_gamma(e, a1, a1, b1, b2), 0.0);
    const double g = plane_gamma(e, a1, a2, b1, b2);
    EXPECT_NE(g, 0.0);
    EXPECT_DOUBLE_EQ(plane_gamma(e, -a1, a2, b1, b2), -g);
    EXPECT_DOUBLE_EQ(plane_gamma(e, a1, a2, b1, -b2), -g);
}
