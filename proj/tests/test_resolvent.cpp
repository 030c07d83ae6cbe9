#include <gtest/gtest.h>

#include "combust/resolvent.hpp"
#include "fixtures.hpp"

using namespace combust;
using combust::testing::dc_profile;
using combust::testing::dc_spectral;

TEST(Resolvent, ConstantCoefficientKernelMatchesExponentialFormula) {
    SpectralOptions fo;
    fo.frozen_plus = true;
    const SpectralProblem spf(dc_profile(), fo);
    std::vector<double> xs;
    for (int i = -20; i <= 20; ++i) xs.push_back(0.25 * i);
    double err = 0;
    for (cd lam : {cd(0.5, 0.3), cd(2.0, -1.0), cd(0.05, 3.0)}) {
        const ResolventSample S = resolvent_kernel(spf, lam, xs, {0.0, 1.0, -2.0});
        for (std::size_t j = 0; j < S.y.size(); ++j)
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const Mat2c o = constant_coefficient_kernel(spf, lam, xs[i], S.y[j]);
                err = std::max(err, (S.G[j][i] - o).norm() / (o.norm() + 1e-3));
            }
    }
    EXPECT_LT(err, 1e-8);
}

TEST(Resolvent, DerivativeJumpAcrossDiagonal) {
    const SpectralProblem& sp = dc_spectral();
    const double h = 1e-3, y = 0.3;
    const cd lam(0.4, 0.2);
    std::vector<double> xs;
    for (int k = -4; k <= 4; ++k) xs.push_back(y + k * h);
    const ResolventSolver rs(sp, lam, xs);
    const auto col = rs.column(4);
    const Mat2c dr = (-25.0 * col[4] + 48.0 * col[5] - 36.0 * col[6] + 16.0 * col[7] - 3.0 * col[8]) / (12 * h);
    const Mat2c dl = (25.0 * col[4] - 48.0 * col[3] + 36.0 * col[2] - 16.0 * col[1] + 3.0 * col[0]) / (12 * h);
    const Mat2c jump = dr - dl;
    Mat2c expect = Mat2c::Zero();
    expect(0, 0) = 1.0;
    expect(1, 1) = 1.0 / sp.d();
    EXPECT_LT((jump - expect).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Resolvent, KernelIsContinuousAcrossDiagonal) {
    const SpectralProblem& sp = dc_spectral();
    const ResolventSolver rs(sp, cd(0.8, -0.6), {-1e-9, 0.0, 1e-9});
    const auto col = rs.column(1);
    EXPECT_LT((col[0] - col[2]).norm(), 1e-6 * col[1].norm());
}

TEST(Resolvent, KernelDecaysAwayFromDiagonal) {
    const SpectralProblem& sp = dc_spectral();
    std::vector<double> xs;
    for (int i = -24; i <= 24; ++i) xs.push_back(0.5 * i);
    const ResolventSample S = resolvent_kernel(sp, cd(1.0, 0.5), xs, {0.0});
    const double at0 = S.G[0][24].norm();
    EXPECT_LT(S.G[0][0].norm(), 1e-2 * at0);
    EXPECT_LT(S.G[0][48].norm(), 1e-2 * at0);
}

TEST(Residue, RankOneWithProfileDerivativeFactor) {
    const SpectralProblem& sp = dc_spectral();
    std::vector<double> xs, ys;
    for (int i = -40; i <= 40; ++i) {
        xs.push_back(0.25 * i);
        ys.push_back(0.25 * i);
    }
    const ResidueReport r = pole_structure(sp, xs, ys);
    EXPECT_FALSE(r.degenerate);
    EXPECT_LT(r.rank_ratio, 1e-6);
    EXPECT_GT(r.x_cosine, 0.999);
    EXPECT_TRUE(std::isfinite(r.y_factor_max));
    EXPECT_LT(r.y_factor_max, 10.0);
    EXPECT_LT(r.minus_annihilation, 1e-3);
}

TEST(ExcitedKernel, ErrfnNormalization) {
    EXPECT_DOUBLE_EQ(errfn(0.0), 0.5);
    EXPECT_DOUBLE_EQ(errfn(INFINITY), 1.0);
    EXPECT_DOUBLE_EQ(errfn(-INFINITY), 0.0);
}

TEST(ExcitedKernel, GlobalVectorIsConservedMode) {
    const SpectralProblem& sp = dc_spectral();
    const ExcitedKernel ek(sp);
    const Vec2d pi = ek.pi_global();
    EXPECT_NEAR(pi[1], sp.q() * pi[0], 1e-15);
    const Profile& P = sp.profile();
    const double mass_jump =
        P.problem.u_plus - P.problem.u_minus + sp.q() * (P.problem.z_plus - P.problem.z_minus);
    EXPECT_NEAR(ek.c() * mass_jump, 1.0, 1e-12);
}

TEST(ExcitedKernel, LimitsInTime) {
    const SpectralProblem& sp = dc_spectral();
    const ExcitedKernel ek(sp);
    for (double y : {-3.0, -0.5, 0.5, 2.0}) EXPECT_LT(ek(y, 1e-6).norm(), 1e-12) << "y=" << y;
    for (double y : {-3.0, -0.5}) EXPECT_LT((ek(y, 1e6) - ek.pi_global()).norm(), 1e-12) << "y=" << y;
    for (double y : {0.5, 2.0})
        EXPECT_LT((ek(y, 1e6) - ek.pi_fluid_plus(y) - ek.pi_reaction_plus(y)).norm(), 1e-12) << "y=" << y;
}

TEST(Green, ExcitedPartSplitsOff) {
    const SpectralProblem& sp = dc_spectral();
    const ExcitedKernel ek(sp);
    const GreenSample g = green_function(sp, ek, 1.0, 5.0, -1.0);
    EXPECT_TRUE(g.G.allFinite());
    EXPECT_LT((g.G - g.E - g.G_tilde).norm(), 1e-15);
    EXPECT_GT(g.nodes, 0);
}
