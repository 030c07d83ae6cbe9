#include <random>

#include <gtest/gtest.h>

#include "combust/ode.hpp"
#include "fixtures.hpp"

using namespace combust;
using combust::testing::dc_spectral;

TEST(Coefficients, FirstOrderRowStructure) {
    const SpectralProblem& sp = dc_spectral();
    for (double x : {-20.0, -1.0, 0.0, 0.7, 15.0})
        for (cd lam : {cd(0, 0), cd(0.3, -2), cd(5, 1)}) {
            const Mat4c A = sp.assemble(x, lam);
            EXPECT_EQ(A.row(0), (Eigen::RowVector4cd() << 0, 0, 1, 0).finished());
            EXPECT_EQ(A.row(1), (Eigen::RowVector4cd() << 0, 0, 0, 1).finished());
        }
}

TEST(Coefficients, FarFieldMatchesLimit) {
    const SpectralProblem& sp = dc_spectral();
    for (cd lam : {cd(0.4, 0.2), cd(-1, 3)}) {
        EXPECT_LT((sp.assemble(sp.X(), lam) - sp.assemble_limit(Side::Plus, lam)).norm(), 1e-6);
        EXPECT_LT((sp.assemble(-sp.X(), lam) - sp.assemble_limit(Side::Minus, lam)).norm(), 1e-6);
    }
}

TEST(Coefficients, LimitReactionEntryHasNegativeSign) {
    const SpectralProblem& sp = dc_spectral();
    const Mat4c A = sp.assemble_limit(Side::Plus, 0.0);
    EXPECT_NEAR(A(3, 3).real(), -sp.s() / sp.d(), 1e-14);
}

TEST(Modes, PlusSideAtZero) {
    const SpectralProblem& sp = dc_spectral();
    const ModeSet ms = limiting_modes(sp, Side::Plus, 0.0);
    std::vector<double> mus;
    for (const auto& m : ms.modes) {
        EXPECT_NEAR(m.mu.imag(), 0.0, 1e-14);
        mus.push_back(m.mu.real());
    }
    std::sort(mus.begin(), mus.end());
    EXPECT_NEAR(mus[0], -7.5, 1e-12);
    EXPECT_NEAR(mus[1], -1.5, 1e-12);
    EXPECT_NEAR(mus[2], 0.0, 1e-12);
    EXPECT_NEAR(mus[3], 0.0, 1e-12);
}

TEST(Modes, MinusSideReactionRootsAtZero) {
    const SpectralProblem& sp = dc_spectral();
    const Profile& P = sp.profile();
    const double kphi = sp.k() * P.params.ignition.phi(P.problem.u_minus);
    ASSERT_GT(kphi, 0.0);
    const auto [a, b] = reaction_eigenvalues(sp.d(), sp.s(), kphi, 0.0);
    for (cd mu : {a, b}) EXPECT_NEAR(std::abs(sp.d() * mu * mu + sp.s() * mu - kphi), 0.0, 1e-12);
    EXPECT_LT(a.real() * b.real(), 0.0);
}

TEST(Modes, ClosedFormsMatchDenseEigensolve) {
    const SpectralProblem& sp = dc_spectral();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> re(0.0, 5.0), im(-5.0, 5.0);
    for (int n = 0; n < 200; ++n) {
        const cd lam(re(rng), im(rng));
        for (Side side : {Side::Minus, Side::Plus}) {
            const ModeSet ms = limiting_modes(sp, side, lam);
            EXPECT_LT(ms.dense_mismatch, 1e-10);
            EXPECT_LT(ms.max_residual, 1e-10);
            EXPECT_EQ(ms.n_stable, 2);
            EXPECT_EQ(ms.n_unstable, 2);
        }
    }
}

TEST(Modes, ConjugateSymmetry) {
    const SpectralProblem& sp = dc_spectral();
    const cd lam(0.7, 1.3);
    for (Side side : {Side::Minus, Side::Plus}) {
        const ModeSet a = limiting_modes(sp, side, lam), b = limiting_modes(sp, side, std::conj(lam));
        for (int i = 0; i < 4; ++i) EXPECT_LT(std::abs(b.modes[i].mu - std::conj(a.modes[i].mu)), 1e-13);
    }
}

TEST(Modes, RightHalfPlaneSelectsDecayingBranchesOnPlusSide) {
    const SpectralProblem& sp = dc_spectral();
    const ModeSet ms = limiting_modes(sp, Side::Plus, 1.0);
    int decaying = 0;
    for (const auto& m : ms.modes) decaying += m.mu.real() < 0;
    EXPECT_EQ(decaying, 2);
}

TEST(SlowModes, ReactionCoefficients) {
    const SpectralProblem& sp = dc_spectral();
    bool found = false;
    for (const auto& sm : slow_mode_expansion(sp, Side::Plus)) {
        if (sm.kind != ModeKind::Reaction) continue;
        found = true;
        EXPECT_DOUBLE_EQ(sm.c1, 1.0 / sp.s());
        EXPECT_NEAR(sm.c2, -sp.d() / std::pow(sp.s(), 3), 1e-15);
        EXPECT_NEAR(sm.c2, -0.0593, 1e-4);
    }
    EXPECT_TRUE(found);
}

TEST(SlowModes, TaylorRemainderIsThirdOrder) {
    const SpectralProblem& sp = dc_spectral();
    for (Side side : {Side::Minus, Side::Plus})
        for (const auto& sm : slow_mode_expansion(sp, side)) {
            const cd dir = std::polar(1.0, 0.3);
            std::vector<double> ratios;
            for (double r : {0.04, 0.02, 0.01, 0.005}) {
                const cd lam = r * dir;
                const cd rem = slow_mode_value(sp, sm, lam) - (sm.c1 * lam + sm.c2 * lam * lam);
                ratios.push_back(std::abs(rem) / (r * r * r));
            }
            for (std::size_t i = 1; i < ratios.size(); ++i)
                EXPECT_NEAR(ratios[i] / ratios[0], 1.0, 0.25) << "side " << to_string(side);
        }
}

TEST(SlowModes, FluidVectorAtZero) {
    const Vec4c v = fluid_vector(0.0);
    EXPECT_NEAR(std::abs(v[0]), v.norm(), 1e-15);
}

TEST(Duality, BilinearFormIsConstant) {
    const SpectralProblem& sp = dc_spectral();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    OdeOptions o;
    o.rtol = 1e-12;
    o.atol = 1e-14;
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const cd lam(std::abs(U(rng)) * 2, U(rng) * 3);
        Vec4c W, Wt;
        for (int i = 0; i < 4; ++i) {
            W[i] = cd(U(rng), U(rng));
            Wt[i] = cd(U(rng), U(rng));
        }
        double x = -3;
        const cd ref = Wt.dot(sp.duality_matrix(x) * W);
        for (int k = 0; k < 6; ++k) {
            const double xn = x + 1.0;
            W = dopri5([&](double xx, const Vec4c& w) -> Vec4c { return sp.assemble(xx, lam) * w; }, x, xn, W, o);
            Wt = dopri5([&](double xx, const Vec4c& w) -> Vec4c { return sp.adjoint_assemble(xx, lam) * w; }, x, xn,
                        Wt, o);
            x = xn;
            const cd v = Wt.dot(sp.duality_matrix(x) * W);
            worst = std::max(worst, std::abs(v - ref) / (Wt.norm() * sp.duality_matrix(x).norm() * W.norm()));
        }
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Dispersion, RootsAndSpectralGap) {
    const SpectralProblem& sp = dc_spectral();
    std::vector<double> xis;
    for (int i = -200; i <= 200; ++i) xis.push_back(0.1 * i);
    const DispersionCurves dc = dispersion(sp, xis);
    const std::size_t z = 200;
    EXPECT_NEAR(std::abs(dc.fluid_minus[z]), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(dc.fluid_plus[z]), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(dc.reaction_plus[z]), 0.0, 1e-13);
    const Profile& P = sp.profile();
    EXPECT_NEAR(dc.reaction_minus[z].real(), -sp.k() * P.params.ignition.phi(P.problem.u_minus), 1e-12);
    for (std::size_t i = 0; i < xis.size(); ++i) {
        const double xi = xis[i];
        EXPECT_LT(std::abs(dc.reaction_plus[i] - cd(-sp.d() * xi * xi, sp.s() * xi)), 1e-12);
    }
    EXPECT_TRUE(dc.certified);
    EXPECT_GT(dc.envelope_const, 0.0);
}
