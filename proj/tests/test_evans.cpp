#include <random>

#include <gtest/gtest.h>

#include "combust/evans.hpp"
#include "fixtures.hpp"

using namespace combust;
using combust::testing::dc_spectral;

namespace {

const EvansFunction& dc_evans() {
    static const EvansFunction E(dc_spectral());
    return E;
}

}  // namespace

TEST(Exterior, WedgeIsAntisymmetricAndCompoundActsOnWedges) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N;
    auto rv = [&] {
        Vec4c v;
        for (int i = 0; i < 4; ++i) v[i] = cd(N(rng), N(rng));
        return v;
    };
    Mat4c M;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) M(i, j) = cd(N(rng), N(rng));
    const Vec4c a = rv(), b = rv(), c = rv(), d = rv();
    EXPECT_LT((wedge(a, b) + wedge(b, a)).norm(), 1e-14);
    const Vec6c lhs = compound2(M) * wedge(a, b);
    const Vec6c rhs = wedge(M * a, b) + wedge(a, M * b);
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
    Mat4c F;
    F << a, b, c, d;
    EXPECT_LT(std::abs(wedge_det(wedge(a, b), wedge(c, d)) - F.determinant()), 1e-12 * std::abs(F.determinant()));
}

TEST(Evans, VanishesAtOrigin) {
    const EvansFunction& E = dc_evans();
    const cd d0 = E(0.0).D, dr = E(E.r0()).D;
    EXPECT_LT(std::abs(d0), 1e-6 * std::abs(dr));
}

TEST(Evans, ConjugateSymmetry) {
    const EvansFunction& E = dc_evans();
    for (cd lam : {cd(0.7, 1.3), cd(2.0, 5.0), cd(-0.05, 0.4)}) {
        const cd a = E(lam).D, b = E(std::conj(lam)).D;
        EXPECT_LT(std::abs(b - std::conj(a)), 1e-10 * std::abs(a));
    }
}

TEST(Evans, NonzeroAtOne) {
    const EvansFunction& E = dc_evans();
    const cd d1 = E(1.0).D;
    EXPECT_GT(std::abs(d1), 1e3 * std::abs(E(0.0).D));
    EXPECT_LT(std::abs(d1.imag()), 1e-10 * std::abs(d1));
}

TEST(Evans, DerivativeAtOriginIsRealSimpleAndConverged) {
    const EvansFunction& E = dc_evans();
    const cd dp = d_prime_zero(E), dp2 = d_prime_zero(E, E.r0() / 2);
    EXPECT_GT(std::abs(dp), 1e-6);
    EXPECT_LT(std::abs(dp.imag()), 1e-8 * std::abs(dp));
    EXPECT_LT(std::abs(dp - dp2), 0.01 * std::abs(dp));
    EXPECT_NEAR(dp.real(), 0.14914, 1e-4);
}

TEST(Evans, BoundaryBasesConjugate) {
    const SpectralProblem& sp = dc_spectral();
    const cd lam(0.4, 0.9);
    for (Side side : {Side::Minus, Side::Plus}) {
        const BoundaryBasis a = boundary_basis(sp, side, lam), b = boundary_basis(sp, side, std::conj(lam));
        EXPECT_LT((b.omega - a.omega.conjugate()).norm(), 1e-12 * a.omega.norm());
    }
}

TEST(Winding, OriginCircleCountsTranslationZero) {
    const EvansFunction& E = dc_evans();
    const ContourResult c = winding(E, origin_circle(E.r0()));
    EXPECT_EQ(c.winding, 1);
    EXPECT_TRUE(c.integer_ok);
}

TEST(Winding, OuterContourIsZeroFreeAndStableUnderDoubling) {
    const EvansFunction& E = dc_evans();
    const double R = default_outer_radius(dc_spectral());
    const ContourResult a = winding(E, outer_contour(R, E.r0()));
    const ContourResult b = winding(E, outer_contour(2 * R, E.r0()));
    EXPECT_EQ(a.winding, 0);
    EXPECT_EQ(b.winding, 0);
    EXPECT_TRUE(a.integer_ok);
}

TEST(Verdict, ReferenceDetonationIsStable) {
    const EvansFunction& E = dc_evans();
    const StabilityReport r = verdict(E, transversality_gamma(dc_spectral().profile()));
    EXPECT_EQ(r.verdict, Verdict::Stable) << r.reason;
}

TEST(Verdict, DecisionLogic) {
    EXPECT_EQ(decide_verdict(0, 0, 1, -0.9, 0.15).verdict, Verdict::Stable);
    EXPECT_EQ(decide_verdict(1, 1, 1, -0.9, 0.15).verdict, Verdict::Unstable);
    EXPECT_EQ(decide_verdict(0, 1, 1, -0.9, 0.15).verdict, Verdict::Indeterminate);
    EXPECT_EQ(decide_verdict(0, 0, 1, 0.0, 0.15).verdict, Verdict::Indeterminate);
    EXPECT_EQ(decide_verdict(0, 0, 2, -0.9, 0.15).verdict, Verdict::Indeterminate);
    EXPECT_EQ(decide_verdict(0, 0, 1, -0.9, 0.0).verdict, Verdict::Indeterminate);
    EXPECT_EQ(to_string(Verdict::Stable), "stable");
}
