#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "combust/profile.hpp"
#include "combust/roots.hpp"

namespace combust {

using cd = std::complex<double>;
using Mat2 = Eigen::Matrix2d;
using Mat4c = Eigen::Matrix<cd, 4, 4>;
using Vec4c = Eigen::Matrix<cd, 4, 1>;
using Mat2c = Eigen::Matrix<cd, 2, 2>;
using Vec2c = Eigen::Matrix<cd, 2, 1>;

/// Coefficient functions of the linearized operator at one point.
struct Coefficients {
    double alpha = 0, beta = 0;    // f_u - s, f_z
    double dalpha = 0, dbeta = 0;  // x-derivatives
    double phi = 0, dphi = 0;      // ignition at u-bar
    double zbar = 0;
    double planted = 0;            // localized identity perturbation added to C
};

/// Localized zeroth-order perturbation kappa * exp(-((x - center)/width)^2) * I added to C.
struct PlantedTerm {
    double kappa = 0.0;
    double center = 0.0;
    double width = 1.0;
    double operator()(double x) const {
        if (kappa == 0.0) return 0.0;
        const double r = (x - center) / width;
        return kappa * std::exp(-r * r);
    }
};

/// Linearized eigenvalue problem about a profile:
///   L U = B U'' - (A U)' + C U,  B = diag(1, d),  A = [[alpha, beta], [0, -s]],
///   C = [[q k phi' zbar, q k phi], [-k phi' zbar, -k phi]].
struct SpectralOptions {
    bool frozen_plus = false;  // replace the profile by its plus end state everywhere
    PlantedTerm planted;
};

class SpectralProblem {
public:
    using Options = SpectralOptions;

    explicit SpectralProblem(std::shared_ptr<const Profile> profile, Options opt = {})
        : P_(std::move(profile)), opt_(opt) {
        const auto& w = P_->problem;
        s_ = w.s;
        d_ = P_->params.d;
        q_ = P_->params.q;
        k_ = P_->params.k;
    }

    const Profile& profile() const { return *P_; }
    std::shared_ptr<const Profile> profile_ptr() const { return P_; }
    const Options& options() const { return opt_; }
    double s() const { return s_; }
    double d() const { return d_; }
    double q() const { return q_; }
    double k() const { return k_; }
    double X() const { return P_->X; }

    Coefficients limit_coefficients(Side side) const {
        if (opt_.frozen_plus) side = Side::Plus;
        const auto& w = P_->problem;
        const double u = side == Side::Minus ? w.u_minus : w.u_plus;
        const double z = side == Side::Minus ? w.z_minus : w.z_plus;
        const FluxValues fv = P_->params.flux.eval(u, z);
        Coefficients c;
        c.alpha = fv.f_u - s_;
        c.beta = fv.f_z;
        c.phi = P_->params.ignition.phi(u);
        c.dphi = P_->params.ignition.dphi(u);
        c.zbar = z;
        return c;
    }

    Coefficients coefficients(double x) const {
        if (opt_.frozen_plus) {
            Coefficients c = limit_coefficients(Side::Plus);
            c.planted = opt_.planted(x);
            return c;
        }
        const ProfilePoint pt = P_->at(x);
        const FluxValues fv = P_->params.flux.eval(pt.u, pt.z);
        Coefficients c;
        c.alpha = fv.f_u - s_;
        c.beta = fv.f_z;
        c.dalpha = fv.f_uu * pt.up + fv.f_uz * pt.zp;
        c.dbeta = fv.f_uz * pt.up + fv.f_zz * pt.zp;
        c.phi = P_->params.ignition.phi(pt.u);
        c.dphi = P_->params.ignition.dphi(pt.u);
        c.zbar = pt.z;
        c.planted = opt_.planted(x);
        return c;
    }

    Mat2 A(const Coefficients& c) const {
        Mat2 m;
        m << c.alpha, c.beta, 0.0, -s_;
        return m;
    }
    Mat2 dA(const Coefficients& c) const {
        Mat2 m;
        m << c.dalpha, c.dbeta, 0.0, 0.0;
        return m;
    }
    Mat2 C(const Coefficients& c) const {
        Mat2 m;
        m << q_ * k_ * c.dphi * c.zbar + c.planted, q_ * k_ * c.phi,  //
            -k_ * c.dphi * c.zbar, -k_ * c.phi + c.planted;
        return m;
    }
    Mat2 B() const { return Eigen::Vector2d(1.0, d_).asDiagonal(); }
    Mat2 Binv() const { return Eigen::Vector2d(1.0, 1.0 / d_).asDiagonal(); }

    /// First-order matrix for B U'' + P U' + Q U = lambda U in W = (U, U').
    Mat4c first_order(const Mat2& P, const Mat2& Q, cd lambda) const {
        Mat4c M = Mat4c::Zero();
        M(0, 2) = 1.0;
        M(1, 3) = 1.0;
        const Mat2 Bi = Binv();
        Mat2c lamQ = -Q.cast<cd>();
        lamQ(0, 0) += lambda;
        lamQ(1, 1) += lambda;
        M.block<2, 2>(2, 0) = Bi.cast<cd>() * lamQ;
        M.block<2, 2>(2, 2) = -(Bi * P).cast<cd>();
        return M;
    }

    Mat4c assemble_from(const Coefficients& c, cd lambda) const {
        return first_order(-A(c), C(c) - dA(c), lambda);
    }
    Mat4c adjoint_from(const Coefficients& c, cd lambda) const {
        return first_order(A(c).transpose(), C(c).transpose(), std::conj(lambda));
    }

    /// Eigenvalue system W' = A(x, lambda) W.
    Mat4c assemble(double x, cd lambda) const { return assemble_from(coefficients(x), lambda); }
    Mat4c assemble_limit(Side side, cd lambda) const { return assemble_from(limit_coefficients(side), lambda); }

    /// Adjoint system for L* U~ = conj(lambda) U~.
    Mat4c adjoint_assemble(double x, cd lambda) const { return adjoint_from(coefficients(x), lambda); }
    Mat4c adjoint_limit(Side side, cd lambda) const { return adjoint_from(limit_coefficients(side), lambda); }

    /// Duality matrix S = [[-A, B], [-B, 0]] at x.
    Mat4c duality_matrix(double x) const {
        const Coefficients c = coefficients(x);
        Mat4c S = Mat4c::Zero();
        S.block<2, 2>(0, 0) = -A(c).cast<cd>();
        S.block<2, 2>(0, 2) = B().cast<cd>();
        S.block<2, 2>(2, 0) = -B().cast<cd>();
        return S;
    }

private:
    std::shared_ptr<const Profile> P_;
    Options opt_;
    double s_ = 0, d_ = 0, q_ = 0, k_ = 0;
};

/// Permutation (u, z, u', z') -> (u, u', z, z').
inline Mat4c permute_to_hat(const Mat4c& M) {
    static const int perm[4] = {0, 2, 1, 3};
    Mat4c H;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) H(i, j) = M(perm[i], perm[j]);
    return H;
}

enum class ModeKind { Fluid, Reaction };

struct Mode {
    ModeKind kind = ModeKind::Fluid;
    int branch = +1;  // sign in front of the principal square root
    cd mu;
    Vec4c v;          // eigenvector in (u, z, u', z')
    bool slow = false;
};

struct ModeSet {
    Side side = Side::Minus;
    cd lambda;
    std::array<Mode, 4> modes;  // fluid +, fluid -, reaction +, reaction -
    int n_stable = 0, n_unstable = 0;
    bool degenerate = false;     // collision or zero real part
    std::string warning;
    double dense_mismatch = 0;   // max relative distance to a dense eigensolve
    double max_residual = 0;     // max ||(A - mu) v|| / ||v||
};

/// Limiting constant-coefficient quantities used by the closed-form mode formulas.
struct LimitData {
    double alpha = 0, beta = 0, phi = 0;
};

inline LimitData limit_data(const SpectralProblem& sp, Side side) {
    const Coefficients c = sp.limit_coefficients(side);
    return {c.alpha, c.beta, c.phi};
}

/// Fluid eigenvalues: roots of mu^2 - alpha mu - lambda = 0 (branch +, branch -).
inline std::pair<cd, cd> fluid_eigenvalues(double alpha, cd lambda) {
    return quadratic_roots<cd>(1.0, -alpha, -lambda);
}

/// Reaction eigenvalues: roots of d mu^2 + s mu - (lambda + k phi) = 0 (branch +, branch -).
inline std::pair<cd, cd> reaction_eigenvalues(double d, double s, double kphi, cd lambda) {
    return quadratic_roots<cd>(d, s, -(lambda + kphi));
}

/// Coupled reaction eigenvector (a1, 1, a2, mu) with a = c/p_f(mu) (1, mu), c = beta mu - q k phi.
inline Vec4c reaction_vector(const LimitData& L, double q, double k, cd lambda, cd mu) {
    const cd pf = mu * mu - L.alpha * mu - lambda;
    const cd c = L.beta * mu - q * k * L.phi;
    const cd a1 = c / pf;
    Vec4c v;
    v << a1, 1.0, a1 * mu, mu;
    return v;
}

inline Vec4c fluid_vector(cd mu) {
    Vec4c v;
    v << 1.0, 0.0, mu, 0.0;
    return v;
}

inline ModeSet limiting_modes(const SpectralProblem& sp, Side side, cd lambda) {
    ModeSet ms;
    ms.side = side;
    ms.lambda = lambda;
    const LimitData L = limit_data(sp, side);
    const double kphi = sp.k() * L.phi;
    auto [fp, fm] = fluid_eigenvalues(L.alpha, lambda);
    auto [rp, rm] = reaction_eigenvalues(sp.d(), sp.s(), kphi, lambda);
    ms.modes[0] = {ModeKind::Fluid, +1, fp, fluid_vector(fp), false};
    ms.modes[1] = {ModeKind::Fluid, -1, fm, fluid_vector(fm), false};
    const Mat4c A = sp.assemble_limit(side, lambda);
    const double scale = std::max(1.0, A.norm());
    bool collision = false;
    for (int j = 0; j < 2; ++j) {
        const cd mu = j == 0 ? rp : rm;
        const cd pf = mu * mu - L.alpha * mu - lambda;
        Vec4c v;
        if (std::abs(pf) < 1e-10 * scale && std::abs(L.beta * mu - sp.q() * sp.k() * L.phi) > 0) {
            collision = true;
            Eigen::ComplexEigenSolver<Mat4c> es(A);
            Eigen::Index best = 0;
            (es.eigenvalues().array() - mu).abs().minCoeff(&best);
            v = es.eigenvectors().col(best);
        } else {
            v = reaction_vector(L, sp.q(), sp.k(), lambda, mu);
        }
        ms.modes[2 + j] = {ModeKind::Reaction, j == 0 ? +1 : -1, mu, v, false};
    }
    if (collision) {
        ms.degenerate = true;
        ms.warning = "fluid/reaction eigenvalue collision: eigenvector from dense eigensolve";
    }
    for (auto& m : ms.modes) {
        m.slow = std::abs(m.mu) < 1e-3 * std::max(1.0, std::abs(lambda)) && std::abs(lambda) < 1e-2;
        const double re = m.mu.real();
        if (re < 0)
            ++ms.n_stable;
        else if (re > 0)
            ++ms.n_unstable;
        if (std::abs(re) < 1e-14 * scale) ms.degenerate = true;
        ms.max_residual = std::max(ms.max_residual, ((A - m.mu * Mat4c::Identity()) * m.v).norm() / m.v.norm());
    }
    // dense cross-check with greedy nearest matching
    Eigen::ComplexEigenSolver<Mat4c> es(A, false);
    std::vector<cd> dense(es.eigenvalues().data(), es.eigenvalues().data() + 4);
    for (const auto& m : ms.modes) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < dense.size(); ++i)
            if (std::abs(dense[i] - m.mu) < std::abs(dense[best] - m.mu)) best = i;
        ms.dense_mismatch = std::max(ms.dense_mismatch, std::abs(dense[best] - m.mu) / std::max(1.0, std::abs(m.mu)));
        dense.erase(dense.begin() + static_cast<long>(best));
    }
    return ms;
}

/// Second-order Taylor data of a slow mode mu(lambda) = c1 lambda + c2 lambda^2 + O(lambda^3)
/// and its eigenvector v(lambda) = v0 + v1 lambda + v2 lambda^2 + ...
struct SlowMode {
    ModeKind kind = ModeKind::Fluid;
    Side side = Side::Minus;
    int branch = +1;
    double c1 = 0, c2 = 0;
    Vec4c v0, v1, v2;
};

namespace detail {

/// Implicit differentiation of a mu^2 + b mu + c0 - lambda = 0 at the root mu0 = 0.
inline std::pair<double, double> implicit_taylor(double a, double b) {
    const double c1 = 1.0 / b;             // mu' = -p_lambda / p_mu with p_lambda = -1, p_mu = b
    const double c2 = -a * c1 * c1 / b;    // mu''/2 = -(p_mumu mu'^2) / (2 p_mu)
    return {c1, c2};
}

}  // namespace detail

/// Slow modes (those with mu(0) = 0) on one side, with Taylor coefficients from the exact
/// characteristic polynomials and eigenvector coefficients from Cauchy integrals on a small circle.
inline std::vector<SlowMode> slow_mode_expansion(const SpectralProblem& sp, Side side) {
    std::vector<SlowMode> out;
    const LimitData L = limit_data(sp, side);
    const double kphi = sp.k() * L.phi;
    const double d = sp.d(), s = sp.s();
    auto mode_at = [&](ModeKind kind, int branch, cd lambda) -> std::pair<cd, Vec4c> {
        if (kind == ModeKind::Fluid) {
            auto [p, m] = fluid_eigenvalues(L.alpha, lambda);
            const cd mu = branch > 0 ? p : m;
            return {mu, fluid_vector(mu)};
        }
        auto [p, m] = reaction_eigenvalues(d, s, kphi, lambda);
        const cd mu = branch > 0 ? p : m;
        return {mu, reaction_vector(L, sp.q(), sp.k(), lambda, mu)};
    };
    std::vector<std::pair<ModeKind, int>> slow;
    if (L.alpha != 0.0) slow.push_back({ModeKind::Fluid, L.alpha < 0 ? +1 : -1});
    if (kphi == 0.0) slow.push_back({ModeKind::Reaction, +1});
    const double rho = 1e-2 * std::min({1.0, L.alpha * L.alpha, s * s / d});
    const int n = 64;
    for (auto [kind, branch] : slow) {
        SlowMode sm;
        sm.kind = kind;
        sm.side = side;
        sm.branch = branch;
        auto [c1, c2] = kind == ModeKind::Fluid ? detail::implicit_taylor(1.0, -L.alpha) : detail::implicit_taylor(d, s);
        sm.c1 = c1;
        sm.c2 = c2;
        sm.v0.setZero();
        sm.v1.setZero();
        sm.v2.setZero();
        for (int j = 0; j < n; ++j) {
            const cd w = std::polar(1.0, 2.0 * M_PI * (j + 0.5) / n);
            const cd lam = rho * w;
            const Vec4c v = mode_at(kind, branch, lam).second;
            sm.v0 += v / double(n);
            sm.v1 += v / (lam * double(n));
            sm.v2 += v / (lam * lam * double(n));
        }
        out.push_back(sm);
    }
    return out;
}

/// Slow-mode eigenvalue at lambda (exact closed form) for a SlowMode descriptor.
inline cd slow_mode_value(const SpectralProblem& sp, const SlowMode& sm, cd lambda) {
    const LimitData L = limit_data(sp, sm.side);
    if (sm.kind == ModeKind::Fluid) {
        auto [p, m] = fluid_eigenvalues(L.alpha, lambda);
        return sm.branch > 0 ? p : m;
    }
    auto [p, m] = reaction_eigenvalues(sp.d(), sp.s(), sp.k() * L.phi, lambda);
    return sm.branch > 0 ? p : m;
}

struct DispersionCurves {
    std::vector<double> xi;
    std::vector<cd> fluid_minus, fluid_plus, reaction_minus, reaction_plus;
    double eta1 = 0, eta2 = 0;
    bool certified = false;   // every sampled curve point lies outside Omega_eta
    double envelope_const = 0; // min of -Re(lambda) (1 + xi^2) / (min(1,d) xi^2) over xi != 0
};

namespace detail {

/// Root lambda of det(Block(lambda) - i xi I) = 0, using that the determinant is affine in lambda.
inline cd block_symbol_root(const Mat2c& M0, const Mat2c& M1, double xi) {
    const cd ix(0.0, xi);
    auto det_at = [&](const Mat2c& M) {
        Mat2c D = M;
        D(0, 0) -= ix;
        D(1, 1) -= ix;
        return D.determinant();
    };
    const cd g0 = det_at(M0), g1 = det_at(M1);
    return -g0 / (g1 - g0);
}

}  // namespace detail

inline DispersionCurves dispersion(const SpectralProblem& sp, const std::vector<double>& xis) {
    DispersionCurves dc;
    dc.xi = xis;
    auto blocks = [&](Side side, cd lambda) {
        const Mat4c H = permute_to_hat(sp.assemble_limit(side, lambda));
        return std::make_pair(Mat2c(H.block<2, 2>(0, 0)), Mat2c(H.block<2, 2>(2, 2)));
    };
    const auto m0 = blocks(Side::Minus, 0.0), m1 = blocks(Side::Minus, 1.0);
    const auto p0 = blocks(Side::Plus, 0.0), p1 = blocks(Side::Plus, 1.0);
    for (double x : xis) {
        dc.fluid_minus.push_back(detail::block_symbol_root(m0.first, m1.first, x));
        dc.reaction_minus.push_back(detail::block_symbol_root(m0.second, m1.second, x));
        dc.fluid_plus.push_back(detail::block_symbol_root(p0.first, p1.first, x));
        dc.reaction_plus.push_back(detail::block_symbol_root(p0.second, p1.second, x));
    }
    double eta2 = INFINITY, env = INFINITY;
    const double md = std::min(1.0, sp.d());
    for (const auto* curve : {&dc.fluid_minus, &dc.fluid_plus, &dc.reaction_minus, &dc.reaction_plus}) {
        for (std::size_t i = 0; i < xis.size(); ++i) {
            const cd l = (*curve)[i];
            if (std::abs(l.imag()) > 1e-12) eta2 = std::min(eta2, -l.real() / (l.imag() * l.imag()));
            if (xis[i] != 0.0) env = std::min(env, -l.real() * (1 + xis[i] * xis[i]) / (md * xis[i] * xis[i]));
        }
    }
    dc.eta2 = 0.9 * eta2;
    dc.eta1 = 1.0;
    dc.envelope_const = env;
    bool ok = dc.eta2 > 0;
    for (const auto* curve : {&dc.fluid_minus, &dc.fluid_plus, &dc.reaction_minus, &dc.reaction_plus})
        for (const cd& l : *curve) {
            const double im = std::abs(l.imag());
            if (l.real() > std::max(-dc.eta1 * im, -dc.eta2 * im * im) && !(im == 0.0 && l.real() <= 0.0)) ok = false;
        }
    dc.certified = ok;
    return dc;
}

}  // namespace combust
