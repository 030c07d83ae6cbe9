#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "combust/evans.hpp"
#include "combust/ode.hpp"
#include "combust/parallel.hpp"
#include "combust/spectral.hpp"

namespace combust {

using Mat42c = Eigen::Matrix<cd, 4, 2>;
using Vec8c = Eigen::Matrix<cd, 8, 1>;
using Vec2d = Eigen::Vector2d;

struct ResolventOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double singular_threshold = 1e-10;  // min singular value of [Q+ Q-] at a node
};

namespace detail {

inline Vec8c pack(const Mat42c& M) {
    Vec8c v;
    v << M.col(0), M.col(1);
    return v;
}
inline Mat42c unpack(const Vec8c& v) {
    Mat42c M;
    M.col(0) = v.head<4>();
    M.col(1) = v.tail<4>();
    return M;
}

/// Modified Gram-Schmidt: M = Q R with orthonormal Q (4x2) and upper-triangular R.
inline void thin_qr(const Mat42c& M, Mat42c& Q, Mat2c& R) {
    R.setZero();
    R(0, 0) = M.col(0).norm();
    Q.col(0) = M.col(0) / R(0, 0);
    R(0, 1) = Q.col(0).dot(M.col(1));
    Vec4c v = M.col(1) - R(0, 1) * Q.col(0);
    const cd again = Q.col(0).dot(v);
    v -= again * Q.col(0);
    R(0, 1) += again;
    R(1, 1) = v.norm();
    Q.col(1) = v / R(1, 1);
}

}  // namespace detail

/// Resolvent kernel of L - lambda, (L - lambda) G(., y) = delta_y I, on a sorted node set.
/// The decaying solution spaces are stored as orthonormal frames with the 2x2 transfer factors
/// between consecutive nodes, so products are only ever formed in the contracting direction.
class ResolventSolver {
public:
    ResolventSolver(const SpectralProblem& sp, cd lambda, std::vector<double> nodes, ResolventOptions opt = {})
        : sp_(sp), lambda_(lambda), x_(std::move(nodes)), opt_(opt) {
        if (x_.empty()) throw InputError("resolvent: empty node set");
        std::sort(x_.begin(), x_.end());
        const std::size_t n = x_.size();
        Qp_.resize(n);
        Qm_.resize(n);
        Rinv_.resize(n);
        Sinv_.resize(n);
        Cp_.resize(n);
        Cm_.resize(n);
        sigma_min_.resize(n);

        Mat2c R;
        // plus frame: from the far field down through the nodes
        {
            const BoundaryBasis b = boundary_basis(sp_, Side::Plus, lambda_);
            Mat42c F, Q;
            F << b.v1, b.v2;
            detail::thin_qr(F, Q, R);
            transport(Q, std::max(sp_.X(), x_.back()), x_.back(), Qp_[n - 1], R);
            for (std::size_t k = n - 1; k-- > 0;) {
                transport(Qp_[k + 1], x_[k + 1], x_[k], Qp_[k], R);
                Rinv_[k] = R.inverse();  // coefficients at x_k -> x_{k+1}
            }
        }
        // minus frame: from the far field up through the nodes
        {
            const BoundaryBasis b = boundary_basis(sp_, Side::Minus, lambda_);
            Mat42c F, Q;
            F << b.v1, b.v2;
            detail::thin_qr(F, Q, R);
            transport(Q, std::min(-sp_.X(), x_.front()), x_.front(), Qm_[0], R);
            for (std::size_t k = 0; k + 1 < n; ++k) {
                transport(Qm_[k], x_[k], x_[k + 1], Qm_[k + 1], R);
                Sinv_[k] = R.inverse();  // coefficients at x_{k+1} -> x_k
            }
        }
        // jump coefficients: Q+ c+ + Q- c- = (0; B^{-1})
        Mat42c J = Mat42c::Zero();
        J(2, 0) = 1.0;
        J(3, 1) = 1.0 / sp_.d();
        for (std::size_t k = 0; k < n; ++k) {
            Mat4c M;
            M << Qp_[k], Qm_[k];
            Eigen::JacobiSVD<Mat4c> svd(M);
            sigma_min_[k] = svd.singularValues()[3];
            if (sigma_min_[k] < opt_.singular_threshold)
                throw NumericalError("resolvent: lambda is within " + std::to_string(sigma_min_[k]) +
                                     " (frame angle) of an eigenvalue; kernel is near-singular");
            const Eigen::Matrix<cd, 4, 2> c = M.partialPivLu().solve(J);
            Cp_[k] = c.topRows<2>();
            Cm_[k] = c.bottomRows<2>();
        }
    }

    /// Carries the frame Q0 at a to b with unit-length renormalization: evolve(Q0) = Q1 R.
    void transport(const Mat42c& Q0, double a, double b, Mat42c& Q1, Mat2c& R) const {
        auto rhs = [&](double x, const Vec8c& y) -> Vec8c {
            const Mat4c M = sp_.assemble(x, lambda_);
            Vec8c out;
            out.head<4>() = M * y.head<4>();
            out.tail<4>() = M * y.tail<4>();
            return out;
        };
        OdeOptions o;
        o.rtol = opt_.rtol;
        o.atol = opt_.atol;
        OdeStats st;
        Q1 = Q0;
        R = Mat2c::Identity();
        const double dir = b > a ? 1.0 : -1.0;
        double x = a;
        Mat2c Rc;
        while (dir * (b - x) > 0) {
            const double xn = dir * (b - x) > 1.0 ? x + dir : b;
            o.h0 = st.last_h > 0 ? st.last_h : std::abs(xn - x);
            const Mat42c Y = detail::unpack(dopri5(rhs, x, xn, detail::pack(Q1), o, &st));
            detail::thin_qr(Y, Q1, Rc);
            R = Rc * R;
            x = xn;
        }
        steps_ += st.accepted + st.rejected;
    }

    cd lambda() const { return lambda_; }
    const std::vector<double>& nodes() const { return x_; }
    double min_frame_angle() const { return *std::min_element(sigma_min_.begin(), sigma_min_.end()); }

    /// Full phase-variable kernel (G; dG/dx) at (x_i, y_j); for i == j the x > y limit is returned.
    Mat42c augmented(std::size_t i, std::size_t j, bool from_left = false) const {
        if (i > j || (i == j && !from_left)) {
            Mat2c a = Cp_[j];
            for (std::size_t k = j; k < i; ++k) a = Rinv_[k] * a;
            return Qp_[i] * a;
        }
        Mat2c b = Cm_[j];
        for (std::size_t k = j; k-- > i;) b = Sinv_[k] * b;
        return -(Qm_[i] * b);
    }

    Mat2c kernel(std::size_t i, std::size_t j) const { return augmented(i, j).topRows<2>(); }

    /// All kernel blocks G(x_i, y_j) for a fixed node j, in O(n).
    std::vector<Mat2c> column(std::size_t j) const {
        const std::size_t n = x_.size();
        std::vector<Mat2c> out(n);
        Mat2c a = Cp_[j];
        out[j] = (Qp_[j] * a).topRows<2>();
        for (std::size_t i = j + 1; i < n; ++i) {
            a = Rinv_[i - 1] * a;
            out[i] = (Qp_[i] * a).topRows<2>();
        }
        Mat2c b = Cm_[j];
        for (std::size_t i = j; i-- > 0;) {
            b = Sinv_[i] * b;
            out[i] = -(Qm_[i] * b).topRows<2>();
        }
        return out;
    }

    /// (L - lambda)^{-1} g by trapezoid quadrature in y over the nodes.
    std::vector<Vec2c> apply(const std::vector<Vec2c>& g) const {
        const std::size_t n = x_.size();
        if (g.size() != n) throw InputError("resolvent apply: size mismatch");
        std::vector<double> w(n, 0.0);
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double h = x_[k + 1] - x_[k];
            w[k] += 0.5 * h;
            w[k + 1] += 0.5 * h;
        }
        std::vector<Vec2c> out(n, Vec2c::Zero());
        Vec2c T = Vec2c::Zero();
        for (std::size_t k = 0; k < n; ++k) {
            if (k > 0) T = Rinv_[k - 1] * T;
            T += Cp_[k] * g[k] * w[k];
            out[k] += (Qp_[k] * T).head<2>();
        }
        T.setZero();
        for (std::size_t k = n - 1; k-- > 0;) {
            T = Sinv_[k] * (T + Cm_[k + 1] * g[k + 1] * w[k + 1]);
            out[k] -= (Qm_[k] * T).head<2>();
        }
        return out;
    }

private:
    const SpectralProblem& sp_;
    cd lambda_;
    std::vector<double> x_;
    ResolventOptions opt_;
    std::vector<Mat42c> Qp_, Qm_;
    std::vector<Mat2c> Rinv_, Sinv_, Cp_, Cm_;
    std::vector<double> sigma_min_;
    mutable long steps_ = 0;
public:
    long steps() const { return steps_; }
};

struct ResolventSample {
    cd lambda;
    std::vector<double> x, y;
    std::vector<std::vector<Mat2c>> G;  // G[j][i] = G(x_i, y_j)
    double frame_angle = 0;
};

/// Kernel on an x grid for a list of source points y (the union is used as the node set).
inline ResolventSample resolvent_kernel(const SpectralProblem& sp, cd lambda, const std::vector<double>& xs,
                                        const std::vector<double>& ys, ResolventOptions opt = {}) {
    std::vector<double> nodes = xs;
    nodes.insert(nodes.end(), ys.begin(), ys.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const ResolventSolver rs(sp, lambda, nodes, opt);
    auto index = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };
    ResolventSample out;
    out.lambda = lambda;
    out.x = xs;
    out.y = ys;
    out.frame_angle = rs.min_frame_angle();
    for (double y : ys) {
        const auto col = rs.column(index(y));
        std::vector<Mat2c> g;
        for (double x : xs) g.push_back(col[index(x)]);
        out.G.push_back(std::move(g));
    }
    return out;
}

/// Closed-form kernel of the constant-coefficient operator frozen at the plus end state:
/// G = (I,0) e^{M(x-y)} P_s J for x > y and -(I,0) e^{M(x-y)} P_u J for x < y, J = (0; B^{-1}).
inline Mat2c constant_coefficient_kernel(const SpectralProblem& sp, cd lambda, double x, double y) {
    const Mat4c M = sp.assemble_limit(Side::Plus, lambda);
    Eigen::ComplexEigenSolver<Mat4c> es(M);
    const Mat4c V = es.eigenvectors();
    const Vec4c mu = es.eigenvalues();
    Mat42c J = Mat42c::Zero();
    J(2, 0) = 1.0;
    J(3, 1) = 1.0 / sp.d();
    const Mat42c coef = V.partialPivLu().solve(J);
    std::array<int, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(), [&](int a, int b) { return mu[a].real() < mu[b].real(); });
    Mat42c acc = Mat42c::Zero();
    const bool right = x >= y;
    for (int r = 0; r < 4; ++r) {
        const int k = order[r];
        const bool stable = r < 2;
        if (stable != right) continue;
        acc += V.col(k) * std::exp(mu[k] * (x - y)) * coef.row(k);
    }
    return right ? Mat2c(acc.topRows<2>()) : Mat2c(-acc.topRows<2>());
}

// ---------------------------------------------------------------------------------------------
// Low-frequency structure

struct ResidueReport {
    std::vector<double> x, y;
    double rho = 0;
    double rank_ratio = 0;           // sigma_2 / sigma_1 of the sampled residue
    double x_cosine = 0;             // cosine similarity of the x-factor with the profile derivative
    std::vector<Vec2d> y_factor;     // residue y-factor normalized against the profile derivative
    double y_factor_max = 0;
    double minus_annihilation = 0;   // |y_factor(y_min) . (-q, 1)| / |y_factor(y_min)|
    bool degenerate = false;
};

/// Residue of G_lambda at 0 from the mean of lambda G_lambda at lambda = rho {1, i, -1, -i}.
inline ResidueReport pole_structure(const SpectralProblem& sp, const std::vector<double>& xs,
                                    const std::vector<double>& ys, double rho = 0.0) {
    ResidueReport rep;
    rep.x = xs;
    rep.y = ys;
    rep.rho = rho > 0 ? rho : EvansFunction::default_r0(sp) / 10.0;
    const std::array<cd, 3> pts{cd(rep.rho, 0), cd(0, rep.rho), cd(-rep.rho, 0)};
    std::array<ResolventSample, 3> S;
    parallel_for(3, [&](std::size_t k) { S[k] = resolvent_kernel(sp, pts[k], xs, ys); });
    const std::size_t nx = xs.size(), ny = ys.size();
    Eigen::MatrixXd R(2 * nx, 2 * ny);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) {
            // the -i rho sample is the conjugate of the +i rho sample
            const Mat2c m = (pts[0] * S[0].G[j][i] + 2.0 * (pts[1] * S[1].G[j][i]).real().cast<cd>() +
                             pts[2] * S[2].G[j][i]) / 4.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) R(2 * i + a, 2 * j + b) = m(a, b).real();
        }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto sv = svd.singularValues();
    rep.rank_ratio = sv.size() > 1 ? sv[1] / sv[0] : 0.0;
    Eigen::VectorXd up(2 * nx);
    for (std::size_t i = 0; i < nx; ++i) {
        const ProfilePoint p = sp.profile().at(xs[i]);
        up[2 * i] = p.up;
        up[2 * i + 1] = p.zp;
    }
    rep.x_cosine = std::abs(svd.matrixU().col(0).dot(up)) / up.norm();
    const Eigen::VectorXd yf = R.transpose() * up / up.squaredNorm();
    for (std::size_t j = 0; j < ny; ++j) {
        rep.y_factor.emplace_back(yf[2 * j], yf[2 * j + 1]);
        rep.y_factor_max = std::max(rep.y_factor_max, rep.y_factor.back().norm());
    }
    const std::size_t jmin = std::min_element(ys.begin(), ys.end()) - ys.begin();
    const Vec2d f = rep.y_factor[jmin];
    rep.minus_annihilation = std::abs(-sp.q() * f[0] + f[1]) / f.norm();
    rep.degenerate = rep.rank_ratio > 1e-3;
    return rep;
}

// ---------------------------------------------------------------------------------------------
// Excited term

/// Normalized cumulative Gaussian: errfn(z) = pi^{-1/2} int_{-inf}^z e^{-xi^2} d xi.
inline double errfn(double z) { return 0.5 * std::erfc(-z); }

class ExcitedKernel {
public:
    /// pi vectors: the conserved adjoint mode c (1, q) for y <= 0 and its fluid/reaction split
    /// for y >= 0 obtained by integrating the adjoint system at lambda = 0 in from +infinity.
    explicit ExcitedKernel(const SpectralProblem& sp, double hy = 0.02) : sp_(sp) {
        const Profile& P = sp.profile();
        const double du = P.problem.u_plus - P.problem.u_minus + (P.problem.z_plus - P.problem.z_minus) * sp.q();
        if (std::abs(du) < 1e-12) throw NumericalError("excited kernel: degenerate mass normalization");
        c_ = 1.0 / du;
        pi_global_ = Vec2d(c_, c_ * sp.q());
        const LimitData Lp = limit_data(sp, Side::Plus);
        const LimitData Lm = limit_data(sp, Side::Minus);
        alpha_plus_ = Lp.alpha;
        alpha_minus_ = Lm.alpha;
        // left eigenvector (1, beta/(alpha+ + s)) of the plus-side convection matrix; with beta = 0
        // the matrix is diagonal and the ratio is 0 even when alpha+ = -s
        if (Lp.beta != 0.0 && std::abs(Lp.alpha + sp.s()) < 1e-12)
            throw NumericalError("excited kernel: coincident plus-side characteristic speeds with coupling");
        const double ratio = Lp.beta == 0.0 ? 0.0 : Lp.beta / (Lp.alpha + sp.s());
        lim_f_ = Vec2d(c_, c_ * ratio);
        lim_r_ = Vec2d(0.0, c_ * (sp.q() - ratio));

        Y_ = sp.X();
        const int n = std::max(2, static_cast<int>(std::ceil(Y_ / hy)));
        h_ = Y_ / n;
        auto rhs = [&](double x, const Vec8c& y) -> Vec8c {
            const Mat4c M = sp_.adjoint_assemble(x, 0.0);
            Vec8c out;
            out.head<4>() = M * y.head<4>();
            out.tail<4>() = M * y.tail<4>();
            return out;
        };
        Vec8c w = Vec8c::Zero();
        w.head<2>() = lim_f_.cast<cd>();
        w.segment<2>(4) = lim_r_.cast<cd>();
        samples_.assign(n + 1, Vec8c::Zero());
        samples_[n] = w;
        OdeOptions o;
        o.rtol = 1e-11;
        o.atol = 1e-13;
        for (int k = n; k-- > 0;) {
            w = dopri5(rhs, (k + 1) * h_, k * h_, w, o);
            samples_[k] = w;
        }
    }

    double c() const { return c_; }
    Vec2d pi_global() const { return pi_global_; }
    Vec2d limit_fluid_plus() const { return lim_f_; }
    Vec2d limit_reaction_plus() const { return lim_r_; }
    double alpha_minus() const { return alpha_minus_; }
    double alpha_plus() const { return alpha_plus_; }

    /// (pi, pi') of the fluid (j = 0) or reaction (j = 1) plus-side mode at y >= 0.
    std::pair<Vec2d, Vec2d> pi_plus(int j, double y) const {
        if (y >= Y_) return {j == 0 ? lim_f_ : lim_r_, Vec2d::Zero()};
        y = std::max(y, 0.0);
        const int k = std::min(static_cast<int>(y / h_), static_cast<int>(samples_.size()) - 2);
        const double t = (y - k * h_) / h_;
        Vec2d v, dv;
        for (int c = 0; c < 2; ++c) {
            const double p0 = samples_[k][4 * j + c].real(), d0 = samples_[k][4 * j + 2 + c].real();
            const double p1 = samples_[k + 1][4 * j + c].real(), d1 = samples_[k + 1][4 * j + 2 + c].real();
            const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
            const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
            v[c] = h00 * p0 + h10 * h_ * d0 + h01 * p1 + h11 * h_ * d1;
            const double g00 = (6 * t * t - 6 * t) / h_, g10 = 3 * t * t - 4 * t + 1;
            const double g01 = (-6 * t * t + 6 * t) / h_, g11 = 3 * t * t - 2 * t;
            dv[c] = g00 * p0 + g10 * d0 + g01 * p1 + g11 * d1;
        }
        return {v, dv};
    }

    Vec2d pi_fluid_plus(double y) const { return pi_plus(0, y).first; }
    Vec2d pi_reaction_plus(double y) const { return pi_plus(1, y).first; }
    Vec2d pi_fluid_minus(double) const { return pi_global_; }

    /// e(y, t) as a row vector (acts on the source's (u, z) components).
    Vec2d operator()(double y, double t) const {
        if (!(t > 0)) throw InputError("excited_term: t must be positive");
        const double s = sp_.s(), d = sp_.d();
        const double rt = std::sqrt(4 * t), rdt = std::sqrt(4 * d * t);
        if (y <= 0) {
            if (alpha_minus_ > 0)
                return (errfn((y + alpha_minus_ * t) / rt) - errfn((y - alpha_minus_ * t) / rt)) * pi_fluid_minus(y);
            return pi_global_;
        }
        const Vec2d react = (errfn((y + s * t) / rdt) - errfn((y - s * t) / rdt)) * pi_reaction_plus(y);
        if (alpha_plus_ < 0)
            return (errfn((y - alpha_plus_ * t) / rt) - errfn((y + alpha_plus_ * t) / rt)) * pi_fluid_plus(y) + react;
        return react;
    }

private:
    const SpectralProblem& sp_;
    double c_ = 0, alpha_plus_ = 0, alpha_minus_ = 0, Y_ = 0, h_ = 0;
    Vec2d pi_global_, lim_f_, lim_r_;
    std::vector<Vec8c> samples_;
};

// ---------------------------------------------------------------------------------------------
// Inverse Laplace transform

struct IltOptions {
    double mu0 = 0.0;       // parabola vertex (0 = auto, 1/t clipped to [0.05, 1])
    double a = 0.0;         // parabola curvature (0 = auto)
    double dsigma = 0.0;    // initial node spacing (0 = auto)
    double rel_tol = 1e-4;  // node-doubling convergence tolerance
    int max_doublings = 6;
    double tail = 1e-13;    // truncation level of e^{Re lambda t}
};

struct IltContour {
    double mu0 = 0, a = 0, sigma_max = 0;
    cd at(double sigma) const { return cd(mu0 - a * sigma * sigma, sigma); }
    cd dlambda(double sigma) const { return cd(-2 * a * sigma, 1.0); }
};

inline IltContour ilt_contour(const SpectralProblem& sp, double t, const IltOptions& io) {
    IltContour c;
    const double am = limit_data(sp, Side::Minus).alpha, ap = limit_data(sp, Side::Plus).alpha;
    const double amax = std::max({std::abs(am), std::abs(ap), 1e-6});
    c.a = io.a > 0 ? io.a : 0.5 * std::min(1.0 / (amax * amax), sp.d() / (sp.s() * sp.s()));
    c.mu0 = io.mu0 > 0 ? io.mu0 : std::clamp(1.0 / t, 0.05, 1.0);
    c.sigma_max = std::sqrt((c.mu0 * t - std::log(io.tail)) / (c.a * t));
    return c;
}

struct IltResult {
    std::vector<double> values;  // real result, flattened
    int nodes = 0;
    double rel_change = 0;
    bool converged = false;
    IltContour contour;
};

/// Real-valued inverse Laplace transform of -(L - lambda)^{-1} data:
///   -(1/pi) Im int_0^inf e^{lambda t} F(lambda) lambda'(sigma) d sigma,
/// where F returns the flattened transform; trapezoid rule with node doubling.
inline IltResult inverse_laplace(const std::function<std::vector<cd>(cd)>& F, const IltContour& c, double t,
                                 const IltOptions& io = {}) {
    IltResult res;
    res.contour = c;
    double h = io.dsigma > 0 ? io.dsigma : std::min(0.25, M_PI / (4.0 * t));
    h = std::min(h, c.sigma_max / 8);
    int n = static_cast<int>(std::ceil(c.sigma_max / h));
    h = c.sigma_max / n;
    std::vector<std::vector<cd>> vals(n + 1);
    auto integrand = [&](double sigma) {
        const cd lam = c.at(sigma);
        std::vector<cd> v = F(lam);
        const cd w = std::exp(lam * t) * c.dlambda(sigma);
        for (auto& e : v) e *= w;
        return v;
    };
    parallel_for(vals.size(), [&](std::size_t i) { vals[i] = integrand(i * h); });
    auto sum = [&](const std::vector<std::vector<cd>>& vv, double hh) {
        std::vector<double> out(vv[0].size(), 0.0);
        for (std::size_t i = 0; i < vv.size(); ++i) {
            const double w = (i == 0 || i + 1 == vv.size()) ? 0.5 : 1.0;
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * vv[i][k].imag();
        }
        for (auto& e : out) e *= -hh / M_PI;
        return out;
    };
    std::vector<double> prev = sum(vals, h);
    for (int d = 0; d < io.max_doublings; ++d) {
        std::vector<std::vector<cd>> mids(n);
        parallel_for(mids.size(), [&](std::size_t i) { mids[i] = integrand((i + 0.5) * h); });
        std::vector<std::vector<cd>> merged;
        merged.reserve(2 * n + 1);
        for (int i = 0; i < n; ++i) {
            merged.push_back(std::move(vals[i]));
            merged.push_back(std::move(mids[i]));
        }
        merged.push_back(std::move(vals[n]));
        vals = std::move(merged);
        n *= 2;
        h *= 0.5;
        std::vector<double> cur = sum(vals, h);
        double num = 0, den = 0;
        for (std::size_t k = 0; k < cur.size(); ++k) {
            num += std::abs(cur[k] - prev[k]);
            den += std::abs(cur[k]);
        }
        res.rel_change = den > 0 ? num / den : num;
        prev = std::move(cur);
        if (res.rel_change < io.rel_tol) {
            res.converged = true;
            break;
        }
    }
    res.values = std::move(prev);
    res.nodes = n + 1;
    if (!res.converged) throw NumericalError("inverse_laplace: quadrature did not converge (rel change " +
                                             std::to_string(res.rel_change) + ")");
    return res;
}

struct GreenSample {
    double x = 0, t = 0, y = 0;
    Mat2 G, E, G_tilde;
    int nodes = 0;
};

/// Green function G(x, t; y) and its split into the excited part E = U'(x) e(y, t) and the remainder.
inline GreenSample green_function(const SpectralProblem& sp, const ExcitedKernel& ek, double x, double t, double y,
                                  const IltOptions& io = {}) {
    if (!(t > 0)) throw InputError("green_function: t must be positive");
    std::vector<double> nodes{std::min(x, y), std::max(x, y)};
    if (x == y) nodes.pop_back();
    const std::size_t i = x >= y ? nodes.size() - 1 : 0, j = x >= y ? 0 : nodes.size() - 1;
    auto F = [&](cd lam) {
        const ResolventSolver rs(sp, lam, nodes);
        const Mat2c g = rs.kernel(i, j);
        return std::vector<cd>{g(0, 0), g(1, 0), g(0, 1), g(1, 1)};
    };
    const IltContour c = ilt_contour(sp, t, io);
    const IltResult r = inverse_laplace(F, c, t, io);
    GreenSample s;
    s.x = x;
    s.t = t;
    s.y = y;
    s.G << r.values[0], r.values[2], r.values[1], r.values[3];
    const ProfilePoint p = sp.profile().at(x);
    const Vec2d e = ek(y, t);
    s.E = Eigen::Vector2d(p.up, p.zp) * e.transpose();
    s.G_tilde = s.G - s.E;
    s.nodes = r.nodes;
    return s;
}

/// Solution of the linearized equation at time t from data g on the node grid: int G(x, t; y) g(y) dy.
inline std::vector<Vec2d> green_apply(const SpectralProblem& sp, const std::vector<double>& nodes,
                                      const std::vector<Vec2d>& g, double t, const IltOptions& io = {},
                                      IltResult* info = nullptr) {
    std::vector<Vec2c> gc(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) gc[k] = g[k].cast<cd>();
    auto F = [&](cd lam) {
        const ResolventSolver rs(sp, lam, nodes);
        const auto w = rs.apply(gc);
        std::vector<cd> flat(2 * w.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
            flat[2 * k] = w[k][0];
            flat[2 * k + 1] = w[k][1];
        }
        return flat;
    };
    const IltContour c = ilt_contour(sp, t, io);
    IltResult r = inverse_laplace(F, c, t, io);
    std::vector<Vec2d> out(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) out[k] = Vec2d(r.values[2 * k], r.values[2 * k + 1]);
    if (info) *info = std::move(r);
    return out;
}

}  // namespace combust
