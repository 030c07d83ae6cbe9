#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "combust/error.hpp"
#include "combust/hugoniot.hpp"
#include "combust/model.hpp"
#include "combust/ode.hpp"

namespace combust {

enum class Side { Minus, Plus };

inline std::string to_string(Side s) { return s == Side::Minus ? "minus" : "plus"; }

/// Traveling-wave ODE in the variables Y = (u, z, y = z').
class TravelingWaveODE {
public:
    TravelingWaveODE(ModelParams params, WaveProblem problem) : p_(std::move(params)), w_(problem) {
        fm_ = p_.flux.f(w_.u_minus, 0.0);
    }

    Eigen::Vector3d rhs(const Eigen::Vector3d& Y) const {
        const double u = Y[0], z = Y[1], y = Y[2];
        const double s = w_.s;
        Eigen::Vector3d F;
        F[0] = (p_.flux.f(u, z) - fm_ - p_.q * p_.d * y - s * p_.q * z - s * (u - w_.u_minus)) / p_.b;
        F[1] = y;
        F[2] = (-s * y + p_.k * p_.ignition.phi(u) * z) / p_.d;
        return F;
    }

    Eigen::Matrix3d jacobian(const Eigen::Vector3d& Y) const {
        const double u = Y[0], z = Y[1];
        const double s = w_.s;
        const FluxValues fv = p_.flux.eval(u, z);
        Eigen::Matrix3d J;
        J << (fv.f_u - s) / p_.b, (fv.f_z - s * p_.q) / p_.b, -p_.q * p_.d / p_.b,  //
            0.0, 0.0, 1.0,                                                         //
            p_.k * p_.ignition.dphi(u) * z / p_.d, p_.k * p_.ignition.phi(u) / p_.d, -s / p_.d;
        return J;
    }

    Eigen::Vector3d end_state(Side side) const {
        return side == Side::Minus ? Eigen::Vector3d(w_.u_minus, w_.z_minus, 0.0)
                                   : Eigen::Vector3d(w_.u_plus, w_.z_plus, 0.0);
    }

    const ModelParams& params() const { return p_; }
    const WaveProblem& problem() const { return w_; }

private:
    ModelParams p_;
    WaveProblem w_;
    double fm_ = 0;
};

struct EquilibriumAnalysis {
    Side side = Side::Minus;
    Eigen::Matrix3d J;
    Eigen::Vector3d eigenvalues;    // real parts, ascending
    Eigen::Matrix3d right;          // columns: right eigenvectors (unit norm)
    Eigen::Matrix3d left;           // rows: left eigenvectors, normalized left.row(i)*right.col(i) = 1
    int n_stable = 0, n_unstable = 0, n_center = 0;
    double center_tol = 0;

    bool is_center(int i) const { return std::abs(eigenvalues[i]) <= center_tol; }
    bool is_stable(int i) const { return eigenvalues[i] < -center_tol; }
    bool is_unstable(int i) const { return eigenvalues[i] > center_tol; }
};

inline EquilibriumAnalysis analyze_matrix(const Eigen::Matrix3d& J, Side side) {
    EquilibriumAnalysis ea;
    ea.side = side;
    ea.J = J;
    Eigen::EigenSolver<Eigen::Matrix3d> es(J);
    Eigen::Vector3cd ev = es.eigenvalues();
    Eigen::Matrix3cd V = es.eigenvectors();
    const double scale = std::max(1.0, J.norm());
    for (int i = 0; i < 3; ++i)
        if (std::abs(ev[i].imag()) > 1e-10 * scale)
            throw NumericalError("equilibrium Jacobian has complex eigenvalues; rest point is a focus");
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return ev[a].real() < ev[b].real(); });
    for (int i = 0; i < 3; ++i) {
        ea.eigenvalues[i] = ev[idx[i]].real();
        Eigen::Vector3d v = V.col(idx[i]).real();
        v.normalize();
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0) v = -v;
        ea.right.col(i) = v;
    }
    ea.left = ea.right.inverse();
    ea.center_tol = 1e-9 * scale;
    for (int i = 0; i < 3; ++i) {
        if (ea.is_center(i))
            ++ea.n_center;
        else if (ea.is_stable(i))
            ++ea.n_stable;
        else
            ++ea.n_unstable;
    }
    return ea;
}

inline EquilibriumAnalysis equilibrium_jacobian(const TravelingWaveODE& ode, Side side) {
    return analyze_matrix(ode.jacobian(ode.end_state(side)), side);
}

/// Quintic Hermite interpolation on [0,1] scaled by step h: returns value and x-derivative.
inline std::pair<double, double> quintic_hermite(double t, double h, double p0, double d0, double s0, double p1,
                                                 double d1, double s1) {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double H3 = 0.5 * (t3 - 2 * t4 + t5);
    const double H4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double H5 = 10 * t3 - 15 * t4 + 6 * t5;
    const double D0 = -30 * t2 + 60 * t3 - 30 * t4;
    const double D1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double D2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double D3 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    const double D4 = -12 * t2 + 28 * t3 - 15 * t4;
    const double D5 = 30 * t2 - 60 * t3 + 30 * t4;
    const double val = H0 * p0 + H1 * h * d0 + H2 * h * h * s0 + H5 * p1 + H4 * h * d1 + H3 * h * h * s1;
    const double der = (D0 * p0 + D1 * h * d0 + D2 * h * h * s0 + D5 * p1 + D4 * h * d1 + D3 * h * h * s1) / h;
    return {val, der};
}

struct ProfilePoint {
    double u = 0, z = 0, y = 0;     // values
    double up = 0, zp = 0, yp = 0;  // first derivatives
};

struct DecayFit {
    Side side = Side::Minus;
    int component = 0;  // 0 = u, 1 = z
    bool fit = false;
    double rate = 0;
    double expected = 0;
    int points = 0;
    double rel_error() const { return fit && expected != 0 ? std::abs(rate - expected) / expected : INFINITY; }
};

struct DecayReport {
    std::vector<DecayFit> fits;
};

/// Discretized heteroclinic profile on a uniform symmetric grid, with quintic Hermite interpolation.
class Profile {
public:
    ModelParams params;
    WaveProblem problem;
    double X = 0, h = 0;
    std::vector<double> xi;
    std::vector<Eigen::Vector3d> Y, dY, ddY;
    double collocation_residual = 0;
    int continuation_steps = 0;
    int newton_iterations = 0;

    std::size_t size() const { return xi.size(); }
    TravelingWaveODE ode() const { return TravelingWaveODE(params, problem); }

    Eigen::Vector3d end_state(Side s) const {
        return s == Side::Minus ? Eigen::Vector3d(problem.u_minus, problem.z_minus, 0.0)
                                : Eigen::Vector3d(problem.u_plus, problem.z_plus, 0.0);
    }

    /// Interpolated profile; outside [-X, X] the end states are returned with zero derivatives.
    ProfilePoint at(double x) const {
        ProfilePoint pt;
        if (x < -X || x > X) {
            const Eigen::Vector3d e = end_state(x < 0 ? Side::Minus : Side::Plus);
            pt.u = e[0];
            pt.z = e[1];
            return pt;
        }
        double r = (x + X) / h;
        std::size_t i = static_cast<std::size_t>(std::floor(r));
        if (i >= xi.size() - 1) i = xi.size() - 2;
        const double t = (x - xi[i]) / h;
        auto c = [&](int k) {
            return quintic_hermite(t, h, Y[i][k], dY[i][k], ddY[i][k], Y[i + 1][k], dY[i + 1][k], ddY[i + 1][k]);
        };
        auto [u, up] = c(0);
        auto [z, zp] = c(1);
        auto [y, yp] = c(2);
        pt.u = u;
        pt.z = z;
        pt.y = y;
        pt.up = up;
        pt.zp = zp;
        pt.yp = yp;
        return pt;
    }

    Eigen::Vector3d state(double x) const {
        const ProfilePoint p = at(x);
        return {p.u, p.z, p.y};
    }

    std::size_t center_index() const { return (xi.size() - 1) / 2; }
};

struct ProfileOptions {
    double h = 0.01;             // target grid spacing
    double X = 0.0;              // half-width (0 = automatic from decay rates)
    double decay_target = 1e-8;  // e^{-rate X} target for the automatic half-width
    double newton_tol = 1e-12;
    int max_newton = 30;
    double dq_initial = 0.1;
    double dq_min = 1e-6;
};

struct ProfileOutcome {
    std::optional<Profile> profile;
    std::string diagnostic;
    bool connected() const { return profile.has_value(); }
};

namespace detail {

struct BvpSetup {
    ModelParams params;
    WaveProblem problem;
    std::vector<Eigen::Vector3d> left_rows, right_rows;
};

inline BvpSetup make_bvp_setup(const ModelParams& p, const WaveProblem& w) {
    BvpSetup b{p, w, {}, {}};
    TravelingWaveODE ode(p, w);
    const auto em = equilibrium_jacobian(ode, Side::Minus);
    const auto ep = equilibrium_jacobian(ode, Side::Plus);
    for (int i = 0; i < 3; ++i)
        if (!em.is_unstable(i)) b.left_rows.push_back(em.left.row(i).transpose());
    for (int i = 0; i < 3; ++i)
        if (!ep.is_stable(i)) b.right_rows.push_back(ep.left.row(i).transpose());
    return b;
}

inline Eigen::VectorXd bvp_residual(const BvpSetup& b, const std::vector<double>& xi,
                                    const std::vector<Eigen::Vector3d>& Y) {
    TravelingWaveODE ode(b.params, b.problem);
    const std::size_t N = xi.size(), M = (N - 1) / 2;
    const double h = xi[1] - xi[0];
    Eigen::VectorXd R(3 * N);
    const Eigen::Vector3d Em = ode.end_state(Side::Minus), Ep = ode.end_state(Side::Plus);
    int row = 0;
    for (const auto& l : b.left_rows) R[row++] = l.dot(Y[0] - Em);
    R[row++] = Y[M][0] - 0.5 * (b.problem.u_minus + b.problem.u_plus);
    std::vector<Eigen::Vector3d> F(N);
    for (std::size_t i = 0; i < N; ++i) F[i] = ode.rhs(Y[i]);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const Eigen::Vector3d Ym = 0.5 * (Y[i] + Y[i + 1]) + (h / 8.0) * (F[i] - F[i + 1]);
        const Eigen::Vector3d Fm = ode.rhs(Ym);
        R.segment<3>(row) = Y[i + 1] - Y[i] - (h / 6.0) * (F[i] + 4.0 * Fm + F[i + 1]);
        row += 3;
    }
    for (const auto& r : b.right_rows) R[row++] = r.dot(Y[N - 1] - Ep);
    return R;
}

inline Eigen::SparseMatrix<double> bvp_jacobian(const BvpSetup& b, const std::vector<double>& xi,
                                                const std::vector<Eigen::Vector3d>& Y) {
    TravelingWaveODE ode(b.params, b.problem);
    const std::size_t N = xi.size(), M = (N - 1) / 2;
    const double h = xi[1] - xi[0];
    std::vector<Eigen::Triplet<double>> T;
    T.reserve(18 * N + 10);
    int row = 0;
    for (const auto& l : b.left_rows) {
        for (int k = 0; k < 3; ++k) T.emplace_back(row, k, l[k]);
        ++row;
    }
    T.emplace_back(row++, 3 * M, 1.0);
    std::vector<Eigen::Vector3d> F(N);
    std::vector<Eigen::Matrix3d> J(N);
    for (std::size_t i = 0; i < N; ++i) {
        F[i] = ode.rhs(Y[i]);
        J[i] = ode.jacobian(Y[i]);
    }
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const Eigen::Vector3d Ym = 0.5 * (Y[i] + Y[i + 1]) + (h / 8.0) * (F[i] - F[i + 1]);
        const Eigen::Matrix3d Jm = ode.jacobian(Ym);
        const Eigen::Matrix3d Di = -I - (h / 6.0) * (J[i] + 4.0 * Jm * (0.5 * I + (h / 8.0) * J[i]));
        const Eigen::Matrix3d Dn = I - (h / 6.0) * (J[i + 1] + 4.0 * Jm * (0.5 * I - (h / 8.0) * J[i + 1]));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                T.emplace_back(row + r, 3 * i + c, Di(r, c));
                T.emplace_back(row + r, 3 * (i + 1) + c, Dn(r, c));
            }
        row += 3;
    }
    for (const auto& rr : b.right_rows) {
        for (int k = 0; k < 3; ++k) T.emplace_back(row, 3 * (N - 1) + k, rr[k]);
        ++row;
    }
    Eigen::SparseMatrix<double> A(3 * N, 3 * N);
    A.setFromTriplets(T.begin(), T.end());
    return A;
}

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    double residual = INFINITY;
};

inline NewtonResult newton_bvp(const BvpSetup& b, const std::vector<double>& xi, std::vector<Eigen::Vector3d>& Y,
                               double tol, int max_iter) {
    NewtonResult res;
    const std::size_t N = xi.size();
    Eigen::VectorXd R = bvp_residual(b, xi, Y);
    double rn = R.lpNorm<Eigen::Infinity>();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it;
        res.residual = rn;
        if (!std::isfinite(rn)) return res;
        if (rn <= tol) {
            res.converged = true;
            return res;
        }
        Eigen::SparseMatrix<double> A = bvp_jacobian(b, xi, Y);
        A.makeCompressed();
        lu.compute(A);
        if (lu.info() != Eigen::Success) return res;
        Eigen::VectorXd dx = lu.solve(-R);
        if (lu.info() != Eigen::Success || !dx.allFinite()) return res;
        double lam = 1.0;
        bool accepted = false;
        for (int k = 0; k < 8; ++k) {
            std::vector<Eigen::Vector3d> Yt(Y);
            for (std::size_t i = 0; i < N; ++i) Yt[i] += lam * dx.segment<3>(3 * i);
            Eigen::VectorXd Rt = bvp_residual(b, xi, Yt);
            const double rt = Rt.lpNorm<Eigen::Infinity>();
            if (std::isfinite(rt) && (rt < (1.0 - 1e-4 * lam) * rn || rt <= tol)) {
                Y.swap(Yt);
                R = Rt;
                rn = rt;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if (!accepted) {
            // residual at round-off level cannot decrease further
            if (rn <= 100 * tol) res.converged = true;
            res.residual = rn;
            return res;
        }
    }
    res.iterations = max_iter;
    res.residual = rn;
    res.converged = rn <= tol;
    return res;
}

inline double slowest_rate(const TravelingWaveODE& ode) {
    const auto em = equilibrium_jacobian(ode, Side::Minus);
    const auto ep = equilibrium_jacobian(ode, Side::Plus);
    double rate = INFINITY;
    for (int i = 0; i < 3; ++i) {
        if (em.is_unstable(i)) rate = std::min(rate, em.eigenvalues[i]);
        if (ep.is_stable(i)) rate = std::min(rate, -ep.eigenvalues[i]);
    }
    return rate;
}

inline void fill_derivatives(Profile& P) {
    TravelingWaveODE ode(P.params, P.problem);
    const std::size_t N = P.xi.size();
    P.dY.resize(N);
    P.ddY.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        P.dY[i] = ode.rhs(P.Y[i]);
        P.ddY[i] = ode.jacobian(P.Y[i]) * P.dY[i];
    }
    const double h = P.h;
    double worst = 0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const Eigen::Vector3d Ym = 0.5 * (P.Y[i] + P.Y[i + 1]) + (h / 8.0) * (P.dY[i] - P.dY[i + 1]);
        const Eigen::Vector3d D = P.Y[i + 1] - P.Y[i] - (h / 6.0) * (P.dY[i] + 4.0 * ode.rhs(Ym) + P.dY[i + 1]);
        worst = std::max(worst, D.lpNorm<Eigen::Infinity>() / h);
    }
    P.collocation_residual = worst;
}

}  // namespace detail

/// Heteroclinic profile by collocation with natural-parameter continuation in q from the Burgers seed.
inline ProfileOutcome compute_profile(const WaveProblem& problem, const ModelParams& params,
                                      const ProfileOptions& opts = {}) {
    ProfileOutcome out;
    if (!problem.admissible)
        throw InputError("compute_profile: inadmissible end states (u- must lie in the ignition interval, u+ outside)");
    TravelingWaveODE target(params, problem);
    {
        const auto em = equilibrium_jacobian(target, Side::Minus);
        const auto ep = equilibrium_jacobian(target, Side::Plus);
        const int left = em.n_stable + em.n_center;
        const int right = ep.n_unstable + ep.n_center;
        if (left + right != 2) {
            out.diagnostic = "no connection: " + to_string(problem.cls) + " requires " + std::to_string(left + right) +
                             " boundary conditions for 2 free directions (codimension " +
                             std::to_string(left + right - 2) + " at fixed parameters)";
            return out;
        }
    }

    const double rate = detail::slowest_rate(target);
    double X = opts.X > 0 ? opts.X : std::log(1.0 / opts.decay_target) / rate;
    const int M = std::max(8, static_cast<int>(std::ceil(X / opts.h)));
    const double h = X / M;
    const int N = 2 * M + 1;
    std::vector<double> xi(N);
    for (int i = 0; i < N; ++i) xi[i] = -X + h * i;

    // q = 0 seed: Lax shock of the nonreactive flux, with the viscous Burgers tanh profile as initial guess
    ModelParams p0 = params;
    p0.q = 0.0;
    const auto roots0 = solve_rh(p0, problem.u_plus, problem.s);
    if (roots0.empty() || roots0.front().u_minus <= problem.u_plus) {
        out.diagnostic = "no connection: no nonreactive Lax shock to seed continuation";
        return out;
    }
    double um = roots0.front().u_minus;
    const double up = problem.u_plus;
    std::vector<Eigen::Vector3d> Y(N);
    for (int i = 0; i < N; ++i) {
        const double u = 0.5 * (um + up) - 0.5 * (um - up) * std::tanh(0.25 * (um - up) * xi[i]);
        const double z = 0.5 * (1.0 + std::tanh(0.5 * xi[i]));
        const double y = 0.25 / std::pow(std::cosh(0.5 * xi[i]), 2);
        Y[i] = Eigen::Vector3d(u, z, y);
    }

    auto setup_at = [&](double q, double u_minus) {
        ModelParams pq = params;
        pq.q = q;
        WaveProblem wq = make_problem(pq, u_minus, up, problem.s);
        return detail::make_bvp_setup(pq, wq);
    };

    int total_newton = 0;
    auto b0 = setup_at(0.0, um);
    auto r0 = detail::newton_bvp(b0, xi, Y, opts.newton_tol, opts.max_newton);
    total_newton += r0.iterations;
    if (!r0.converged) {
        out.diagnostic = "no connection: q=0 seed did not converge (residual " + std::to_string(r0.residual) + ")";
        return out;
    }

    double q = 0.0;
    int steps = 0;
    const double qt = params.q;
    double dq = std::min(std::abs(qt), opts.dq_initial) * (qt >= 0 ? 1.0 : -1.0);
    std::vector<Eigen::Vector3d> Yprev;
    double qprev = 0.0;
    while (q != qt) {
        double qn = q + dq;
        if ((dq > 0 && qn > qt) || (dq < 0 && qn < qt) || std::abs(qt - qn) < 1e-14) qn = qt;
        ModelParams pq = params;
        pq.q = qn;
        const auto roots = solve_rh(pq, up, problem.s);
        std::optional<double> best;
        for (const auto& r : roots)
            if (!best || std::abs(r.u_minus - um) < std::abs(*best - um)) best = r.u_minus;
        bool ok = false;
        std::vector<Eigen::Vector3d> Yt(Y);
        if (best) {
            if (!Yprev.empty() && q != qprev) {
                const double fac = (qn - q) / (q - qprev);
                for (int i = 0; i < N; ++i) Yt[i] = Y[i] + fac * (Y[i] - Yprev[i]);
            }
            auto b = setup_at(qn, *best);
            auto r = detail::newton_bvp(b, xi, Yt, opts.newton_tol, opts.max_newton);
            total_newton += r.iterations;
            ok = r.converged;
        }
        if (ok) {
            Yprev.swap(Y);
            Y.swap(Yt);
            qprev = q;
            q = qn;
            um = *best;
            ++steps;
            dq *= 1.5;
        } else {
            dq *= 0.5;
            if (std::abs(dq) < opts.dq_min) {
                out.diagnostic = "no connection: continuation stalled at q=" + std::to_string(q);
                return out;
            }
        }
    }
    if (std::abs(um - problem.u_minus) > 1e-8 * std::max(1.0, std::abs(problem.u_minus))) {
        out.diagnostic = "no connection: continuation reached a different RH branch (u- = " + std::to_string(um) + ")";
        return out;
    }

    Profile P;
    P.params = params;
    P.problem = problem;
    P.X = X;
    P.h = h;
    P.xi = std::move(xi);
    P.Y = std::move(Y);
    P.continuation_steps = steps;
    P.newton_iterations = total_newton;
    detail::fill_derivatives(P);
    out.profile = std::move(P);
    out.diagnostic = "converged";
    return out;
}

/// Convenience: profile of the strong-detonation root for (u+, s).
inline ProfileOutcome compute_strong_detonation(const ModelParams& params, double u_plus, double s,
                                                const ProfileOptions& opts = {}) {
    for (const auto& w : solve_rh(params, u_plus, s))
        if (w.cls == WaveClass::StrongDetonation) return compute_profile(w, params, opts);
    throw InputError("no strong detonation root for the given (u+, s)");
}

/// Log-linear fits of the tail deviations of u and z, compared with equilibrium eigenvalues.
inline DecayReport verify_decay(const Profile& P, double floor = 1e-9, double ceil = 1e-4) {
    DecayReport rep;
    TravelingWaveODE ode = P.ode();
    for (Side side : {Side::Minus, Side::Plus}) {
        const auto ea = equilibrium_jacobian(ode, side);
        const Eigen::Vector3d E = P.end_state(side);
        for (int c = 0; c < 2; ++c) {
            DecayFit fit;
            fit.side = side;
            fit.component = c;
            double expected = INFINITY;
            for (int i = 0; i < 3; ++i) {
                const bool decaying = side == Side::Minus ? ea.is_unstable(i) : ea.is_stable(i);
                if (decaying && std::abs(ea.right(c, i)) > 1e-8) expected = std::min(expected, std::abs(ea.eigenvalues[i]));
            }
            fit.expected = expected;
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            int n = 0;
            const double scale = std::max(1.0, std::abs(E[c]));
            for (std::size_t i = 0; i < P.size(); ++i) {
                const double x = P.xi[i];
                if ((side == Side::Minus) != (x < 0)) continue;
                const double dev = std::abs(P.Y[i][c] - E[c]);
                if (dev < floor * scale || dev > ceil * scale) continue;
                const double ly = std::log(dev);
                sx += x;
                sy += ly;
                sxx += x * x;
                sxy += x * ly;
                ++n;
            }
            fit.points = n;
            if (n >= 8) {
                const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                fit.rate = std::abs(slope);
                fit.fit = std::isfinite(slope);
            }
            rep.fits.push_back(fit);
        }
    }
    return rep;
}

/// Signed angle measure between two planes in R^3 that share the direction e:
/// ((a1 x a2) x (b1 x b2)) . e / (|a1 x a2| |b1 x b2|).
inline double plane_gamma(const Eigen::Vector3d& e, const Eigen::Vector3d& a1, const Eigen::Vector3d& a2,
                          const Eigen::Vector3d& b1, const Eigen::Vector3d& b2) {
    const Eigen::Vector3d nu = a1.cross(a2), ns = b1.cross(b2);
    const double den = nu.norm() * ns.norm();
    if (den == 0.0) return 0.0;
    return nu.cross(ns).dot(e.normalized()) / den;
}

namespace detail {

/// Transports two tangent vectors along the variational equation with orientation-preserving renormalization.
inline std::pair<Eigen::Vector3d, Eigen::Vector3d> transport_pair(const Profile& P, Eigen::Vector3d v1,
                                                                  Eigen::Vector3d v2, double x0, double x1) {
    TravelingWaveODE ode = P.ode();
    using V6 = Eigen::Matrix<double, 6, 1>;
    auto f = [&](double x, const V6& w) {
        const Eigen::Matrix3d J = ode.jacobian(P.state(x));
        V6 r;
        r.head<3>() = J * w.head<3>();
        r.tail<3>() = J * w.tail<3>();
        return r;
    };
    const double dir = x1 > x0 ? 1.0 : -1.0;
    double x = x0;
    OdeOptions o;
    o.rtol = 1e-11;
    o.atol = 1e-13;
    while (dir * (x1 - x) > 0) {
        const double xn = dir * (x1 - x) > 1.0 ? x + dir : x1;
        V6 w;
        w << v1, v2;
        w = dopri5(f, x, xn, w, o);
        v1 = w.head<3>();
        v2 = w.tail<3>();
        const double n1 = v1.norm();
        v1 /= n1;
        v2 -= v1.dot(v2) * v1;
        v2 /= v2.norm();
        x = xn;
    }
    return {v1, v2};
}

}  // namespace detail

/// Transversality measure of the connection: signed angle between the unstable manifold of the
/// minus equilibrium and the stable manifold of the plus equilibrium at xi = 0.
inline double transversality_gamma(const Profile& P) {
    TravelingWaveODE ode = P.ode();
    const auto em = equilibrium_jacobian(ode, Side::Minus);
    const auto ep = equilibrium_jacobian(ode, Side::Plus);
    std::vector<Eigen::Vector3d> unst, stab;
    for (int i = 0; i < 3; ++i) {
        if (em.is_unstable(i)) unst.push_back(em.right.col(i));
        if (ep.is_stable(i)) stab.push_back(ep.right.col(i));
    }
    if (unst.size() != 2 || stab.size() != 2)
        throw InputError("transversality_gamma: requires 2-dimensional unstable and stable manifolds");
    auto [a1, a2] = detail::transport_pair(P, unst[0], unst[1], -P.X, 0.0);
    auto [b1, b2] = detail::transport_pair(P, stab[0], stab[1], P.X, 0.0);
    const Eigen::Vector3d e = ode.rhs(P.state(0.0));
    const double g = plane_gamma(e, a1, a2, b1, b2);
    if (!std::isfinite(g)) throw NumericalError("transversality_gamma: non-finite result");
    return g;
}

}  // namespace combust
