#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <boost/math/tools/minima.hpp>

#include "combust/profile.hpp"
#include "combust/resolvent.hpp"
#include "combust/spectral.hpp"

namespace combust {

// Cell-centred uniform grid on [-L, L] in the co-moving frame.
struct Grid {
    double L = 0, dx = 0;
    int N = 0;
    std::vector<double> x;

    static Grid uniform(double L, double dx_target) {
        Grid g;
        g.L = L;
        g.N = static_cast<int>(std::ceil(2 * L / dx_target));
        g.dx = 2 * L / g.N;
        g.x.resize(g.N);
        for (int i = 0; i < g.N; ++i) g.x[i] = -L + (i + 0.5) * g.dx;
        return g;
    }
};

struct Field {
    Eigen::ArrayXd u, z;
    double t = 0;
};

enum class EvolutionMode { Nonlinear, Linearized };

struct EvolveOptions {
    double cfl = 0.4;
    double kappa = 1.0 / 3.0;
    double blowup_factor = 1e6;
};

// Method-of-lines right-hand side split into an implicit diffusion part and an explicit
// convection/reaction part, with an SBDF2 integrator.
class Evolver {
public:
    // Nonlinear model in the frame moving with speed s; Dirichlet data at the end states.
    Evolver(const ModelParams& params, double s, double u_minus, double u_plus, Grid grid, EvolveOptions opt = {})
        : mode_(EvolutionMode::Nonlinear), params_(params), s_(s), grid_(std::move(grid)), opt_(opt) {
        left_ = {u_minus, 0.0};
        right_ = {u_plus, 1.0};
        setup_time_step();
    }

    // Linearized model about the profile of sp; homogeneous Dirichlet data.
    Evolver(const SpectralProblem& sp, Grid grid, EvolveOptions opt = {})
        : mode_(EvolutionMode::Linearized), params_(sp.profile().params), s_(sp.s()), grid_(std::move(grid)), opt_(opt) {
        left_ = {0.0, 0.0};
        right_ = {0.0, 0.0};
        const int N = grid_.N;
        cell_.resize(N);
        face_.resize(N + 1);
        for (int i = 0; i < N; ++i) cell_[i] = sp.coefficients(grid_.x[i]);
        for (int i = 0; i <= N; ++i) face_[i] = sp.coefficients(-grid_.L + i * grid_.dx);
        setup_time_step();
    }

    const Grid& grid() const { return grid_; }
    double dt() const { return dt_; }
    EvolutionMode mode() const { return mode_; }
    double s() const { return s_; }
    std::pair<double, double> left_state() const { return left_; }
    std::pair<double, double> right_state() const { return right_; }

    // Explicit part: -(flux differences)/dx + reaction.
    void explicit_rhs(const Eigen::ArrayXd& u, const Eigen::ArrayXd& z, Eigen::ArrayXd& ru, Eigen::ArrayXd& rz) const {
        const int N = grid_.N;
        const double k = opt_.kappa;
        auto U = [&](int i) { return i < 0 ? left_.first : (i >= N ? right_.first : u[i]); };
        auto Z = [&](int i) { return i < 0 ? left_.second : (i >= N ? right_.second : z[i]); };
        Eigen::ArrayXd Fu(N + 1), Fz(N + 1);
        for (int f = 0; f <= N; ++f) {
            const int i = f - 1;  // face between cells i and i+1
            const double uL = U(i) + 0.25 * ((1 - k) * (U(i) - U(i - 1)) + (1 + k) * (U(i + 1) - U(i)));
            const double uR = U(i + 1) - 0.25 * ((1 + k) * (U(i + 1) - U(i)) + (1 - k) * (U(i + 2) - U(i + 1)));
            const double zL = Z(i) + 0.25 * ((1 - k) * (Z(i) - Z(i - 1)) + (1 + k) * (Z(i + 1) - Z(i)));
            const double zR = Z(i + 1) - 0.25 * ((1 + k) * (Z(i + 1) - Z(i)) + (1 - k) * (Z(i + 2) - Z(i + 1)));
            if (mode_ == EvolutionMode::Nonlinear) {
                const FluxValues a = params_.flux.eval(uL, zL), b = params_.flux.eval(uR, zR);
                const double speed = std::max(std::abs(a.f_u - s_), std::abs(b.f_u - s_));
                Fu[f] = 0.5 * (a.f - s_ * uL + b.f - s_ * uR) - 0.5 * speed * (uR - uL);
            } else {
                const Coefficients& c = face_[f];
                const double speed = std::abs(c.alpha);
                Fu[f] = 0.5 * (c.alpha * (uL + uR) + c.beta * (zL + zR)) - 0.5 * speed * (uR - uL);
            }
            Fz[f] = 0.5 * (-s_ * zL - s_ * zR) - 0.5 * std::abs(s_) * (zR - zL);
        }
        const double idx = 1.0 / grid_.dx;
        ru = -(Fu.tail(N) - Fu.head(N)) * idx;
        rz = -(Fz.tail(N) - Fz.head(N)) * idx;
        const double q = params_.q, kk = params_.k;
        if (mode_ == EvolutionMode::Nonlinear) {
            for (int i = 0; i < N; ++i) {
                const double w = kk * params_.ignition.phi(u[i]) * z[i];
                ru[i] += q * w;
                rz[i] -= w;
            }
        } else {
            for (int i = 0; i < N; ++i) {
                const Coefficients& c = cell_[i];
                const double a = kk * c.dphi * c.zbar, b = kk * c.phi;
                ru[i] += q * (a * u[i] + b * z[i]) + c.planted * u[i];
                rz[i] += -(a * u[i] + b * z[i]) + c.planted * z[i];
            }
        }
    }

    // Diffusion part with the Dirichlet data folded in.
    void diffusion(const Eigen::ArrayXd& v, double coef, double left, double right, Eigen::ArrayXd& out) const {
        const int N = grid_.N;
        const double c = coef / (grid_.dx * grid_.dx);
        out.resize(N);
        for (int i = 0; i < N; ++i) {
            const double a = i > 0 ? v[i - 1] : left, b = i + 1 < N ? v[i + 1] : right;
            out[i] = c * (a - 2 * v[i] + b);
        }
    }

    // Full semi-discrete right-hand side.
    void rhs(const Eigen::ArrayXd& u, const Eigen::ArrayXd& z, Eigen::ArrayXd& ru, Eigen::ArrayXd& rz) const {
        explicit_rhs(u, z, ru, rz);
        Eigen::ArrayXd du, dz;
        diffusion(u, params_.b, left_.first, right_.first, du);
        diffusion(z, params_.d, left_.second, right_.second, dz);
        ru += du;
        rz += dz;
    }

    // Advances the field to time T; observer(field) is called at multiples of snap_dt (and at T).
    // Returns false if the run was aborted for blow-up.
    bool evolve(Field& F, double T, double snap_dt, const std::function<void(const Field&)>& observer) const {
        const int N = grid_.N;
        Eigen::ArrayXd eu(N), ez(N), eu_prev(N), ez_prev(N), u_prev = F.u, z_prev = F.z;
        const double norm0 = std::max(1e-300, std::max(F.u.abs().maxCoeff(), F.z.abs().maxCoeff()));
        double next_snap = F.t + snap_dt;
        if (observer) observer(F);
        bool first = true;
        const double step = snap_dt > 0 ? snap_dt / std::ceil(snap_dt / dt_ - 1e-9) : dt_;
        while (F.t < T - 1e-12) {
            double h = std::min(step, T - F.t);
            const bool snap_hit = snap_dt > 0 && F.t + h >= next_snap - 1e-12;
            if (snap_hit) h = next_snap - F.t;
            const bool bdf1 = first || std::abs(h - last_h_) > 1e-9 * step;
            explicit_rhs(F.u, F.z, eu, ez);
            Eigen::ArrayXd ru, rz;
            double a0;
            if (bdf1) {
                ru = F.u / h + eu;
                rz = F.z / h + ez;
                a0 = 1.0 / h;
            } else {
                ru = (4 * F.u - u_prev) / (2 * h) + 2 * eu - eu_prev;
                rz = (4 * F.z - z_prev) / (2 * h) + 2 * ez - ez_prev;
                a0 = 1.5 / h;
            }
            u_prev = F.u;
            z_prev = F.z;
            eu_prev = eu;
            ez_prev = ez;
            F.u = solve_implicit(ru, a0, params_.b, left_.first, right_.first);
            F.z = solve_implicit(rz, a0, params_.d, left_.second, right_.second);
            F.t += h;
            last_h_ = h;
            first = false;
            if (snap_hit) {
                // a truncated step breaks the constant-step history: restart with one BDF1 step
                if (std::abs(h - step) > 1e-9 * step) first = true;
                next_snap += snap_dt;
                if (observer) observer(F);
            }
            const double nrm = std::max(F.u.abs().maxCoeff(), F.z.abs().maxCoeff());
            if (!std::isfinite(nrm) || nrm > opt_.blowup_factor * std::max(norm0, 1.0)) return false;
        }
        return true;
    }

private:
    void setup_time_step() {
        double speed = std::abs(s_);
        if (mode_ == EvolutionMode::Nonlinear) {
            const double lo = std::min(left_.first, right_.first), hi = std::max(left_.first, right_.first);
            for (int k = 0; k <= 64; ++k) {
                const double u = lo + (hi - lo) * k / 64.0;
                speed = std::max(speed, std::abs(params_.flux.eval(u, 0.5).f_u - s_));
            }
        } else {
            for (const auto& c : face_) speed = std::max(speed, std::abs(c.alpha) + std::abs(c.beta));
        }
        const double react = std::max(1e-12, params_.k * params_.ignition.amplitude * std::max(1.0, params_.q));
        dt_ = opt_.cfl * std::min(grid_.dx / speed, 1.0 / react);
    }

    // Solves (a0 - coef D2) v = r with the Dirichlet data (Thomas algorithm).
    Eigen::ArrayXd solve_implicit(const Eigen::ArrayXd& r, double a0, double coef, double left, double right) const {
        const int N = grid_.N;
        const double c = coef / (grid_.dx * grid_.dx);
        const double diag = a0 + 2 * c, off = -c;
        Eigen::ArrayXd cp(N), dp(N), v(N);
        Eigen::ArrayXd rhs = r;
        rhs[0] += c * left;
        rhs[N - 1] += c * right;
        cp[0] = off / diag;
        dp[0] = rhs[0] / diag;
        for (int i = 1; i < N; ++i) {
            const double m = diag - off * cp[i - 1];
            cp[i] = off / m;
            dp[i] = (rhs[i] - off * dp[i - 1]) / m;
        }
        v[N - 1] = dp[N - 1];
        for (int i = N - 1; i-- > 0;) v[i] = dp[i] - cp[i] * v[i + 1];
        return v;
    }

    EvolutionMode mode_;
    ModelParams params_;
    double s_;
    Grid grid_;
    EvolveOptions opt_;
    std::pair<double, double> left_, right_;
    std::vector<Coefficients> cell_, face_;
    double dt_ = 0;
    mutable double last_h_ = 0;
};

/// Profile sampled at the cell centres.
inline Field sample_profile(const Profile& P, const Grid& g) {
    Field F;
    F.u.resize(g.N);
    F.z.resize(g.N);
    for (int i = 0; i < g.N; ++i) {
        const ProfilePoint p = P.at(g.x[i]);
        F.u[i] = p.u;
        F.z[i] = p.z;
    }
    return F;
}

// -------------------------------------------------------------------------------------------
// Discrete steady state

struct SteadyStateReport {
    Field state;
    double residual = 0;      // max norm of the semi-discrete right-hand side
    double border = 0;        // bordering multiplier (vanishes for an exact discrete wave)
    int iterations = 0;
};

namespace detail {

// Value at x by 6-point Lagrange interpolation on the cell-centred grid; end states outside.
inline double lagrange6(const Eigen::ArrayXd& v, const Grid& g, double x, double left, double right) {
    const double xi = (x - g.x[0]) / g.dx;
    const int i0 = static_cast<int>(std::floor(xi)) - 2;
    const double t = xi - (i0 + 2);
    auto V = [&](int i) { return i < 0 ? left : (i >= g.N ? right : v[i]); };
    // nodes at offsets -2..3 relative to floor(xi)
    double out = 0;
    for (int a = 0; a < 6; ++a) {
        double w = 1.0;
        for (int b = 0; b < 6; ++b)
            if (b != a) w *= (t - (b - 2)) / double(a - b);
        out += w * V(i0 + a);
    }
    return out;
}

}  // namespace detail

/// Stationary solution of the semi-discrete nonlinear scheme, pinned by u(0) = (u- + u+)/2.
/// Newton on the bordered system [G(U) + c e = 0, phase(U) = 0] with a coloured finite-difference Jacobian.
inline SteadyStateReport discrete_steady_state(const Evolver& ev, const Profile& P, double tol = 1e-11,
                                               int max_iter = 20) {
    const Grid& g = ev.grid();
    const int N = g.N, n = 2 * N;
    SteadyStateReport rep;
    Field F = sample_profile(P, g);
    const double target = 0.5 * (ev.left_state().first + ev.right_state().first);
    // phase functional: linear interpolation of u at x = 0
    const int ip = std::clamp(static_cast<int>(std::floor((0.0 - g.x[0]) / g.dx)), 0, N - 2);
    const double wp = (0.0 - g.x[ip]) / g.dx;
    Eigen::VectorXd e(n);
    for (int i = 0; i < N; ++i) {
        const ProfilePoint p = P.at(g.x[i]);
        e[2 * i] = p.up;
        e[2 * i + 1] = p.zp;
    }
    e.normalize();
    auto residual = [&](const Eigen::ArrayXd& u, const Eigen::ArrayXd& z) {
        Eigen::ArrayXd ru, rz;
        ev.rhs(u, z, ru, rz);
        Eigen::VectorXd r(n);
        for (int i = 0; i < N; ++i) {
            r[2 * i] = ru[i];
            r[2 * i + 1] = rz[i];
        }
        return r;
    };
    double c = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd G = residual(F.u, F.z) + c * e;
        const double phase = (1 - wp) * F.u[ip] + wp * F.u[ip + 1] - target;
        rep.residual = G.lpNorm<Eigen::Infinity>();
        rep.iterations = it;
        if (rep.residual < tol && std::abs(phase) < tol) break;
        // coloured finite-difference Jacobian: stencil half-width 2 cells
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(n) * 10 + 2 * n);
        const Eigen::VectorXd G0 = residual(F.u, F.z);
        for (int comp = 0; comp < 2; ++comp)
            for (int color = 0; color < 5; ++color) {
                Eigen::ArrayXd u = F.u, z = F.z;
                std::vector<double> eps(N, 0.0);
                for (int i = color; i < N; i += 5) {
                    double& v = comp == 0 ? u[i] : z[i];
                    eps[i] = 1e-7 * std::max(1.0, std::abs(v));
                    v += eps[i];
                }
                const Eigen::VectorXd G1 = residual(u, z);
                for (int i = color; i < N; i += 5)
                    for (int r = std::max(0, i - 2); r <= std::min(N - 1, i + 2); ++r)
                        for (int rc = 0; rc < 2; ++rc) {
                            const double val = (G1[2 * r + rc] - G0[2 * r + rc]) / eps[i];
                            if (val != 0.0) trip.emplace_back(2 * r + rc, 2 * i + comp, val);
                        }
            }
        for (int i = 0; i < n; ++i)
            if (e[i] != 0.0) trip.emplace_back(i, n, e[i]);
        trip.emplace_back(n, 2 * ip, 1 - wp);
        trip.emplace_back(n, 2 * (ip + 1), wp);
        Eigen::SparseMatrix<double> J(n + 1, n + 1);
        J.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) throw NumericalError("steady state: Jacobian factorization failed");
        Eigen::VectorXd rhs(n + 1);
        rhs.head(n) = -G;
        rhs[n] = -phase;
        const Eigen::VectorXd d = lu.solve(rhs);
        for (int i = 0; i < N; ++i) {
            F.u[i] += d[2 * i];
            F.z[i] += d[2 * i + 1];
        }
        c += d[n];
        rep.iterations = it + 1;
    }
    rep.state = F;
    rep.border = c;
    rep.residual = residual(F.u, F.z).lpNorm<Eigen::Infinity>();
    if (!(rep.residual < 1e3 * tol + std::abs(c))) throw NumericalError("steady state: Newton did not converge");
    return rep;
}

// -------------------------------------------------------------------------------------------
// Decay templates

struct DecayTemplates {
    std::vector<double> a_minus, a_plus;  // undamped characteristic speeds
    double L = 8, M = 8;

    static DecayTemplates for_profile(const Profile& P) {
        DecayTemplates T;
        const double s = P.problem.s;
        const double am = P.params.flux.eval(P.problem.u_minus, P.problem.z_minus).f_u - s;
        const double ap = P.params.flux.eval(P.problem.u_plus, P.problem.z_plus).f_u - s;
        T.a_minus = {am};
        T.a_plus = {ap, -s};
        T.L = T.M = 8.0 * std::max(1.0, P.params.d);
        return T;
    }

    double chi(double x, double t) const {
        double lo = 0, hi = 0;
        for (double a : a_minus) lo = std::min(lo, a * t);
        for (double a : a_plus) hi = std::max(hi, a * t);
        return (x >= lo && x <= hi) ? 1.0 : 0.0;
    }

    double theta(double x, double t) const {
        double v = 0;
        const double pre = std::pow(1 + t, -0.5);
        for (double a : a_minus)
            if (a < 0 && t > 0) v += pre * std::exp(-std::pow(x - a * t, 2) / (L * t));
        for (double a : a_plus)
            if (a > 0 && t > 0) v += pre * std::exp(-std::pow(x - a * t, 2) / (L * t));
        return v;
    }

    double psi1(double x, double t) const {
        const double c = chi(x, t);
        if (c == 0) return 0;
        double v = 0;
        for (double a : a_minus)
            if (a < 0) v += std::pow(1 + std::abs(x) + t, -0.5) * std::pow(1 + std::abs(x - a * t), -0.5);
        for (double a : a_plus)
            if (a > 0) v += std::pow(1 + std::abs(x) + t, -0.5) * std::pow(1 + std::abs(x - a * t), -0.5);
        return c * v;
    }

    double psi2(double x, double t) const {
        const double a1 = *std::min_element(a_minus.begin(), a_minus.end());
        const double an = *std::max_element(a_plus.begin(), a_plus.end());
        const double w = 1 - chi(x, t), rt = std::sqrt(t);
        return w * (std::pow(1 + std::abs(x - a1 * t) + rt, -1.5) + std::pow(1 + std::abs(x - an * t) + rt, -1.5));
    }

    double total(double x, double t) const { return theta(x, t) + psi1(x, t) + psi2(x, t); }

    bool theta_empty() const {
        return std::none_of(a_minus.begin(), a_minus.end(), [](double a) { return a < 0; }) &&
               std::none_of(a_plus.begin(), a_plus.end(), [](double a) { return a > 0; });
    }
};

// -------------------------------------------------------------------------------------------
// Perturbation experiments

enum class PerturbationKind { Gaussian, Bump, Samples };

struct PerturbationSpec {
    PerturbationKind kind = PerturbationKind::Gaussian;
    double E0 = 1e-3;        // sup (1+|x|)^{3/2} |U0|
    double center = 0.0;
    double width = 1.0;
    double u_weight = 1.0, z_weight = 0.0;
    std::vector<double> x;   // for Samples: tabulated (x, u, z), linearly interpolated
    std::vector<double> u, z;
};

/// Perturbation sampled on the grid and scaled to the weighted bound E0.
inline Field make_perturbation(const PerturbationSpec& ps, const Grid& g) {
    Field U;
    U.u = Eigen::ArrayXd::Zero(g.N);
    U.z = Eigen::ArrayXd::Zero(g.N);
    for (int i = 0; i < g.N; ++i) {
        const double x = g.x[i];
        double shape = 0, su = ps.u_weight, sz = ps.z_weight;
        switch (ps.kind) {
            case PerturbationKind::Gaussian: {
                const double r = (x - ps.center) / ps.width;
                shape = std::exp(-r * r);
                break;
            }
            case PerturbationKind::Bump: {
                const double r = (x - ps.center) / ps.width;
                shape = std::abs(r) < 1 ? std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
                break;
            }
            case PerturbationKind::Samples: {
                if (ps.x.size() < 2) throw InputError("perturbation: sample table needs at least two rows");
                if (x <= ps.x.front() || x >= ps.x.back()) break;
                const auto it = std::upper_bound(ps.x.begin(), ps.x.end(), x);
                const std::size_t k = it - ps.x.begin() - 1;
                const double w = (x - ps.x[k]) / (ps.x[k + 1] - ps.x[k]);
                shape = 1.0;
                su = (1 - w) * ps.u[k] + w * ps.u[k + 1];
                sz = (1 - w) * ps.z[k] + w * ps.z[k + 1];
                break;
            }
        }
        U.u[i] = shape * su;
        U.z[i] = shape * sz;
    }
    double weighted = 0;
    for (int i = 0; i < g.N; ++i)
        weighted = std::max(weighted, std::pow(1 + std::abs(g.x[i]), 1.5) * std::hypot(U.u[i], U.z[i]));
    if (weighted > 0 && ps.kind != PerturbationKind::Samples) {
        U.u *= ps.E0 / weighted;
        U.z *= ps.E0 / weighted;
    }
    return U;
}

struct Snapshot {
    double t = 0;
    double delta = 0;
    bool delta_reliable = true;
    double delta_integral = 0;   // leading term of the integral phase formula
    double l1 = 0, l2 = 0, linf = 0;
    double template_ratio = 0;   // sup |U| / (theta + psi1 + psi2)
    double mass = 0;             // int (u + q z) dx of the full solution
};

struct PerturbationRun {
    double E0 = 0;
    std::vector<Snapshot> snaps;
    std::vector<double> x_coarse;          // downsampled grid for stored fields
    std::vector<std::vector<double>> u_coarse, z_coarse;  // U(x,t) = U~(x+delta) - U_bar(x)
    bool aborted = false;
    double steady_residual = 0;
    double dt = 0, dx = 0, L = 0;
    DecayTemplates templates;
};

struct TrackOptions {
    double T = 200;
    double snap_dt = 1.0;
    double dx = 0;           // 0: (d/s)/8
    double L = 0;            // 0: X + max|a| T + 10
    int stored_points = 1500;
    int stored_every = 5;    // store every k-th snapshot field
    bool integral_phase = true;
    EvolveOptions evolve;
};

namespace detail {

/// Least-squares shift: min over delta of sum |U~(x+delta) - U_bar(x)|^2 dx.
inline std::pair<double, bool> fit_shift(const Field& F, const Field& bar, const Grid& g, double guess,
                                         std::pair<double, double> left, std::pair<double, double> right) {
    const double reach = 5.0;
    auto residuals = [&](double d, Eigen::ArrayXd& ru, Eigen::ArrayXd& rz) {
        ru = Eigen::ArrayXd::Zero(g.N);
        rz = Eigen::ArrayXd::Zero(g.N);
        for (int i = 0; i < g.N; ++i) {
            const double x = g.x[i];
            if (std::abs(x) > g.L - reach) continue;
            ru[i] = lagrange6(F.u, g, x + d, left.first, right.first) - bar.u[i];
            rz[i] = lagrange6(F.z, g, x + d, left.second, right.second) - bar.z[i];
        }
    };
    auto J = [&](double d) {
        Eigen::ArrayXd ru, rz;
        residuals(d, ru, rz);
        return (ru.square().sum() + rz.square().sum()) * g.dx;
    };
    auto r = boost::math::tools::brent_find_minima(J, guess - 1.0, guess + 1.0, 50);
    // Gauss-Newton polish of the bracketed minimum
    for (int it = 0; it < 2; ++it) {
        const double eps = 1e-4;
        Eigen::ArrayXd ru, rz, pu, pz, mu, mz;
        residuals(r.first, ru, rz);
        residuals(r.first + eps, pu, pz);
        residuals(r.first - eps, mu, mz);
        const Eigen::ArrayXd du = (pu - mu) / (2 * eps), dz = (pz - mz) / (2 * eps);
        const double den = du.square().sum() + dz.square().sum();
        if (!(den > 0)) break;
        const double step = -((ru * du).sum() + (rz * dz).sum()) / den;
        if (!(std::abs(step) < 0.1)) break;
        r.first += step;
    }
    // curvature check: flat objective means the phase is not identifiable
    const double h = 1e-3;
    const double curv = (J(r.first + h) - 2 * J(r.first) + J(r.first - h)) / (h * h);
    return {r.first, curv > 1e-8};
}

}  // namespace detail

/// Nonlinear evolution of U_bar + U0 with phase tracking and norm/template diagnostics.
inline PerturbationRun perturb_and_track(const Profile& P, const PerturbationSpec& ps, const TrackOptions& to = {},
                                         const ExcitedKernel* ek = nullptr, double E0_max = 0.05) {
    if (ps.E0 > E0_max) throw InputError("perturb_and_track: E0 above the smallness threshold");
    PerturbationRun run;
    run.E0 = ps.E0;
    run.templates = DecayTemplates::for_profile(P);
    double amax = 0;
    for (double a : run.templates.a_minus) amax = std::max(amax, std::abs(a));
    for (double a : run.templates.a_plus) amax = std::max(amax, std::abs(a));
    const double dx = to.dx > 0 ? to.dx : (P.params.d / std::abs(P.problem.s)) / 8.0;
    const double L = to.L > 0 ? to.L : P.X + amax * to.T + 10.0;
    const Grid g = Grid::uniform(L, dx);
    const Evolver ev(P.params, P.problem.s, P.problem.u_minus, P.problem.u_plus, g, to.evolve);
    run.dt = ev.dt();
    run.dx = g.dx;
    run.L = g.L;
    const SteadyStateReport ss = discrete_steady_state(ev, P);
    run.steady_residual = ss.residual;
    const Field& bar = ss.state;
    const Field U0 = make_perturbation(ps, g);
    Field F;
    F.u = bar.u + U0.u;
    F.z = bar.z + U0.z;
    F.t = 0;
    const int stride = std::max(1, g.N / std::max(1, to.stored_points));
    for (int i = 0; i < g.N; i += stride) run.x_coarse.push_back(g.x[i]);
    double guess = 0.0;
    int count = 0;
    auto observe = [&](const Field& cur) {
        Snapshot sn;
        sn.t = cur.t;
        auto [d, ok] = detail::fit_shift(cur, bar, g, guess, ev.left_state(), ev.right_state());
        sn.delta = d;
        sn.delta_reliable = ok;
        guess = d;
        double l1 = 0, l2 = 0, linf = 0, ratio = 0, mass = 0;
        std::vector<double> uc, zc;
        for (int i = 0; i < g.N; ++i) {
            const double x = g.x[i];
            const double uu = detail::lagrange6(cur.u, g, x + d, P.problem.u_minus, P.problem.u_plus) - bar.u[i];
            const double zz = detail::lagrange6(cur.z, g, x + d, 0.0, 1.0) - bar.z[i];
            const double m = std::hypot(uu, zz);
            l1 += m * g.dx;
            l2 += m * m * g.dx;
            linf = std::max(linf, m);
            if (cur.t > 0) ratio = std::max(ratio, m / run.templates.total(x, cur.t));
            mass += (cur.u[i] + P.params.q * cur.z[i]) * g.dx;
            if (i % stride == 0) {
                uc.push_back(uu);
                zc.push_back(zz);
            }
        }
        sn.l1 = l1;
        sn.l2 = std::sqrt(l2);
        sn.linf = linf;
        sn.template_ratio = ratio;
        sn.mass = mass;
        if (ek && to.integral_phase && cur.t > 0) {
            double acc = 0;
            for (int i = 0; i < g.N; ++i) {
                const Vec2d e = (*ek)(g.x[i], cur.t);
                acc += (e[0] * U0.u[i] + e[1] * U0.z[i]) * g.dx;
            }
            sn.delta_integral = -acc;
        }
        run.snaps.push_back(sn);
        if (count++ % std::max(1, to.stored_every) == 0) {
            run.u_coarse.push_back(std::move(uc));
            run.z_coarse.push_back(std::move(zc));
        }
    };
    run.aborted = !ev.evolve(F, to.T, to.snap_dt, observe);
    return run;
}

// -------------------------------------------------------------------------------------------
// Decay-rate fits

struct RateFit {
    std::string quantity;
    double exponent = 0, expected = 0, tolerance = 0;
    double t_lo = 0, t_hi = 0;
    int points = 0;
    bool truncated = false;
    bool pass = false;
};

/// Least-squares slope of log(value) against log(t) over [t_lo, t_hi], skipping values below floor.
inline RateFit loglog_fit(const std::vector<double>& t, const std::vector<double>& v, double t_lo, double t_hi,
                          double floor = 1e-11) {
    RateFit f;
    f.t_lo = t_lo;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    double last = t_lo;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi) continue;
        if (!(v[i] > floor)) {
            f.truncated = true;
            break;
        }
        const double x = std::log(t[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
        last = t[i];
    }
    f.points = n;
    f.t_hi = last;
    if (n >= 3) f.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    else f.exponent = std::numeric_limits<double>::quiet_NaN();
    return f;
}

struct DecayRateReport {
    std::vector<RateFit> fits;  // L1, L2, Linf, delta envelope
    double delta_inf = 0;
    double ddelta_early = 0, ddelta_late = 0;  // sup |delta'|(1+t) on [10, T/2] and [T/2, T]
    bool ddelta_bounded = false;
};

inline DecayRateReport decay_rates(const PerturbationRun& run, double t_lo = 10.0, double floor = 1e-11) {
    if (run.snaps.empty() || run.snaps.back().t < 100) throw InputError("decay_rates: run must reach T >= 100");
    DecayRateReport rep;
    const double T = run.snaps.back().t;
    std::vector<double> t, l1, l2, li, dd;
    for (const auto& s : run.snaps) {
        t.push_back(s.t);
        l1.push_back(s.l1);
        l2.push_back(s.l2);
        li.push_back(s.linf);
    }
    rep.delta_inf = run.snaps.back().delta;
    // envelope of |delta(t) - delta(inf)|: running sup from the right
    std::vector<double> env(t.size(), 0.0);
    double m = 0;
    for (std::size_t i = t.size(); i-- > 0;) {
        m = std::max(m, std::abs(run.snaps[i].delta - rep.delta_inf));
        env[i] = m;
    }
    auto add = [&](const std::string& name, const std::vector<double>& v, double expected, double tol, double hi) {
        RateFit f = loglog_fit(t, v, t_lo, hi, floor);
        f.quantity = name;
        f.expected = expected;
        f.tolerance = tol;
        f.pass = std::isfinite(f.exponent) && std::abs(f.exponent - expected) <= tol;
        rep.fits.push_back(f);
    };
    add("L1", l1, 0.0, 0.1, T);
    add("L2", l2, -0.25, 0.1, T);
    add("Linf", li, -0.5, 0.1, T);
    // the last quarter is dominated by the delta(inf) estimate itself
    add("delta_envelope", env, -0.5, 0.15, 0.75 * T);
    for (std::size_t i = 1; i + 1 < run.snaps.size(); ++i) {
        const double d = (run.snaps[i + 1].delta - run.snaps[i - 1].delta) / (run.snaps[i + 1].t - run.snaps[i - 1].t);
        const double v = std::abs(d) * (1 + run.snaps[i].t);
        if (run.snaps[i].t < t_lo) continue;
        if (run.snaps[i].t <= T / 2) rep.ddelta_early = std::max(rep.ddelta_early, v);
        else rep.ddelta_late = std::max(rep.ddelta_late, v);
    }
    rep.ddelta_bounded = std::isfinite(rep.ddelta_late) && rep.ddelta_late <= std::max(1.5 * rep.ddelta_early, 1e-9);
    return rep;
}

struct TemplateReport {
    double sup_ratio = 0;
    double trend_exponent = 0;   // log-log slope of the ratio over [t_lo, T]
    double early_max = 0, late_max = 0;
    bool theta_psi1_empty = false;
    bool no_upward_trend = false;
};

inline TemplateReport template_compare(const PerturbationRun& run, double t_lo = 10.0) {
    TemplateReport rep;
    rep.theta_psi1_empty = run.templates.theta_empty();
    const double T = run.snaps.empty() ? 0 : run.snaps.back().t;
    std::vector<double> t, r;
    for (const auto& s : run.snaps) {
        if (s.t < t_lo) continue;
        t.push_back(s.t);
        r.push_back(s.template_ratio);
        rep.sup_ratio = std::max(rep.sup_ratio, s.template_ratio);
        if (s.t <= 0.5 * (t_lo + T)) rep.early_max = std::max(rep.early_max, s.template_ratio);
        else rep.late_max = std::max(rep.late_max, s.template_ratio);
    }
    const RateFit f = loglog_fit(t, r, t_lo, T, 0.0);
    rep.trend_exponent = f.exponent;
    rep.no_upward_trend = std::isfinite(f.exponent) && f.exponent <= 0.05 && rep.late_max <= 1.1 * rep.early_max;
    return rep;
}

// -------------------------------------------------------------------------------------------
// Structure of the nonlinear source

struct SourceReport {
    double max_remainder = 0;          // max |r(U)|
    double max_remainder_cold = 0;     // max |r(U)| where u_bar + |U| stays below ignition
    double max_direction_error = 0;    // |source x (-q, 1)| / |source|
    double scaling_ratio = 0;          // max|r(U/2)| / max|r(U)|
};

/// Taylor remainder of the reaction term about the profile: the reactive part of the nonlinear
/// source is (-q, 1)^T r(U) with r(U) = -k [phi(u+U_u)(z+U_z) - phi(u) z - phi'(u) z U_u - phi(u) U_z].
inline SourceReport source_structure_check(const Profile& P, const std::vector<double>& x,
                                           const std::vector<Vec2d>& U) {
    SourceReport rep;
    const auto& ig = P.params.ignition;
    const double k = P.params.k, q = P.params.q;
    auto remainder = [&](double xx, const Vec2d& v) {
        const ProfilePoint p = P.at(xx);
        return -k * (ig.phi(p.u + v[0]) * (p.z + v[1]) - ig.phi(p.u) * p.z - ig.dphi(p.u) * p.z * v[0] -
                     ig.phi(p.u) * v[1]);
    };
    double half = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const ProfilePoint p = P.at(x[i]);
        const double r = remainder(x[i], U[i]);
        rep.max_remainder = std::max(rep.max_remainder, std::abs(r));
        if (p.u + U[i].norm() < ig.u_i) rep.max_remainder_cold = std::max(rep.max_remainder_cold, std::abs(r));
        half = std::max(half, std::abs(remainder(x[i], 0.5 * U[i])));
        // full reactive source difference: (q k phi z, -k phi z) at U_bar + U minus its linearization
        const double w1 = k * ig.phi(p.u + U[i][0]) * (p.z + U[i][1]);
        const double w0 = k * ig.phi(p.u) * p.z;
        const double wl = k * (ig.dphi(p.u) * p.z * U[i][0] + ig.phi(p.u) * U[i][1]);
        const Vec2d src((w1 - w0 - wl) * q, -(w1 - w0 - wl));
        if (src.norm() > 0) {
            const double cross = src[0] * 1.0 - src[1] * (-q);
            rep.max_direction_error = std::max(rep.max_direction_error, std::abs(cross) / src.norm());
        }
    }
    rep.scaling_ratio = rep.max_remainder > 0 ? half / rep.max_remainder : 0.0;
    return rep;
}

}  // namespace combust
