#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "combust/ode.hpp"
#include "combust/parallel.hpp"
#include "combust/profile.hpp"
#include "combust/spectral.hpp"

namespace combust {

using Vec6c = Eigen::Matrix<cd, 6, 1>;
using Mat6c = Eigen::Matrix<cd, 6, 6>;

namespace detail {
inline constexpr int kPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

inline int pair_index(int i, int j) {
    for (int p = 0; p < 6; ++p)
        if (kPairs[p][0] == i && kPairs[p][1] == j) return p;
    return -1;
}
}  // namespace detail

/// Plücker coordinates of v ^ w.
inline Vec6c wedge(const Vec4c& v, const Vec4c& w) {
    Vec6c e;
    for (int p = 0; p < 6; ++p) {
        const int i = detail::kPairs[p][0], j = detail::kPairs[p][1];
        e[p] = v[i] * w[j] - v[j] * w[i];
    }
    return e;
}

/// det[a-plane, b-plane] for two 2-planes given by Plücker coordinates.
inline cd wedge_det(const Vec6c& a, const Vec6c& b) {
    return a[0] * b[5] - a[1] * b[4] + a[2] * b[3] + a[3] * b[2] - a[4] * b[1] + a[5] * b[0];
}

/// Second compound matrix: the generator induced by M on 2-vectors.
inline Mat6c compound2(const Mat4c& M) {
    Mat6c C = Mat6c::Zero();
    for (int p = 0; p < 6; ++p) {
        const int i = detail::kPairs[p][0], j = detail::kPairs[p][1];
        for (int k = 0; k < 4; ++k) {
            // d/dx eta_ij += M_ik eta_kj + M_jk eta_ik
            if (k != j) {
                const int a = std::min(k, j), b = std::max(k, j);
                const double sg = k < j ? 1.0 : -1.0;
                C(p, detail::pair_index(a, b)) += sg * M(i, k);
            }
            if (k != i) {
                const int a = std::min(i, k), b = std::max(i, k);
                const double sg = i < k ? 1.0 : -1.0;
                C(p, detail::pair_index(a, b)) += sg * M(j, k);
            }
        }
    }
    return C;
}

struct BoundaryBasis {
    Side side = Side::Plus;
    Vec4c v1, v2;     // fluid and reaction basis vectors, (u, z, u', z')
    cd mu_fluid, mu_reaction;
    Vec6c omega;      // v1 ^ v2
    bool split_ok = true;
};

/// Analytic basis of the decaying (plus: stable, minus: unstable) subspace of the limiting system.
/// The reaction vector is reduced modulo the selected fluid vector, which removes its pole at
/// fluid/reaction collisions of the other fluid mode.
inline BoundaryBasis boundary_basis(const SpectralProblem& sp, Side side, cd lambda) {
    BoundaryBasis b;
    b.side = side;
    const LimitData L = limit_data(sp, side);
    const double kphi = sp.k() * L.phi;
    auto [fp, fm] = fluid_eigenvalues(L.alpha, lambda);
    auto [rp, rm] = reaction_eigenvalues(sp.d(), sp.s(), kphi, lambda);
    const cd m_in = side == Side::Plus ? fm : fp;
    const cd m_out = side == Side::Plus ? fp : fm;
    const cd r = side == Side::Plus ? rm : rp;
    b.mu_fluid = m_in;
    b.mu_reaction = r;
    b.v1 = fluid_vector(m_in);
    const cd c = L.beta * r - sp.q() * sp.k() * L.phi;
    const cd coef = -c / ((m_out - m_in) * (m_out - r));
    b.v2 << coef, 1.0, coef * m_out, r;
    b.omega = wedge(b.v1, b.v2);
    if (side == Side::Plus)
        b.split_ok = m_in.real() < m_out.real() && r.real() < rp.real();
    else
        b.split_ok = m_in.real() > m_out.real() && r.real() > rm.real();
    return b;
}

struct EvansEvaluation {
    cd lambda;
    cd D;                 // full value (mantissa * exp(log_scale))
    cd mantissa;
    double log_scale = 0; // accumulated renormalization exponent
    Vec6c eta_plus, eta_minus;  // unit-normalized Plücker vectors at x = 0
    double angle = 0;     // |det| of the normalized planes: conditioning indicator
    long steps = 0;
    bool split_ok = true;
};

struct EvansOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double segment = 1.0;   // renormalization interval
    double X = 0.0;         // integration half-width (0 = profile half-width)
};

class EvansFunction {
public:
    explicit EvansFunction(const SpectralProblem& sp, EvansOptions opt = {}) : sp_(sp), opt_(opt) {
        const LimitData Lm = limit_data(sp_, Side::Minus);
        r0_ = default_r0(sp_);
        X_ = opt_.X > 0 ? opt_.X : sp_.X();
        kappa_plus_ = 1.0 / boundary_basis(sp_, Side::Plus, r0_).omega.norm();
        kappa_minus_ = 1.0 / boundary_basis(sp_, Side::Minus, r0_).omega.norm();
        (void)Lm;
    }

    static double default_r0(const SpectralProblem& sp) {
        const LimitData Lm = limit_data(sp, Side::Minus);
        return 1e-2 * std::min({1.0, sp.k() * Lm.phi, sp.s() * sp.s() / sp.d()});
    }

    double r0() const { return r0_; }
    double X() const { return X_; }
    const SpectralProblem& problem() const { return sp_; }

    /// Integrates the compound system for one side from the far field to x = 0.
    /// Returns the unit-normalized eta(0) and the accumulated log scale.
    std::pair<Vec6c, double> integrate_side(Side side, cd lambda, long* steps = nullptr) const {
        const BoundaryBasis b = boundary_basis(sp_, side, lambda);
        const cd sigma = b.mu_fluid + b.mu_reaction;
        Vec6c eta = b.omega * (side == Side::Plus ? kappa_plus_ : kappa_minus_);
        double logscale = 0.0;
        auto f = [&](double x, const Vec6c& e) -> Vec6c {
            Mat6c C = compound2(sp_.assemble(x, lambda));
            C.diagonal().array() -= sigma;
            return C * e;
        };
        OdeOptions o;
        o.rtol = opt_.rtol;
        o.atol = opt_.atol;
        const double x0 = side == Side::Plus ? X_ : -X_;
        const double dir = side == Side::Plus ? -1.0 : 1.0;
        double x = x0;
        OdeStats st;
        while (dir * (0.0 - x) > 0) {
            const double xn = std::abs(x) > opt_.segment ? x + dir * opt_.segment : 0.0;
            o.h0 = st.last_h > 0 ? st.last_h : 0.0;
            eta = dopri5(f, x, xn, eta, o, &st);
            const double n = eta.norm();
            if (!(n > 0) || !std::isfinite(n)) throw NumericalError("evans: compound integration overflow");
            eta /= n;
            logscale += std::log(n);
            x = xn;
        }
        if (steps) *steps += st.accepted + st.rejected;
        return {eta, logscale};
    }

    EvansEvaluation operator()(cd lambda) const {
        EvansEvaluation ev;
        ev.lambda = lambda;
        ev.split_ok = boundary_basis(sp_, Side::Plus, lambda).split_ok &&
                      boundary_basis(sp_, Side::Minus, lambda).split_ok;
        auto [ep, lp] = integrate_side(Side::Plus, lambda, &ev.steps);
        auto [em, lm] = integrate_side(Side::Minus, lambda, &ev.steps);
        ev.eta_plus = ep;
        ev.eta_minus = em;
        ev.mantissa = wedge_det(ep, em);
        ev.angle = std::abs(ev.mantissa);
        ev.log_scale = lp + lm;
        ev.D = ev.mantissa * std::exp(ev.log_scale);
        return ev;
    }

private:
    const SpectralProblem& sp_;
    EvansOptions opt_;
    double r0_ = 0, X_ = 0;
    double kappa_plus_ = 1, kappa_minus_ = 1;
};

/// Closed contour in the lambda plane given by a parametrization of its upper half on tau in [0, 1];
/// the lower half is the complex-conjugate mirror image (real-coefficient symmetry D(conj l) = conj D(l)).
struct Contour {
    std::string kind;
    double R = 0, r0 = 0;
    std::function<cd(double)> upper;
    std::vector<double> initial_tau;
};

/// Right half-plane contour: semicircle |lambda| = R closed along the imaginary axis, indented to the
/// right of the origin by the half circle |lambda| = r0.
inline Contour outer_contour(double R, double r0, int nodes = 160) {
    Contour c;
    c.kind = "outer";
    c.R = R;
    c.r0 = r0;
    // tau in [0, 1/3]: big arc from R to iR; [1/3, 2/3]: axis from iR to i r0 (log spacing);
    // [2/3, 1]: small arc from i r0 clockwise to r0
    c.upper = [R, r0](double tau) -> cd {
        if (tau <= 1.0 / 3) return std::polar(R, 0.5 * M_PI * (3 * tau));
        if (tau <= 2.0 / 3) {
            const double t = 3 * tau - 1;
            return cd(0.0, std::exp(std::log(R) + t * (std::log(r0) - std::log(R))));
        }
        const double t = 3 * tau - 2;
        return std::polar(r0, 0.5 * M_PI * (1 - t));
    };
    const int n1 = std::max(8, nodes * 3 / 10), n2 = std::max(8, nodes / 2), n3 = std::max(4, nodes / 5);
    for (int i = 0; i < n1; ++i) c.initial_tau.push_back((1.0 / 3) * i / n1);
    for (int i = 0; i < n2; ++i) c.initial_tau.push_back(1.0 / 3 + (1.0 / 3) * i / n2);
    for (int i = 0; i <= n3; ++i) c.initial_tau.push_back(2.0 / 3 + (1.0 / 3) * i / n3);
    return c;
}

/// Full circle |lambda| = r about the origin (upper half from r to -r).
inline Contour origin_circle(double r, int nodes = 32) {
    Contour c;
    c.kind = "circle";
    c.r0 = r;
    c.upper = [r](double tau) -> cd { return std::polar(r, M_PI * tau); };
    for (int i = 0; i <= nodes / 2; ++i) c.initial_tau.push_back(double(i) / (nodes / 2));
    return c;
}

struct ContourNode {
    double tau = 0;
    EvansEvaluation ev;
};

struct ContourResult {
    std::string kind;
    double R = 0, r0 = 0;
    std::vector<ContourNode> nodes;   // upper half, ordered by tau
    double accumulated_argument = 0;  // over the full closed contour
    double winding_real = 0;
    int winding = 0;
    double min_abs_D = 0, max_abs_D = 0;
    double max_arg_step = 0;
    bool integer_ok = false;
    int refinements = 0;
};

struct WindingOptions {
    double max_arg_step = M_PI / 4;  // refinement threshold per segment
    int max_nodes = 4000;
    double zero_threshold = 1e-12;   // min |D| / max |D| below which the contour is declared to pass through a zero
};

/// Argument-principle zero count of D inside the contour, with adaptive refinement.
inline ContourResult winding(const EvansFunction& E, const Contour& c, const WindingOptions& wo = {}) {
    ContourResult res;
    res.kind = c.kind;
    res.R = c.R;
    res.r0 = c.r0;
    std::vector<ContourNode> nodes(c.initial_tau.size());
    parallel_for(nodes.size(), [&](std::size_t i) {
        nodes[i].tau = c.initial_tau[i];
        nodes[i].ev = E(c.upper(c.initial_tau[i]));
    });
    auto darg = [](const EvansEvaluation& a, const EvansEvaluation& b) {
        return std::arg(b.mantissa / a.mantissa);
    };
    for (int pass = 0; pass < 30; ++pass) {
        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
            if (std::abs(darg(nodes[i].ev, nodes[i + 1].ev)) > wo.max_arg_step) bad.push_back(i);
        if (bad.empty()) break;
        if (nodes.size() + bad.size() > static_cast<std::size_t>(wo.max_nodes))
            throw NumericalError("winding: contour refinement exceeded node budget");
        std::vector<ContourNode> mids(bad.size());
        parallel_for(bad.size(), [&](std::size_t k) {
            const double t = 0.5 * (nodes[bad[k]].tau + nodes[bad[k] + 1].tau);
            mids[k].tau = t;
            mids[k].ev = E(c.upper(t));
        });
        for (auto& m : mids) nodes.push_back(m);
        std::sort(nodes.begin(), nodes.end(), [](const ContourNode& a, const ContourNode& b) { return a.tau < b.tau; });
        res.refinements += static_cast<int>(bad.size());
    }
    double total = 0, maxstep = 0;
    double mn = INFINITY, mx = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double a = std::abs(nodes[i].ev.D);
        mn = std::min(mn, a);
        mx = std::max(mx, a);
        if (i + 1 < nodes.size()) {
            const double d = darg(nodes[i].ev, nodes[i + 1].ev);
            total += d;
            maxstep = std::max(maxstep, std::abs(d));
        }
    }
    res.nodes = std::move(nodes);
    res.accumulated_argument = 2.0 * total;
    res.winding_real = res.accumulated_argument / (2.0 * M_PI);
    res.winding = static_cast<int>(std::lround(res.winding_real));
    res.integer_ok = std::abs(res.winding_real - res.winding) < 0.05;
    res.min_abs_D = mn;
    res.max_abs_D = mx;
    res.max_arg_step = maxstep;
    if (!(mn > wo.zero_threshold * mx))
        throw NumericalError("winding: contour passes through a zero of D (min |D| = " + std::to_string(mn) +
                             "); change the indentation radius or R");
    return res;
}

/// Default outer radius R = C max(1, alpha_hat_-^2, s^2/d).
inline double default_outer_radius(const SpectralProblem& sp, double C = 2.0) {
    const double am = sp.profile().problem.alpha_hat_minus;
    return C * std::max({1.0, am * am, sp.s() * sp.s() / sp.d()});
}

/// Central-difference estimate of D'(0) from samples at +-r.
inline cd d_prime_zero(const EvansFunction& E, double r = 0.0) {
    if (r <= 0) r = E.r0();
    const cd dp = E(cd(r, 0.0)).D;
    const cd dm = E(cd(-r, 0.0)).D;
    return (dp - dm) / (2.0 * r);
}

enum class Verdict { Stable, Unstable, Indeterminate };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Unstable: return "unstable";
        case Verdict::Indeterminate: return "indeterminate";
    }
    return "?";
}

struct StabilityReport {
    Verdict verdict = Verdict::Indeterminate;
    int outer_winding = -1, outer_winding_2R = -1, circle_winding = -1;
    double R = 0, r0 = 0;
    cd d_prime;
    double gamma = 0;
    bool spectral_ok = false, gamma_ok = false, dprime_ok = false;
    std::string reason;
};

/// Verdict logic: stable iff the outer count is 0 (consistently under R -> 2R), the origin circle
/// count is 1, the connection is transversal and D'(0) does not vanish.
inline StabilityReport decide_verdict(int outer_R, int outer_2R, int circle, double gamma, cd dprime,
                                      double gamma_tol = 1e-8, double dprime_tol = 1e-10) {
    StabilityReport r;
    r.outer_winding = outer_R;
    r.outer_winding_2R = outer_2R;
    r.circle_winding = circle;
    r.gamma = gamma;
    r.d_prime = dprime;
    r.spectral_ok = outer_R == 0 && circle == 1;
    r.gamma_ok = std::abs(gamma) > gamma_tol;
    r.dprime_ok = std::abs(dprime) > dprime_tol;
    if (outer_R != outer_2R) {
        r.verdict = Verdict::Indeterminate;
        r.reason = "outer winding changed under R -> 2R";
    } else if (outer_R >= 1) {
        r.verdict = Verdict::Unstable;
        r.reason = "zeros of D in the right half-plane";
    } else if (!r.gamma_ok) {
        r.verdict = Verdict::Indeterminate;
        r.reason = "transversality gamma vanishes";
    } else if (circle != 1 || !r.dprime_ok) {
        r.verdict = Verdict::Indeterminate;
        r.reason = "translation zero at the origin is not simple";
    } else {
        r.verdict = Verdict::Stable;
        r.reason = "D-condition holds";
    }
    return r;
}

struct VerdictOptions {
    double R = 0;   // 0 = default radius
    int nodes = 160;
    WindingOptions winding;
};

inline StabilityReport verdict(const EvansFunction& E, double gamma, const VerdictOptions& vo = {}) {
    const double R = vo.R > 0 ? vo.R : default_outer_radius(E.problem());
    const auto outer = winding(E, outer_contour(R, E.r0(), vo.nodes), vo.winding);
    const auto outer2 = winding(E, outer_contour(2 * R, E.r0(), vo.nodes), vo.winding);
    const auto circ = winding(E, origin_circle(E.r0()), vo.winding);
    StabilityReport rep = decide_verdict(outer.winding, outer2.winding, circ.winding, gamma, d_prime_zero(E));
    rep.R = R;
    rep.r0 = E.r0();
    return rep;
}

/// Estimate of the sum of zeros inside a contour from the first moment of the logarithmic derivative.
inline cd zero_moment(const ContourResult& cr) {
    // full closed contour: upper half forward, then conjugate mirror backward
    std::vector<std::pair<cd, cd>> pts;  // (lambda, log D)
    for (const auto& n : cr.nodes) pts.push_back({n.ev.lambda, std::log(n.ev.mantissa) + n.ev.log_scale});
    std::vector<std::pair<cd, cd>> full = pts;
    for (auto it = pts.rbegin(); it != pts.rend(); ++it) full.push_back({std::conj(it->first), std::conj(it->second)});
    cd acc = 0.0;
    for (std::size_t i = 0; i + 1 < full.size(); ++i) {
        cd dlog = full[i + 1].second - full[i].second;
        dlog = cd(dlog.real(), std::remainder(dlog.imag(), 2 * M_PI));
        acc += 0.5 * (full[i].first + full[i + 1].first) * dlog;
    }
    return acc / cd(0.0, 2 * M_PI);
}

/// Secant refinement of a zero of D starting from lambda0.
inline cd locate_zero(const EvansFunction& E, cd lambda0, double tol = 1e-10, int max_iter = 40) {
    cd x0 = lambda0, x1 = lambda0 * 1.001 + 1e-4;
    cd f0 = E(x0).D, f1 = E(x1).D;
    for (int i = 0; i < max_iter; ++i) {
        if (f1 == f0) break;
        const cd x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = E(x1).D;
        if (std::abs(x1 - x0) < tol * std::max(1.0, std::abs(x1))) return x1;
    }
    return x1;
}

}  // namespace combust
