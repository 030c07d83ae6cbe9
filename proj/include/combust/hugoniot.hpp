#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "combust/error.hpp"
#include "combust/model.hpp"
#include "combust/roots.hpp"

namespace combust {

enum class WaveClass {
    StrongDetonation,
    WeakDetonation,
    WeakDeflagration,
    StrongDeflagration,
    ChapmanJouguetDetonation,
    ChapmanJouguetDeflagration,
};

inline std::string to_string(WaveClass c) {
    switch (c) {
        case WaveClass::StrongDetonation: return "StrongDetonation";
        case WaveClass::WeakDetonation: return "WeakDetonation";
        case WaveClass::WeakDeflagration: return "WeakDeflagration";
        case WaveClass::StrongDeflagration: return "StrongDeflagration";
        case WaveClass::ChapmanJouguetDetonation: return "ChapmanJouguetDetonation";
        case WaveClass::ChapmanJouguetDeflagration: return "ChapmanJouguetDeflagration";
    }
    return "?";
}

struct WaveProblem {
    double u_minus = 0, u_plus = 0;
    double z_minus = 0, z_plus = 1;
    double s = 0;
    WaveClass cls = WaveClass::StrongDetonation;
    double alpha_hat_minus = 0;  // f_u(u-, 0)
    double alpha_hat_plus = 0;   // f_u(u+, 1)
    double rh_residual = 0;
    bool admissible = false;
};

inline double rh_residual(const ModelParams& p, double u_minus, double u_plus, double s) {
    return p.flux.f(u_plus, 1.0) - p.flux.f(u_minus, 0.0) - s * p.q - s * (u_plus - u_minus);
}

inline double cj_tolerance(double s) { return 1e-8 * std::max(1.0, std::abs(s)); }

inline WaveClass classify(const ModelParams& p, double u_minus, double u_plus, double s) {
    const double am = p.flux.f_u(u_minus, 0.0);
    const double ap = p.flux.f_u(u_plus, 1.0);
    const double tol = cj_tolerance(s);
    const bool cj_minus = std::abs(am - s) < tol;
    const bool cj_plus = std::abs(ap - s) < tol;
    if (cj_minus || cj_plus) {
        if (cj_minus) return ap < s ? WaveClass::ChapmanJouguetDetonation : WaveClass::ChapmanJouguetDeflagration;
        return u_minus > u_plus ? WaveClass::ChapmanJouguetDetonation : WaveClass::ChapmanJouguetDeflagration;
    }
    if (am > s && s > ap) return WaveClass::StrongDetonation;
    if (s > am && s > ap) return WaveClass::WeakDetonation;
    if (am > s && ap > s) return WaveClass::WeakDeflagration;
    return WaveClass::StrongDeflagration;
}

inline bool end_states_admissible(const ModelParams& p, double u_minus, double u_plus) {
    const auto& ig = p.ignition;
    const bool minus_ok = u_minus >= ig.u_i && u_minus <= ig.u_sup;
    const bool plus_ok = u_plus < ig.u_i || u_plus > ig.u_sup;
    return minus_ok && plus_ok;
}

inline WaveProblem make_problem(const ModelParams& p, double u_minus, double u_plus, double s) {
    WaveProblem w;
    w.u_minus = u_minus;
    w.u_plus = u_plus;
    w.s = s;
    w.cls = classify(p, u_minus, u_plus, s);
    w.alpha_hat_minus = p.flux.f_u(u_minus, 0.0);
    w.alpha_hat_plus = p.flux.f_u(u_plus, 1.0);
    w.rh_residual = rh_residual(p, u_minus, u_plus, s);
    w.admissible = end_states_admissible(p, u_minus, u_plus);
    return w;
}

namespace detail {

inline bool flux_is_convex_in_u(const ModelParams& p) {
    return p.flux.eval(0.0, 0.0).f_uu > 0.0;
}

/// Finds a sign change of g starting at x0 (where g(x0) > 0) by stepping in direction dir.
inline std::optional<double> expand_to_negative(const std::function<double(double)>& g, double x0, double dir,
                                                double step0) {
    double step = step0;
    for (int i = 0; i < 200; ++i) {
        const double x = x0 + dir * step;
        if (g(x) < 0) return x;
        step *= 2.0;
        if (!std::isfinite(x)) break;
    }
    return std::nullopt;
}

inline double newton_polish(const std::function<double(double)>& g, const std::function<double(double)>& dg,
                            double x) {
    for (int i = 0; i < 3; ++i) {
        const double d = dg(x);
        if (d == 0) break;
        const double step = g(x) / d;
        if (!std::isfinite(step)) break;
        x -= step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

}  // namespace detail

/// All real roots u- of the Rankine-Hugoniot relation for given u+ and s, each with its classification.
inline std::vector<WaveProblem> solve_rh(const ModelParams& p, double u_plus, double s) {
    if (!(s > 0)) throw InputError("solve_rh: wave speed s must be positive");
    const double fp = p.flux.f(u_plus, 1.0);
    auto g = [&](double u) { return fp - p.flux.f(u, 0.0) - s * p.q - s * (u_plus - u); };
    auto dg = [&](double u) { return -p.flux.f_u(u, 0.0) + s; };
    std::vector<double> roots;

    if (detail::flux_is_convex_in_u(p)) {
        // vertex of the concave function g: f_u(u*,0) = s
        double lo = -1.0, hi = 1.0;
        while (dg(lo) < 0) lo = 2 * lo - 1;
        while (dg(hi) > 0) hi = 2 * hi + 1;
        double ustar = brent(dg, lo, hi);
        const double gmax = g(ustar);
        const double scale = std::max({1.0, std::abs(fp), std::abs(s * p.q), std::abs(s * u_plus),
                                       std::abs(p.flux.f(ustar, 0.0)), std::abs(s * ustar)});
        if (std::abs(gmax) <= 1e-14 * scale) {
            roots.push_back(ustar);
        } else if (gmax > 0) {
            for (double dir : {1.0, -1.0}) {
                auto far = detail::expand_to_negative(g, ustar, dir, 1.0);
                if (!far) continue;
                double r = brent(g, ustar, *far);
                roots.push_back(detail::newton_polish(g, dg, r));
            }
        }
    } else {
        // g is affine in u when f_uu vanishes
        const double g0 = g(0.0), g1 = g(1.0);
        if (g1 != g0) roots.push_back(-g0 / (g1 - g0));
    }
    std::sort(roots.begin(), roots.end(), std::greater<double>());
    std::vector<WaveProblem> out;
    for (double r : roots) out.push_back(make_problem(p, r, u_plus, s));
    return out;
}

struct CjSpeeds {
    std::optional<double> detonation;   // s_*
    std::optional<double> deflagration; // s^*
};

/// Chapman-Jouguet speeds: speeds at which the RH relation has a double root u- on the detonation
/// (u- > u+) or deflagration (u- < u+) side.
inline CjSpeeds cj_speeds(const ModelParams& p, double u_plus) {
    CjSpeeds out;
    const double fp = p.flux.f(u_plus, 1.0);
    const double m = u_plus + p.q;
    auto h = [&](double u) { return fp - p.flux.f(u, 0.0) - p.flux.f_u(u, 0.0) * (p.q + u_plus - u); };
    if (!detail::flux_is_convex_in_u(p)) return out;
    const double hm = h(m);
    const double scale = std::max({1.0, std::abs(fp), std::abs(p.flux.f(m, 0.0))});
    if (std::abs(hm) <= 1e-14 * scale) {
        out.detonation = p.flux.f_u(m, 0.0);
        return out;
    }
    if (hm > 0) return out;
    if (auto far = detail::expand_to_negative([&](double u) { return -h(u); }, m, 1.0, 1.0)) {
        const double ur = brent(h, m, *far);
        out.detonation = p.flux.f_u(ur, 0.0);
    }
    if (auto far = detail::expand_to_negative([&](double u) { return -h(u); }, m, -1.0, 1.0)) {
        const double ul = brent(h, *far, m);
        const double sp = p.flux.f_u(ul, 0.0);
        if (ul < u_plus && sp > 0) out.deflagration = sp;
    }
    return out;
}

struct GammaLawMixture {
    double Gamma1 = 0.4, Gamma2 = 0.4;
    double c1 = 1.0, c2 = 1.0;
    double tau_plus = 1.0, p_plus = 1.0;
    double q = 0.5;
};

/// Burned-phase pressure on the shifted Hugoniot curve.
inline double mixture_hugoniot(const GammaLawMixture& m, double tau) {
    if (!(m.Gamma1 > 0 && m.Gamma2 > 0 && m.c1 > 0 && m.c2 > 0 && m.tau_plus > 0))
        throw InputError("mixture_hugoniot: Gamma1, Gamma2, c1, c2, tau_plus must be positive");
    const double den = tau / m.Gamma2 - 0.5 * (tau - m.tau_plus);
    if (!(den > 1e-14 * std::max(1.0, std::abs(tau))))
        throw NumericalError("mixture_hugoniot: singular point, denominator tau/Gamma2 - (tau - tau_plus)/2 <= 0");
    const double num = (m.tau_plus / m.Gamma1 - 0.5 * (tau - m.tau_plus)) * m.p_plus + m.q;
    return num / den;
}

/// Intersections tau of the Rayleigh line of slope -s^2 through (tau_plus, p_plus) with the Hugoniot curve.
inline std::vector<double> rayleigh_intersections(const GammaLawMixture& m, double s, int samples = 4000) {
    double tau_max = 50.0 * m.tau_plus;
    const double coef = 1.0 / m.Gamma2 - 0.5;
    if (coef < 0) tau_max = std::min(tau_max, 0.999 * (0.5 * m.tau_plus) / (-coef));
    auto r = [&](double tau) { return mixture_hugoniot(m, tau) + s * s * (tau - m.tau_plus) - m.p_plus; };
    std::vector<double> out;
    const double t0 = 1e-6 * m.tau_plus;
    double prev_t = t0, prev = r(t0);
    for (int i = 1; i <= samples; ++i) {
        const double t = t0 + (tau_max - t0) * i / samples;
        const double v = r(t);
        if (v == 0.0) {
            out.push_back(t);
        } else if ((prev < 0) != (v < 0) && prev != 0.0) {
            out.push_back(brent(r, prev_t, t));
        }
        prev_t = t;
        prev = v;
    }
    return out;
}

/// Standard weak/strong pair structure criterion of the gamma-law mixture.
inline bool standard_structure(const GammaLawMixture& m) {
    return m.p_plus * (1.0 - m.Gamma2 / m.Gamma1) < m.q * m.Gamma2 / m.tau_plus;
}

}  // namespace combust
