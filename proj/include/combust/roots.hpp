#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <utility>

namespace combust {

/// Brent root on a sign-changing bracket [a,b].
inline double brent(const std::function<double(double)>& g, double a, double b, double tol = 1e-15,
                    int max_iter = 200) {
    double fa = g(a), fb = g(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if (std::abs(fa) < std::abs(fb)) {
        std::swap(a, b);
        std::swap(fa, fb);
    }
    double c = a, fc = fa, d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        const double t = 2 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * tol;
        const double m = 0.5 * (c - b);
        if (std::abs(m) <= t || fb == 0) return b;
        if (std::abs(e) >= t && std::abs(fa) > std::abs(fb)) {
            double p, qq, r;
            const double s = fb / fa;
            if (a == c) {
                p = 2 * m * s;
                qq = 1 - s;
            } else {
                qq = fa / fc;
                r = fb / fc;
                p = s * (2 * m * qq * (qq - r) - (b - a) * (r - 1));
                qq = (qq - 1) * (r - 1) * (s - 1);
            }
            if (p > 0)
                qq = -qq;
            else
                p = -p;
            if (2 * p < std::min(3 * m * qq - std::abs(t * qq), std::abs(e * qq))) {
                e = d;
                d = p / qq;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::abs(d) > t) ? d : (m > 0 ? t : -t);
        fb = g(b);
    }
    return b;
}

/// Both roots of a z^2 + b z + c = 0 in the principal-branch labeling
/// r_+ = (-b + sqrt(b^2-4ac))/(2a), r_- = (-b - sqrt(...))/(2a), with the
/// smaller-magnitude root recomputed from the product to avoid cancellation.
template <class T>
inline std::pair<T, T> quadratic_roots(T a, T b, T c) {
    using std::sqrt;
    const T disc = sqrt(b * b - T(4) * a * c);
    T rp = (-b + disc) / (T(2) * a);
    T rm = (-b - disc) / (T(2) * a);
    if (std::abs(rp) > std::abs(rm)) {
        if (rp != T(0)) rm = c / (a * rp);
    } else {
        if (rm != T(0)) rp = c / (a * rm);
    }
    return {rp, rm};
}

}  // namespace combust
