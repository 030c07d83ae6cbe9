#pragma once

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Core>

#include "combust/error.hpp"

namespace combust {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h0 = 0.0;       // initial step magnitude (0 = automatic)
    double h_max = 0.0;    // maximum step magnitude (0 = unbounded)
    long max_steps = 2000000;
};

struct OdeStats {
    long accepted = 0;
    long rejected = 0;
    double last_h = 0.0;
};

/// Dormand-Prince 5(4) integration of y' = f(x, y) from x0 to x1 (either direction).
/// Vec is an Eigen vector type (real or complex).
template <class Vec, class F>
Vec dopri5(F&& f, double x0, double x1, Vec y, const OdeOptions& opt = {}, OdeStats* stats = nullptr) {
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double span = x1 - x0;
    if (span == 0.0) return y;
    const double dir = span > 0 ? 1.0 : -1.0;
    double h = opt.h0 > 0 ? opt.h0 : std::abs(span) / 100.0;
    if (opt.h_max > 0) h = std::min(h, opt.h_max);
    h = std::min(h, std::abs(span));
    double x = x0;
    Vec k1 = f(x, y);
    long steps = 0;
    while (dir * (x1 - x) > 0) {
        if (++steps > opt.max_steps) throw NumericalError("dopri5: step limit exceeded");
        bool last = false;
        if (h >= std::abs(x1 - x)) {
            h = std::abs(x1 - x);
            last = true;
        }
        const double hs = dir * h;
        Vec k2 = f(x + c2 * hs, Vec(y + hs * (a21 * k1)));
        Vec k3 = f(x + c3 * hs, Vec(y + hs * (a31 * k1 + a32 * k2)));
        Vec k4 = f(x + c4 * hs, Vec(y + hs * (a41 * k1 + a42 * k2 + a43 * k3)));
        Vec k5 = f(x + c5 * hs, Vec(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
        Vec k6 = f(x + hs, Vec(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
        Vec ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        Vec k7 = f(x + hs, ynew);
        Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            en = std::max(en, std::abs(err[i]) / sc);
        }
        if (!std::isfinite(en)) {
            h *= 0.25;
            if (stats) ++stats->rejected;
            if (h < 1e-300) throw NumericalError("dopri5: non-finite state");
            continue;
        }
        if (en <= 1.0) {
            x = last ? x1 : x + hs;
            y = ynew;
            k1 = k7;
            const double fac = en == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(en, -0.2));
            if (!last || fac < 1.0) h *= fac;
            if (stats) {
                ++stats->accepted;
                if (!last) stats->last_h = h;
            }
        } else {
            if (stats) ++stats->rejected;
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
        }
        if (opt.h_max > 0) h = std::min(h, opt.h_max);
    }
    return y;
}

}  // namespace combust
