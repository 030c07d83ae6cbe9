#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "combust/error.hpp"

namespace combust {

struct FluxValues {
    double f = 0, f_u = 0, f_z = 0, f_uu = 0, f_uz = 0, f_zz = 0;
};

enum class FluxKind { Burgers, BurgersCoupled, Linear };

/// Closed-form flux f(u,z) registered by name.
///   burgers:          f = u^2/2
///   burgers_coupled:  f = u^2/2 + c z u
///   linear:           f = u
class Flux {
public:
    Flux() = default;
    Flux(FluxKind kind, double coupling = 0.0, double u_lo = 0.0, double u_hi = 4.0)
        : kind_(kind), coupling_(coupling), u_lo_(u_lo), u_hi_(u_hi) {}

    static Flux from_name(const std::string& name, double coupling = 0.0) {
        if (name == "burgers") return Flux(FluxKind::Burgers);
        if (name == "burgers_coupled") return Flux(FluxKind::BurgersCoupled, coupling);
        if (name == "linear") return Flux(FluxKind::Linear);
        throw InputError("unknown flux name '" + name + "'");
    }

    FluxValues eval(double u, double z) const {
        FluxValues v;
        switch (kind_) {
            case FluxKind::Burgers:
                v.f = 0.5 * u * u;
                v.f_u = u;
                v.f_uu = 1.0;
                break;
            case FluxKind::BurgersCoupled:
                v.f = 0.5 * u * u + coupling_ * z * u;
                v.f_u = u + coupling_ * z;
                v.f_z = coupling_ * u;
                v.f_uu = 1.0;
                v.f_uz = coupling_;
                break;
            case FluxKind::Linear:
                v.f = u;
                v.f_u = 1.0;
                break;
        }
        return v;
    }

    double f(double u, double z) const { return eval(u, z).f; }
    double f_u(double u, double z) const { return eval(u, z).f_u; }
    double f_z(double u, double z) const { return eval(u, z).f_z; }

    FluxKind kind() const { return kind_; }
    double coupling() const { return coupling_; }
    double u_lo() const { return u_lo_; }
    double u_hi() const { return u_hi_; }
    void set_working_domain(double lo, double hi) {
        u_lo_ = lo;
        u_hi_ = hi;
    }

    std::string name() const {
        switch (kind_) {
            case FluxKind::Burgers: return "burgers";
            case FluxKind::BurgersCoupled: return "burgers_coupled";
            case FluxKind::Linear: return "linear";
        }
        return "?";
    }

private:
    FluxKind kind_ = FluxKind::Burgers;
    double coupling_ = 0.0;
    double u_lo_ = 0.0;
    double u_hi_ = 4.0;
};

/// Quartic bump ignition function on (u_i, u_sup), normalized to peak `amplitude`.
struct Ignition {
    double u_i = 0.5;
    double u_sup = 3.5;
    double amplitude = 1.0;

    double phi(double u) const {
        if (u <= u_i || u >= u_sup) return 0.0;
        const double w = u_sup - u_i;
        const double p = (u - u_i) * (u_sup - u);
        return amplitude * 16.0 * p * p / (w * w * w * w);
    }
    double dphi(double u) const {
        if (u <= u_i || u >= u_sup) return 0.0;
        const double w = u_sup - u_i;
        const double p = (u - u_i) * (u_sup - u);
        return amplitude * 32.0 * p * (u_sup + u_i - 2.0 * u) / (w * w * w * w);
    }
    double d2phi(double u) const {
        if (u <= u_i || u >= u_sup) return 0.0;
        const double w = u_sup - u_i;
        const double p = (u - u_i) * (u_sup - u);
        const double dp = u_sup + u_i - 2.0 * u;
        return amplitude * 32.0 * (dp * dp - 2.0 * p) / (w * w * w * w);
    }
    bool inside(double u) const { return u > u_i && u < u_sup; }
};

struct ModelParams {
    double q = 0.5;
    double k = 1.0;
    double d = 0.2;
    double b = 1.0;
    Flux flux;
    Ignition ignition;
};

/// The default reference configuration: Burgers flux, q=0.5, k=1, d=0.2, ignition on (0.5, 3.5).
inline ModelParams default_config() { return ModelParams{}; }

inline FluxValues eval_flux(const ModelParams& p, double u, double z) {
    if (!std::isfinite(u) || !std::isfinite(z)) throw InputError("eval_flux: non-finite state");
    const double pad = 1e-12 * (1.0 + std::abs(p.flux.u_hi() - p.flux.u_lo()));
    if (u < p.flux.u_lo() - pad || u > p.flux.u_hi() + pad || z < -pad || z > 1.0 + pad) {
        std::ostringstream os;
        os << "eval_flux: (u,z)=(" << u << "," << z << ") outside working domain [" << p.flux.u_lo() << ","
           << p.flux.u_hi() << "]x[0,1]";
        throw InputError(os.str());
    }
    return p.flux.eval(u, z);
}

struct IgnitionValues {
    double phi = 0, dphi = 0;
};

inline IgnitionValues eval_ignition(const ModelParams& p, double u) {
    return {p.ignition.phi(u), p.ignition.dphi(u)};
}

struct Violation {
    std::string what;
    double u = 0, z = 0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Radical-inverse (van der Corput) point in base `base`; always in (0,1) for index >= 1.
inline double radical_inverse(unsigned index, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * (index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

/// Checks every modeling hypothesis on sampled interior points of the working domain.
inline ValidationReport validate(const ModelParams& p, int samples = 1000) {
    ValidationReport rep;
    if (!(p.k > 0)) rep.violations.push_back({"k>0 fails", 0, 0});
    if (!(p.d > 0)) rep.violations.push_back({"d>0 fails", 0, 0});
    if (p.b != 1.0) rep.violations.push_back({"b=1 fails", 0, 0});
    if (!(p.ignition.u_i < p.ignition.u_sup)) rep.violations.push_back({"u_i < u^i fails", p.ignition.u_i, 0});
    if (!(p.ignition.amplitude > 0)) rep.violations.push_back({"ignition amplitude > 0 fails", 0, 0});
    if (!(p.flux.u_lo() < p.flux.u_hi())) rep.violations.push_back({"working domain empty", 0, 0});

    bool fu_bad = false, fuu_bad = false, deriv_bad = false;
    const double lo = p.flux.u_lo(), hi = p.flux.u_hi();
    for (int i = 1; i <= samples; ++i) {
        const double u = lo + (hi - lo) * radical_inverse(i, 2);
        const double z = radical_inverse(i, 3);
        const FluxValues v = p.flux.eval(u, z);
        if (!fu_bad && !(v.f_u > 0)) {
            rep.violations.push_back({"f_u>0 fails", u, z});
            fu_bad = true;
        }
        if (!fuu_bad && !(v.f_uu > 0)) {
            rep.violations.push_back({"f_uu>0 fails", u, z});
            fuu_bad = true;
        }
        if (!deriv_bad) {
            const double h = 1e-5 * (1.0 + std::abs(u));
            const double fu_fd = (p.flux.f(u + h, z) - p.flux.f(u - h, z)) / (2 * h);
            const double fz_fd = (p.flux.f(u, z + h) - p.flux.f(u, z - h)) / (2 * h);
            const double fuu_fd = (p.flux.f_u(u + h, z) - p.flux.f_u(u - h, z)) / (2 * h);
            auto bad = [](double a, double b) { return std::abs(a - b) > 1e-6 * std::max(1.0, std::abs(b)); };
            if (bad(v.f_u, fu_fd) || bad(v.f_z, fz_fd) || bad(v.f_uu, fuu_fd)) {
                rep.violations.push_back({"flux derivatives inconsistent with finite differences", u, z});
                deriv_bad = true;
            }
        }
    }
    return rep;
}

}  // namespace combust
