#pragma once

#include <cmath>
#include <vector>

#include "combust/evolution.hpp"
#include "combust/resolvent.hpp"

namespace combust {

/// Green function G(x, t; y) on a grid of x for each source point y. One resolvent solve per
/// contour node yields every x for a given y.
struct GreenGrid {
    double t = 0;
    std::vector<double> x, y;
    std::vector<std::vector<Mat2>> G, E;  // [j][i] = value at (x_i, y_j)
    int nodes = 0;
};

inline GreenGrid green_grid(const SpectralProblem& sp, const ExcitedKernel& ek, const std::vector<double>& xs,
                            const std::vector<double>& ys, double t, const IltOptions& io = {}) {
    if (!(t > 0)) throw InputError("green_grid: t must be positive");
    if (xs.empty() || ys.empty()) throw InputError("green_grid: empty x or y grid");
    std::vector<double> nodes = xs;
    nodes.insert(nodes.end(), ys.begin(), ys.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    auto index = [&](double v) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };
    const std::size_t nx = xs.size();
    auto F = [&](cd lam) {
        const ResolventSolver rs(sp, lam, nodes);
        std::vector<cd> flat;
        flat.reserve(4 * nx * ys.size());
        for (double y : ys) {
            const auto col = rs.column(index(y));
            for (double x : xs) {
                const Mat2c& g = col[index(x)];
                flat.insert(flat.end(), {g(0, 0), g(1, 0), g(0, 1), g(1, 1)});
            }
        }
        return flat;
    };
    const IltResult r = inverse_laplace(F, ilt_contour(sp, t, io), t, io);
    GreenGrid out;
    out.t = t;
    out.x = xs;
    out.y = ys;
    out.nodes = r.nodes;
    for (std::size_t j = 0; j < ys.size(); ++j) {
        const Vec2d e = ek(ys[j], t);
        std::vector<Mat2> gj, ej;
        for (std::size_t i = 0; i < nx; ++i) {
            const double* v = &r.values[4 * (j * nx + i)];
            Mat2 g;
            g << v[0], v[2], v[1], v[3];
            gj.push_back(g);
            const ProfilePoint p = sp.profile().at(xs[i]);
            ej.push_back(Eigen::Vector2d(p.up, p.zp) * e.transpose());
        }
        out.G.push_back(std::move(gj));
        out.E.push_back(std::move(ej));
    }
    return out;
}

struct GreenEvolutionOptions {
    double t = 5.0;
    double y0 = -2.0;         // Gaussian centre
    double width = 0.5;       // Gaussian width: exp(-((x - y0)/width)^2) in u, zero in z
    double green_half = 30.0; // quadrature nodes on [-green_half, green_half]
    double green_h = 0.05;
    double evolve_half = 60.0;
    double evolve_dx = 0;     // 0: (d/s)/8
    IltOptions ilt;
};

struct GreenEvolutionReport {
    std::vector<double> x;
    std::vector<Vec2d> green, evolved;
    double l1_relative = 0;
    double mass_initial = 0, mass_green = 0, mass_evolved = 0;  // int (u + q z)
    int ilt_nodes = 0;
    double ilt_change = 0;
    double dt = 0, dx = 0;
};

/// Linearized solution at time t from a Gaussian datum, computed once by applying the Green
/// function and once by time stepping; reports the relative L1 distance.
inline GreenEvolutionReport green_evolution_check(const SpectralProblem& sp, const GreenEvolutionOptions& o = {}) {
    GreenEvolutionReport rep;
    const double q = sp.q();
    const double dx = o.evolve_dx > 0 ? o.evolve_dx : (sp.d() / std::abs(sp.s())) / 8.0;
    const Grid g = Grid::uniform(o.evolve_half, dx);
    const Evolver ev(sp, g);
    auto datum = [&](double x) { return std::exp(-std::pow((x - o.y0) / o.width, 2)); };
    Field F;
    F.u.resize(g.N);
    F.z = Eigen::ArrayXd::Zero(g.N);
    for (int i = 0; i < g.N; ++i) F.u[i] = datum(g.x[i]);
    if (!ev.evolve(F, o.t, 0, nullptr)) throw NumericalError("green_evolution_check: linearized evolution blew up");
    rep.dt = ev.dt();
    rep.dx = g.dx;

    const int n = static_cast<int>(std::lround(2 * o.green_half / o.green_h));
    std::vector<Vec2d> data;
    for (int i = 0; i <= n; ++i) {
        rep.x.push_back(-o.green_half + o.green_h * i);
        data.emplace_back(datum(rep.x.back()), 0.0);
    }
    IltResult info;
    rep.green = green_apply(sp, rep.x, data, o.t, o.ilt, &info);
    rep.ilt_nodes = info.nodes;
    rep.ilt_change = info.rel_change;

    double num = 0, den = 0;
    for (std::size_t k = 0; k < rep.x.size(); ++k) {
        const Vec2d e(detail::lagrange6(F.u, g, rep.x[k], 0, 0), detail::lagrange6(F.z, g, rep.x[k], 0, 0));
        rep.evolved.push_back(e);
        num += (e - rep.green[k]).cwiseAbs().sum() * o.green_h;
        den += rep.green[k].cwiseAbs().sum() * o.green_h;
        rep.mass_initial += data[k][0] * o.green_h;
        rep.mass_green += (rep.green[k][0] + q * rep.green[k][1]) * o.green_h;
        rep.mass_evolved += (e[0] + q * e[1]) * o.green_h;
    }
    rep.l1_relative = den > 0 ? num / den : num;
    return rep;
}

}  // namespace combust
