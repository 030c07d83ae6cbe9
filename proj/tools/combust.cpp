// combust: command-line driver for the combustion-wave stability toolkit.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "combust/artifacts.hpp"
#include "combust/config.hpp"
#include "combust/crosscheck.hpp"
#include "combust/evans.hpp"
#include "combust/evolution.hpp"
#include "combust/hugoniot.hpp"
#include "combust/parallel.hpp"
#include "combust/profile.hpp"
#include "combust/resolvent.hpp"
#include "combust/spectral.hpp"

namespace fs = std::filesystem;
using namespace combust;

namespace {

struct Flags {
    std::string config, out = ".", profile;
    std::optional<double> s, R, r0, E0, T, snap_every, t, min, max;
    std::optional<int> nodes, points;
    std::optional<std::string> contour, perturbation, file, axis;
    std::vector<double> lambda_re, lambda_im, y;
    bool check_evolution = false;
};

json cplx(cd z) { return json::array({z.real(), z.imag()}); }

class Context {
public:
    Context(std::string command, Config cfg, fs::path out) : command_(std::move(command)), cfg_(std::move(cfg)), out_(std::move(out)) {
        report_.command = command_;
    }

    Config& cfg() { return cfg_; }
    RunBlock& run() { return cfg_.run; }
    RunReport& report() { return report_; }

    /// Freezes the config: call after every run option has been read.
    void begin() {
        report_.config = echo(cfg_);
        stem_ = command_ + "_" + config_hash(command_, cfg_);
        std::error_code ec;
        fs::create_directories(out_, ec);
        if (ec) throw InputError("cannot create output directory '" + out_.string() + "'");
        report_.warn(flags::flux_choice);
    }
    fs::path csv() const { return out_ / (stem_ + ".csv"); }
    fs::path json_path() const { return out_ / (stem_ + ".json"); }

    int finish(const std::vector<fs::path>& written_csv = {}) {
        report_.write(json_path());
        for (const auto& p : written_csv) std::cout << p.string() << '\n';
        std::cout << json_path().string() << '\n';
        return 0;
    }

    void require_valid_model() const {
        const ValidationReport v = validate(cfg_.model);
        if (v.ok()) return;
        std::string msg = "config.model violates the model hypotheses:";
        for (const auto& e : v.violations) msg += " [" + e.what + "]";
        throw InputError(msg);
    }

    void require_profile() {
        if (!cfg_.run.has("profile") || cfg_.run.string("profile", "").empty())
            throw InputError("profile required: pass --profile <CSV written by 'combust profile'>");
    }

    std::shared_ptr<const Profile> load_profile() {
        require_profile();
        const std::string path = cfg_.run.string("profile", "");
        require_valid_model();
        const WaveProblem w = resolve_wave(cfg_);
        return std::make_shared<const Profile>(read_profile_csv(path, cfg_.model, w));
    }

private:
    std::string command_;
    Config cfg_;
    fs::path out_;
    std::string stem_;
    RunReport report_;
};

json wave_json(const WaveProblem& w) {
    return {{"u_minus", w.u_minus},
            {"u_plus", w.u_plus},
            {"z_minus", w.z_minus},
            {"z_plus", w.z_plus},
            {"s", w.s},
            {"class", to_string(w.cls)},
            {"alpha_hat_minus", w.alpha_hat_minus},
            {"alpha_hat_plus", w.alpha_hat_plus},
            {"rh_residual", w.rh_residual},
            {"admissible", w.admissible}};
}

/// Profile stand-in carrying only model and end states, for quantities of the limiting systems.
std::shared_ptr<const Profile> limits_only(const Config& c) {
    Profile P;
    P.params = c.model;
    P.problem = resolve_wave(c);
    return std::make_shared<const Profile>(std::move(P));
}

EvansOptions evans_options(const Config& c) { return c.numerics.evans; }

json contour_json(const ContourResult& cr) {
    return {{"kind", cr.kind},
            {"R", cr.R},
            {"r0", cr.r0},
            {"winding", cr.winding},
            {"winding_real", cr.winding_real},
            {"integer_ok", cr.integer_ok},
            {"nodes_upper_half", cr.nodes.size()},
            {"refinements", cr.refinements},
            {"min_abs_D", cr.min_abs_D},
            {"max_abs_D", cr.max_abs_D},
            {"max_arg_step", cr.max_arg_step}};
}

json stability_json(const StabilityReport& r) {
    return {{"verdict", to_string(r.verdict)},
            {"reason", r.reason},
            {"outer_winding", r.outer_winding},
            {"outer_winding_2R", r.outer_winding_2R},
            {"circle_winding", r.circle_winding},
            {"R", r.R},
            {"r0", r.r0},
            {"d_prime_zero", cplx(r.d_prime)},
            {"gamma", r.gamma},
            {"spectral_ok", r.spectral_ok},
            {"gamma_ok", r.gamma_ok},
            {"dprime_ok", r.dprime_ok}};
}

/// Closed contour: upper half followed by its conjugate mirror in reverse.
void write_contour_csv(const ContourResult& cr, const fs::path& path) {
    CsvWriter w(path, {"re_lambda", "im_lambda", "re_D", "im_D", "scale_exponent"});
    auto row = [&](cd l, cd m, double e) {
        w.cell(l.real()).cell(l.imag()).cell(m.real()).cell(m.imag()).cell(e);
        w.end();
    };
    for (const auto& n : cr.nodes) row(n.ev.lambda, n.ev.mantissa, n.ev.log_scale);
    for (std::size_t i = cr.nodes.size(); i-- > 0;) {
        const auto& ev = cr.nodes[i].ev;
        if (ev.lambda.imag() == 0.0) continue;
        row(std::conj(ev.lambda), std::conj(ev.mantissa), ev.log_scale);
    }
}

VerdictOptions verdict_options(const Config& c, double R) {
    VerdictOptions vo;
    vo.R = R;
    vo.nodes = c.numerics.evans_nodes;
    vo.winding = c.numerics.winding;
    return vo;
}

std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw InputError("grid needs at least one point");
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

// ---------------------------------------------------------------------------------------------

int cmd_validate(Context& ctx) {
    ctx.begin();
    const ValidationReport v = validate(ctx.cfg().model);
    json list = json::array();
    for (const auto& e : v.violations) list.push_back({{"violation", e.what}, {"u", e.u}, {"z", e.z}});
    ctx.report().results = {{"admissible", v.ok()}, {"violations", list}};
    return ctx.finish();
}

int cmd_rh(Context& ctx) {
    Config& c = ctx.cfg();
    if (!c.problem.s) throw InputError("rh requires a wave speed (config.problem.s or --s)");
    ctx.begin();
    ctx.require_valid_model();
    const auto roots = solve_rh(c.model, c.problem.u_plus, *c.problem.s);
    CsvWriter w(ctx.csv(), {"s", "u_minus", "class", "rh_residual", "admissible"});
    json list = json::array();
    for (const auto& r : roots) {
        w.cell(r.s).cell(r.u_minus).cell(to_string(r.cls)).cell(r.rh_residual).cell(r.admissible ? 1 : 0);
        w.end();
        list.push_back(wave_json(r));
    }
    ctx.report().results = {{"u_plus", c.problem.u_plus}, {"s", *c.problem.s}, {"roots", list}};
    return ctx.finish({ctx.csv()});
}

int cmd_cj(Context& ctx) {
    Config& c = ctx.cfg();
    ctx.begin();
    ctx.require_valid_model();
    const CjSpeeds cj = cj_speeds(c.model, c.problem.u_plus);
    json r = {{"u_plus", c.problem.u_plus}};
    r["detonation_speed"] = cj.detonation ? json(*cj.detonation) : json(nullptr);
    r["deflagration_speed"] = cj.deflagration ? json(*cj.deflagration) : json(nullptr);
    ctx.report().results = r;
    return ctx.finish();
}

int cmd_profile(Context& ctx) {
    Config& c = ctx.cfg();
    ctx.begin();
    ctx.require_valid_model();
    const WaveProblem w = resolve_wave(c);
    const ProfileOutcome out = compute_profile(w, c.model, c.numerics.profile);
    if (!out.connected()) throw NumericalError("profile: " + out.diagnostic);
    const Profile& P = *out.profile;
    write_profile_csv(P, ctx.csv());
    const DecayReport dr = verify_decay(P);
    json fits = json::array();
    for (const auto& f : dr.fits)
        fits.push_back({{"side", to_string(f.side)},
                        {"component", f.component == 0 ? "u" : "z"},
                        {"fitted", f.fit},
                        {"rate", f.rate},
                        {"expected", f.expected},
                        {"points", f.points}});
    const double gamma = transversality_gamma(P);
    ctx.report().results = {{"wave", wave_json(w)},
                            {"X", P.X},
                            {"h", P.h},
                            {"points", P.size()},
                            {"collocation_residual", P.collocation_residual},
                            {"continuation_steps", P.continuation_steps},
                            {"newton_iterations", P.newton_iterations},
                            {"u_center", P.Y[P.center_index()][0]},
                            {"decay", fits},
                            {"gamma", gamma},
                            {"csv", ctx.csv().filename().string()}};
    return ctx.finish({ctx.csv()});
}

const char* mode_name(const Mode& m) {
    if (m.kind == ModeKind::Fluid) return m.branch > 0 ? "fluid+" : "fluid-";
    return m.branch > 0 ? "reaction+" : "reaction-";
}

int cmd_modes(Context& ctx) {
    Config& c = ctx.cfg();
    const auto re = ctx.run().list("lambda_re", {0.0, 0.5, 1.0});
    const auto im = ctx.run().list("lambda_im", {0.0, 0.5, 1.0});
    ctx.begin();
    ctx.require_valid_model();
    const SpectralProblem sp(limits_only(c));
    CsvWriter w(ctx.csv(), {"side", "re_lambda", "im_lambda", "mode", "re_mu", "im_mu", "stable"});
    double mismatch = 0, residual = 0;
    std::vector<std::string> notes;
    for (Side side : {Side::Minus, Side::Plus})
        for (double a : re)
            for (double b : im) {
                const ModeSet ms = limiting_modes(sp, side, cd(a, b));
                mismatch = std::max(mismatch, ms.dense_mismatch);
                residual = std::max(residual, ms.max_residual);
                if (!ms.warning.empty()) ctx.report().warn("modes: " + ms.warning);
                for (const auto& m : ms.modes) {
                    w.cell(to_string(side)).cell(a).cell(b).cell(std::string(mode_name(m)));
                    w.cell(m.mu.real()).cell(m.mu.imag()).cell(m.mu.real() < 0 ? 1 : 0);
                    w.end();
                }
            }
    json slow = json::array();
    for (Side side : {Side::Minus, Side::Plus})
        for (const auto& m : slow_mode_expansion(sp, side))
            slow.push_back({{"side", to_string(side)},
                            {"kind", m.kind == ModeKind::Fluid ? "fluid" : "reaction"},
                            {"branch", m.branch},
                            {"c1", m.c1},
                            {"c2", m.c2}});
    const double s = sp.s(), d = sp.d();
    ctx.report().results = {{"wave", wave_json(sp.profile().problem)},
                            {"max_dense_mismatch", mismatch},
                            {"max_residual", residual},
                            {"slow_modes", slow},
                            {"reaction_c2_implemented", -d / (s * s * s)},
                            {"reaction_c2_alternative", -2 * d / (s * s * s)}};
    ctx.report().warn(flags::reaction_taylor);
    ctx.report().warn(flags::limit_sign);
    ctx.report().warn(flags::fluid_branch);
    return ctx.finish({ctx.csv()});
}

int cmd_dispersion(Context& ctx) {
    Config& c = ctx.cfg();
    const double xmax = ctx.run().number("xi_max", 10.0);
    const int n = ctx.run().integer("xi_points", 201);
    ctx.begin();
    ctx.require_valid_model();
    if (!(xmax > 0)) throw InputError("config.run.xi_max: must be positive");
    const SpectralProblem sp(limits_only(c));
    const DispersionCurves dc = dispersion(sp, linspace(-xmax, xmax, n));
    CsvWriter w(ctx.csv(), {"xi", "re_fluid_minus", "im_fluid_minus", "re_fluid_plus", "im_fluid_plus",
                            "re_reaction_minus", "im_reaction_minus", "re_reaction_plus", "im_reaction_plus"});
    for (std::size_t i = 0; i < dc.xi.size(); ++i) {
        w.cell(dc.xi[i]);
        for (cd v : {dc.fluid_minus[i], dc.fluid_plus[i], dc.reaction_minus[i], dc.reaction_plus[i]})
            w.cell(v.real()).cell(v.imag());
        w.end();
    }
    ctx.report().results = {{"eta1", dc.eta1},
                            {"eta2", dc.eta2},
                            {"certified", dc.certified},
                            {"envelope_const", dc.envelope_const}};
    ctx.report().warn(flags::dispersion);
    ctx.report().warn(flags::limit_sign);
    return ctx.finish({ctx.csv()});
}

int cmd_evans(Context& ctx) {
    Config& c = ctx.cfg();
    const double Rrun = ctx.run().number("R", c.numerics.evans_R);
    ctx.require_profile();
    ctx.begin();
    const auto P = ctx.load_profile();
    ctx.report().warn(flags::limit_sign);
    const SpectralProblem sp(P);
    const EvansFunction E(sp, evans_options(c));
    const double R = Rrun > 0 ? Rrun : default_outer_radius(sp);
    const ContourResult outer = winding(E, outer_contour(R, E.r0(), c.numerics.evans_nodes), c.numerics.winding);
    write_contour_csv(outer, ctx.csv());
    const cd D0 = E(cd(0.0, 0.0)).D, Dr = E(cd(E.r0(), 0.0)).D;
    const cd probe(0.3, 0.7);
    const cd Dp = E(probe).D, Dc = E(std::conj(probe)).D;
    const double gamma = transversality_gamma(*P);
    const StabilityReport st = verdict(E, gamma, verdict_options(c, R));
    ctx.report().results = {{"contour", contour_json(outer)},
                            {"D0_over_Dr0", std::abs(D0) / std::abs(Dr)},
                            {"conjugation_error", std::abs(Dc - std::conj(Dp)) / std::abs(Dp)},
                            {"stability", stability_json(st)}};
    return ctx.finish({ctx.csv()});
}

int cmd_winding(Context& ctx) {
    Config& c = ctx.cfg();
    const std::string kind = ctx.run().string("contour", "outer");
    const double Rrun = ctx.run().number("R", c.numerics.evans_R);
    const double r0run = ctx.run().number("r0", 0.0);
    const int nodes = ctx.run().integer("nodes", c.numerics.evans_nodes);
    if (kind != "outer" && kind != "circle") throw InputError("config.run.contour: expected 'outer' or 'circle'");
    if (nodes < 8) throw InputError("config.run.nodes: at least 8 nodes required");
    ctx.require_profile();
    ctx.begin();
    const auto P = ctx.load_profile();
    ctx.report().warn(flags::limit_sign);
    const SpectralProblem sp(P);
    const EvansFunction E(sp, evans_options(c));
    const double r0 = r0run > 0 ? r0run : E.r0();
    const double R = Rrun > 0 ? Rrun : default_outer_radius(sp);
    if (kind == "outer" && !(R > r0)) throw InputError("config.run.R: must exceed r0");
    const Contour ct = kind == "outer" ? outer_contour(R, r0, nodes) : origin_circle(r0, nodes);
    const ContourResult cr = winding(E, ct, c.numerics.winding);
    write_contour_csv(cr, ctx.csv());
    ctx.report().results = {{"contour", contour_json(cr)}};
    return ctx.finish({ctx.csv()});
}

SpectralOptions planted_options(RunBlock& run) {
    SpectralOptions so;
    so.planted.kappa = run.number("planted_kappa", 0.0);
    so.planted.center = run.number("planted_center", 0.0);
    so.planted.width = run.number("planted_width", 1.0);
    if (!(so.planted.width > 0)) throw InputError("config.run.planted_width: must be positive");
    return so;
}

int cmd_verdict(Context& ctx) {
    Config& c = ctx.cfg();
    const SpectralOptions so = planted_options(ctx.run());
    const double Rrun = ctx.run().number("R", c.numerics.evans_R);
    ctx.require_profile();
    ctx.begin();
    const auto P = ctx.load_profile();
    ctx.report().warn(flags::limit_sign);
    const SpectralProblem sp(P, so);
    const EvansFunction E(sp, evans_options(c));
    const double R = Rrun > 0 ? Rrun : default_outer_radius(sp);
    const double gamma = transversality_gamma(*P);
    const StabilityReport st = verdict(E, gamma, verdict_options(c, R));
    json res = stability_json(st);
    if (st.outer_winding >= 1) {
        const ContourResult outer = winding(E, outer_contour(R, E.r0(), c.numerics.evans_nodes), c.numerics.winding);
        const cd guess = zero_moment(outer) / static_cast<double>(outer.winding);
        try {
            res["zero_estimate"] = cplx(locate_zero(E, guess));
        } catch (const NumericalError& e) {
            ctx.report().warn(std::string("zero location: ") + e.what());
            res["zero_estimate"] = cplx(guess);
        }
    }
    res["wave"] = wave_json(P->problem);
    ctx.report().results = res;
    return ctx.finish();
}

int cmd_resolvent(Context& ctx) {
    Config& c = ctx.cfg();
    const auto re = ctx.run().list("lambda_re", {0.5});
    const auto im = ctx.run().list("lambda_im", {0.0});
    const double x0 = ctx.run().number("x_min", -10.0), x1 = ctx.run().number("x_max", 10.0);
    const int nx = ctx.run().integer("x_points", 201);
    const auto ys = ctx.run().list("y", {-2.0, 0.0, 2.0});
    const bool residue = ctx.run().flag("residue", false);
    if (re.size() != im.size() || re.empty())
        throw InputError("config.run.lambda_re/lambda_im: equal, nonzero lengths required");
    if (!(x1 > x0)) throw InputError("config.run.x_max: must exceed x_min");
    if (ys.empty()) throw InputError("config.run.y: at least one source point required");
    ctx.require_profile();
    ctx.begin();
    const auto P = ctx.load_profile();
    const SpectralProblem sp(P);
    const auto xs = linspace(x0, x1, nx);
    CsvWriter w(ctx.csv(), {"re_lambda", "im_lambda", "y", "x", "re_G11", "im_G11", "re_G12", "im_G12", "re_G21",
                            "im_G21", "re_G22", "im_G22"});
    json lam = json::array();
    for (std::size_t k = 0; k < re.size(); ++k) {
        const cd l(re[k], im[k]);
        const ResolventSample S = resolvent_kernel(sp, l, xs, ys, c.numerics.resolvent);
        for (std::size_t j = 0; j < ys.size(); ++j)
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const Mat2c& g = S.G[j][i];
                w.cell(l.real()).cell(l.imag()).cell(ys[j]).cell(xs[i]);
                for (cd v : {g(0, 0), g(0, 1), g(1, 0), g(1, 1)}) w.cell(v.real()).cell(v.imag());
                w.end();
            }
        lam.push_back({{"lambda", cplx(l)}, {"frame_angle", S.frame_angle}});
    }
    json res = {{"samples", lam}, {"convention", "(L - lambda) G = delta; derivative jump B^{-1}"}};
    if (residue) {
        const ResidueReport rr = pole_structure(sp, xs, ys);
        res["residue"] = {{"rho", rr.rho},
                          {"rank_ratio", rr.rank_ratio},
                          {"x_cosine", rr.x_cosine},
                          {"minus_annihilation", rr.minus_annihilation},
                          {"degenerate", rr.degenerate}};
    }
    ctx.report().results = res;
    return ctx.finish({ctx.csv()});
}

int cmd_green(Context& ctx) {
    Config& c = ctx.cfg();
    const double t = ctx.run().number("t", 5.0);
    const bool check = ctx.run().flag("check_evolution", false);
    double y0 = 0, width = 0, x0 = 0, x1 = 0;
    int nx = 0;
    std::vector<double> ys;
    if (check) {
        y0 = ctx.run().number("y0", -2.0);
        width = ctx.run().number("width", 0.5);
        if (!(width > 0)) throw InputError("config.run.width: must be positive");
    } else {
        x0 = ctx.run().number("x_min", -10.0);
        x1 = ctx.run().number("x_max", 10.0);
        nx = ctx.run().integer("x_points", 81);
        ys = ctx.run().list("y", {0.0});
        if (!(x1 > x0)) throw InputError("config.run.x_max: must exceed x_min");
        if (ys.empty()) throw InputError("config.run.y: at least one source point required");
    }
    if (!(t > 0)) throw InputError("config.run.t: must be positive");
    ctx.require_profile();
    ctx.begin();
    const auto P = ctx.load_profile();
    const SpectralProblem sp(P);
    ctx.report().warn(flags::errfn_norm);
    ctx.report().warn(flags::eplus_args);
    if (check) {
        GreenEvolutionOptions o;
        o.t = t;
        o.y0 = y0;
        o.width = width;
        o.ilt = c.numerics.ilt;
        o.evolve_dx = c.numerics.evolution_dx;
        const GreenEvolutionReport r = green_evolution_check(sp, o);
        CsvWriter w(ctx.csv(), {"x", "u_green", "z_green", "u_evolved", "z_evolved"});
        for (std::size_t k = 0; k < r.x.size(); ++k) {
            w.cell(r.x[k]).cell(r.green[k][0]).cell(r.green[k][1]).cell(r.evolved[k][0]).cell(r.evolved[k][1]);
            w.end();
        }
        ctx.report().results = {{"t", t},
                                {"l1_relative", r.l1_relative},
                                {"tolerance", 0.05},
                                {"agree", r.l1_relative <= 0.05},
                                {"mass_initial", r.mass_initial},
                                {"mass_green", r.mass_green},
                                {"mass_evolved", r.mass_evolved},
                                {"ilt_nodes", r.ilt_nodes},
                                {"ilt_rel_change", r.ilt_change},
                                {"dt", r.dt},
                                {"dx", r.dx}};
        return ctx.finish({ctx.csv()});
    }
    const ExcitedKernel ek(sp);
    const GreenGrid gg = green_grid(sp, ek, linspace(x0, x1, nx), ys, t, c.numerics.ilt);
    CsvWriter w(ctx.csv(), {"t", "y", "x", "G11", "G12", "G21", "G22", "E11", "E12", "E21", "E22"});
    for (std::size_t j = 0; j < gg.y.size(); ++j)
        for (std::size_t i = 0; i < gg.x.size(); ++i) {
            const Mat2& G = gg.G[j][i];
            const Mat2& E = gg.E[j][i];
            w.cell(t).cell(gg.y[j]).cell(gg.x[i]);
            w.cell(G(0, 0)).cell(G(0, 1)).cell(G(1, 0)).cell(G(1, 1));
            w.cell(E(0, 0)).cell(E(0, 1)).cell(E(1, 0)).cell(E(1, 1));
            w.end();
        }
    ctx.report().results = {{"t", t}, {"ilt_nodes", gg.nodes}, {"c", ek.c()},
                            {"pi_global", {ek.pi_global()[0], ek.pi_global()[1]}}};
    return ctx.finish({ctx.csv()});
}

int cmd_evolve(Context& ctx) {
    Config& c = ctx.cfg();
    const std::string kind = ctx.run().string("perturbation", "gaussian");
    PerturbationSpec ps;
    ps.E0 = ctx.run().number("E0", 1e-3);
    const double T = ctx.run().number("T", 200.0);
    const double snap = ctx.run().number("snap_every", 1.0);
    std::string file;
    if (kind == "gaussian" || kind == "bump") {
        ps.kind = kind == "gaussian" ? PerturbationKind::Gaussian : PerturbationKind::Bump;
        ps.center = ctx.run().number("center", 0.0);
        ps.width = ctx.run().number("width", 1.0);
        ps.u_weight = ctx.run().number("u_weight", 1.0);
        ps.z_weight = ctx.run().number("z_weight", 0.0);
        if (!(ps.width > 0)) throw InputError("config.run.width: must be positive");
    } else if (kind == "file") {
        ps.kind = PerturbationKind::Samples;
        file = ctx.run().string("file", "");
        if (file.empty()) throw InputError("config.run.file: required for --perturbation file");
    } else {
        throw InputError("config.run.perturbation: expected gaussian, bump or file");
    }
    if (!(T > 0)) throw InputError("config.run.T: must be positive");
    if (!(snap > 0) || snap > T) throw InputError("config.run.snap_every: must lie in (0, T]");
    if (!(ps.E0 > 0)) throw InputError("config.run.E0: must be positive");
    ctx.begin();
    ctx.require_valid_model();
    if (ps.kind == PerturbationKind::Samples) {
        const auto [header, rows] = read_numeric_csv(file);
        if (header != std::vector<std::string>{"x", "u", "z"}) throw InputError("'" + file + "': expected columns x,u,z");
        for (const auto& r : rows) {
            if (!ps.x.empty() && !(r[0] > ps.x.back())) throw InputError("'" + file + "': x must increase");
            ps.x.push_back(r[0]);
            ps.u.push_back(r[1]);
            ps.z.push_back(r[2]);
        }
    }
    std::shared_ptr<const Profile> P;
    if (ctx.run().has("profile")) {
        P = ctx.load_profile();
    } else {
        const ProfileOutcome out = compute_profile(resolve_wave(c), c.model, c.numerics.profile);
        if (!out.connected()) throw NumericalError("evolve: " + out.diagnostic);
        P = std::make_shared<const Profile>(*out.profile);
    }
    const SpectralProblem sp(P);
    const ExcitedKernel ek(sp);
    TrackOptions to;
    to.T = T;
    to.snap_dt = snap;
    to.dx = c.numerics.evolution_dx;
    to.L = c.numerics.evolution_L;
    to.evolve.cfl = c.numerics.evolution_cfl;
    const PerturbationRun run = perturb_and_track(*P, ps, to, &ek);

    CsvWriter w(ctx.csv(), {"t", "x", "u", "z"});
    const int every = std::max(1, to.stored_every);
    for (std::size_t k = 0; k < run.u_coarse.size(); ++k) {
        const double t = run.snaps[k * every].t;
        for (std::size_t i = 0; i < run.x_coarse.size(); ++i) {
            w.cell(t).cell(run.x_coarse[i]).cell(run.u_coarse[k][i]).cell(run.z_coarse[k][i]);
            w.end();
        }
    }
    json series = {{"t", json::array()},          {"delta", json::array()},  {"delta_reliable", json::array()},
                   {"delta_integral", json::array()}, {"L1", json::array()}, {"L2", json::array()},
                   {"Linf", json::array()},       {"template_ratio", json::array()}, {"mass", json::array()}};
    for (const auto& s : run.snaps) {
        series["t"].push_back(s.t);
        series["delta"].push_back(s.delta);
        series["delta_reliable"].push_back(s.delta_reliable);
        series["delta_integral"].push_back(s.delta_integral);
        series["L1"].push_back(s.l1);
        series["L2"].push_back(s.l2);
        series["Linf"].push_back(s.linf);
        series["template_ratio"].push_back(s.template_ratio);
        series["mass"].push_back(s.mass);
    }
    json res = {{"wave", wave_json(P->problem)}, {"E0", run.E0},  {"T", T},
                {"dt", run.dt},                  {"dx", run.dx},  {"L", run.L},
                {"steady_residual", run.steady_residual},         {"aborted", run.aborted},
                {"series", series}};
    if (!run.aborted && T >= 100) {
        const DecayRateReport dr = decay_rates(run);
        json fits = json::array();
        for (const auto& f : dr.fits)
            fits.push_back({{"quantity", f.quantity},
                            {"exponent", f.exponent},
                            {"expected", f.expected},
                            {"tolerance", f.tolerance},
                            {"t_lo", f.t_lo},
                            {"t_hi", f.t_hi},
                            {"points", f.points},
                            {"truncated", f.truncated},
                            {"pass", f.pass}});
        const TemplateReport tr = template_compare(run);
        res["fits"] = fits;
        res["delta_inf"] = dr.delta_inf;
        res["ddelta"] = {{"early", dr.ddelta_early}, {"late", dr.ddelta_late}, {"bounded", dr.ddelta_bounded}};
        res["template"] = {{"sup_ratio", tr.sup_ratio},
                           {"trend_exponent", tr.trend_exponent},
                           {"early_max", tr.early_max},
                           {"late_max", tr.late_max},
                           {"theta_psi1_empty", tr.theta_psi1_empty},
                           {"no_upward_trend", tr.no_upward_trend}};
    }
    ctx.report().results = res;
    ctx.report().warn(flags::smallness);
    ctx.report().warn(flags::errfn_norm);
    ctx.report().warn(flags::eplus_args);
    ctx.finish({ctx.csv()});
    if (run.aborted) {
        std::cerr << "evolve: solution blew up before T; partial report written\n";
        return 1;
    }
    return 0;
}

struct SweepRow {
    double value = 0;
    std::string status = "ok", verdict, message;
    StabilityReport st;
};

/// One sweep point: profile, Evans function and verdict at the configured numerics.
SweepRow sweep_point(const Config& base, const std::string& axis, double value) {
    SweepRow row;
    row.value = value;
    try {
        Config c = base;
        if (axis == "q") c.model.q = value;
        else if (axis == "k") c.model.k = value;
        else if (axis == "d") c.model.d = value;
        else {
            c.problem.s = value;
            c.problem.u_minus.reset();
        }
        const ValidationReport v = validate(c.model);
        if (!v.ok()) throw InputError("model hypotheses violated: " + v.violations.front().what);
        const ProfileOutcome out = compute_profile(resolve_wave(c), c.model, c.numerics.profile);
        if (!out.connected()) throw NumericalError(out.diagnostic);
        const auto P = std::make_shared<const Profile>(*out.profile);
        const SpectralProblem sp(P);
        const EvansFunction E(sp, evans_options(c));
        const double R = c.numerics.evans_R > 0 ? c.numerics.evans_R : default_outer_radius(sp);
        row.st = verdict(E, transversality_gamma(*P), verdict_options(c, R));
        row.verdict = to_string(row.st.verdict);
        row.message = row.st.reason;
    } catch (const std::exception& e) {
        row.status = "failed";
        row.verdict = "none";
        row.message = e.what();
    }
    return row;
}

int cmd_sweep(Context& ctx) {
    Config& c = ctx.cfg();
    const std::string axis = ctx.run().string("axis", "q");
    if (axis != "q" && axis != "k" && axis != "d" && axis != "s")
        throw InputError("config.run.axis: expected one of q, k, d, s");
    if (!ctx.run().has("min") || !ctx.run().has("max"))
        throw InputError("sweep requires a range (--min and --max)");
    const double lo = ctx.run().number("min", 0.0), hi = ctx.run().number("max", 0.0);
    const int n = ctx.run().integer("points", 10);
    if (n < 1) throw InputError("config.run.points: empty range");
    if (!(lo <= hi)) throw InputError("config.run: range min > max");
    if (n > 1 && lo == hi) throw InputError("config.run: several points requested on a degenerate range");
    ctx.begin();
    const auto values = linspace(lo, hi, n);
    std::vector<SweepRow> rows(values.size());
    parallel_for(values.size(), [&](std::size_t i) { rows[i] = sweep_point(c, axis, values[i]); });
    CsvWriter w(ctx.csv(), {axis, "status", "verdict", "outer_winding", "outer_winding_2R", "circle_winding",
                            "re_d_prime", "im_d_prime", "gamma", "R", "r0", "message"});
    json list = json::array();
    int failures = 0;
    for (const auto& r : rows) {
        w.cell(r.value).cell(r.status).cell(r.verdict).cell(r.st.outer_winding).cell(r.st.outer_winding_2R);
        w.cell(r.st.circle_winding).cell(r.st.d_prime.real()).cell(r.st.d_prime.imag()).cell(r.st.gamma);
        w.cell(r.st.R).cell(r.st.r0).cell(r.message);
        w.end();
        if (r.status != "ok") ++failures;
        json e = {{axis, r.value}, {"status", r.status}, {"message", r.message}};
        if (r.status == "ok") e["stability"] = stability_json(r.st);
        list.push_back(e);
    }
    ctx.report().results = {{"axis", axis}, {"points", list}, {"failures", failures}};
    return ctx.finish({ctx.csv()});
}

// ---------------------------------------------------------------------------------------------

void apply_flags(const Flags& f, Config& c) {
    RunBlock& r = c.run;
    if (f.s) {
        c.problem.s = *f.s;
        c.problem.u_minus.reset();
    }
    if (!f.profile.empty()) r.set("profile", f.profile);
    if (f.R) r.set("R", *f.R);
    if (f.r0) r.set("r0", *f.r0);
    if (f.nodes) r.set("nodes", *f.nodes);
    if (f.contour) r.set("contour", *f.contour);
    if (f.perturbation) r.set("perturbation", *f.perturbation);
    if (f.file) r.set("file", *f.file);
    if (f.E0) r.set("E0", *f.E0);
    if (f.T) r.set("T", *f.T);
    if (f.snap_every) r.set("snap_every", *f.snap_every);
    if (f.t) r.set("t", *f.t);
    if (f.axis) r.set("axis", *f.axis);
    if (f.min) r.set("min", *f.min);
    if (f.max) r.set("max", *f.max);
    if (f.points) r.set("points", *f.points);
    if (!f.lambda_re.empty()) r.set("lambda_re", f.lambda_re);
    if (!f.lambda_im.empty()) r.set("lambda_im", f.lambda_im);
    if (!f.y.empty()) r.set("y", f.y);
    if (f.check_evolution) r.set("check_evolution", true);
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Stability laboratory for traveling combustion waves of Majda's model"};
    app.require_subcommand(1);
    Flags f;
    using Handler = int (*)(Context&);
    const std::vector<std::tuple<std::string, std::string, Handler>> commands = {
        {"rh", "Rankine-Hugoniot roots for (u+, s)", cmd_rh},
        {"cj", "Chapman-Jouguet speeds", cmd_cj},
        {"profile", "traveling-wave profile (CSV + JSON sidecar)", cmd_profile},
        {"modes", "limiting eigenvalues over a lambda grid", cmd_modes},
        {"dispersion", "dispersion curves of the limiting operators", cmd_dispersion},
        {"evans", "Evans function on the outer contour and stability report", cmd_evans},
        {"winding", "winding number on a chosen contour", cmd_winding},
        {"verdict", "stability verdict", cmd_verdict},
        {"resolvent", "resolvent kernel on a grid", cmd_resolvent},
        {"green", "Green function by inverse Laplace transform", cmd_green},
        {"evolve", "nonlinear perturbation experiment", cmd_evolve},
        {"sweep", "parameter sweep of the stability verdict", cmd_sweep},
        {"validate", "check the model hypotheses", cmd_validate},
    };
    std::map<CLI::App*, Handler> handlers;
    for (const auto& [name, help, h] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", f.config, "JSON config file");
        sub->add_option("--out", f.out, "artifact directory");
        handlers[sub] = h;
        if (name == "rh") sub->add_option("--s", f.s, "wave speed");
        if (name == "evans" || name == "winding" || name == "verdict" || name == "resolvent" || name == "green" ||
            name == "evolve")
            sub->add_option("--profile", f.profile, "profile CSV");
        if (name == "evans" || name == "winding" || name == "verdict") sub->add_option("--R", f.R, "outer radius");
        if (name == "winding") {
            sub->add_option("--r0", f.r0, "indentation / circle radius");
            sub->add_option("--nodes", f.nodes, "initial contour nodes");
            sub->add_option("--contour", f.contour, "outer | circle");
        }
        if (name == "modes" || name == "resolvent") {
            sub->add_option("--lambda-re", f.lambda_re, "real parts of lambda");
            sub->add_option("--lambda-im", f.lambda_im, "imaginary parts of lambda");
        }
        if (name == "resolvent" || name == "green") sub->add_option("--y", f.y, "source points");
        if (name == "green") {
            sub->add_option("--t", f.t, "time");
            sub->add_flag("--check-evolution", f.check_evolution, "compare with linearized time stepping");
        }
        if (name == "evolve") {
            sub->add_option("--perturbation", f.perturbation, "gaussian | bump | file");
            sub->add_option("--file", f.file, "perturbation table (x,u,z) for --perturbation file");
            sub->add_option("--E0", f.E0, "weighted perturbation size");
            sub->add_option("--T", f.T, "final time");
            sub->add_option("--snap-every", f.snap_every, "snapshot interval");
        }
        if (name == "sweep") {
            sub->add_option("--axis", f.axis, "q | k | d | s");
            sub->add_option("--min", f.min, "range start");
            sub->add_option("--max", f.max, "range end");
            sub->add_option("--points", f.points, "number of points");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    CLI::App* sub = app.get_subcommands().front();
    try {
        Config cfg = f.config.empty() ? parse_config(json::object()) : load_config(f.config);
        apply_flags(f, cfg);
        Context ctx(sub->get_name(), std::move(cfg), f.out);
        return handlers.at(sub)(ctx);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) { return dispatch(argc, argv); }
