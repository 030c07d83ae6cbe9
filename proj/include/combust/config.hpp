#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "combust/error.hpp"
#include "combust/evans.hpp"
#include "combust/hugoniot.hpp"
#include "combust/model.hpp"
#include "combust/profile.hpp"
#include "combust/resolvent.hpp"

namespace combust {

using json = nlohmann::json;

struct ProblemSpec {
    double u_plus = 0.0;
    std::optional<double> s, u_minus;
};

struct NumericsSpec {
    ProfileOptions profile;
    EvansOptions evans;
    double evans_R = 0.0;  // 0: default outer radius
    int evans_nodes = 160;
    WindingOptions winding;
    ResolventOptions resolvent;
    IltOptions ilt;
    double evolution_dx = 0.0, evolution_L = 0.0, evolution_cfl = 0.4;
};

enum class RunType { Number, Integer, String, Bool, NumberList };

/// Options of the run block, shared by all subcommands. Values not supplied are filled in
/// with the command's defaults on first access so that the echoed config is fully resolved.
class RunBlock {
public:
    static const std::map<std::string, RunType>& schema() {
        static const std::map<std::string, RunType> s = {
            {"profile", RunType::String},       {"lambda_re", RunType::NumberList},
            {"lambda_im", RunType::NumberList}, {"xi_max", RunType::Number},
            {"xi_points", RunType::Integer},    {"contour", RunType::String},
            {"R", RunType::Number},             {"r0", RunType::Number},
            {"nodes", RunType::Integer},        {"x_min", RunType::Number},
            {"x_max", RunType::Number},         {"x_points", RunType::Integer},
            {"y", RunType::NumberList},         {"t", RunType::Number},
            {"check_evolution", RunType::Bool}, {"y0", RunType::Number},
            {"width", RunType::Number},         {"perturbation", RunType::String},
            {"file", RunType::String},          {"E0", RunType::Number},
            {"T", RunType::Number},             {"snap_every", RunType::Number},
            {"center", RunType::Number},        {"u_weight", RunType::Number},
            {"z_weight", RunType::Number},      {"axis", RunType::String},
            {"min", RunType::Number},           {"max", RunType::Number},
            {"points", RunType::Integer},       {"planted_kappa", RunType::Number},
            {"planted_center", RunType::Number}, {"planted_width", RunType::Number},
            {"residue", RunType::Bool},
        };
        return s;
    }

    RunBlock() : j_(json::object()) {}

    void parse(const json& j, const std::string& path);
    void set(const std::string& key, json value) {
        check(key, value, "run");
        j_[key] = std::move(value);
    }
    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key, double def) { return get(key, json(def)).get<double>(); }
    int integer(const std::string& key, int def) { return get(key, json(def)).get<int>(); }
    bool flag(const std::string& key, bool def) { return get(key, json(def)).get<bool>(); }
    std::string string(const std::string& key, const std::string& def) {
        return get(key, json(def)).get<std::string>();
    }
    std::vector<double> list(const std::string& key, const std::vector<double>& def) {
        return get(key, json(def)).get<std::vector<double>>();
    }

    const json& raw() const { return j_; }

private:
    static void check(const std::string& key, const json& v, const std::string& path) {
        const auto it = schema().find(key);
        if (it == schema().end()) throw InputError("config." + path + ": unknown key '" + key + "'");
        const std::string where = "config." + path + "." + key;
        switch (it->second) {
            case RunType::Number:
                if (!v.is_number()) throw InputError(where + ": expected a number");
                break;
            case RunType::Integer:
                if (!v.is_number_integer()) throw InputError(where + ": expected an integer");
                break;
            case RunType::String:
                if (!v.is_string()) throw InputError(where + ": expected a string");
                break;
            case RunType::Bool:
                if (!v.is_boolean()) throw InputError(where + ": expected true or false");
                break;
            case RunType::NumberList:
                if (!v.is_array()) throw InputError(where + ": expected a list of numbers");
                for (std::size_t i = 0; i < v.size(); ++i)
                    if (!v[i].is_number())
                        throw InputError(where + "[" + std::to_string(i) + "]: expected a number");
                break;
        }
    }
    const json& get(const std::string& key, json def) {
        if (!j_.contains(key)) {
            check(key, def, "run");
            j_[key] = std::move(def);
        }
        return j_[key];
    }

    json j_;
};

inline void RunBlock::parse(const json& j, const std::string& path) {
    if (!j.is_object()) throw InputError("config." + path + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        check(it.key(), it.value(), path);
        j_[it.key()] = it.value();
    }
}

struct Config {
    ModelParams model;
    ProblemSpec problem;
    NumericsSpec numerics;
    RunBlock run;
};

namespace detail {

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw InputError(path_ + ": expected an object");
    }
    /// Rejects keys outside the allowed set.
    void finish(const std::set<std::string>& allowed) const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!allowed.count(it.key())) throw InputError(path_ + ": unknown key '" + it.key() + "'");
    }
    bool has(const std::string& key) const { return j_.contains(key); }
    std::string at(const std::string& key) const { return path_ + "." + key; }

    void number(const std::string& key, double& out) const {
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) throw InputError(at(key) + ": expected a number");
        out = v.get<double>();
    }
    void integer(const std::string& key, int& out) const {
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer()) throw InputError(at(key) + ": expected an integer");
        out = v.get<int>();
    }
    void string(const std::string& key, std::string& out) const {
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) throw InputError(at(key) + ": expected a string");
        out = v.get<std::string>();
    }
    const json& child(const std::string& key) const { return j_.at(key); }

private:
    const json& j_;
    std::string path_;
};

}  // namespace detail

inline void parse_model(const json& j, ModelParams& m) {
    detail::ObjectReader r(j, "config.model");
    r.finish({"flux", "q", "k", "d", "b", "ignition"});
    if (r.has("flux")) {
        detail::ObjectReader f(r.child("flux"), r.at("flux"));
        f.finish({"name", "coupling", "u_lo", "u_hi"});
        std::string name = m.flux.name();
        double coupling = m.flux.coupling(), lo = m.flux.u_lo(), hi = m.flux.u_hi();
        f.string("name", name);
        f.number("coupling", coupling);
        f.number("u_lo", lo);
        f.number("u_hi", hi);
        try {
            m.flux = Flux::from_name(name, coupling);
        } catch (const InputError&) {
            throw InputError(f.at("name") + ": unknown flux '" + name + "' (expected burgers, burgers_coupled or linear)");
        }
        m.flux.set_working_domain(lo, hi);
    }
    r.number("q", m.q);
    r.number("k", m.k);
    r.number("d", m.d);
    r.number("b", m.b);
    if (r.has("ignition")) {
        detail::ObjectReader ig(r.child("ignition"), r.at("ignition"));
        ig.finish({"u_i", "u_sup", "amplitude"});
        ig.number("u_i", m.ignition.u_i);
        ig.number("u_sup", m.ignition.u_sup);
        ig.number("amplitude", m.ignition.amplitude);
    }
}

inline void parse_problem(const json& j, ProblemSpec& p) {
    detail::ObjectReader r(j, "config.problem");
    r.finish({"u_plus", "s", "u_minus"});
    r.number("u_plus", p.u_plus);
    if (r.has("s")) {
        double s = 0;
        r.number("s", s);
        p.s = s;
    }
    if (r.has("u_minus")) {
        double um = 0;
        r.number("u_minus", um);
        p.u_minus = um;
    }
}

inline void parse_numerics(const json& j, NumericsSpec& n) {
    detail::ObjectReader r(j, "config.numerics");
    r.finish({"profile", "evans", "resolvent", "ilt", "evolution"});
    if (r.has("profile")) {
        detail::ObjectReader o(r.child("profile"), r.at("profile"));
        o.finish({"h", "X", "decay_target", "newton_tol"});
        o.number("h", n.profile.h);
        o.number("X", n.profile.X);
        o.number("decay_target", n.profile.decay_target);
        o.number("newton_tol", n.profile.newton_tol);
    }
    if (r.has("evans")) {
        detail::ObjectReader o(r.child("evans"), r.at("evans"));
        o.finish({"rtol", "atol", "segment", "X", "R", "nodes", "max_arg_step", "max_nodes"});
        o.number("rtol", n.evans.rtol);
        o.number("atol", n.evans.atol);
        o.number("segment", n.evans.segment);
        o.number("X", n.evans.X);
        o.number("R", n.evans_R);
        o.integer("nodes", n.evans_nodes);
        o.number("max_arg_step", n.winding.max_arg_step);
        o.integer("max_nodes", n.winding.max_nodes);
    }
    if (r.has("resolvent")) {
        detail::ObjectReader o(r.child("resolvent"), r.at("resolvent"));
        o.finish({"rtol", "atol"});
        o.number("rtol", n.resolvent.rtol);
        o.number("atol", n.resolvent.atol);
    }
    if (r.has("ilt")) {
        detail::ObjectReader o(r.child("ilt"), r.at("ilt"));
        o.finish({"rel_tol", "tail", "max_doublings"});
        o.number("rel_tol", n.ilt.rel_tol);
        o.number("tail", n.ilt.tail);
        o.integer("max_doublings", n.ilt.max_doublings);
    }
    if (r.has("evolution")) {
        detail::ObjectReader o(r.child("evolution"), r.at("evolution"));
        o.finish({"dx", "L", "cfl"});
        o.number("dx", n.evolution_dx);
        o.number("L", n.evolution_L);
        o.number("cfl", n.evolution_cfl);
    }
}

/// Parses a complete config document; every block is optional and defaults to the reference
/// configuration.
inline Config parse_config(const json& j) {
    Config c;
    if (!j.is_object()) throw InputError("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "model") parse_model(it.value(), c.model);
        else if (k == "problem") parse_problem(it.value(), c.problem);
        else if (k == "numerics") parse_numerics(it.value(), c.numerics);
        else if (k == "run") c.run.parse(it.value(), "run");
        else throw InputError("config: unknown key '" + k + "'");
    }
    if (!c.problem.s && !c.problem.u_minus) c.problem.s = 1.5;
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("config file '" + path + "': " + e.what());
    }
    return parse_config(j);
}

/// Fully resolved config as JSON; parse_config(echo(c)) reproduces c.
inline json echo(const Config& c) {
    json j;
    const ModelParams& m = c.model;
    j["model"] = {{"flux", {{"name", m.flux.name()},
                            {"coupling", m.flux.coupling()},
                            {"u_lo", m.flux.u_lo()},
                            {"u_hi", m.flux.u_hi()}}},
                  {"q", m.q},
                  {"k", m.k},
                  {"d", m.d},
                  {"b", m.b},
                  {"ignition", {{"u_i", m.ignition.u_i}, {"u_sup", m.ignition.u_sup}, {"amplitude", m.ignition.amplitude}}}};
    json p = {{"u_plus", c.problem.u_plus}};
    if (c.problem.s) p["s"] = *c.problem.s;
    if (c.problem.u_minus) p["u_minus"] = *c.problem.u_minus;
    j["problem"] = p;
    const NumericsSpec& n = c.numerics;
    j["numerics"] = {
        {"profile", {{"h", n.profile.h}, {"X", n.profile.X}, {"decay_target", n.profile.decay_target},
                     {"newton_tol", n.profile.newton_tol}}},
        {"evans", {{"rtol", n.evans.rtol}, {"atol", n.evans.atol}, {"segment", n.evans.segment},
                   {"X", n.evans.X}, {"R", n.evans_R}, {"nodes", n.evans_nodes},
                   {"max_arg_step", n.winding.max_arg_step}, {"max_nodes", n.winding.max_nodes}}},
        {"resolvent", {{"rtol", n.resolvent.rtol}, {"atol", n.resolvent.atol}}},
        {"ilt", {{"rel_tol", n.ilt.rel_tol}, {"tail", n.ilt.tail}, {"max_doublings", n.ilt.max_doublings}}},
        {"evolution", {{"dx", n.evolution_dx}, {"L", n.evolution_L}, {"cfl", n.evolution_cfl}}},
    };
    j["run"] = c.run.raw();
    return j;
}

/// 64-bit FNV-1a digest as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string config_hash(const std::string& command, const Config& c) {
    return fnv1a_hex(command + "\n" + echo(c).dump());
}

/// Wave problem selected by the problem block: the strong-detonation root for a given speed
/// (or the root nearest to a supplied u_minus), or the RH speed for a given u_minus.
inline WaveProblem resolve_wave(const Config& c) {
    const ModelParams& m = c.model;
    const ProblemSpec& p = c.problem;
    if (p.s) {
        if (!(*p.s > 0)) throw InputError("config.problem.s: wave speed must be positive");
        const auto roots = solve_rh(m, p.u_plus, *p.s);
        if (roots.empty()) throw InputError("config.problem: no RH root for the given u_plus and s");
        if (p.u_minus) {
            const WaveProblem* best = &roots.front();
            for (const auto& w : roots)
                if (std::abs(w.u_minus - *p.u_minus) < std::abs(best->u_minus - *p.u_minus)) best = &w;
            return *best;
        }
        for (const auto& w : roots)
            if (w.cls == WaveClass::StrongDetonation && w.admissible) return w;
        for (const auto& w : roots)
            if (w.admissible) return w;
        throw InputError("config.problem: no admissible RH root for the given u_plus and s");
    }
    const double um = *p.u_minus;
    const double den = m.q + p.u_plus - um;
    if (std::abs(den) < 1e-14) throw InputError("config.problem.u_minus: RH speed undefined (q + u_plus - u_minus = 0)");
    const double s = (m.flux.f(p.u_plus, 1.0) - m.flux.f(um, 0.0)) / den;
    if (!(s > 0)) throw InputError("config.problem.u_minus: RH speed is not positive");
    return make_problem(m, um, p.u_plus, s);
}

}  // namespace combust
