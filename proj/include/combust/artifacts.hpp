#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "combust/config.hpp"
#include "combust/profile.hpp"

namespace combust {

inline constexpr const char* kVersion = "0.1.0";

/// Decimal text of a double with 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw InputError("cannot write '" + path.string() + "'");
        row_strings(header);
    }

    CsvWriter& cell(double v) {
        sep();
        out_ << fmt17(v);
        return *this;
    }
    CsvWriter& cell(int v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& cell(const std::string& v) {
        sep();
        if (v.find_first_of(",\"\n") == std::string::npos) {
            out_ << v;
        } else {
            out_ << '"';
            for (char c : v) out_ << (c == '"' ? "\"\"" : std::string(1, c));
            out_ << '"';
        }
        return *this;
    }
    void end() {
        out_ << '\n';
        first_ = true;
    }

private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }
    void row_strings(const std::vector<std::string>& r) {
        for (const auto& s : r) cell(s);
        end();
    }

    std::ofstream out_;
    bool first_ = true;
};

/// Reads a numeric CSV with a header line; returns column names and rows.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_numeric_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw InputError("'" + path.string() + "': empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) header.push_back(tok);
    }
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        while (std::getline(ss, tok, ',')) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str()) throw InputError("'" + path.string() + "' line " + std::to_string(lineno) + ": not a number");
            row.push_back(v);
        }
        if (row.size() != header.size())
            throw InputError("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " columns");
        rows.push_back(std::move(row));
    }
    return {header, rows};
}

inline void write_profile_csv(const Profile& P, const std::filesystem::path& path) {
    CsvWriter w(path, {"xi", "u", "z", "y"});
    for (std::size_t i = 0; i < P.size(); ++i) {
        w.cell(P.xi[i]).cell(P.Y[i][0]).cell(P.Y[i][1]).cell(P.Y[i][2]);
        w.end();
    }
}

/// Rebuilds a profile from its CSV for the given model and wave; derivatives are recomputed
/// from the traveling-wave ODE. The grid must be uniform and symmetric, and its end values must
/// match the wave's end states.
inline Profile read_profile_csv(const std::filesystem::path& path, const ModelParams& params,
                                const WaveProblem& wave) {
    const auto [header, rows] = read_numeric_csv(path);
    const std::vector<std::string> expect{"xi", "u", "z", "y"};
    if (header != expect) throw InputError("'" + path.string() + "': expected columns xi,u,z,y");
    if (rows.size() < 3 || rows.size() % 2 == 0)
        throw InputError("'" + path.string() + "': profile grid must have an odd number (>= 3) of points");
    Profile P;
    P.params = params;
    P.problem = wave;
    P.X = -rows.front()[0];
    const std::size_t N = rows.size();
    P.h = 2 * P.X / static_cast<double>(N - 1);
    for (std::size_t i = 0; i < N; ++i) {
        if (std::abs(rows[i][0] - (-P.X + P.h * i)) > 1e-9 * std::max(1.0, P.X))
            throw InputError("'" + path.string() + "': profile grid is not uniform and symmetric");
        P.xi.push_back(rows[i][0]);
        P.Y.emplace_back(rows[i][1], rows[i][2], rows[i][3]);
    }
    const double tol = 1e-4 * std::max(1.0, std::abs(wave.u_minus - wave.u_plus));
    if (std::abs(P.Y.front()[0] - wave.u_minus) > tol || std::abs(P.Y.back()[0] - wave.u_plus) > tol ||
        std::abs(P.Y.front()[1] - wave.z_minus) > 1e-4 || std::abs(P.Y.back()[1] - wave.z_plus) > 1e-4)
        throw InputError("'" + path.string() + "': profile end states do not match the configured wave");
    detail::fill_derivatives(P);
    return P;
}

/// Advisory flags attached to reports that touch the affected quantities.
namespace flags {
inline const char* flux_choice =
    "flux-choice: the Burgers-type flux is a configuration choice; no concrete flux is fixed by the model";
inline const char* reaction_taylor =
    "typo-flag: second reaction slow-mode coefficient is -d/s^3 by implicit differentiation; the alternative "
    "value -2d/s^3 fails that check and is logged only";
inline const char* limit_sign =
    "typo-flag: the (4,4) entry of the limiting coefficient matrices is -s/d, matching the variable-coefficient "
    "system; the +s/d variant is inconsistent";
inline const char* fluid_branch =
    "typo-flag: fluid slow-mode branches are labelled by |mu(lambda)| -> 0 rather than by a sign convention";
inline const char* dispersion =
    "typo-flag: dispersion curves are roots of the block symbols, lambda_r+ = -d xi^2 + i s xi and "
    "lambda_r- = -d xi^2 + i s xi - k phi(u-); the closed forms lacking xi in the transport term or k are not used";
inline const char* errfn_norm =
    "typo-flag: errfn is the normalized cumulative Gaussian (errfn(+inf) = 1); the 1/(2 pi) prefactor does not "
    "normalize";
inline const char* eplus_args =
    "typo-flag: the alpha+ < 0 excited-term branch uses errfn((y - a t)/sqrt(4t)) - errfn((y + a t)/sqrt(4t)); "
    "identical arguments in both terms would cancel";
inline const char* smallness =
    "advisory: the perturbation smallness threshold E0_max is empirical, not a constructive constant";
}  // namespace flags

/// JSON run report with the standard envelope.
struct RunReport {
    std::string command;
    json config;
    json results = json::object();
    std::vector<std::string> warnings;

    void warn(const std::string& w) {
        for (const auto& e : warnings)
            if (e == w) return;
        warnings.push_back(w);
    }

    json to_json() const {
        json prov = {
            {"version", kVersion},
            {"build_timestamp", std::string(__DATE__) + " " + __TIME__},
            {"arithmetic", {{"type", "IEEE-754 binary64"},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"digits", 17}}},
        };
        return {{"command", command}, {"config", config}, {"results", results}, {"provenance", prov},
                {"warnings", warnings}};
    }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw InputError("cannot write '" + path.string() + "'");
        out << to_json().dump(2) << '\n';
    }
};

}  // namespace combust
