#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

namespace droplet {

enum class ExperimentKind {
    KernelProfile,
    EmValidation,
    Lln,
    CltVariance,
    SamplerDiagnostics,
};

inline const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::KernelProfile: return "kernel_profile";
        case ExperimentKind::EmValidation: return "em_validation";
        case ExperimentKind::Lln: return "lln";
        case ExperimentKind::CltVariance: return "clt_variance";
        case ExperimentKind::SamplerDiagnostics: return "sampler_diagnostics";
    }
    return "?";
}

/// Flat key = value experiment description. Everything needed to reproduce a
/// run bit-for-bit lives here; the manifest echoes it back.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::KernelProfile;
    std::string model = "plane";  // "plane" | "projective_line"
    std::vector<int> p_list;
    std::string test_function = "radial_bump";
    std::vector<double> function_params;  // empty: family default for the model
    int n_samples = 200;
    std::uint64_t master_seed = 0;
    double boundary_factor = 1.0;
    int n_radial = 0;   // 0: module default
    int n_angular = 0;  // 0: module default
    std::string output_dir = ".";

    bool operator==(const ExperimentConfig&) const = default;
};

struct ParseError {
    int line = 0;
    std::string message;
};

struct ParseResult {
    bool ok = false;
    ExperimentConfig config;
    std::vector<ParseError> errors;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline bool parse_int(const std::string& s, long long& out) {
    std::string t = trim(s);
    if (t.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stoll(t, &pos);
    } catch (...) {
        return false;
    }
    return pos == t.size();
}

inline bool parse_double(const std::string& s, double& out) {
    std::string t = trim(s);
    if (t.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(t, &pos);
    } catch (...) {
        return false;
    }
    return pos == t.size();
}

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    std::string last = trim(cur);
    if (!last.empty() || !parts.empty()) parts.push_back(last);
    return parts;
}

} // namespace detail

/// Parses the line-based `key = value` schema, collecting every error with
/// its line number instead of stopping at the first.
inline ParseResult parse_config(const std::string& text) {
    ParseResult res;
    ExperimentConfig& cfg = res.config;
    bool have_kind = false, have_plist = false, have_seed = false;
    auto err = [&](int line, const std::string& msg) { res.errors.push_back({line, msg}); };

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            err(lineno, "expected 'key = value'");
            continue;
        }
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));

        if (key == "kind") {
            have_kind = true;
            if (val == "kernel_profile") cfg.kind = ExperimentKind::KernelProfile;
            else if (val == "em_validation") cfg.kind = ExperimentKind::EmValidation;
            else if (val == "lln") cfg.kind = ExperimentKind::Lln;
            else if (val == "clt_variance") cfg.kind = ExperimentKind::CltVariance;
            else if (val == "sampler_diagnostics") cfg.kind = ExperimentKind::SamplerDiagnostics;
            else err(lineno, "unknown kind '" + val + "'");
        } else if (key == "model") {
            if (val == "plane" || val == "projective_line") cfg.model = val;
            else err(lineno, "model must be 'plane' or 'projective_line'");
        } else if (key == "p_list") {
            have_plist = true;
            cfg.p_list.clear();
            for (const std::string& part : detail::split_csv(val)) {
                long long v = 0;
                if (!detail::parse_int(part, v) || v < 1)
                    err(lineno, "p_list entries must be positive integers");
                else cfg.p_list.push_back(static_cast<int>(v));
            }
        } else if (key == "test_function") {
            cfg.test_function = val;
        } else if (key == "function_params") {
            cfg.function_params.clear();
            for (const std::string& part : detail::split_csv(val)) {
                double v = 0;
                if (!detail::parse_double(part, v))
                    err(lineno, "function_params entries must be numbers");
                else cfg.function_params.push_back(v);
            }
        } else if (key == "n_samples") {
            long long v = 0;
            if (!detail::parse_int(val, v) || v < 1) err(lineno, "n_samples must be a positive integer");
            else cfg.n_samples = static_cast<int>(v);
        } else if (key == "master_seed") {
            have_seed = true;
            std::string t = detail::trim(val);
            try {
                std::size_t pos = 0;
                cfg.master_seed = std::stoull(t, &pos);
                if (pos != t.size()) throw std::invalid_argument("");
            } catch (...) {
                err(lineno, "master_seed must be a 64-bit unsigned integer");
            }
        } else if (key == "boundary_factor") {
            double v = 0;
            if (!detail::parse_double(val, v) || !(v > 0.0))
                err(lineno, "boundary_factor must be a positive number");
            else cfg.boundary_factor = v;
        } else if (key == "n_radial") {
            long long v = 0;
            if (!detail::parse_int(val, v) || v < 0) err(lineno, "n_radial must be a nonnegative integer");
            else cfg.n_radial = static_cast<int>(v);
        } else if (key == "n_angular") {
            long long v = 0;
            if (!detail::parse_int(val, v) || v < 0) err(lineno, "n_angular must be a nonnegative integer");
            else cfg.n_angular = static_cast<int>(v);
        } else if (key == "output_dir") {
            cfg.output_dir = val;
        } else {
            err(lineno, "unknown key '" + key + "'");
        }
    }

    if (!have_kind) err(0, "missing required key 'kind'");
    if (!have_plist) err(0, "missing required key 'p_list'");
    if (!have_seed) err(0, "missing required key 'master_seed'");
    if (cfg.p_list.empty() && have_plist) err(0, "p_list must be nonempty");
    if (!std::is_sorted(cfg.p_list.begin(), cfg.p_list.end()) ||
        std::adjacent_find(cfg.p_list.begin(), cfg.p_list.end()) != cfg.p_list.end())
        err(0, "p_list must be ascending");
    bool mc_kind = cfg.kind == ExperimentKind::Lln || cfg.kind == ExperimentKind::CltVariance ||
                   cfg.kind == ExperimentKind::SamplerDiagnostics;
    if (mc_kind && cfg.n_samples < 2) err(0, "n_samples must be >= 2 for Monte-Carlo kinds");
    if (cfg.model == "projective_line")
        for (int p : cfg.p_list)
            if (p % 2 != 0 || p < 2) err(0, "projective_line runs use even p >= 2 (equator droplet)");
    if (cfg.kind == ExperimentKind::Lln && cfg.model != "plane")
        err(0, "lln experiment requires model = plane");

    res.ok = res.errors.empty();
    return res;
}

/// Canonical rendering; parse(render(c)) == c.
inline std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "kind = " << kind_name(cfg.kind) << "\n";
    out << "model = " << cfg.model << "\n";
    out << "p_list = ";
    for (std::size_t i = 0; i < cfg.p_list.size(); ++i)
        out << (i ? ", " : "") << cfg.p_list[i];
    out << "\n";
    out << "test_function = " << cfg.test_function << "\n";
    if (!cfg.function_params.empty()) {
        out << "function_params = ";
        char buf[64];
        for (std::size_t i = 0; i < cfg.function_params.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", cfg.function_params[i]);
            out << (i ? ", " : "") << buf;
        }
        out << "\n";
    }
    out << "n_samples = " << cfg.n_samples << "\n";
    out << "master_seed = " << cfg.master_seed << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.boundary_factor);
    out << "boundary_factor = " << buf << "\n";
    out << "n_radial = " << cfg.n_radial << "\n";
    out << "n_angular = " << cfg.n_angular << "\n";
    out << "output_dir = " << cfg.output_dir << "\n";
    return out.str();
}

} // namespace droplet
