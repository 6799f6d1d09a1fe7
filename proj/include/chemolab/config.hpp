#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "history.hpp"
#include "models.hpp"
#include "solver.hpp"

namespace chemolab {

// Malformed scenario or sweep file. Carries the offending line when known.
class config_error : public std::runtime_error {
public:
    config_error(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

// Sectioned key-value text:  [section] / key = value / '#' comments.
class ParsedConfig {
public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    static ParsedConfig parse(std::istream& in) {
        ParsedConfig cfg;
        std::string raw;
        std::string section;
        int line_no = 0;
        while (std::getline(in, raw)) {
            ++line_no;
            std::string line = strip_comment(raw);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error("unterminated section header", line_no);
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) throw config_error("empty section name", line_no);
                cfg.sections_[section]; // record even if empty
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("expected 'key = value'", line_no);
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw config_error("empty key", line_no);
            if (section.empty())
                throw config_error("key '" + key + "' outside any [section]", line_no);
            auto& sec = cfg.sections_[section];
            if (sec.count(key))
                throw config_error("duplicate key '" + key + "'", line_no);
            sec[key] = Entry{value, line_no, false};
        }
        return cfg;
    }

    bool has_section(const std::string& s) const { return sections_.count(s) > 0; }

    bool has(const std::string& s, const std::string& k) const {
        auto it = sections_.find(s);
        return it != sections_.end() && it->second.count(k) > 0;
    }

    std::string get_string(const std::string& s, const std::string& k) const {
        const Entry& e = entry(s, k);
        e.used = true;
        return e.value;
    }

    double get_double(const std::string& s, const std::string& k) const {
        const Entry& e = entry(s, k);
        e.used = true;
        return parse_double(e.value, e.line, k);
    }

    std::optional<double> get_double_opt(const std::string& s, const std::string& k) const {
        if (!has(s, k)) return std::nullopt;
        return get_double(s, k);
    }

    bool get_bool(const std::string& s, const std::string& k, bool fallback) const {
        if (!has(s, k)) return fallback;
        const Entry& e = entry(s, k);
        e.used = true;
        if (e.value == "true" || e.value == "1") return true;
        if (e.value == "false" || e.value == "0") return false;
        throw config_error("field '" + k + "' must be true or false", e.line);
    }

    std::vector<double> get_double_list(const std::string& s, const std::string& k) const {
        const Entry& e = entry(s, k);
        e.used = true;
        std::vector<double> out;
        std::istringstream iss(e.value);
        std::string tok;
        while (iss >> tok) out.push_back(parse_double(tok, e.line, k));
        if (out.empty()) throw config_error("field '" + k + "' needs at least one number", e.line);
        return out;
    }

    int line_of(const std::string& s, const std::string& k) const {
        return has(s, k) ? entry(s, k).line : 0;
    }

    // any key never read by the loader is a typo worth rejecting
    void reject_unused() const {
        for (const auto& [sec, entries] : sections_)
            for (const auto& [key, e] : entries)
                if (!e.used)
                    throw config_error("unknown field '" + key + "' in [" + sec + "]", e.line);
    }

private:
    const Entry& entry(const std::string& s, const std::string& k) const {
        auto it = sections_.find(s);
        if (it == sections_.end())
            throw config_error("missing section [" + s + "]");
        auto jt = it->second.find(k);
        if (jt == it->second.end())
            throw config_error("missing field '" + k + "' in [" + s + "]");
        return jt->second;
    }

    static double parse_double(const std::string& text, int line, const std::string& key) {
        double v = 0.0;
        const char* first = text.data();
        const char* last = text.data() + text.size();
        auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last)
            throw config_error("field '" + key + "': cannot parse number '" + text + "'", line);
        return v;
    }

    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find('#');
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    std::map<std::string, std::map<std::string, Entry>> sections_;
};

// Initial-condition recipe: per component either a constant or polynomial
// coefficients in t over [-r, 0]. Kept as a recipe so sweeps over the delay
// can rebuild the history at each grid point.
struct HistorySpec {
    std::vector<std::vector<double>> comps; // coefficient lists, lowest degree first

    History build(double delay) const {
        if (comps.size() == 1) return History::polynomial(comps[0], delay);
        return History::polynomial2(comps[0], comps[1], delay);
    }
};

struct ScenarioConfig {
    Model model;
    std::optional<DimensionalParams> dimensional; // present when given that way
    HistorySpec history_spec;
    History history;
    SolverOptions solver;
    double horizon = 0.0;
    double stride = 0.0; // 0 -> horizon / 1000
    std::string output_path;
};

namespace detail {

inline std::vector<double> history_component(const ParsedConfig& cfg, const std::string& cname,
                                             const std::string& pname) {
    const bool has_const = cfg.has("history", cname);
    const bool has_poly = cfg.has("history", pname);
    if (has_const == has_poly)
        throw config_error("[history] needs exactly one of '" + cname + "' or '" + pname + "'",
                           cfg.line_of("history", has_const ? cname : pname));
    if (has_const) return {cfg.get_double("history", cname)};
    auto coeffs = cfg.get_double_list("history", pname);
    if (coeffs.size() > 6)
        throw config_error("'" + pname + "': polynomial degree above 5 is not supported",
                           cfg.line_of("history", pname));
    return coeffs;
}

inline Model build_model(const ParsedConfig& cfg, std::optional<DimensionalParams>& dim_out) {
    const std::string family = cfg.get_string("model", "family");
    const bool has_dimless = cfg.has_section("model.dimensionless");
    const bool has_dim = cfg.has_section("model.dimensional");
    if (has_dimless && has_dim)
        throw config_error("give exactly one of [model.dimensionless] or [model.dimensional]");

    auto dimless = [&]() -> DimensionlessParams {
        if (has_dim) {
            DimensionalParams dp;
            dp.C = cfg.get_double("model.dimensional", "C");
            dp.D = cfg.get_double("model.dimensional", "D");
            dp.A = cfg.get_double("model.dimensional", "A");
            dp.B = cfg.get_double("model.dimensional", "B");
            dp.M = cfg.get_double("model.dimensional", "M");
            dp.R = cfg.get_double("model.dimensional", "R");
            dim_out = dp;
            return nondimensionalize(dp);
        }
        if (!has_dimless)
            throw config_error("family '" + family +
                               "' needs [model.dimensionless] or [model.dimensional]");
        DimensionlessParams p;
        p.a = cfg.get_double("model.dimensionless", "a");
        p.b = cfg.get_double_opt("model.dimensionless", "b").value_or(0.0);
        p.m = cfg.get_double("model.dimensionless", "m");
        p.r = cfg.get_double("model.dimensionless", "r");
        return p;
    };

    try {
        if (family == "chemostat2d") return Model::chemostat(dimless());
        if (family == "hyperbolic") return Model::hyperbolic(dimless());
        if (family == "chemologistic" || family == "hutchinson") {
            const DimensionlessParams p = dimless();
            if (p.b != 0.0)
                throw config_error("family '" + family + "' requires b = 0");
            return family == "chemologistic" ? Model::chemo_logistic(p.a, p.m, p.r)
                                             : Model::hutchinson(p.a, p.m, p.r);
        }
        if (family == "wright") {
            if (has_dimless || has_dim)
                throw config_error("family 'wright' takes only 'rho' in [model]");
            return Model::wright(cfg.get_double("model", "rho"));
        }
        if (family == "linear") {
            if (has_dimless || has_dim)
                throw config_error("family 'linear' takes a_lin, b_lin, r in [model]");
            return Model::linear(cfg.get_double("model", "a_lin"),
                                 cfg.get_double("model", "b_lin"),
                                 cfg.get_double("model", "r"));
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("invalid model parameters: ") + e.what(),
                           cfg.line_of("model", "family"));
    }
    throw config_error("unknown family '" + family + "'", cfg.line_of("model", "family"));
}

} // namespace detail

inline ScenarioConfig load_scenario(const ParsedConfig& cfg) {
    std::optional<DimensionalParams> dim;
    Model model = detail::build_model(cfg, dim);

    HistorySpec spec;
    if (model.dim() == 2) {
        spec.comps.push_back(detail::history_component(cfg, "constant_s", "poly_s"));
        spec.comps.push_back(detail::history_component(cfg, "constant_x", "poly_x"));
    } else {
        spec.comps.push_back(detail::history_component(cfg, "constant", "poly"));
    }

    SolverOptions opts;
    if (auto v = cfg.get_double_opt("solver", "abs_tol")) opts.abs_tol = *v;
    if (auto v = cfg.get_double_opt("solver", "rel_tol")) opts.rel_tol = *v;
    if (auto v = cfg.get_double_opt("solver", "max_step")) opts.max_step = *v;
    if (auto v = cfg.get_double_opt("solver", "initial_step")) opts.initial_step = *v;

    const double horizon = cfg.get_double("run", "horizon");
    if (!(horizon > 0))
        throw config_error("'horizon' must be positive", cfg.line_of("run", "horizon"));
    double stride = 0.0;
    if (auto v = cfg.get_double_opt("run", "stride")) {
        if (!(*v > 0))
            throw config_error("'stride' must be positive", cfg.line_of("run", "stride"));
        stride = *v;
    }
    std::string output;
    if (cfg.has("run", "output")) output = cfg.get_string("run", "output");

    History history = spec.build(model.delay());
    return ScenarioConfig{std::move(model), dim, std::move(spec), std::move(history),
                          opts, horizon, stride, std::move(output)};
}

struct SweepConfig {
    ScenarioConfig base;
    std::string parameter;
    std::vector<double> values;
    bool want_verdict = true;
    std::string output_path;
};

// Rebuild the base scenario's model with one parameter replaced.
inline Model apply_sweep_parameter(const Model& base, const std::string& name, double value) {
    const DimensionlessParams& p = base.params();
    auto patched = [&](ModelFamily fam) -> Model {
        DimensionlessParams q = p;
        if (name == "a") q.a = value;
        else if (name == "b") q.b = value;
        else if (name == "m") q.m = value;
        else if (name == "r") q.r = value;
        else throw config_error("parameter '" + name + "' does not apply to this family");
        switch (fam) {
            case ModelFamily::Chemostat2D: return Model::chemostat(q);
            case ModelFamily::Hyperbolic: return Model::hyperbolic(q);
            case ModelFamily::ChemoLogistic: return Model::chemo_logistic(q.a, q.m, q.r);
            case ModelFamily::Hutchinson: return Model::hutchinson(q.a, q.m, q.r);
            default: throw config_error("unsupported sweep family");
        }
    };
    switch (base.family()) {
        case ModelFamily::Wright:
            if (name != "rho") throw config_error("only 'rho' can be swept for wright");
            return Model::wright(value);
        case ModelFamily::Linear:
            if (name == "a_lin") return Model::linear(value, base.lin_b(), base.delay());
            if (name == "b_lin") return Model::linear(base.lin_a(), value, base.delay());
            if (name == "r") return Model::linear(base.lin_a(), base.lin_b(), value);
            throw config_error("parameter '" + name + "' does not apply to family linear");
        case ModelFamily::ChemoLogistic:
        case ModelFamily::Hutchinson:
            if (name == "b") throw config_error("b is fixed at 0 for this family");
            [[fallthrough]];
        case ModelFamily::Chemostat2D:
        case ModelFamily::Hyperbolic:
            return patched(base.family());
    }
    throw config_error("unsupported sweep family");
}

inline SweepConfig load_sweep(const ParsedConfig& cfg) {
    SweepConfig sweep{load_scenario(cfg), "", {}, true, ""};
    if (!cfg.has_section("sweep")) throw config_error("missing section [sweep]");
    sweep.parameter = cfg.get_string("sweep", "parameter");

    const bool has_grid = cfg.has("sweep", "min");
    const bool has_values = cfg.has("sweep", "values");
    if (has_grid == has_values)
        throw config_error("[sweep] needs either min/max/count or values");
    if (has_values) {
        sweep.values = cfg.get_double_list("sweep", "values");
        if (sweep.values.size() < 2)
            throw config_error("'values' needs at least 2 entries", cfg.line_of("sweep", "values"));
    } else {
        const double lo = cfg.get_double("sweep", "min");
        const double hi = cfg.get_double("sweep", "max");
        const double count_raw = cfg.get_double("sweep", "count");
        const int count = static_cast<int>(count_raw);
        if (count < 2 || count != count_raw)
            throw config_error("'count' must be an integer >= 2", cfg.line_of("sweep", "count"));
        for (int i = 0; i < count; ++i)
            sweep.values.push_back(lo + (hi - lo) * (static_cast<double>(i) / (count - 1)));
    }
    sweep.want_verdict = cfg.get_bool("sweep", "verdict", true);
    if (cfg.has("sweep", "output")) sweep.output_path = cfg.get_string("sweep", "output");

    // validate applicability against the base model now, not per point
    apply_sweep_parameter(sweep.base.model, sweep.parameter, sweep.values.front());
    return sweep;
}

} // namespace chemolab
