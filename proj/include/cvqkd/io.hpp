#pragma once

// Config file parsing (strict: unknown keys are rejected) and JSON/CSV
// serialization of reports. Key names carry units; the schema is documented
// in the README and mirrored by the shipped example configs.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvqkd/data.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/mutual_info.hpp"
#include "cvqkd/optimize.hpp"
#include "cvqkd/satellite.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct OptimizeSpecConfig {
    std::string stage = "alice";  // alice | bob | vmod
    SearchSpec spec;
};

struct SimulateConfig {
    std::size_t samples = 0;
    std::optional<RawScaling> raw;
};

struct SatelliteConfig {
    ElevationProfile profile;  // rows filled from the profile CSV
    double threshold = 1e-4;
    bool optimize_gains = true;
    double g_max = 2.0;
};

struct RunConfig {
    Detection detection = Detection::homodyne;
    ChannelParams channel;
    ModulationParams modulation;
    FilterSettings filters;
    std::optional<GridSpec> grid;
    FockOptions fock;
    std::uint64_t seed = 1;
    int threads = 1;
    std::optional<OptimizeSpecConfig> optimize;
    std::optional<SimulateConfig> simulate;
    std::optional<SatelliteConfig> satellite;

    GridSpec effective_grid() const {
        if (grid) return *grid;
        const ModulationParams eff =
            effective_modulation(modulation, filters.g_x, filters.g_p);
        const ClassicalMoments mx = classical_moments(eff, channel, detection, Quadrature::x);
        const ClassicalMoments mp = classical_moments(eff, channel, detection, Quadrature::p);
        return GridSpec::scaled(detection, std::max(mx.sigma_a, mp.sigma_a),
                                std::max(mx.sigma_b, mp.sigma_b));
    }
};

namespace detail {

inline void reject_unknown(const json& j, const std::vector<std::string>& allowed,
                           const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline double num(const json& j, const std::string& key, std::optional<double> def = {}) {
    if (!j.contains(key)) {
        if (def) return *def;
        throw ConfigError("missing required key '" + key + "'");
    }
    if (!j.at(key).is_number()) throw ConfigError("key '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline Detection parse_detection(const std::string& s) {
    if (s == "homodyne") return Detection::homodyne;
    if (s == "heterodyne") return Detection::heterodyne;
    throw ConfigError("detection must be 'homodyne' or 'heterodyne', got '" + s + "'");
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
    detail::reject_unknown(j, {"detection", "channel", "modulation", "filters", "grid",
                               "truncation", "seed", "threads", "optimize", "simulate",
                               "satellite"},
                           "config");
    RunConfig c;
    if (!j.contains("detection")) throw ConfigError("missing required key 'detection'");
    c.detection = detail::parse_detection(j.at("detection").get<std::string>());

    {
        if (!j.contains("channel")) throw ConfigError("missing required section 'channel'");
        const json& ch = j.at("channel");
        detail::reject_unknown(ch, {"t", "w_x_snu", "w_p_snu", "xi_x_snu", "xi_p_snu", "eta",
                                    "xi_d_x_snu", "xi_d_p_snu"},
                               "channel");
        c.channel.t = detail::num(ch, "t");
        c.channel.w_x = detail::num(ch, "w_x_snu");
        c.channel.w_p = detail::num(ch, "w_p_snu");
        c.channel.xi_x = detail::num(ch, "xi_x_snu", 0.0);
        c.channel.xi_p = detail::num(ch, "xi_p_snu", 0.0);
        c.channel.eta = detail::num(ch, "eta", 1.0);
        c.channel.xi_d_x = detail::num(ch, "xi_d_x_snu", 0.0);
        c.channel.xi_d_p = detail::num(ch, "xi_d_p_snu", 0.0);
        c.channel.validate();
    }
    {
        if (!j.contains("modulation")) throw ConfigError("missing required section 'modulation'");
        const json& m = j.at("modulation");
        detail::reject_unknown(m, {"vmod_x_snu", "vmod_p_snu", "beta"}, "modulation");
        c.modulation.vmod_x = detail::num(m, "vmod_x_snu");
        c.modulation.vmod_p = detail::num(m, "vmod_p_snu");
        c.modulation.beta = detail::num(m, "beta");
        c.modulation.validate();
    }
    if (j.contains("filters")) {
        const json& f = j.at("filters");
        detail::reject_unknown(f, {"g_x", "g_p", "c_x_snu", "c_p_snu", "c_rad_snu"}, "filters");
        c.filters.g_x = detail::num(f, "g_x", 0.0);
        c.filters.g_p = detail::num(f, "g_p", 0.0);
        c.filters.c_x = detail::num(f, "c_x_snu", 0.0);
        c.filters.c_p = detail::num(f, "c_p_snu", 0.0);
        c.filters.c_rad = detail::num(f, "c_rad_snu", 0.0);
        c.filters.validate();
    }
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        detail::reject_unknown(g, {"delta", "alice_bound_snu", "bob_bound_snu"}, "grid");
        GridSpec gs = c.detection == Detection::homodyne ? GridSpec::homodyne_default()
                                                         : GridSpec::heterodyne_default();
        gs.delta = detail::num(g, "delta", gs.delta);
        gs.a_bound = detail::num(g, "alice_bound_snu", gs.a_bound);
        gs.b_bound = detail::num(g, "bob_bound_snu", gs.b_bound);
        gs.validate();
        c.grid = gs;
    }
    if (j.contains("truncation")) {
        const json& t = j.at("truncation");
        detail::reject_unknown(t, {"mode", "tail_tol", "guard", "max_n"}, "truncation");
        if (t.contains("mode")) {
            if (t.at("mode").is_number_integer())
                c.fock.truncation = t.at("mode").get<int>();
            else if (t.at("mode").get<std::string>() != "auto")
                throw ConfigError("truncation mode must be 'auto' or an integer");
        }
        c.fock.tail_tol = detail::num(t, "tail_tol", c.fock.tail_tol);
        c.fock.guard = static_cast<int>(detail::num(t, "guard", c.fock.guard));
        c.fock.cap = static_cast<int>(detail::num(t, "max_n", c.fock.cap));
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) {
        c.threads = j.at("threads").get<int>();
        if (c.threads < 1) throw ConfigError("threads must be >= 1");
    }
    c.fock.threads = c.threads;

    if (j.contains("optimize")) {
        const json& o = j.at("optimize");
        detail::reject_unknown(o, {"stage", "lo1", "hi1", "lo2", "hi2", "coarse", "step_tol"},
                               "optimize");
        OptimizeSpecConfig oc;
        oc.stage = o.contains("stage") ? o.at("stage").get<std::string>() : "alice";
        if (oc.stage != "alice" && oc.stage != "bob" && oc.stage != "vmod")
            throw ConfigError("optimize.stage must be alice|bob|vmod");
        oc.spec.lo1 = detail::num(o, "lo1", 0.0);
        oc.spec.hi1 = detail::num(o, "hi1", 1.0);
        oc.spec.lo2 = detail::num(o, "lo2", oc.spec.lo1);
        oc.spec.hi2 = detail::num(o, "hi2", oc.spec.hi1);
        oc.spec.coarse = static_cast<int>(detail::num(o, "coarse", 13));
        oc.spec.step_tol = detail::num(o, "step_tol", 1e-4);
        c.optimize = oc;
    }
    if (j.contains("simulate")) {
        const json& s = j.at("simulate");
        detail::reject_unknown(s, {"samples", "raw"}, "simulate");
        SimulateConfig sc;
        sc.samples = static_cast<std::size_t>(detail::num(s, "samples"));
        if (s.contains("raw")) {
            const json& r = s.at("raw");
            detail::reject_unknown(r, {"g_e_x", "g_e_p", "v_sn", "v_dn"}, "simulate.raw");
            RawScaling rs;
            rs.g_e_x = detail::num(r, "g_e_x", 1.0);
            rs.g_e_p = detail::num(r, "g_e_p", 1.0);
            rs.v_sn = detail::num(r, "v_sn", 1.0);
            rs.v_dn = detail::num(r, "v_dn", 0.0);
            sc.raw = rs;
        }
        c.simulate = sc;
    }
    if (j.contains("satellite")) {
        const json& s = j.at("satellite");
        detail::reject_unknown(s, {"r_e_km", "l_zen_km", "vmod_snu", "beta", "eta", "xi_d_snu",
                                   "detection", "threshold", "optimize_gains", "g_max"},
                               "satellite");
        SatelliteConfig sat;
        sat.profile.r_e_km = detail::num(s, "r_e_km", 6371.0);
        sat.profile.l_zen_km = detail::num(s, "l_zen_km", 500.0);
        sat.profile.vmod = detail::num(s, "vmod_snu", 8.0);
        sat.profile.beta = detail::num(s, "beta", 0.90);
        sat.profile.eta = detail::num(s, "eta", 1.0);
        sat.profile.xi_d = detail::num(s, "xi_d_snu", 0.0);
        if (s.contains("detection"))
            sat.profile.detection = detail::parse_detection(s.at("detection").get<std::string>());
        sat.threshold = detail::num(s, "threshold", 1e-4);
        if (s.contains("optimize_gains")) sat.optimize_gains = s.at("optimize_gains").get<bool>();
        sat.g_max = detail::num(s, "g_max", 2.0);
        c.satellite = sat;
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(f);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

// ---- report serialization ---------------------------------------------------------------

inline ojson report_to_json(const KeyRateReport& r) {
    ojson j;
    j["detection"] = to_string(r.detection);
    j["method"] = r.method;
    j["beta"] = r.beta;
    j["key_rate_bits_per_use"] = r.key_rate;
    j["secure"] = r.secure();
    j["i_ab_bits"] = r.i_ab;
    j["i_e_bits"] = r.i_e;
    ojson quad;
    quad["i_ab_x"] = r.i_ab_x;
    quad["i_ab_p"] = r.i_ab_p;
    quad["i_e_x"] = r.i_e_x;
    quad["i_e_p"] = r.i_e_p;
    j["per_quadrature"] = quad;
    ojson ps;
    ps["alice_x"] = r.p_alice_x;
    ps["alice_p"] = r.p_alice_p;
    if (r.detection == Detection::homodyne) {
        ps["bob_x"] = r.p_bob_x;
        ps["bob_p"] = r.p_bob_p;
    } else {
        ps["bob_radial"] = r.p_bob_rad;
    }
    j["success_probability"] = ps;
    ojson eff;
    eff["vmod_x_snu"] = r.vmod_eff_x;
    eff["vmod_p_snu"] = r.vmod_eff_p;
    eff["v_b_x_snu"] = r.v_b_x;
    eff["v_b_p_snu"] = r.v_b_p;
    j["effective"] = eff;
    auto fock = [](const FockDiagnostics& d) {
        ojson o;
        o["n"] = d.n;
        o["delta_s_bits"] = d.delta_s;
        o["weight_deficit"] = d.weight_deficit;
        o["s_avg_bits"] = d.s_avg;
        o["s_cond_bits"] = d.s_cond;
        o["converged"] = d.converged;
        return o;
    };
    if (r.fock_x || r.fock_p) {
        ojson fj;
        if (r.fock_x) fj["x"] = fock(*r.fock_x);
        if (r.fock_p) fj["p"] = fock(*r.fock_p);
        j["fock"] = fj;
    }
    return j;
}

inline void write_contour_csv(const std::vector<ContourPoint>& pts, const std::string& path,
                              const std::string& p1 = "param1", const std::string& p2 = "param2") {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path);
    f << p1 << ',' << p2 << ",key_rate\n";
    char buf[128];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.p1, p.p2, p.value);
        f << buf;
    }
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path);
    f << "elevation_deg,key_rate_fixed,key_rate_optimized,g_star\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.elevation_deg, r.k_fixed,
                      r.k_optimized, r.g_star);
        f << buf;
    }
}

}  // namespace cvqkd
