#pragma once

// Key-rate sweeps over elevation-resolved channel profiles and the LEO pass
// duty-cycle geometry. Atmospheric physics is not modeled here; profiles of
// (elevation, transmittance, channel noise) are ingested from CSV.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cvqkd/keyrate.hpp"
#include "cvqkd/optimize.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

struct ProfileRow {
    double elevation_deg = 0.0;
    double t = 0.0;
    double chan_noise_snu = 0.0;  // excess channel noise; W = 1 + this
};

struct ElevationProfile {
    std::vector<ProfileRow> rows;
    double r_e_km = 6371.0;
    double l_zen_km = 500.0;
    double vmod = 8.0;
    double beta = 0.90;
    double eta = 1.0;
    double xi_d = 0.0;
    Detection detection = Detection::homodyne;

    void validate() const {
        if (rows.empty()) throw InvalidParams("profile has no rows");
        for (const auto& r : rows) {
            if (r.elevation_deg < 0.0 || r.elevation_deg > 90.0)
                throw InvalidParams("elevation must be in [0, 90] degrees");
            if (r.t < 0.0 || r.t > 1.0) throw InvalidParams("transmittance must be in [0,1]");
            if (r.chan_noise_snu < 0.0) throw InvalidParams("channel noise must be >= 0");
        }
    }
};

// Earth-center angle between the satellite at elevation eps and the zenith
// direction, degrees.
inline double theta_skr(double elevation_deg, double r_e_km, double l_zen_km) {
    const double deg = kPi / 180.0;
    const double eps = elevation_deg * deg;
    const double ratio = r_e_km / (r_e_km + l_zen_km);
    return (90.0 - elevation_deg) - std::asin(std::cos(eps) * ratio) / deg;
}

// theta_skr over the paper's 22-degree full-pass angle, percent, capped at
// 100. The geometric denominator theta_skr(0) is 21.97 degrees; 22 is kept to
// match the reported percentages.
inline double duty_cycle(double elevation_threshold_deg, double r_e_km, double l_zen_km) {
    const double th = theta_skr(elevation_threshold_deg, r_e_km, l_zen_km);
    return std::min(100.0, th / 22.0 * 100.0);
}

struct SweepRow {
    double elevation_deg = 0.0;
    double k_fixed = 0.0;
    double k_optimized = 0.0;
    double g_star = 0.0;
};

inline ChannelParams profile_channel(const ElevationProfile& p, const ProfileRow& row) {
    ChannelParams ch;
    ch.t = row.t;
    ch.w_x = ch.w_p = 1.0 + row.chan_noise_snu;
    ch.eta = p.eta;
    ch.xi_d_x = ch.xi_d_p = p.xi_d;
    if (p.detection == Detection::homodyne) ch = absorb_detector(ch);
    return ch;
}

// Per-elevation key rate at fixed modulation and with the symmetric Alice
// gain optimized row by row.
inline std::vector<SweepRow> sweep_keyrates(const ElevationProfile& profile,
                                            bool optimize_gains = true,
                                            double g_max = 2.0, int coarse = 25) {
    profile.validate();
    std::vector<SweepRow> out;
    out.reserve(profile.rows.size());
    for (const auto& row : profile.rows) {
        const ChannelParams ch = profile_channel(profile, row);
        ModulationParams mod{profile.vmod, profile.vmod, profile.beta};
        SweepRow s;
        s.elevation_deg = row.elevation_deg;
        s.k_fixed = keyrate_gg02(mod, ch, profile.detection).key_rate;
        if (optimize_gains) {
            auto f = [&](double g) {
                return keyrate_after_alice(mod, ch, profile.detection, g, g).key_rate;
            };
            const SearchResult r = detail::maximize_1d(f, 0.0, g_max, coarse, 1e-5);
            s.g_star = r.p1;
            s.k_optimized = r.value;
        } else {
            s.g_star = 0.0;
            s.k_optimized = s.k_fixed;
        }
        out.push_back(s);
    }
    return out;
}

// Lowest elevation whose key rate reaches the threshold, interpolating
// linearly between neighbouring rows.
inline double threshold_crossing(const std::vector<SweepRow>& sweep, double threshold,
                                 bool use_optimized = true) {
    if (sweep.empty()) throw InvalidParams("empty sweep");
    auto k = [&](const SweepRow& r) { return use_optimized ? r.k_optimized : r.k_fixed; };
    if (k(sweep.front()) >= threshold) return sweep.front().elevation_deg;
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        const double k0 = k(sweep[i - 1]), k1 = k(sweep[i]);
        if (k1 >= threshold) {
            const double f = (threshold - k0) / (k1 - k0);
            return sweep[i - 1].elevation_deg +
                   f * (sweep[i].elevation_deg - sweep[i - 1].elevation_deg);
        }
    }
    throw NeverSecure("no elevation reaches the key-rate threshold");
}

// profile CSV: header elevation_deg,t,chan_noise_snu
inline std::vector<ProfileRow> read_profile_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw Error("empty profile " + path);
    if (line != "elevation_deg,t,chan_noise_snu")
        throw Error("unexpected profile header: " + line);
    std::vector<ProfileRow> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok[3];
        for (int i = 0; i < 3; ++i) std::getline(ss, tok[i], ',');
        rows.push_back({std::stod(tok[0]), std::stod(tok[1]), std::stod(tok[2])});
    }
    return rows;
}

}  // namespace cvqkd
