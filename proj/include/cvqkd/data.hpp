#pragma once

// Sample-level machinery: synthetic channel simulation (the Monte Carlo
// oracle for every closed form), shot-noise calibration, electronic gain and
// trusted-noise estimation, bivariate fitting, empirical post-selection and
// bootstrap error bars. CSV/JSON batch IO lives here too.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cvqkd/filters.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

struct SampleRecord {
    double x_a = 0.0, p_a = 0.0;  // Alice symbols
    Quadrature quad = Quadrature::x;  // measured quadrature (homodyne)
    double outcome_x = 0.0, outcome_p = 0.0;
    bool has_x = false, has_p = false;
};

struct SampleBatch {
    Detection detection = Detection::homodyne;
    std::vector<SampleRecord> records;
    double v_sn = 1.0;   // calibration constants of the raw data
    double v_dn = 0.0;
    double t_nominal = 1.0;
    std::uint64_t seed = 0;
    bool calibrated = true;
    std::string source = "synthetic";

    std::size_t size() const { return records.size(); }
};

// ---- synthetic generator ------------------------------------------------------------

struct RawScaling {
    double g_e_x = 1.0;      // electronic gain applied to Alice's raw symbols
    double g_e_p = 1.0;
    double v_sn = 1.0;       // raw shot-noise and dark-noise variances
    double v_dn = 0.0;
};

// Alice symbols ~ N(0, vmod); Bob's outcome is the conditional Gaussian of
// the thermal-loss channel. With a RawScaling the batch is emitted in raw
// (uncalibrated, pre-gain) units, for exercising the calibration chain.
inline SampleBatch simulate_channel(const ModulationParams& mod, const ChannelParams& ch,
                                    Detection det, std::size_t n_samples, std::uint64_t seed,
                                    std::optional<RawScaling> raw = std::nullopt) {
    mod.validate();
    ch.validate();
    if (n_samples == 0) throw InvalidParams("n_samples must be > 0");
    SampleBatch b;
    b.detection = det;
    b.t_nominal = ch.t;
    b.seed = seed;
    b.calibrated = !raw.has_value();
    if (raw) {
        b.v_sn = raw->v_sn;
        b.v_dn = raw->v_dn;
    }

    const double cond_var_x =
        det == Detection::homodyne
            ? ch.t * (1.0 + ch.xi_x) + (1.0 - ch.t) * ch.w_x
            : 0.5 * (ch.eta * ch.t * (1.0 + ch.xi_x) + ch.eta * (1.0 - ch.t) * ch.w_x +
                     (1.0 - ch.eta) + 1.0) + ch.xi_d_x;
    const double cond_var_p =
        det == Detection::homodyne
            ? ch.t * (1.0 + ch.xi_p) + (1.0 - ch.t) * ch.w_p
            : 0.5 * (ch.eta * ch.t * (1.0 + ch.xi_p) + ch.eta * (1.0 - ch.t) * ch.w_p +
                     (1.0 - ch.eta) + 1.0) + ch.xi_d_p;
    const double mean_scale =
        det == Detection::homodyne ? std::sqrt(ch.t) : std::sqrt(0.5 * ch.eta * ch.t);
    const double s_raw = raw ? std::sqrt(raw->v_sn - raw->v_dn) : 1.0;

    b.records.resize(n_samples);
    const std::size_t chunk = 1 << 14;
    for (std::size_t base = 0, ci = 0; base < n_samples; base += chunk, ++ci) {
        Rng rng = Rng::for_chunk(seed, ci);
        const std::size_t end = std::min(n_samples, base + chunk);
        for (std::size_t i = base; i < end; ++i) {
            SampleRecord r;
            const double xa = rng.normal(0.0, mod.vmod_x);
            const double pa = rng.normal(0.0, mod.vmod_p);
            if (det == Detection::homodyne) {
                r.quad = rng.uniform() < 0.5 ? Quadrature::x : Quadrature::p;
                if (r.quad == Quadrature::x) {
                    r.outcome_x = rng.normal(mean_scale * xa, cond_var_x);
                    r.has_x = true;
                } else {
                    // prepare-and-measure convention: both quadratures
                    // correlate positively with the symbols
                    r.outcome_p = rng.normal(mean_scale * pa, cond_var_p);
                    r.has_p = true;
                }
            } else {
                r.outcome_x = rng.normal(mean_scale * xa, cond_var_x);
                r.outcome_p = rng.normal(mean_scale * pa, cond_var_p);
                r.has_x = r.has_p = true;
            }
            r.x_a = xa;
            r.p_a = pa;
            if (raw) {
                r.x_a *= s_raw / raw->g_e_x;
                r.p_a *= s_raw / raw->g_e_p;
                r.outcome_x *= s_raw;
                r.outcome_p *= s_raw;
            }
            b.records[i] = r;
        }
    }
    return b;
}

// ---- calibration -----------------------------------------------------------------------

// Divide every sample by sqrt(V_SN - V_DN) (or sqrt(V_SN) when dark noise is
// left in, matching high-clearance practice).
inline SampleBatch calibrate_shot_noise(const SampleBatch& raw, double v_sn, double v_dn,
                                        bool subtract_dark = true) {
    if (v_sn <= 0.0) throw CalibrationError("V_SN must be > 0");
    if (subtract_dark && v_sn <= v_dn) throw CalibrationError("V_SN <= V_DN");
    const double s = 1.0 / std::sqrt(subtract_dark ? v_sn - v_dn : v_sn);
    SampleBatch out = raw;
    for (auto& r : out.records) {
        r.x_a *= s;
        r.p_a *= s;
        r.outcome_x *= s;
        r.outcome_p *= s;
    }
    out.calibrated = true;
    out.v_sn = 1.0;
    out.v_dn = 0.0;
    return out;
}

namespace detail {

struct Moments2 {
    double v_a = 0.0, v_b = 0.0, cov = 0.0;
    std::size_t count = 0;
};

inline Moments2 quad_moments(const SampleBatch& b, Quadrature q) {
    Moments2 m;
    double sa = 0.0, sb = 0.0;
    for (const auto& r : b.records) {
        const bool use = q == Quadrature::x ? r.has_x : r.has_p;
        if (!use) continue;
        const double a = q == Quadrature::x ? r.x_a : r.p_a;
        const double o = q == Quadrature::x ? r.outcome_x : r.outcome_p;
        sa += a;
        sb += o;
        ++m.count;
    }
    if (m.count < 2) throw InsufficientSamples("fewer than 2 samples for quadrature");
    const double ma = sa / m.count, mb = sb / m.count;
    for (const auto& r : b.records) {
        const bool use = q == Quadrature::x ? r.has_x : r.has_p;
        if (!use) continue;
        const double a = (q == Quadrature::x ? r.x_a : r.p_a) - ma;
        const double o = (q == Quadrature::x ? r.outcome_x : r.outcome_p) - mb;
        m.v_a += a * a;
        m.v_b += o * o;
        m.cov += a * o;
    }
    m.v_a /= m.count;
    m.v_b /= m.count;
    m.cov /= m.count;
    return m;
}

}  // namespace detail

// g_e = C_ab / V_a on a lossless (T = 1) calibration batch.
struct GainEstimate {
    double g_e_x = 0.0, g_e_p = 0.0;
};

inline GainEstimate estimate_gain(const SampleBatch& batch, std::size_t min_samples = 1000) {
    GainEstimate g;
    for (Quadrature q : {Quadrature::x, Quadrature::p}) {
        const detail::Moments2 m = detail::quad_moments(batch, q);
        if (m.count < min_samples) throw InsufficientSamples("calibration batch too small");
        if (m.v_a <= 1e-12) throw InsufficientSamples("degenerate Alice variance");
        (q == Quadrature::x ? g.g_e_x : g.g_e_p) = m.cov / m.v_a;
    }
    return g;
}

// xi = V_b - V_mod - 1 at T = 1, with V_mod = g_e^2 V_a. Small negative
// estimates are sampling noise and are clamped (flagged).
struct TrustedNoiseEstimate {
    double xi_x = 0.0, xi_p = 0.0;
    double vmod_x = 0.0, vmod_p = 0.0;
    bool clamped_x = false, clamped_p = false;
};

inline TrustedNoiseEstimate estimate_trusted_noise(const SampleBatch& batch,
                                                   const GainEstimate& gain) {
    TrustedNoiseEstimate e;
    for (Quadrature q : {Quadrature::x, Quadrature::p}) {
        const detail::Moments2 m = detail::quad_moments(batch, q);
        const double ge = q == Quadrature::x ? gain.g_e_x : gain.g_e_p;
        const double vmod = ge * ge * m.v_a;
        double xi = m.v_b - vmod - 1.0;
        bool clamp = xi < 0.0;
        if (clamp) xi = 0.0;
        if (q == Quadrature::x) {
            e.xi_x = xi;
            e.vmod_x = vmod;
            e.clamped_x = clamp;
        } else {
            e.xi_p = xi;
            e.vmod_p = vmod;
            e.clamped_p = clamp;
        }
    }
    return e;
}

// ---- bivariate fit ----------------------------------------------------------------------

struct BivariateFit {
    double sigma_a = 0.0, sigma_b = 0.0, rho = 0.0;
    double sigma_a_ci = 0.0, sigma_b_ci = 0.0, rho_ci = 0.0;  // 95% half widths
    std::size_t count = 0;
};

inline BivariateFit fit_bivariate(const SampleBatch& batch, Quadrature q,
                                  std::size_t min_samples = 10000) {
    const detail::Moments2 m = detail::quad_moments(batch, q);
    if (m.count < min_samples)
        throw InsufficientSamples("bivariate fit needs >= " + std::to_string(min_samples));
    BivariateFit f;
    f.count = m.count;
    f.sigma_a = std::sqrt(m.v_a);
    f.sigma_b = std::sqrt(m.v_b);
    f.rho = std::clamp(m.cov / (f.sigma_a * f.sigma_b), -1.0 + 1e-15, 1.0 - 1e-15);
    const double n = static_cast<double>(m.count);
    f.sigma_a_ci = 1.96 * f.sigma_a / std::sqrt(2.0 * (n - 1));
    f.sigma_b_ci = 1.96 * f.sigma_b / std::sqrt(2.0 * (n - 1));
    f.rho_ci = 1.96 * (1.0 - f.rho * f.rho) / std::sqrt(n - 3.0);
    return f;
}

// ---- empirical post-selection --------------------------------------------------------------

// Alice's rejection filter on a batch: one uniform per symbol per quadrature,
// joint keep.
inline SampleBatch apply_alice_filter(const SampleBatch& batch, double g_x, double g_p,
                                      std::uint64_t seed, RejectionResult* stats = nullptr) {
    std::vector<std::pair<double, double>> symbols;
    symbols.reserve(batch.size());
    for (const auto& r : batch.records) symbols.emplace_back(r.x_a, r.p_a);
    const RejectionResult res = alice_rejection_filter(symbols, g_x, g_p, seed);
    SampleBatch out = batch;
    out.records.clear();
    out.records.reserve(res.kept.size());
    for (auto idx : res.kept) out.records.push_back(batch.records[idx]);
    if (stats) *stats = res;
    return out;
}

// Bob's notch/annulus on measured outcomes.
inline SampleBatch apply_bob_filter(const SampleBatch& batch, const FilterSettings& fs) {
    SampleBatch out = batch;
    out.records.clear();
    for (const auto& r : batch.records) {
        bool keep;
        if (batch.detection == Detection::homodyne) {
            const double c = r.quad == Quadrature::x ? fs.c_x : fs.c_p;
            const double o = r.quad == Quadrature::x ? r.outcome_x : r.outcome_p;
            keep = std::abs(o) >= c;
        } else {
            keep = r.outcome_x * r.outcome_x + r.outcome_p * r.outcome_p >= fs.c_rad * fs.c_rad;
        }
        if (keep) out.records.push_back(r);
    }
    return out;
}

// ---- parameter estimation and bootstrap ------------------------------------------------------

// Channel estimate from a calibrated batch, given the trusted parameters
// (xi, eta, xi_d) of the setup.
inline std::pair<ModulationParams, ChannelParams> estimate_channel(
    const SampleBatch& batch, const ChannelParams& trusted, double beta) {
    ModulationParams mod;
    mod.beta = beta;
    ChannelParams ch = trusted;
    double t_acc = 0.0;
    for (Quadrature q : {Quadrature::x, Quadrature::p}) {
        const detail::Moments2 m = detail::quad_moments(batch, q);
        const double vmod = m.v_a;
        double t_hat;
        if (batch.detection == Detection::homodyne) {
            t_hat = (m.cov * m.cov) / (vmod * vmod);
        } else {
            t_hat = 2.0 * m.cov * m.cov / (trusted.eta * vmod * vmod);
        }
        t_hat = std::clamp(t_hat, 0.0, 1.0);
        t_acc += 0.5 * t_hat;
        double w;
        if (batch.detection == Detection::homodyne) {
            w = (m.v_b - t_hat * (vmod + 1.0 + trusted.xi(q))) / (1.0 - t_hat);
        } else {
            const double num = 2.0 * (m.v_b - trusted.xi_d(q)) - 1.0 -
                               trusted.eta * t_hat * (vmod + 1.0 + trusted.xi(q)) -
                               (1.0 - trusted.eta);
            w = num / (trusted.eta * (1.0 - t_hat));
        }
        if (q == Quadrature::x) {
            mod.vmod_x = vmod;
            ch.w_x = std::max(1.0, w);
        } else {
            mod.vmod_p = vmod;
            ch.w_p = std::max(1.0, w);
        }
    }
    ch.t = t_acc;
    return {mod, ch};
}

struct BootstrapResult {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> samples;
};

// Resample-with-replacement error bars: the Gaussian (post-Alice) pipeline is
// re-run on every resample and the spread across resamples is the error bar.
inline BootstrapResult bootstrap_keyrate(const SampleBatch& batch, const ChannelParams& trusted,
                                         double beta, double g_x, double g_p, int resamples,
                                         std::uint64_t seed, int threads = 1) {
    if (resamples < 2) throw InvalidParams("need at least 2 resamples");
    if (batch.size() < 2) throw InsufficientSamples("batch too small to bootstrap");
    BootstrapResult out;
    out.samples.resize(resamples);

    auto one = [&](int k) {
        Rng rng = Rng::for_chunk(seed, static_cast<std::uint64_t>(k));
        SampleBatch rs = batch;
        rs.records.clear();
        rs.records.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i)
            rs.records.push_back(batch.records[rng.index(batch.size())]);
        const auto [mod, ch] = estimate_channel(rs, trusted, beta);
        out.samples[k] = keyrate_after_alice(mod, ch, batch.detection, g_x, g_p).key_rate;
    };
    threads = std::max(1, threads);
    for (int base = 0; base < resamples; base += threads) {
        const int batch_n = std::min(threads, resamples - base);
        if (batch_n == 1) {
            one(base);
        } else {
            std::vector<std::thread> pool;
            for (int k = 0; k < batch_n; ++k) pool.emplace_back(one, base + k);
            for (auto& t : pool) t.join();
        }
    }
    double s = 0.0, s2 = 0.0;
    for (double v : out.samples) s += v;
    out.mean = s / resamples;
    for (double v : out.samples) s2 += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(s2 / (resamples - 1));
    return out;
}

// ---- batch IO ----------------------------------------------------------------------------------

inline void write_batch_csv(const SampleBatch& b, const std::string& csv_path,
                            const std::string& meta_path) {
    std::ofstream f(csv_path);
    if (!f) throw Error("cannot open " + csv_path);
    f << "x_a,p_a,quad,outcome_x,outcome_p\n";
    char buf[256];
    for (const auto& r : b.records) {
        const char* quad = b.detection == Detection::heterodyne
                               ? "both"
                               : (r.quad == Quadrature::x ? "x" : "p");
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%s,", r.x_a, r.p_a, quad);
        f << buf;
        if (r.has_x) {
            std::snprintf(buf, sizeof buf, "%.17g", r.outcome_x);
            f << buf;
        }
        f << ',';
        if (r.has_p) {
            std::snprintf(buf, sizeof buf, "%.17g", r.outcome_p);
            f << buf;
        }
        f << '\n';
    }
    nlohmann::ordered_json meta;
    meta["v_sn"] = b.v_sn;
    meta["v_dn"] = b.v_dn;
    meta["t_nominal"] = b.t_nominal;
    meta["detection"] = to_string(b.detection);
    meta["seed"] = b.seed;
    std::ofstream mf(meta_path);
    if (!mf) throw Error("cannot open " + meta_path);
    mf << meta.dump(2) << '\n';
}

inline SampleBatch read_batch_csv(const std::string& csv_path, const std::string& meta_path) {
    std::ifstream mf(meta_path);
    if (!mf) throw Error("cannot open " + meta_path);
    nlohmann::json meta = nlohmann::json::parse(mf);
    SampleBatch b;
    b.v_sn = meta.at("v_sn").get<double>();
    b.v_dn = meta.at("v_dn").get<double>();
    b.t_nominal = meta.at("t_nominal").get<double>();
    b.seed = meta.at("seed").get<std::uint64_t>();
    const std::string det = meta.at("detection").get<std::string>();
    if (det == "homodyne")
        b.detection = Detection::homodyne;
    else if (det == "heterodyne")
        b.detection = Detection::heterodyne;
    else
        throw ConfigError("unknown detection '" + det + "'");

    std::ifstream f(csv_path);
    if (!f) throw Error("cannot open " + csv_path);
    std::string line;
    if (!std::getline(f, line)) throw Error("empty csv " + csv_path);
    if (line != "x_a,p_a,quad,outcome_x,outcome_p")
        throw Error("unexpected csv header: " + line);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok[5];
        for (int i = 0; i < 5; ++i) std::getline(ss, tok[i], ',');
        SampleRecord r;
        r.x_a = std::stod(tok[0]);
        r.p_a = std::stod(tok[1]);
        if (tok[2] == "x")
            r.quad = Quadrature::x;
        else if (tok[2] == "p")
            r.quad = Quadrature::p;
        else if (tok[2] != "both")
            throw Error("bad quad column: " + tok[2]);
        if (!tok[3].empty()) {
            r.outcome_x = std::stod(tok[3]);
            r.has_x = true;
        }
        if (!tok[4].empty()) {
            r.outcome_p = std::stod(tok[4]);
            r.has_p = true;
        }
        if (b.detection == Detection::homodyne && r.has_x == r.has_p)
            throw Error("homodyne rows must have exactly one outcome");
        b.records.push_back(r);
    }
    if (b.records.empty()) throw InsufficientSamples("no records in " + csv_path);
    return b;
}

}  // namespace cvqkd
