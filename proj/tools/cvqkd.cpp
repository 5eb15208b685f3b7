// cvqkd: command-line front end.
//
//   cvqkd keyrate   --config cfg.json [--out report.json]
//   cvqkd optimize  --config cfg.json [--out optimum.json] [--contour contour.csv]
//   cvqkd simulate  --config cfg.json --out batch.csv [--meta batch.meta.json]
//   cvqkd calibrate --data batch.csv --meta batch.meta.json [--out report.json]
//   cvqkd satellite --config cfg.json --profile profile.csv [--out sweep.csv]
//
// Exit codes: 0 success, 1 error, 2 computed-but-insecure (report still
// emitted). See README for the config schema.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "cvqkd/data.hpp"
#include "cvqkd/io.hpp"
#include "cvqkd/keyrate.hpp"
#include "cvqkd/optimize.hpp"
#include "cvqkd/satellite.hpp"

namespace {

void emit(const cvqkd::ojson& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream f(out_path);
        if (!f) throw cvqkd::Error("cannot open " + out_path);
        f << j.dump(2) << '\n';
    }
}

struct CommonFlags {
    std::string config_path;
    std::string out_path;
    std::string format = "json";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> truncation;
    std::optional<double> delta;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config = true) {
    auto* copt = cmd->add_option("--config", f.config_path, "JSON config file");
    if (needs_config) copt->required();
    cmd->add_option("--out", f.out_path, "output path (default: stdout)");
    cmd->add_option("--format", f.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
    cmd->add_option("--seed", f.seed, "override config seed");
    cmd->add_option("--threads", f.threads, "override config threads");
    cmd->add_option("--truncation", f.truncation, "Fock truncation: N or 'auto'");
    cmd->add_option("--delta", f.delta, "override grid bin width");
}

cvqkd::RunConfig load_with_overrides(const CommonFlags& f) {
    cvqkd::RunConfig cfg = cvqkd::load_config(f.config_path);
    if (f.seed) cfg.seed = *f.seed;
    if (f.threads) {
        if (*f.threads < 1) throw cvqkd::ConfigError("threads must be >= 1");
        cfg.threads = *f.threads;
        cfg.fock.threads = *f.threads;
    }
    if (f.truncation) {
        if (*f.truncation == "auto")
            cfg.fock.truncation = 0;
        else
            cfg.fock.truncation = std::stoi(*f.truncation);
    }
    if (f.delta) {
        cvqkd::GridSpec g = cfg.effective_grid();
        g.delta = *f.delta;
        g.validate();
        cfg.grid = g;
    }
    return cfg;
}

int run_keyrate(const CommonFlags& f) {
    const cvqkd::RunConfig cfg = load_with_overrides(f);
    const bool any_cut = cfg.filters.c_x > 0 || cfg.filters.c_p > 0 || cfg.filters.c_rad > 0;
    cvqkd::KeyRateReport rep;
    if (any_cut) {
        rep = cvqkd::keyrate_after_bob(cfg.modulation, cfg.channel, cfg.detection, cfg.filters,
                                       cfg.effective_grid(), cfg.fock);
    } else {
        rep = cvqkd::keyrate_after_alice(cfg.modulation, cfg.channel, cfg.detection,
                                         cfg.filters.g_x, cfg.filters.g_p);
    }
    emit(cvqkd::report_to_json(rep), f.out_path);
    return rep.secure() ? 0 : 2;
}

int run_optimize(const CommonFlags& f, const std::string& contour_path) {
    const cvqkd::RunConfig cfg = load_with_overrides(f);
    if (!cfg.optimize) throw cvqkd::ConfigError("config has no 'optimize' section");
    const auto& oc = *cfg.optimize;
    cvqkd::ojson j;
    std::vector<cvqkd::ContourPoint> contour;
    bool secure = true;

    if (oc.stage == "alice") {
        const cvqkd::SearchResult r = cvqkd::optimize_alice_gains(cfg.modulation, cfg.channel,
                                                                  cfg.detection, oc.spec);
        j["stage"] = "alice";
        j["g_x"] = r.p1;
        j["g_p"] = r.p2;
        j["key_rate_bits_per_use"] = r.value;
        j["report"] = cvqkd::report_to_json(cvqkd::keyrate_after_alice(
            cfg.modulation, cfg.channel, cfg.detection, r.p1, r.p2));
        contour = r.contour;
        secure = r.positive;
    } else if (oc.stage == "vmod") {
        const cvqkd::SearchResult r = cvqkd::optimize_vmod_gg02(cfg.channel, cfg.detection,
                                                                cfg.modulation.beta, oc.spec);
        j["stage"] = "vmod";
        j["vmod_x_snu"] = r.p1;
        j["vmod_p_snu"] = r.p2;
        j["key_rate_bits_per_use"] = r.value;
        contour = r.contour;
        secure = r.positive;
    } else {
        const cvqkd::BobCutoffResult r = cvqkd::optimize_bob_cutoffs(
            cfg.modulation, cfg.channel, cfg.detection, cfg.filters.g_x, cfg.filters.g_p,
            oc.spec, cfg.effective_grid(), cfg.fock);
        j["stage"] = "bob";
        if (cfg.detection == cvqkd::Detection::homodyne) {
            j["c_x_snu"] = r.c_x;
            j["c_p_snu"] = r.c_p;
        } else {
            j["c_rad_snu"] = r.c_x;
        }
        j["key_rate_bits_per_use"] = r.key_rate;
        contour = r.contour;
        secure = r.positive;
    }
    if (!contour_path.empty()) cvqkd::write_contour_csv(contour, contour_path);
    emit(j, f.out_path);
    return secure ? 0 : 2;
}

int run_simulate(const CommonFlags& f, const std::string& meta_path) {
    const cvqkd::RunConfig cfg = load_with_overrides(f);
    if (!cfg.simulate) throw cvqkd::ConfigError("config has no 'simulate' section");
    if (f.out_path.empty()) throw cvqkd::ConfigError("simulate requires --out");
    const cvqkd::SampleBatch b =
        cvqkd::simulate_channel(cfg.modulation, cfg.channel, cfg.detection,
                                cfg.simulate->samples, cfg.seed, cfg.simulate->raw);
    const std::string meta = meta_path.empty() ? f.out_path + ".meta.json" : meta_path;
    cvqkd::write_batch_csv(b, f.out_path, meta);
    return 0;
}

int run_calibrate(const CommonFlags& f, const std::string& data_path,
                  const std::string& meta_path, bool subtract_dark) {
    cvqkd::SampleBatch b = cvqkd::read_batch_csv(data_path, meta_path);
    if (b.v_sn != 1.0 || b.v_dn != 0.0)
        b = cvqkd::calibrate_shot_noise(b, b.v_sn, b.v_dn, subtract_dark);
    const cvqkd::GainEstimate g = cvqkd::estimate_gain(b);
    cvqkd::SampleBatch rescaled = b;
    for (auto& r : rescaled.records) {
        r.x_a *= g.g_e_x;
        r.p_a *= g.g_e_p;
    }
    const cvqkd::TrustedNoiseEstimate tn = cvqkd::estimate_trusted_noise(b, g);
    cvqkd::ojson j;
    j["g_e"] = {{"x", g.g_e_x}, {"p", g.g_e_p}};
    j["xi_snu"] = {{"x", tn.xi_x}, {"p", tn.xi_p}};
    j["xi_clamped"] = {{"x", tn.clamped_x}, {"p", tn.clamped_p}};
    j["vmod_snu"] = {{"x", tn.vmod_x}, {"p", tn.vmod_p}};
    cvqkd::ojson fit;
    for (cvqkd::Quadrature q : {cvqkd::Quadrature::x, cvqkd::Quadrature::p}) {
        const cvqkd::BivariateFit bf = cvqkd::fit_bivariate(rescaled, q);
        cvqkd::ojson fj;
        fj["sigma_a"] = bf.sigma_a;
        fj["sigma_b"] = bf.sigma_b;
        fj["rho"] = bf.rho;
        fj["sigma_a_ci95"] = bf.sigma_a_ci;
        fj["sigma_b_ci95"] = bf.sigma_b_ci;
        fj["rho_ci95"] = bf.rho_ci;
        fit[cvqkd::to_string(q)] = fj;
    }
    j["fit"] = fit;
    emit(j, f.out_path);
    return 0;
}

int run_satellite(const CommonFlags& f, const std::string& profile_path,
                  std::optional<double> threshold) {
    const cvqkd::RunConfig cfg = load_with_overrides(f);
    if (!cfg.satellite) throw cvqkd::ConfigError("config has no 'satellite' section");
    cvqkd::SatelliteConfig sat = *cfg.satellite;
    sat.profile.rows = cvqkd::read_profile_csv(profile_path);
    if (threshold) sat.threshold = *threshold;

    const std::vector<cvqkd::SweepRow> sweep =
        cvqkd::sweep_keyrates(sat.profile, sat.optimize_gains, sat.g_max);
    if (!f.out_path.empty()) cvqkd::write_sweep_csv(sweep, f.out_path);

    cvqkd::ojson j;
    j["threshold_bits_per_use"] = sat.threshold;
    j["theta_full_pass_deg"] = cvqkd::theta_skr(0.0, sat.profile.r_e_km, sat.profile.l_zen_km);
    for (const char* kind : {"fixed", "optimized"}) {
        cvqkd::ojson res;
        try {
            const double eps = cvqkd::threshold_crossing(sweep, sat.threshold,
                                                         std::string(kind) == "optimized");
            res["elevation_threshold_deg"] = eps;
            res["duty_cycle_percent"] =
                cvqkd::duty_cycle(eps, sat.profile.r_e_km, sat.profile.l_zen_km);
        } catch (const cvqkd::NeverSecure&) {
            res["elevation_threshold_deg"] = nullptr;
            res["duty_cycle_percent"] = 0.0;
        }
        j[kind] = res;
    }
    if (f.out_path.empty())
        std::cout << j.dump(2) << '\n';
    else
        emit(j, f.out_path + ".duty.json");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"asymptotic CV-QKD key rates with software post-selection"};
    app.require_subcommand(1);

    CommonFlags kf, of, sf, cf, satf;
    std::string contour_path, meta_path, data_path, cal_meta_path, profile_path;
    bool subtract_dark = true;
    std::optional<double> threshold;

    auto* keyrate = app.add_subcommand("keyrate", "key-rate report for a scenario");
    add_common(keyrate, kf);

    auto* optimize = app.add_subcommand("optimize", "search filter or modulation parameters");
    add_common(optimize, of);
    optimize->add_option("--contour", contour_path, "write the coarse-grid contour CSV here");

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic sample batch");
    add_common(simulate, sf);
    simulate->add_option("--meta", meta_path, "sidecar JSON path (default: OUT.meta.json)");

    auto* calibrate = app.add_subcommand("calibrate", "estimate gain and trusted noise");
    add_common(calibrate, cf, false);
    calibrate->add_option("--data", data_path, "batch CSV")->required();
    calibrate->add_option("--meta", cal_meta_path, "batch sidecar JSON")->required();
    calibrate->add_flag("--subtract-dark,!--no-subtract-dark", subtract_dark,
                        "subtract dark noise in the shot-noise calibration");

    auto* satellite = app.add_subcommand("satellite", "elevation sweep and duty cycle");
    add_common(satellite, satf);
    satellite->add_option("--profile", profile_path, "elevation profile CSV")->required();
    satellite->add_option("--threshold", threshold, "key-rate threshold (bits/use)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (keyrate->parsed()) return run_keyrate(kf);
        if (optimize->parsed()) return run_optimize(of, contour_path);
        if (simulate->parsed()) return run_simulate(sf, meta_path);
        if (calibrate->parsed()) return run_calibrate(cf, data_path, cal_meta_path, subtract_dark);
        if (satellite->parsed()) return run_satellite(satf, profile_path, threshold);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
