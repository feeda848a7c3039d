#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flagseq/apmm.hpp"
#include "flagseq/channel.hpp"
#include "flagseq/fft.hpp"
#include "flagseq/manifest.hpp"
#include "flagseq/metrics.hpp"

namespace flagseq::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw param_error("cannot open config file " + path);
    json j;
    in >> j;
    return j;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw param_error("cannot open file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content, RunManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw domain_error("cannot write " + path);
    out << content;
    out.close();
    manifest.add_file(path);
}

RunManifest start_manifest(const char* command, const CommonArgs& args, const json& config,
                           std::uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.version = version_string();
    m.config_snapshot = config.dump();
    m.seed = seed;
    m.threads = args.threads;
    m.started_utc = utc_now_string();
    return m;
}

void finish_manifest(RunManifest& manifest, const std::string& out_dir, double t0_ms) {
    manifest.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch())
            .count() -
        t0_ms;
    std::ofstream out(out_dir + "/manifest.json");
    out << manifest.to_json() << "\n";
}

double steady_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

DesignConfig design_config_from(const json& j) { return DesignConfig::from_json(j.dump()); }

CurtainSet curtains_from(const json& j, const Zone& zone) {
    const std::string kind = j.at("kind").get<std::string>();
    const int n = j.at("n").get<int>();
    std::optional<int> tau_ext;
    if (j.contains("tau_ext")) tau_ext = j["tau_ext"].get<int>();
    if (kind == "near_zero") {
        return build_near_zero_set(n, j.at("xis").get<std::vector<int>>(),
                                   j.at("qs").get<std::vector<int>>(), zone, tau_ext);
    }
    if (kind == "zero") {
        return build_zero_set(n, j.at("xi").get<int>(), j.at("qs").get<std::vector<int>>(), zone,
                              tau_ext);
    }
    throw param_error("curtains.kind must be near_zero or zero");
}

std::string gnuplot_grid_script(const std::string& csv, const std::string& png) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set pm3d map\n"
          "set xlabel 'tau'\nset ylabel 'omega'\n"
          "set output '" << png << "'\nset term pngcairo size 800,600\n"
          "splot '" << csv << "' every ::1 using 1:2:3 with pm3d notitle\n";
    return os.str();
}

std::string gnuplot_convergence_script(const std::string& jsonl, const std::string& png) {
    std::ostringstream os;
    os << "# Convert the JSONL log to columns first, e.g.\n"
          "#   jq -r '[.t, .NWImSL_dB] | @csv' " << jsonl << " > convergence.csv\n"
          "set datafile separator ','\n"
          "set xlabel 'iteration'\nset ylabel 'NWImSL (dB)'\n"
          "set output '" << png << "'\nset term pngcairo size 800,600\n"
          "plot 'convergence.csv' using 1:2 with lines notitle\n";
    return os.str();
}

}  // namespace

int cmd_design(const CommonArgs& args) {
    const double t0 = steady_ms();
    const json cfg_json = load_config(args.config_path);
    for (const char* field : {"design", "curtains", "solver"})
        if (!cfg_json.contains(field))
            throw param_error(std::string("design config: missing field '") + field + "'");

    const DesignConfig cfg = design_config_from(cfg_json["design"]);
    const CurtainSet curtains = curtains_from(cfg_json["curtains"], cfg.zone);
    if (static_cast<int>(curtains.members.size()) != cfg.m)
        throw param_error("design config: curtain member count != design.m");

    ApmmOptions opt;
    opt.t_max = cfg_json["solver"].value("t_max", 500);
    opt.rel_tol = cfg_json["solver"].value("rel_tol", 1e-8);
    opt.threads = args.threads;
    const std::uint64_t seed = args.seed.value_or(cfg_json["solver"].value("seed", 1ull));

    fs::create_directories(args.out_dir);
    RunManifest manifest = start_manifest("design", args, cfg_json, seed);

    const FlagDesign init = FlagDesign::random_init(curtains, seed);
    const SolveResult result =
        cfg.symmetric ? solve_symmetric(init, cfg, opt) : solve_asymmetric(init, cfg, opt);

    write_file(args.out_dir + "/design.json", result.design.to_json(), manifest);
    {
        std::ostringstream log;
        for (const auto& rec : result.history) log << iteration_jsonl(rec) << "\n";
        write_file(args.out_dir + "/convergence.jsonl", log.str(), manifest);
    }
    for (int m = 0; m < result.design.m_count(); ++m) {
        std::ostringstream tx, rx;
        result.design.flag_tx(m).write_csv(tx);
        result.design.flag_rx(m).write_csv(rx);
        write_file(args.out_dir + "/flag_tx_" + std::to_string(m) + ".csv", tx.str(), manifest);
        write_file(args.out_dir + "/flag_rx_" + std::to_string(m) + ".csv", rx.str(), manifest);
    }
    if (args.emit_gnuplot)
        write_file(args.out_dir + "/convergence.gp",
                   gnuplot_convergence_script("convergence.jsonl", "convergence.png"), manifest);

    finish_manifest(manifest, args.out_dir, t0);
    std::printf("design: %d iterations, OF %.6e -> %.6e (%s)\n",
                static_cast<int>(result.history.size()) - 1, result.history.front().of,
                result.history.back().of, result.converged ? "converged" : "t_max reached");
    return 0;
}

int cmd_verify(const CommonArgs& args) {
    FlagDesign design = [&] {
        try {
            return FlagDesign::from_json(slurp(args.config_path));
        } catch (const nlohmann::json::exception& e) {
            throw param_error(std::string("design file parse failure: ") + e.what());
        }
    }();
    // Feasibility (parity, zone, extension) was re-validated while loading;
    // what remains are the numeric invariants.
    int failures = 0;
    auto check = [&](const char* name, bool ok, const std::string& detail) {
        std::printf("%s %s%s%s\n", ok ? "PASS" : "FAIL", name, detail.empty() ? "" : ": ",
                    detail.c_str());
        if (!ok) ++failures;
    };

    const Zone& zone = design.zone();
    const int n = design.n_core();
    for (int m = 0; m < design.m_count(); ++m) {
        const auto& member = design.curtains().members[static_cast<std::size_t>(m)];
        const AfGrid g = af_grid(member.tx, member.rx, zone, n, args.threads);
        double on_err = 0.0, off = 0.0;
        for (int tau = -zone.tau_max; tau <= zone.tau_max; ++tau)
            for (int omega = -zone.omega_max; omega <= zone.omega_max; ++omega) {
                if (omega == member.line_slope * tau)
                    on_err = std::max(on_err, std::abs(g.at(tau, omega) - 1.0));
                else
                    off = std::max(off, g.at(tau, omega));
            }
        std::ostringstream detail;
        detail << "member " << m << " on-line err " << on_err << ", off-line max " << off;
        check("curtain-ideality", on_err <= 1e-9 && off <= 1e-9, detail.str());
    }

    if (design.m_count() > 1) {
        const bool near_zero = design.curtains().kind == SetKind::NearZeroCAF;
        const double expect = near_zero ? 1.0 / std::sqrt(static_cast<double>(n)) : 0.0;
        double worst = 0.0;
        for (int a = 0; a < design.m_count(); ++a)
            for (int b = 0; b < design.m_count(); ++b) {
                if (a == b) continue;
                const auto& ma = design.curtains().members[static_cast<std::size_t>(a)];
                const auto& mb = design.curtains().members[static_cast<std::size_t>(b)];
                const AfGrid g = af_grid(ma.tx, mb.rx, zone, n, args.threads);
                for (int tau = -zone.tau_max; tau <= zone.tau_max; ++tau)
                    for (int omega = -zone.omega_max; omega <= zone.omega_max; ++omega)
                        worst = std::max(worst, std::abs(g.at(tau, omega) - expect));
            }
        std::ostringstream detail;
        detail << "worst |CAF - " << expect << "| = " << worst;
        check(near_zero ? "caf-constancy" : "caf-zero", worst <= 1e-9, detail.str());
    }

    const double drift = design.constraint_drift();
    check("peak-constraints", drift <= 1e-9, "drift " + std::to_string(drift));

    const double delta = orthogonality_delta_db(design);
    check("orthogonality-delta", std::isfinite(delta) || delta == -300.0,
          "Delta " + std::to_string(delta) + " dB");

    return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const CommonArgs& args) {
    const double t0 = steady_ms();
    const json cfg_json = load_config(args.config_path);
    FlagDesign design = FlagDesign::from_json(slurp(cfg_json.at("design_file").get<std::string>()));
    Zone zone = design.zone();
    if (cfg_json.contains("zone")) {
        zone.tau_max = cfg_json["zone"].at("tau_max").get<int>();
        zone.omega_max = cfg_json["zone"].at("omega_max").get<int>();
    }
    DesignConfig cfg;
    if (cfg_json.contains("design_config"))
        cfg = design_config_from(cfg_json["design_config"]);
    else {
        cfg.m = design.m_count();
        cfg.zone = design.zone();
    }

    fs::create_directories(args.out_dir);
    RunManifest manifest = start_manifest("evaluate", args, cfg_json, 0);

    for (int m1 = 0; m1 < design.m_count(); ++m1) {
        for (int m2 = 0; m2 < design.m_count(); ++m2) {
            const AfGrid g =
                af_grid(design.flag_tx(m1), design.flag_rx(m2), zone, design.n_core(), args.threads,
                        "flag_tx_" + std::to_string(m1), "flag_rx_" + std::to_string(m2));
            const std::string base =
                args.out_dir + "/af_" + std::to_string(m1) + "_" + std::to_string(m2);
            std::ostringstream csv;
            g.write_csv(csv);
            write_file(base + ".csv", csv.str(), manifest);
            if (args.emit_gnuplot)
                write_file(base + ".gp",
                           gnuplot_grid_script(fs::path(base + ".csv").filename().string(),
                                               fs::path(base + ".png").filename().string()),
                           manifest);
        }
    }

    std::optional<double> g_ref;
    if (cfg_json.contains("reference_wimsl")) g_ref = cfg_json["reference_wimsl"].get<double>();
    const MetricReport report = assemble_metrics(design, cfg, std::nullopt, g_ref, args.threads);
    write_file(args.out_dir + "/metrics.json", report.to_json(), manifest);
    write_file(args.out_dir + "/metrics.md", report.to_markdown(), manifest);

    finish_manifest(manifest, args.out_dir, t0);
    std::printf("evaluate: %d grids, PMmSR %.2f dB, Delta %.2f dB\n",
                design.m_count() * design.m_count(), report.pmmsr_set_db, report.delta_db);
    return 0;
}

int cmd_estimate(const CommonArgs& args) {
    const double t0 = steady_ms();
    const json cfg_json = load_config(args.config_path);
    FlagDesign design = FlagDesign::from_json(slurp(cfg_json.at("design_file").get<std::string>()));
    const int member = cfg_json.value("member", 0);
    if (member < 0 || member >= design.m_count()) throw param_error("estimate: bad member index");

    fs::create_directories(args.out_dir);
    RunManifest manifest = start_manifest("estimate", args, cfg_json, 0);

    if (cfg_json.contains("snr_sweep")) {
        McConfig mc;
        mc.snr_db_list = cfg_json["snr_sweep"].get<std::vector<double>>();
        if (cfg_json.contains("p_fa_sweep"))
            mc.p_fa_list = cfg_json["p_fa_sweep"].get<std::vector<double>>();
        else
            mc.p_fa_list = {cfg_json.value("p_fa", 1e-3)};
        mc.detection_trials = cfg_json.value("trials", 1000);
        mc.null_trials = cfg_json.value("null_trials", 1000);
        mc.nmse_trials = cfg_json.value("nmse_trials", 0);
        mc.k_tau = cfg_json.value("k_tau", 16);
        mc.k_omega = cfg_json.value("k_omega", 16);
        mc.f_cr_hz = cfg_json.value("f_cr_hz", 77e9);
        mc.bandwidth_hz = cfg_json.value("bandwidth_hz", 10e6);
        mc.seed = args.seed.value_or(cfg_json.value("seed", 1ull));
        mc.threads = args.threads;
        manifest.seed = mc.seed;
        const McResult result = monte_carlo(design, member, mc);
        std::ostringstream roc;
        write_roc_csv(roc, result.roc);
        write_file(args.out_dir + "/roc.csv", roc.str(), manifest);
        if (!result.nmse.empty()) {
            std::ostringstream nmse;
            write_nmse_csv(nmse, result.nmse);
            write_file(args.out_dir + "/nmse.csv", nmse.str(), manifest);
        }
        finish_manifest(manifest, args.out_dir, t0);
        std::printf("estimate: %zu ROC points\n", result.roc.size());
        return 0;
    }

    ScenarioConfig scenario = ScenarioConfig::from_json(cfg_json.at("scenario").dump());
    if (args.seed) scenario.seed = *args.seed;
    manifest.seed = scenario.seed;
    scenario.validate_against_zone(design.zone(), design.n_core());

    std::mt19937_64 rng(scenario.seed);
    const ComplexSeq echo =
        synthesize_rx(design.flag_tx(member), scenario, design.kase(), design.n_core(), rng);
    CfarConfig cfar{cfg_json.value("p_fa", 1e-3), scenario.noise_power_total() / 2.0};
    FlagSearchStats stats;
    const int xi = design.curtains().members[static_cast<std::size_t>(member)].line_slope;
    auto dets = flag_search(echo, design.flag_rx(member), xi, design.zone(), cfar,
                            design.n_core(), &stats);
    const int k_tau = cfg_json.value("k_tau", 1);
    const int k_omega = cfg_json.value("k_omega", 1);
    for (auto& d : dets)
        d = refine_fractional(d, echo, design.flag_rx(member), k_tau, k_omega, design.zone(),
                              design.n_core());

    std::ostringstream csv;
    write_detections_csv(csv, dets);
    write_file(args.out_dir + "/detections.csv", csv.str(), manifest);
    json summary;
    summary["detections"] = dets.size();
    summary["lines_evaluated"] = stats.lines_evaluated;
    summary["curtain_hits"] = stats.curtain_hits;
    summary["curtain_overlap"] = stats.curtain_overlap;
    summary["cell_threshold_power"] = stats.cell_threshold_power;
    summary["cell_p_fa"] = stats.cell_p_fa;
    write_file(args.out_dir + "/summary.json", summary.dump(2), manifest);

    finish_manifest(manifest, args.out_dir, t0);
    std::printf("estimate: %zu detections, %d lines evaluated\n", dets.size(),
                stats.lines_evaluated);
    return 0;
}

int cmd_bench(const CommonArgs& args) {
    const double t0 = steady_ms();
    const json cfg_json = load_config(args.config_path);
    const auto sizes = cfg_json.at("sizes").get<std::vector<int>>();
    Zone zone;
    zone.tau_max = cfg_json.at("zone").at("tau_max").get<int>();
    zone.omega_max = cfg_json.at("zone").at("omega_max").get<int>();
    zone.kase = af_case_from_string(cfg_json["zone"].value("case", "periodic"));
    const int xi = cfg_json.value("xi", 1);
    const int trials = cfg_json.value("trials", 3);
    const std::uint64_t seed = args.seed.value_or(cfg_json.value("seed", 1ull));

    fs::create_directories(args.out_dir);
    RunManifest manifest = start_manifest("bench", args, cfg_json, seed);

    std::ostringstream csv;
    csv << "n,method,lines,fft_calls,wall_ms\n";
    std::mt19937_64 rng(seed);
    for (int n : sizes) {
        const int q = (static_cast<long long>(xi) * n % 2 == 0) ? 0 : 1;
        const CurtainSpec curtain = build_curtain(n, xi, q, zone);
        CurtainSet set;
        set.kind = SetKind::NearZeroCAF;
        set.zone = zone;
        set.members.push_back(curtain);
        const FlagDesign design = FlagDesign::random_init(set, seed);
        const ComplexSeq tx = design.flag_tx(0);
        const ComplexSeq rx = design.flag_rx(0);

        std::uniform_int_distribution<int> utau(-zone.tau_max, zone.tau_max);
        std::uniform_int_distribution<int> uomega(-zone.omega_max, zone.omega_max);
        double flag_ms = 0.0, exh_ms = 0.0;
        long flag_lines = 0, flag_ffts = 0, exh_lines = 0, exh_ffts = 0;
        for (int trial = 0; trial < trials; ++trial) {
            ScenarioConfig sc;
            sc.snr_db = 1000.0;  // effectively noiseless
            TargetSpec t;
            const int tau0 = utau(rng);
            const int omega0 = uomega(rng);
            t.range_m = tau0 * 299792458.0 / (2.0 * sc.bandwidth_hz);
            t.velocity_mps = omega0 * 299792458.0 * sc.bandwidth_hz / (2.0 * sc.f_cr_hz * n);
            sc.targets.push_back(t);
            const ComplexSeq echo = synthesize_rx(tx, sc, zone.kase, n, rng);

            instr::reset();
            double tic = steady_ms();
            CfarConfig cfar{1e-3, 1e-6};
            const auto dets = flag_search(echo, rx, xi, zone, cfar, n);
            flag_ms += steady_ms() - tic;
            flag_lines += instr::af_line_calls().load();
            flag_ffts += instr::fft_calls().load();

            instr::reset();
            tic = steady_ms();
            // Zone-limited exhaustive line-by-line search: one Doppler-cut
            // FFT per delay, argmax over the zone.
            double best = -1.0;
            int best_tau = 0, best_omega = 0;
            for (int tau = -zone.tau_max; tau <= zone.tau_max; ++tau) {
                const auto vals = af_line(
                    echo, rx, AfLine{-tau, zone.omega_max, 0, -1, 2 * zone.omega_max + 1},
                    zone.kase, n);
                for (int k = 0; k < 2 * zone.omega_max + 1; ++k) {
                    if (vals[static_cast<std::size_t>(k)] > best) {
                        best = vals[static_cast<std::size_t>(k)];
                        best_tau = tau;
                        best_omega = k - zone.omega_max;
                    }
                }
            }
            (void)best_tau;
            (void)best_omega;
            exh_ms += steady_ms() - tic;
            exh_lines += instr::af_line_calls().load();
            exh_ffts += instr::fft_calls().load();
            (void)dets;
        }
        csv << n << ",flag," << flag_lines / trials << ',' << flag_ffts / trials << ','
            << flag_ms / trials << '\n';
        csv << n << ",exhaustive," << exh_lines / trials << ',' << exh_ffts / trials << ','
            << exh_ms / trials << '\n';
    }
    write_file(args.out_dir + "/bench.csv", csv.str(), manifest);
    finish_manifest(manifest, args.out_dir, t0);
    std::printf("bench: %zu sizes\n", sizes.size());
    return 0;
}

}  // namespace flagseq::cli
