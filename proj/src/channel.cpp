#include "flagseq/channel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

#include "flagseq/resample.hpp"

namespace flagseq {

namespace {
constexpr double kLightSpeed = 299792458.0;
}

double ScenarioConfig::tau_bins(const TargetSpec& t) const {
    return 2.0 * t.range_m * bandwidth_hz / kLightSpeed;
}

double ScenarioConfig::omega_bins(const TargetSpec& t, int n) const {
    return 2.0 * t.velocity_mps * f_cr_hz * n / (kLightSpeed * bandwidth_hz);
}

double ScenarioConfig::noise_power_total() const {
    double peak = 1.0;
    for (const auto& t : targets) peak = std::max(peak, std::norm(t.amplitude));
    return peak / std::pow(10.0, snr_db / 10.0);
}

void ScenarioConfig::validate_against_zone(const Zone& zone, int n) const {
    for (const auto& t : targets) {
        const double tau = tau_bins(t);
        const double omega = omega_bins(t, n);
        if (std::abs(tau) > zone.tau_max || std::abs(omega) > zone.omega_max)
            std::fprintf(stderr,
                         "flagseq: target (%.1f m, %.1f m/s) -> (tau=%.2f, omega=%.2f) outside "
                         "the design zone\n",
                         t.range_m, t.velocity_mps, tau, omega);
    }
}

std::string ScenarioConfig::to_json() const {
    nlohmann::json j;
    j["f_cr_hz"] = f_cr_hz;
    j["bandwidth_hz"] = bandwidth_hz;
    j["snr_db"] = snr_db;
    j["seed"] = seed;
    auto& arr = j["targets"] = nlohmann::json::array();
    for (const auto& t : targets)
        arr.push_back({{"range_m", t.range_m},
                       {"velocity_mps", t.velocity_mps},
                       {"amp_re", t.amplitude.real()},
                       {"amp_im", t.amplitude.imag()}});
    return j.dump(2);
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ScenarioConfig cfg;
    cfg.f_cr_hz = j.at("f_cr_hz").get<double>();
    cfg.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    cfg.snr_db = j.at("snr_db").get<double>();
    cfg.seed = j.value("seed", 1ull);
    for (const auto& t : j.at("targets"))
        cfg.targets.push_back(TargetSpec{t.at("range_m").get<double>(),
                                         t.at("velocity_mps").get<double>(),
                                         cplx(t.value("amp_re", 1.0), t.value("amp_im", 0.0))});
    return cfg;
}

ComplexSeq synthesize_rx(const ComplexSeq& s, const ScenarioConfig& scenario, AfCase kase,
                         int n_dop, std::mt19937_64& rng) {
    const int nd = n_dop > 0 ? n_dop : (kase == AfCase::Aperiodic ? s.core_size() : s.size());
    std::vector<cplx> out(static_cast<std::size_t>(s.size()), cplx(0.0, 0.0));
    for (const auto& t : scenario.targets) {
        const double tau = scenario.tau_bins(t);
        const double omega = scenario.omega_bins(t, nd);
        const ComplexSeq shifted = frac_delay(s, tau, kase);
        for (int i = 0; i < s.size(); ++i) {
            const int n = s.start_index() + i;
            const double phase = 2.0 * kPi * omega * (n - tau) / nd;
            out[static_cast<std::size_t>(i)] += t.amplitude * shifted[i] * std::polar(1.0, phase);
        }
    }
    const double sigma2 = scenario.noise_power_total();
    if (sigma2 > 0.0) {
        std::normal_distribution<double> quad(0.0, std::sqrt(sigma2 / 2.0));
        for (auto& v : out) v += cplx(quad(rng), quad(rng));
    }
    return ComplexSeq(std::move(out), s.start_index());
}

FimResult fim_crlb(const ComplexSeq& s, double bandwidth_hz, double f_cr_hz, double snr_linear,
                   int n1, int n2) {
    if (n1 > 0) throw param_error("fim_crlb: N1 must be <= 0");
    if (n2 < s.core_size()) throw param_error("fim_crlb: N2 must be >= N");
    if (n1 > s.start_index() || n2 < s.end_index() - 1)
        throw param_error("fim_crlb: [N1, N2] must cover the sequence support");
    if (snr_linear <= 0.0) throw param_error("fim_crlb: SNR must be positive");

    const double ss = s.energy();
    if (ss <= 0.0) throw domain_error("fim_crlb: zero-energy sequence");

    // H and T couple sample pairs; D weights by the absolute sample index.
    double s_h_s = 0.0;
    cplx s_t_s(0.0, 0.0);
    cplx s_dt_s(0.0, 0.0);
    double s_d_s = 0.0;
    double s_d2_s = 0.0;
    for (int i = 0; i < s.size(); ++i) {
        const int m = s.start_index() + i;
        const cplx sm = s[i];
        s_d_s += m * std::norm(sm);
        s_d2_s += static_cast<double>(m) * m * std::norm(sm);
        for (int j = 0; j < s.size(); ++j) {
            const int n = s.start_index() + j;
            const cplx prod = std::conj(sm) * s[j];
            double h, t;
            if (m == n) {
                h = kPi * kPi / 3.0;
                t = 0.0;
            } else {
                const int diff = m - n;
                const double sign = (std::abs(diff) % 2 == 0) ? 1.0 : -1.0;
                h = sign * 2.0 / (static_cast<double>(diff) * diff);
                t = sign / diff;
            }
            s_h_s += h * prod.real();
            s_t_s += t * prod;
            s_dt_s += static_cast<double>(m) * t * prod;
        }
    }

    const double b = bandwidth_hz;
    const double eps_c = 2.0 * kPi * f_cr_hz;
    FimResult fim;
    fim.phi[0][0] = b * b * (s_h_s - std::norm(s_t_s) / ss);
    fim.phi[0][1] = eps_c * std::imag(s_dt_s - s_d_s * s_t_s / ss);
    fim.phi[1][0] = fim.phi[0][1];
    fim.phi[1][1] = (eps_c * eps_c / (b * b)) * (s_d2_s - s_d_s * s_d_s / ss);

    const double det = fim.phi[0][0] * fim.phi[1][1] - fim.phi[0][1] * fim.phi[1][0];
    if (!(det > 0.0) || fim.phi[0][0] <= 0.0 || fim.phi[1][1] <= 0.0) {
        std::string axis = "correlated delay-Doppler direction";
        if (fim.phi[0][0] <= 0.0) axis = "delay axis";
        if (fim.phi[1][1] <= 0.0) axis = "Doppler axis";
        throw domain_error("fim_crlb: singular Fisher information along the " + axis);
    }
    const double scale = 1.0 / (2.0 * snr_linear * det);
    fim.crlb[0][0] = fim.phi[1][1] * scale;
    fim.crlb[0][1] = -fim.phi[0][1] * scale;
    fim.crlb[1][0] = -fim.phi[1][0] * scale;
    fim.crlb[1][1] = fim.phi[0][0] * scale;
    return fim;
}

double crlb_tau_bins2(const FimResult& fim, double bandwidth_hz) {
    return fim.crlb[0][0] * bandwidth_hz * bandwidth_hz;
}

double crlb_omega_bins2(const FimResult& fim, double bandwidth_hz, double f_cr_hz, int n) {
    const double f = f_cr_hz * n / bandwidth_hz;
    return fim.crlb[1][1] * f * f;
}

SamplingBounds sampling_bounds(double bandwidth_hz, double f_cr_hz, int n, int k_tau,
                               int k_omega) {
    if (bandwidth_hz <= 0 || f_cr_hz <= 0 || n < 1 || k_tau < 1 || k_omega < 1)
        throw param_error("sampling_bounds: parameters must be positive");
    SamplingBounds sb;
    const double c2 = kLightSpeed * kLightSpeed;
    sb.range_m2 = c2 / (48.0 * bandwidth_hz * bandwidth_hz * k_tau * k_tau);
    sb.speed_mps2 = c2 * bandwidth_hz * bandwidth_hz /
                    (48.0 * f_cr_hz * f_cr_hz * static_cast<double>(n) * n * k_omega * k_omega);
    sb.tau_bins2 = 1.0 / (12.0 * k_tau * k_tau);
    sb.omega_bins2 = 1.0 / (12.0 * k_omega * k_omega);
    return sb;
}

namespace {

struct TrialCounts {
    long detect_success = 0;
    long detect_total = 0;
    long fa_trials = 0;
    long null_total = 0;
    double err_tau2 = 0.0;
    double err_omega2 = 0.0;
    long nmse_success = 0;
    long nmse_total = 0;
};

}  // namespace

McResult monte_carlo(const FlagDesign& design, int member, const McConfig& cfg) {
    const ComplexSeq tx = design.flag_tx(member);
    const ComplexSeq rx = design.flag_rx(member);
    const int xi = design.curtains().members[static_cast<std::size_t>(member)].line_slope;
    const Zone zone = design.zone();
    const int nd = design.n_core();

    // Targets are drawn one bin inside the zone so the refinement window
    // never leaves it.
    const double tau_span = std::max(0.0, zone.tau_max - 1.0);
    const double omega_span = std::max(0.0, zone.omega_max - 1.0);

    McResult result;

    int grid_index = 0;
    for (double snr_db : cfg.snr_db_list) {
        const double snr_lin = std::pow(10.0, snr_db / 10.0);
        for (double p_fa : cfg.p_fa_list) {
            // A fixed shard count keeps results identical across --threads
            // settings; the reduction below runs in shard order.
            constexpr int shards = 64;
            std::vector<TrialCounts> per_shard(shards);
            parallel_for(shards, cfg.threads, [&](int shard) {
                std::mt19937_64 rng(split_seed(cfg.seed, static_cast<std::uint64_t>(grid_index) * 1000 +
                                                             static_cast<std::uint64_t>(shard)));
                std::uniform_real_distribution<double> utau(-tau_span, tau_span);
                std::uniform_real_distribution<double> uomega(-omega_span, omega_span);
                std::uniform_real_distribution<double> uphase(0.0, 2.0 * kPi);
                TrialCounts local;

                auto trials_of = [&](int total) {
                    return total / shards + (shard < total % shards ? 1 : 0);
                };

                // Detection trials: one random fractional target per trial.
                for (int trial = 0; trial < trials_of(cfg.detection_trials); ++trial) {
                    ScenarioConfig sc;
                    sc.f_cr_hz = cfg.f_cr_hz;
                    sc.bandwidth_hz = cfg.bandwidth_hz;
                    sc.snr_db = snr_db;
                    TargetSpec t;
                    const double tau0 = std::round(utau(rng));
                    const double omega0 = std::round(uomega(rng));
                    t.range_m = tau0 * kLightSpeed / (2.0 * cfg.bandwidth_hz);
                    t.velocity_mps = omega0 * kLightSpeed * cfg.bandwidth_hz / (2.0 * cfg.f_cr_hz * nd);
                    t.amplitude = std::polar(1.0, uphase(rng));
                    sc.targets.push_back(t);
                    const ComplexSeq echo = synthesize_rx(tx, sc, zone.kase, nd, rng);
                    CfarConfig cc{p_fa, sc.noise_power_total() / 2.0};
                    const auto dets = flag_search(echo, rx, xi, zone, cc, nd);
                    local.detect_total += 1;
                    if (dets.size() == 1 && std::abs(dets[0].tau_hat - tau0) <= 1.0 &&
                        std::abs(dets[0].omega_hat - omega0) <= 1.0)
                        local.detect_success += 1;
                }

                // Null trials for the false alarm rate.
                for (int trial = 0; trial < trials_of(cfg.null_trials); ++trial) {
                    ScenarioConfig sc;
                    sc.f_cr_hz = cfg.f_cr_hz;
                    sc.bandwidth_hz = cfg.bandwidth_hz;
                    sc.snr_db = snr_db;
                    const ComplexSeq echo = synthesize_rx(tx, sc, zone.kase, nd, rng);
                    CfarConfig cc{p_fa, sc.noise_power_total() / 2.0};
                    const auto dets = flag_search(echo, rx, xi, zone, cc, nd);
                    local.null_total += 1;
                    if (!dets.empty()) local.fa_trials += 1;
                }

                // Refined-estimate MSE on fractional targets.
                for (int trial = 0; trial < trials_of(cfg.nmse_trials); ++trial) {
                    ScenarioConfig sc;
                    sc.f_cr_hz = cfg.f_cr_hz;
                    sc.bandwidth_hz = cfg.bandwidth_hz;
                    sc.snr_db = snr_db;
                    TargetSpec t;
                    const double tau0 = utau(rng);
                    const double omega0 = uomega(rng);
                    t.range_m = tau0 * kLightSpeed / (2.0 * cfg.bandwidth_hz);
                    t.velocity_mps = omega0 * kLightSpeed * cfg.bandwidth_hz / (2.0 * cfg.f_cr_hz * nd);
                    t.amplitude = std::polar(1.0, uphase(rng));
                    sc.targets.push_back(t);
                    const ComplexSeq echo = synthesize_rx(tx, sc, zone.kase, nd, rng);
                    CfarConfig cc{p_fa, sc.noise_power_total() / 2.0};
                    auto dets = flag_search(echo, rx, xi, zone, cc, nd);
                    local.nmse_total += 1;
                    if (dets.empty()) continue;
                    if (std::abs(dets[0].tau_hat - tau0) > 1.0 ||
                        std::abs(dets[0].omega_hat - omega0) > 1.0)
                        continue;
                    const Detection fine =
                        refine_fractional(dets[0], echo, rx, cfg.k_tau, cfg.k_omega, zone, nd);
                    local.err_tau2 += (fine.tau_hat - tau0) * (fine.tau_hat - tau0);
                    local.err_omega2 += (fine.omega_hat - omega0) * (fine.omega_hat - omega0);
                    local.nmse_success += 1;
                }

                per_shard[static_cast<std::size_t>(shard)] = local;
            });
            TrialCounts totals;
            for (const TrialCounts& local : per_shard) {
                totals.detect_success += local.detect_success;
                totals.detect_total += local.detect_total;
                totals.fa_trials += local.fa_trials;
                totals.null_total += local.null_total;
                totals.err_tau2 += local.err_tau2;
                totals.err_omega2 += local.err_omega2;
                totals.nmse_success += local.nmse_success;
                totals.nmse_total += local.nmse_total;
            }

            RocRow row;
            row.snr_db = snr_db;
            row.p_fa = p_fa;
            row.p_d = totals.detect_total ? static_cast<double>(totals.detect_success) / totals.detect_total : 0.0;
            row.fa_rate = totals.null_total ? static_cast<double>(totals.fa_trials) / totals.null_total : 0.0;
            result.roc.push_back(row);

            if (cfg.nmse_trials > 0) {
                const FimResult fim =
                    fim_crlb(tx, cfg.bandwidth_hz, cfg.f_cr_hz, snr_lin, -nd, 2 * nd);
                const SamplingBounds sb =
                    sampling_bounds(cfg.bandwidth_hz, cfg.f_cr_hz, nd, cfg.k_tau, cfg.k_omega);
                NmseRow nrow;
                nrow.snr_db = snr_db;
                nrow.successes = static_cast<int>(totals.nmse_success);
                nrow.nmse_range = totals.nmse_success ? totals.err_tau2 / totals.nmse_success : 0.0;
                nrow.nmse_speed = totals.nmse_success ? totals.err_omega2 / totals.nmse_success : 0.0;
                nrow.crlb_range = crlb_tau_bins2(fim, cfg.bandwidth_hz);
                nrow.crlb_speed = crlb_omega_bins2(fim, cfg.bandwidth_hz, cfg.f_cr_hz, nd);
                nrow.sb_range = sb.tau_bins2;
                nrow.sb_speed = sb.omega_bins2;
                result.nmse.push_back(nrow);
            }
            ++grid_index;
        }
    }
    return result;
}

void write_roc_csv(std::ostream& os, const std::vector<RocRow>& rows) {
    os.precision(12);
    os << "snr_db,p_fa,p_d,f_a_rate\n";
    for (const auto& r : rows) os << r.snr_db << ',' << r.p_fa << ',' << r.p_d << ',' << r.fa_rate << '\n';
}

void write_nmse_csv(std::ostream& os, const std::vector<NmseRow>& rows) {
    os.precision(12);
    os << "snr_db,nmse_range,nmse_speed,crlb_range,crlb_speed,sb_range,sb_speed\n";
    for (const auto& r : rows)
        os << r.snr_db << ',' << r.nmse_range << ',' << r.nmse_speed << ',' << r.crlb_range << ','
           << r.crlb_speed << ',' << r.sb_range << ',' << r.sb_speed << '\n';
}

}  // namespace flagseq
