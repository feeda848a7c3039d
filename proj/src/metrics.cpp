#include "flagseq/metrics.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flagseq/ambiguity.hpp"

namespace flagseq {

double nwimsl_db(double g, double g_ref) {
    if (g_ref <= 0.0) throw domain_error("nwimsl: reference WImSL must be positive");
    if (g < 0.0) throw domain_error("nwimsl: negative WImSL");
    return 10.0 * std::log10(std::max(g, 1e-300) / g_ref);
}

double pmmsr_db(const FlagDesign& design, int member, const Zone& zone, int threads) {
    const ComplexSeq fs = design.flag_tx(member);
    const ComplexSeq fr = design.flag_rx(member);
    const int xi = design.curtains().members[static_cast<std::size_t>(member)].line_slope;
    const AfGrid grid = af_grid(fs, fr, zone, design.n_core(), threads);

    const double peak = grid.at(0, 0);
    if (peak <= 0.0) throw domain_error("pmmsr: zero AAF peak");
    double dev = 0.0;
    for (int tau = -zone.tau_max; tau <= zone.tau_max; ++tau) {
        for (int omega = -zone.omega_max; omega <= zone.omega_max; ++omega) {
            double tmpl = 0.0;
            if (tau == 0 && omega == 0)
                tmpl = 1.0;
            else if (omega == xi * tau)
                tmpl = 0.5;
            dev = std::max(dev, std::abs(grid.at(tau, omega) - tmpl));
        }
    }
    if (dev < 1e-15) return 300.0;
    return std::min(300.0, 20.0 * std::log10(peak / dev));
}

MetricReport assemble_metrics(const FlagDesign& design, const DesignConfig& cfg,
                              std::optional<double> g_iter0, std::optional<double> g_ref,
                              int threads) {
    MetricReport rep;
    rep.wimsl = wimsl_total(design, cfg, threads);
    if (g_iter0) rep.nwimsl_iter0_db = nwimsl_db(rep.wimsl, *g_iter0);
    if (g_ref) rep.nwimsl_ref_db = nwimsl_db(rep.wimsl, *g_ref);

    rep.pmmsr_set_db = 1e9;
    for (int m = 0; m < design.m_count(); ++m) {
        const double v = pmmsr_db(design, m, design.zone(), threads);
        rep.pmmsr_member_db.push_back(v);
        rep.pmmsr_set_db = std::min(rep.pmmsr_set_db, v);
        rep.papr_db.push_back(papr_trimmed(design.flag_tx(m)).db);
        rep.lpg_measured_db.push_back(lpg_db(design.flag_tx(m), design.flag_rx(m)));
    }

    // Flag-level theoretical LPG: the peak constraint contributes
    // 10log10(eps); an extended reference additionally scales the receive
    // energy by L/N, i.e. ((1+eps)/2)^2 / ((1+L/N)/2) relative to eps = 1
    // with a matched-length reference.
    double theo = cfg.symmetric ? 0.0 : 10.0 * std::log10(cfg.epsilon);
    if (design.kase() == AfCase::Aperiodic) {
        const double n = design.n_core();
        const double l = design.l_stack();
        theo += 10.0 * std::log10(2.0 * n / (n + l));
    }
    rep.lpg_theoretical_db = theo;
    rep.delta_db = orthogonality_delta_db(design);
    return rep;
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    // Amplitude ratios (PMmSR, Delta) use 20log10; power ratios use 10log10.
    j["db_convention"] = "amplitude ratios 20log10, power ratios 10log10";
    if (nwimsl_iter0_db) j["nwimsl_iter0_db"] = *nwimsl_iter0_db;
    if (nwimsl_ref_db) j["nwimsl_ref_db"] = *nwimsl_ref_db;
    j["wimsl"] = wimsl;
    j["pmmsr_set_db"] = pmmsr_set_db;
    j["pmmsr_member_db"] = pmmsr_member_db;
    j["papr_db"] = papr_db;
    j["lpg_measured_db"] = lpg_measured_db;
    j["lpg_theoretical_db"] = lpg_theoretical_db;
    j["delta_db"] = delta_db;
    return j.dump(2);
}

std::string MetricReport::to_markdown() const {
    std::ostringstream os;
    os.precision(4);
    os << "| Metric | Value |\n|---|---|\n";
    if (nwimsl_iter0_db) os << "| NWImSL vs iteration 0 (dB) | " << *nwimsl_iter0_db << " |\n";
    if (nwimsl_ref_db) os << "| NWImSL vs reference (dB) | " << *nwimsl_ref_db << " |\n";
    os << "| WImSL (raw) | " << wimsl << " |\n";
    os << "| PMmSR (dB, set min) | " << pmmsr_set_db << " |\n";
    auto row = [&os](const char* name, const std::vector<double>& v) {
        os << "| " << name << " | ";
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
        os << " |\n";
    };
    row("PMmSR per member (dB)", pmmsr_member_db);
    row("PAPR per member (dB)", papr_db);
    row("LPG per member (dB)", lpg_measured_db);
    os << "| LPG theoretical (dB) | " << lpg_theoretical_db << " |\n";
    os << "| Delta (dB) | " << delta_db << " |\n";
    return os.str();
}

}  // namespace flagseq
