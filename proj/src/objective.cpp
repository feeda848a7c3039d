#include "flagseq/objective.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

namespace flagseq {

void DesignConfig::validate() const {
    if (m < 1) throw param_error("DesignConfig: M must be >= 1");
    zone.validate();
    if (varrho < 1.0) throw param_error("DesignConfig: varrho must be >= 1");
    if (alpha < 0.0 || alpha > 1.0) throw param_error("DesignConfig: alpha must be in [0,1]");
    if (beta <= 0.0 || beta > 1.0) throw param_error("DesignConfig: beta must be in (0,1]");
    if (epsilon <= 0.0 || epsilon > 1.0) throw param_error("DesignConfig: epsilon must be in (0,1]");
}

std::string DesignConfig::to_json() const {
    nlohmann::json j;
    j["m"] = m;
    j["zone"] = {{"tau_max", zone.tau_max},
                 {"omega_max", zone.omega_max},
                 {"case", to_string(zone.kase)}};
    j["varrho"] = varrho;
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["epsilon"] = epsilon;
    j["symmetric"] = symmetric;
    return j.dump();
}

DesignConfig DesignConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    DesignConfig cfg;
    // Every weight must be present in the file; nothing is defaulted here.
    for (const char* field : {"m", "zone", "varrho", "alpha", "beta", "epsilon", "symmetric"})
        if (!j.contains(field)) throw param_error(std::string("DesignConfig: missing field '") + field + "'");
    cfg.m = j["m"].get<int>();
    cfg.zone.tau_max = j["zone"].at("tau_max").get<int>();
    cfg.zone.omega_max = j["zone"].at("omega_max").get<int>();
    cfg.zone.kase = af_case_from_string(j["zone"].at("case").get<std::string>());
    cfg.varrho = j["varrho"].get<double>();
    cfg.alpha = j["alpha"].get<double>();
    cfg.beta = j["beta"].get<double>();
    cfg.epsilon = j["epsilon"].get<double>();
    cfg.symmetric = j["symmetric"].get<bool>();
    cfg.validate();
    return cfg;
}

MaskWeights masks(int m1, int m2, int tau, int omega, double varrho) {
    MaskWeights w;
    const bool same = (m1 == m2);
    const bool origin = (tau == 0 && omega == 0);
    w.w = (same && origin) ? 0.0 : 1.0;
    w.wbar = (same && origin) ? varrho : 1.0;
    w.wtilde = same ? 0.0 : 1.0;
    return w;
}

FlagDesign::FlagDesign(CurtainSet curtains, std::vector<ComplexSeq> peaks_tx,
                       std::vector<ComplexSeq> peaks_rx)
    : curtains_(std::move(curtains)), peaks_tx_(std::move(peaks_tx)), peaks_rx_(std::move(peaks_rx)) {
    if (curtains_.members.empty()) throw param_error("FlagDesign: empty curtain set");
    const std::size_t m = curtains_.members.size();
    if (peaks_tx_.size() != m || peaks_rx_.size() != m)
        throw param_error("FlagDesign: peak count must match curtain count");
    const int n = curtains_.members.front().params.n;
    for (const auto& member : curtains_.members) {
        if (member.params.n != n) throw param_error("FlagDesign: mixed sequence lengths");
        if (kase() == AfCase::Aperiodic && member.params.tau_ext != zone().tau_max)
            throw param_error("FlagDesign: aperiodic stack geometry requires tau_ext == tau_max");
    }
    for (const auto& p : peaks_tx_)
        if (p.size() != n || p.start_index() != 0)
            throw param_error("FlagDesign: transmit peaks must be length-N cores starting at 0");
    for (const auto& p : peaks_rx_)
        if (p.size() != n || p.start_index() != 0)
            throw param_error("FlagDesign: receive peaks must be length-N cores starting at 0");
}

FlagDesign FlagDesign::random_init(CurtainSet curtains, std::uint64_t seed) {
    const int m = static_cast<int>(curtains.members.size());
    const int n = curtains.members.front().params.n;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    const double mod = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<ComplexSeq> peaks;
    peaks.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        std::vector<cplx> s(static_cast<std::size_t>(n));
        for (auto& v : s) v = std::polar(mod, phase(rng));
        peaks.emplace_back(std::move(s), 0);
    }
    std::vector<ComplexSeq> peaks_rx = peaks;
    return FlagDesign(std::move(curtains), std::move(peaks), std::move(peaks_rx));
}

int FlagDesign::n_core() const { return curtains_.members.front().params.n; }

int FlagDesign::pad() const { return kase() == AfCase::Aperiodic ? zone().tau_max : 0; }

int FlagDesign::l_stack() const { return n_core() + 2 * pad(); }

ComplexSeq FlagDesign::peak_tx(int m) const {
    return pad() == 0 ? peaks_tx_[static_cast<std::size_t>(m)]
                      : zero_pad(peaks_tx_[static_cast<std::size_t>(m)], pad());
}

ComplexSeq FlagDesign::peak_rx(int m) const {
    return pad() == 0 ? peaks_rx_[static_cast<std::size_t>(m)]
                      : zero_pad(peaks_rx_[static_cast<std::size_t>(m)], pad());
}

ComplexSeq FlagDesign::curtain_tx(int m) const { return curtains_.members[static_cast<std::size_t>(m)].tx; }

ComplexSeq FlagDesign::curtain_rx(int m) const { return curtains_.members[static_cast<std::size_t>(m)].rx; }

namespace {
ComplexSeq half_sum(const ComplexSeq& c, const ComplexSeq& p) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<cplx> s(static_cast<std::size_t>(c.size()));
    for (int i = 0; i < c.size(); ++i) s[static_cast<std::size_t>(i)] = (c[i] + p[i]) * inv_sqrt2;
    return ComplexSeq(std::move(s), c.start_index());
}
}  // namespace

ComplexSeq FlagDesign::flag_tx(int m) const { return half_sum(curtain_tx(m), peak_tx(m)); }

ComplexSeq FlagDesign::flag_rx(int m) const { return half_sum(curtain_rx(m), peak_rx(m)); }

double FlagDesign::constraint_drift() const {
    const double sqrt_n = std::sqrt(static_cast<double>(n_core()));
    double drift = 0.0;
    for (int m = 0; m < m_count(); ++m) {
        const auto& pt = peaks_tx_[static_cast<std::size_t>(m)];
        for (int i = 0; i < pt.size(); ++i)
            drift = std::max(drift, std::abs(std::abs(pt[i]) * sqrt_n - 1.0));
        drift = std::max(drift, std::abs(std::sqrt(peaks_rx_[static_cast<std::size_t>(m)].energy()) - 1.0));
    }
    return drift;
}

std::string FlagDesign::to_json() const {
    nlohmann::json j;
    j["curtains"] = nlohmann::json::parse(curtains_.to_json());
    auto dump_peaks = [](const std::vector<ComplexSeq>& peaks) {
        auto arr = nlohmann::json::array();
        for (const auto& p : peaks) arr.push_back(nlohmann::json::parse(p.to_json()));
        return arr;
    };
    j["peaks_tx"] = dump_peaks(peaks_tx_);
    j["peaks_rx"] = dump_peaks(peaks_rx_);
    return j.dump();
}

FlagDesign FlagDesign::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    CurtainSet curtains = CurtainSet::from_json(j.at("curtains").dump());
    auto load_peaks = [](const nlohmann::json& arr) {
        std::vector<ComplexSeq> peaks;
        for (const auto& p : arr) peaks.push_back(ComplexSeq::from_json(p.dump()));
        return peaks;
    };
    return FlagDesign(std::move(curtains), load_peaks(j.at("peaks_tx")), load_peaks(j.at("peaks_rx")));
}

double wimsl_pair(const ComplexSeq& p1, const ComplexSeq& c1, const ComplexSeq& p2,
                  const ComplexSeq& c2, bool same_user, const Zone& zone, double varrho,
                  int n_dop) {
    if (p1.size() != c1.size() || p2.size() != c2.size() || p1.size() != p2.size() ||
        p1.start_index() != c1.start_index() || p2.start_index() != c2.start_index())
        throw param_error("wimsl_pair: support mismatch between parts");
    const int nd = n_dop > 0 ? n_dop
                             : (zone.kase == AfCase::Aperiodic ? p1.core_size() : p1.size());

    double total = 0.0;
    for (int tau = -zone.tau_max; tau <= zone.tau_max; ++tau) {
        const auto t_pp = af_inner_cut(p1, p2, tau, zone.kase, nd);
        const auto t_pc = af_inner_cut(p1, c2, tau, zone.kase, nd);
        const auto t_cp = af_inner_cut(c1, p2, tau, zone.kase, nd);
        std::vector<cplx> t_cc;
        if (!same_user) t_cc = af_inner_cut(c1, c2, tau, zone.kase, nd);
        for (int omega = -zone.omega_max; omega <= zone.omega_max; ++omega) {
            const auto bin = static_cast<std::size_t>(((omega % nd) + nd) % nd);
            const MaskWeights mw = masks(0, same_user ? 0 : 1, tau, omega, varrho);
            cplx term = mw.w * t_pp[bin] + mw.wbar * (t_pc[bin] + t_cp[bin]);
            if (!same_user) term += mw.wtilde * t_cc[bin];
            total += std::norm(term);
        }
    }
    return total;
}

double wimsl_total(const FlagDesign& design, const DesignConfig& cfg, int threads) {
    const int m = design.m_count();
    // Materialize padded parts once.
    std::vector<ComplexSeq> ptx, prx, ctx, crx;
    for (int i = 0; i < m; ++i) {
        ptx.push_back(design.peak_tx(i));
        prx.push_back(design.peak_rx(i));
        ctx.push_back(design.curtain_tx(i));
        crx.push_back(design.curtain_rx(i));
    }
    std::vector<double> vals(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0.0);
    parallel_for(m * m, threads, [&](int idx) {
        const int m1 = idx / m;
        const int m2 = idx % m;
        vals[static_cast<std::size_t>(idx)] =
            wimsl_pair(ptx[static_cast<std::size_t>(m1)], ctx[static_cast<std::size_t>(m1)],
                       prx[static_cast<std::size_t>(m2)], crx[static_cast<std::size_t>(m2)],
                       m1 == m2, design.zone(), cfg.varrho, design.n_core());
    });
    double same = 0.0, cross = 0.0;
    for (int m1 = 0; m1 < m; ++m1)
        for (int m2 = 0; m2 < m; ++m2)
            (m1 == m2 ? same : cross) += vals[static_cast<std::size_t>(m1 * m + m2)];
    return cfg.alpha * same + (1.0 - cfg.alpha) * cross;
}

double penalty(const FlagDesign& design, double eps) {
    double total = 0.0;
    for (int m = 0; m < design.m_count(); ++m) {
        const auto& ps = design.peak_tx_core(m);
        const auto& pr = design.peak_rx_core(m);
        cplx d(0.0, 0.0);
        for (int i = 0; i < ps.size(); ++i) d += std::conj(ps[i]) * pr[i];
        total += std::norm(d - eps);
    }
    return total;
}

double lpg_db(const ComplexSeq& f_s, const ComplexSeq& f_r) {
    const double es = f_s.energy();
    const double er = f_r.energy();
    if (es <= 0.0 || er <= 0.0) throw domain_error("lpg: zero-energy sequence");
    cplx ip(0.0, 0.0);
    for (int i = 0; i < f_s.size(); ++i) {
        const int n = f_s.start_index() + i;
        if (f_r.contains(n)) ip += std::conj(f_r.at(n)) * f_s[i];
    }
    return 10.0 * std::log10(std::norm(ip) / (es * er));
}

double orthogonality_delta_db(const FlagDesign& design) {
    double worst = 0.0;
    for (int m = 0; m < design.m_count(); ++m) {
        const auto ps = design.peak_tx(m);
        const auto pr = design.peak_rx(m);
        const auto cs = design.curtain_tx(m);
        const auto cr = design.curtain_rx(m);
        cplx a(0.0, 0.0), b(0.0, 0.0);
        for (int i = 0; i < ps.size(); ++i) {
            a += std::conj(ps[i]) * cs[i];
            b += std::conj(cr[i]) * pr[i];
        }
        worst = std::max({worst, std::abs(a), std::abs(b)});
    }
    if (worst < 1e-15) return -300.0;
    return std::max(-300.0, 20.0 * std::log10(worst));
}

}  // namespace flagseq
