#include "flagseq/curtain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flagseq {

namespace {

bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; static_cast<long long>(d) * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

std::string pair_str(int a, int b) {
    std::ostringstream os;
    os << "(" << a << ", " << b << ")";
    return os.str();
}

}  // namespace

CurtainSpec build_curtain(int n, int xi, int q, const Zone& zone, std::optional<int> tau_ext_opt) {
    ChirpParams p{n, xi, q, 0};
    p.validate();
    zone.validate();
    if (!p.parity_ok())
        throw param_error("build_curtain: parity violated, [xi*N - q] mod 2 = " +
                          std::to_string(((static_cast<long long>(xi) * n - q) % 2 + 2) % 2) +
                          " != 0 for (N=" + std::to_string(n) + ", xi=" + std::to_string(xi) +
                          ", q=" + std::to_string(q) + ")");
    const long long reach = std::llabs(static_cast<long long>(xi)) * zone.tau_max + zone.omega_max;
    if (reach >= n)
        throw param_error("build_curtain: zone too large, |xi|*tau_max + omega_max = " +
                          std::to_string(reach) + " >= N = " + std::to_string(n));

    CurtainSpec spec;
    spec.line_slope = xi;
    spec.zone = zone;
    if (zone.kase == AfCase::Periodic) {
        spec.params = p;
        spec.tx = make_chirp(p);
        spec.rx = spec.tx;
        return spec;
    }

    const int tau_ext = tau_ext_opt.value_or(zone.tau_max);
    if (tau_ext < zone.tau_max)
        throw param_error("build_curtain: extension violated, tau_max = " +
                          std::to_string(zone.tau_max) + " > tau_ext = " + std::to_string(tau_ext));
    if (xi != 0 && tau_ext >= n / std::abs(xi))
        throw param_error("build_curtain: extension violated, tau_ext = " + std::to_string(tau_ext) +
                          " >= floor(N/|xi|) = " + std::to_string(n / std::abs(xi)));
    p.tau_ext = tau_ext;
    spec.params = p;
    const ComplexSeq core = make_chirp(ChirpParams{n, xi, q, 0});
    if (tau_ext == 0) {
        spec.tx = core;
        spec.rx = core;
    } else {
        spec.tx = zero_pad(core, tau_ext);
        spec.rx = extend_chirp(p);
    }
    return spec;
}

CurtainSet build_near_zero_set(int n, const std::vector<int>& xis, const std::vector<int>& qs,
                               const Zone& zone, std::optional<int> tau_ext_opt) {
    if (xis.empty() || xis.size() != qs.size())
        throw param_error("build_near_zero_set: xis and qs must be non-empty and equally sized");

    std::optional<int> tau_ext = tau_ext_opt;
    if (zone.kase == AfCase::Aperiodic) {
        int max_abs_xi = 0;
        for (int xi : xis) max_abs_xi = std::max(max_abs_xi, std::abs(xi));
        const int t = tau_ext.value_or(zone.tau_max);
        if (max_abs_xi > 0 && t > n / (2 * max_abs_xi))
            throw param_error("build_near_zero_set: tau_ext = " + std::to_string(t) +
                              " > floor(N/(2 max|xi|)) = " + std::to_string(n / (2 * max_abs_xi)));
        tau_ext = t;
    }

    CurtainSet set;
    set.kind = SetKind::NearZeroCAF;
    set.zone = zone;
    for (std::size_t i = 0; i < xis.size(); ++i)
        set.members.push_back(build_curtain(n, xis[i], qs[i], zone, tau_ext));

    for (std::size_t a = 0; a < xis.size(); ++a) {
        for (std::size_t b = a + 1; b < xis.size(); ++b) {
            const int diff = std::abs(xis[a] - xis[b]);
            if (std::gcd(diff, n) != 1)
                throw param_error("build_near_zero_set: |xi_a - xi_b| = " + std::to_string(diff) +
                                  " is not coprime to N = " + std::to_string(n) + " for pair " +
                                  pair_str(xis[a], xis[b]));
        }
    }
    return set;
}

CurtainSet build_zero_set(int n, int xi, const std::vector<int>& q_list, const Zone& zone,
                          std::optional<int> tau_ext_opt) {
    if (q_list.empty()) throw param_error("build_zero_set: q_list must be non-empty");
    for (std::size_t i = 1; i < q_list.size(); ++i) {
        if (((q_list[i] - q_list[0]) % 2 + 2) % 2 != 0)
            throw param_error("build_zero_set: parity mix in q values " +
                              pair_str(q_list[0], q_list[i]));
    }
    const long long bound = std::llabs(static_cast<long long>(xi)) * zone.tau_max + zone.omega_max;
    for (std::size_t a = 0; a < q_list.size(); ++a) {
        for (std::size_t b = a + 1; b < q_list.size(); ++b) {
            const int two_d = std::abs(std::abs(q_list[a]) - std::abs(q_list[b]));
            const int d = two_d / 2;
            if (d <= bound)
                throw param_error("build_zero_set: half-gap d = " + std::to_string(d) + " for pair " +
                                  pair_str(q_list[a], q_list[b]) +
                                  " does not satisfy |xi|*tau_max + omega_max = " +
                                  std::to_string(bound) + " < d");
        }
    }

    CurtainSet set;
    set.kind = SetKind::ZeroCAF;
    set.zone = zone;
    for (int q : q_list) set.members.push_back(build_curtain(n, xi, q, zone, tau_ext_opt));
    return set;
}

int zero_caf_capacity(int n, int xi, const Zone& zone) {
    zone.validate();
    if (n < 1) throw param_error("zero_caf_capacity: N must be >= 1");
    const int by_omega = n / (zone.omega_max + 1);
    if (xi == 0) return by_omega;
    const int by_tau = n / (std::abs(xi) * (zone.tau_max + 1));
    return std::min(by_tau, by_omega);
}

std::vector<int> suggest_zero_caf_qs(int n, int xi, const Zone& zone, int count) {
    const int d = static_cast<int>(std::llabs(static_cast<long long>(xi)) * zone.tau_max +
                                   zone.omega_max + 1);
    // First q of the parity required by the curtain condition.
    int q0 = ((static_cast<long long>(xi) * n) % 2 == 0) ? 0 : 1;
    std::vector<int> qs;
    for (int q = q0; q <= n - 1 && static_cast<int>(qs.size()) < count; q += 2 * d) qs.push_back(q);
    return qs;
}

std::vector<int> suggest_near_zero_xis(int n, int count) {
    std::vector<int> xis;
    for (int mag = 1; mag <= n - 1 && static_cast<int>(xis.size()) < count; ++mag) {
        for (int sign : {+1, -1}) {
            if (static_cast<int>(xis.size()) >= count) break;
            const int cand = sign * mag;
            bool ok = true;
            for (int prev : xis)
                if (std::gcd(std::abs(cand - prev), n) != 1) ok = false;
            if (ok) xis.push_back(cand);
        }
    }
    return xis;
}

HeisenbergClass classify_heisenberg(int n_prime, const ComplexSeq& seq, ChirpParams* recovered) {
    if (!is_prime(n_prime)) throw param_error("classify_heisenberg: N must be prime");
    if (seq.size() != n_prime) throw param_error("classify_heisenberg: sequence length != N");

    double peak = 0.0;
    for (int i = 0; i < seq.size(); ++i) peak = std::max(peak, std::abs(seq[i]));
    if (peak <= 0.0) throw domain_error("classify_heisenberg: zero sequence");
    int significant = 0;
    for (int i = 0; i < seq.size(); ++i)
        if (std::abs(seq[i]) > 1e-9 * peak) ++significant;
    if (significant == 1) return HeisenbergClass::Delta;

    for (int i = 0; i < seq.size(); ++i) {
        if (std::abs(std::abs(seq[i]) - peak) > 1e-6 * peak)
            throw domain_error("classify_heisenberg: neither a delta nor a constant-modulus chirp");
    }

    // Unit-modulus copy; the second difference of its phase is 2*pi*xi/N.
    std::vector<cplx> u(static_cast<std::size_t>(seq.size()));
    for (int i = 0; i < seq.size(); ++i) u[static_cast<std::size_t>(i)] = seq[i] / std::abs(seq[i]);
    cplx acc(0.0, 0.0);
    for (int i = 0; i + 2 < seq.size(); ++i) {
        const cplx z0 = u[static_cast<std::size_t>(i + 1)] * std::conj(u[static_cast<std::size_t>(i)]);
        const cplx z1 = u[static_cast<std::size_t>(i + 2)] * std::conj(u[static_cast<std::size_t>(i + 1)]);
        acc += z1 * std::conj(z0);
    }
    const double xi_real = std::arg(acc) * n_prime / (2.0 * kPi);  // xi mod N in (-N/2, N/2]
    const cplx z0 = u[1] * std::conj(u[0]);                        // arg = pi (xi + q) / N mod 2 pi

    for (int dxi : {0, n_prime, -n_prime}) {
        const int xi = static_cast<int>(std::lround(xi_real)) + dxi;
        if (xi <= -n_prime || xi >= n_prime) continue;
        const double q_real = std::arg(z0) * n_prime / kPi - xi;  // q mod 2N
        for (int dq : {0, 2 * n_prime, -2 * n_prime, 4 * n_prime, -4 * n_prime}) {
            const int q = static_cast<int>(std::lround(q_real)) + dq;
            if (q <= -n_prime || q >= n_prime) continue;
            const ComplexSeq c = make_chirp(ChirpParams{n_prime, xi, q, 0});
            cplx match(0.0, 0.0);
            for (int i = 0; i < seq.size(); ++i) match += std::conj(c[i]) * seq[i];
            const double corr = std::abs(match) / std::sqrt(c.energy() * seq.energy());
            if (corr >= 1.0 - 1e-8) {
                if (recovered) *recovered = ChirpParams{n_prime, xi, q, 0};
                ChirpParams p{n_prime, xi, q, 0};
                return p.parity_ok() ? HeisenbergClass::IdealChirp : HeisenbergClass::NonIdealChirp;
            }
        }
    }
    throw domain_error("classify_heisenberg: constant-modulus input does not match any chirp");
}

std::string CurtainSet::to_json() const {
    nlohmann::json j;
    j["kind"] = (kind == SetKind::NearZeroCAF) ? "near_zero" : "zero";
    j["zone"] = {{"tau_max", zone.tau_max},
                 {"omega_max", zone.omega_max},
                 {"case", to_string(zone.kase)}};
    auto& ms = j["members"] = nlohmann::json::array();
    for (const auto& m : members)
        ms.push_back({{"n", m.params.n},
                      {"xi", m.params.xi},
                      {"q", m.params.q},
                      {"tau_ext", m.params.tau_ext}});
    return j.dump();
}

CurtainSet CurtainSet::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Zone zone;
    zone.tau_max = j.at("zone").at("tau_max").get<int>();
    zone.omega_max = j.at("zone").at("omega_max").get<int>();
    zone.kase = af_case_from_string(j.at("zone").at("case").get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();

    std::vector<int> xis, qs;
    int n = 0;
    std::optional<int> tau_ext;
    for (const auto& m : j.at("members")) {
        n = m.at("n").get<int>();
        xis.push_back(m.at("xi").get<int>());
        qs.push_back(m.at("q").get<int>());
        if (zone.kase == AfCase::Aperiodic) tau_ext = m.at("tau_ext").get<int>();
    }
    if (kind == "near_zero") return build_near_zero_set(n, xis, qs, zone, tau_ext);
    if (kind == "zero") {
        if (xis.empty()) throw param_error("CurtainSet json: empty member list");
        for (int xi : xis)
            if (xi != xis[0]) throw param_error("CurtainSet json: zero-CAF set requires a shared xi");
        return build_zero_set(n, xis[0], qs, zone, tau_ext);
    }
    throw param_error("CurtainSet json: unknown kind '" + kind + "'");
}

}  // namespace flagseq
