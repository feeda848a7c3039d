#include "flagseq/ambiguity.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flagseq/fft.hpp"

namespace flagseq {

namespace {

int doppler_denominator(const ComplexSeq& s, AfCase kase, int n_dop) {
    if (n_dop > 0) return n_dop;
    // Padded/extended sequences recover the core length N; plain ones their size.
    const int core = (kase == AfCase::Aperiodic) ? s.core_size() : s.size();
    if (core < 1) throw param_error("af: cannot infer Doppler denominator from supports");
    return core;
}

void check_pair(const ComplexSeq& s, const ComplexSeq& r, AfCase kase) {
    if (s.size() != r.size())
        throw param_error("af: sequence lengths differ (" + std::to_string(s.size()) + " vs " +
                          std::to_string(r.size()) + ")");
    if (kase == AfCase::Periodic && s.start_index() != r.start_index())
        throw param_error("af: periodic case requires identical supports");
}

inline int mod_floor(long long a, int n) {
    const int r = static_cast<int>(a % n);
    return r < 0 ? r + n : r;
}

}  // namespace

cplx af_inner(const ComplexSeq& r, const ComplexSeq& s, int tau, double omega, AfCase kase,
              int n_dop) {
    check_pair(s, r, kase);
    const int nd = doppler_denominator(s, kase, n_dop);
    cplx acc(0.0, 0.0);
    if (kase == AfCase::Periodic) {
        const int n = s.size();
        for (int i = 0; i < n; ++i) {
            const int abs_n = s.start_index() + i;
            const int shifted = mod_floor(static_cast<long long>(abs_n) + tau - r.start_index(), n);
            const double phase = 2.0 * kPi * omega * (abs_n + 1) / nd;
            acc += std::conj(r[shifted]) * s[i] * std::polar(1.0, phase);
        }
    } else {
        for (int i = 0; i < s.size(); ++i) {
            const int abs_n = s.start_index() + i;
            if (!r.contains(abs_n + tau)) continue;
            const double phase = 2.0 * kPi * omega * (abs_n + 1) / nd;
            acc += std::conj(r.at(abs_n + tau)) * s[i] * std::polar(1.0, phase);
        }
    }
    return acc;
}

std::vector<cplx> af_inner_cut(const ComplexSeq& x, const ComplexSeq& y, int tau, AfCase kase,
                               int n_dop) {
    check_pair(y, x, kase);
    const int nd = doppler_denominator(y, kase, n_dop);
    // Fold conj(x[n+tau]) * y[n] into Doppler-phase residue bins, then one
    // unnormalized inverse FFT evaluates every integer bin.
    std::vector<cplx> bins(static_cast<std::size_t>(nd), cplx(0.0, 0.0));
    if (kase == AfCase::Periodic) {
        const int n = y.size();
        for (int i = 0; i < n; ++i) {
            const int abs_n = y.start_index() + i;
            const int shifted = mod_floor(static_cast<long long>(abs_n) + tau - x.start_index(), n);
            bins[static_cast<std::size_t>(mod_floor(abs_n + 1, nd))] += std::conj(x[shifted]) * y[i];
        }
    } else {
        for (int i = 0; i < y.size(); ++i) {
            const int abs_n = y.start_index() + i;
            if (!x.contains(abs_n + tau)) continue;
            bins[static_cast<std::size_t>(mod_floor(abs_n + 1, nd))] += std::conj(x.at(abs_n + tau)) * y[i];
        }
    }
    fft::inverse(bins);
    return bins;
}

double af_point(const ComplexSeq& s, const ComplexSeq& r, int tau, double omega, AfCase kase,
                int n_dop) {
    return std::abs(af_inner(r, s, tau, omega, kase, n_dop));
}

std::vector<double> af_line(const ComplexSeq& s, const ComplexSeq& r, const AfLine& line,
                            AfCase kase, int n_dop) {
    if (line.dtau == 0 && line.domega == 0) throw param_error("af_line: zero direction");
    if (line.count < 1) throw param_error("af_line: count must be >= 1");
    instr::af_line_calls().fetch_add(1, std::memory_order_relaxed);

    std::vector<double> out(static_cast<std::size_t>(line.count));
    if (line.dtau == 0) {
        // Doppler cut: one FFT gives all integer bins.
        const auto cut = af_inner_cut(r, s, line.tau0, kase, n_dop);
        const int nd = static_cast<int>(cut.size());
        for (int k = 0; k < line.count; ++k) {
            const long long w = line.omega0 + static_cast<long long>(k) * line.domega;
            out[static_cast<std::size_t>(k)] = std::abs(cut[static_cast<std::size_t>(mod_floor(w, nd))]);
        }
        return out;
    }
    for (int k = 0; k < line.count; ++k) {
        out[static_cast<std::size_t>(k)] =
            af_point(s, r, line.tau0 + k * line.dtau,
                     static_cast<double>(line.omega0) + static_cast<double>(k) * line.domega, kase,
                     n_dop);
    }
    return out;
}

AfGrid::AfGrid(Zone zone, std::string s_id, std::string r_id)
    : zone_(zone), s_id_(std::move(s_id)), r_id_(std::move(r_id)) {
    zone_.validate();
    values_.assign(static_cast<std::size_t>(2 * zone_.tau_max + 1) *
                       static_cast<std::size_t>(2 * zone_.omega_max + 1),
                   0.0);
}

double AfGrid::max_value() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, v);
    return m;
}

double AfGrid::max_off_line(int xi) const {
    double m = 0.0;
    for (int tau = -zone_.tau_max; tau <= zone_.tau_max; ++tau) {
        for (int omega = -zone_.omega_max; omega <= zone_.omega_max; ++omega) {
            if (omega == xi * tau) continue;
            m = std::max(m, at(tau, omega));
        }
    }
    return m;
}

void AfGrid::write_csv(std::ostream& os) const {
    os.precision(17);
    os << "tau,omega,value\n";
    for (int tau = -zone_.tau_max; tau <= zone_.tau_max; ++tau)
        for (int omega = -zone_.omega_max; omega <= zone_.omega_max; ++omega)
            os << tau << ',' << omega << ',' << at(tau, omega) << '\n';
}

std::string AfGrid::to_json() const {
    nlohmann::json j;
    j["zone"] = {{"tau_max", zone_.tau_max},
                 {"omega_max", zone_.omega_max},
                 {"case", to_string(zone_.kase)}};
    j["s_id"] = s_id_;
    j["r_id"] = r_id_;
    auto& rows = j["values"] = nlohmann::json::array();
    for (int tau = -zone_.tau_max; tau <= zone_.tau_max; ++tau) {
        auto row = nlohmann::json::array();
        for (int omega = -zone_.omega_max; omega <= zone_.omega_max; ++omega) row.push_back(at(tau, omega));
        rows.push_back(std::move(row));
    }
    return j.dump();
}

AfGrid af_grid(const ComplexSeq& s, const ComplexSeq& r, const Zone& zone, int n_dop, int threads,
               const std::string& s_id, const std::string& r_id) {
    const int nd = doppler_denominator(s, zone.kase, n_dop);
    if (zone.tau_max > nd - 1 || zone.omega_max > nd - 1)
        throw param_error("af_grid: zone exceeds N-1 in some axis (N=" + std::to_string(nd) + ")");
    AfGrid grid(zone, s_id, r_id);
    parallel_for(2 * zone.tau_max + 1, threads, [&](int row) {
        const int tau = row - zone.tau_max;
        const auto cut = af_inner_cut(r, s, tau, zone.kase, nd);
        for (int omega = -zone.omega_max; omega <= zone.omega_max; ++omega)
            grid.at(tau, omega) = std::abs(cut[static_cast<std::size_t>(mod_floor(omega, nd))]);
    });
    return grid;
}

}  // namespace flagseq
