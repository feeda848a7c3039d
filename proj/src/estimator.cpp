#include "flagseq/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "flagseq/fft.hpp"
#include "flagseq/resample.hpp"

namespace flagseq {

void CfarConfig::validate() const {
    if (!(p_fa > 0.0 && p_fa < 1.0) && p_fa != 1.0)
        throw param_error("CfarConfig: P_FA must be in (0,1]");
    if (sigma_z2 < 0.0) throw param_error("CfarConfig: sigma_z2 must be >= 0");
}

double cfar_threshold(const CfarConfig& cfg) {
    cfg.validate();
    return -2.0 * cfg.sigma_z2 * std::log(cfg.p_fa);
}

namespace {

struct WalkCell {
    int tau = 0;
    int omega = 0;
    double power = 0.0;
    double amp = 0.0;
};

// Per-cell rate p such that the two-step search on noise alone fires about
// once per 1/p_fa trials. Step 1 scans n1 cells at per-cell rate p; a
// crossing is confirmed in step 2 when a cell on the walked line exceeds the
// same threshold plus the line's mean power. For exponential cells the
// crossing itself survives that with probability (nm/(nm+1))^nm (mean
// estimated over nm cells), and each of the other n2-1 cells adds p times
// that factor, so
//   p_trial ~= n1 * p * c * (1 + (n2-1) p),  c = (nm/(nm+1))^nm.
double calibrated_cell_rate(double p_fa, int n1, int n2) {
    if (p_fa >= 1.0) return 1.0;
    const int nm = std::max(1, n2 - 3);
    const double c = std::pow(static_cast<double>(nm) / (nm + 1), nm);
    const double a = static_cast<double>(n1) * c * std::max(0, n2 - 1);
    const double b = static_cast<double>(n1) * c;
    double p;
    if (a > 0.0)
        p = (-b + std::sqrt(b * b + 4.0 * a * p_fa)) / (2.0 * a);
    else
        p = p_fa / b;
    return std::min(0.5, std::max(p, 1e-300));
}

}  // namespace

std::vector<Detection> flag_search(const ComplexSeq& echo, const ComplexSeq& ref, int xi,
                                   const Zone& zone, const CfarConfig& cfg, int n_dop,
                                   FlagSearchStats* stats) {
    cfg.validate();
    zone.validate();
    const int nd = n_dop > 0 ? n_dop
                             : (zone.kase == AfCase::Aperiodic ? echo.core_size() : echo.size());
    const double ref_energy = ref.energy();

    // Transversal: the Doppler cut at tau = 0 crosses every curtain of
    // finite slope exactly once per period.
    const int w1 = zone.omega_max + std::abs(xi) * zone.tau_max;
    const int n1 = 2 * w1 + 1;
    const int n2_max = 2 * zone.tau_max + 1;

    const double p_cell = calibrated_cell_rate(cfg.p_fa, n1, n2_max);
    const double threshold = cfar_threshold(CfarConfig{p_cell, cfg.sigma_z2}) * ref_energy;

    FlagSearchStats local;
    local.cell_threshold_power = threshold;
    local.cell_p_fa = p_cell;

    // Step 1: D(0, omega) for omega in [-w1, w1] from one FFT line.
    // D(0, omega) = A(0, -omega), so walk the AF cut backwards.
    const auto step1 =
        af_line(echo, ref, AfLine{0, w1, 0, -1, n1}, zone.kase, nd);
    local.lines_evaluated = 1;

    // Cluster adjacent crossings; one walk per cluster.
    std::vector<std::pair<int, double>> clusters;  // (omega*, peak power)
    int run_best_k = -1;
    double run_best_p = 0.0;
    bool in_run = false;
    auto close_run = [&]() {
        if (in_run) clusters.emplace_back(-w1 + run_best_k, run_best_p);
        in_run = false;
        run_best_p = 0.0;
    };
    for (int k = 0; k < n1; ++k) {
        const double p = step1[static_cast<std::size_t>(k)] * step1[static_cast<std::size_t>(k)];
        if (p > threshold) {
            if (!in_run || p > run_best_p) {
                run_best_k = k;
                run_best_p = std::max(run_best_p, p);
            }
            in_run = true;
        } else {
            close_run();
        }
    }
    close_run();
    local.curtain_hits = static_cast<int>(clusters.size());

    std::vector<Detection> dets;
    for (const auto& [omega_star, hit_power] : clusters) {
        (void)hit_power;
        // Step 2: walk the shifted curtain line (tau, omega* + xi*tau),
        // restricted to cells inside the zone.
        int tau_lo = -zone.tau_max, tau_hi = zone.tau_max;
        if (xi > 0) {
            tau_lo = std::max(tau_lo, static_cast<int>(std::ceil((-zone.omega_max - omega_star) / static_cast<double>(xi))));
            tau_hi = std::min(tau_hi, static_cast<int>(std::floor((zone.omega_max - omega_star) / static_cast<double>(xi))));
        } else if (xi < 0) {
            tau_lo = std::max(tau_lo, static_cast<int>(std::ceil((zone.omega_max - omega_star) / static_cast<double>(xi))));
            tau_hi = std::min(tau_hi, static_cast<int>(std::floor((-zone.omega_max - omega_star) / static_cast<double>(xi))));
        } else if (std::abs(omega_star) > zone.omega_max) {
            continue;
        }
        if (tau_lo > tau_hi) continue;
        const int count = tau_hi - tau_lo + 1;

        // D(tau, omega*+xi*tau) = A(-tau, -(omega*+xi*tau)).
        const auto vals = af_line(
            echo, ref, AfLine{-tau_lo, -(omega_star + xi * tau_lo), -1, -xi, count}, zone.kase, nd);
        local.lines_evaluated += 1;

        std::vector<WalkCell> cells(static_cast<std::size_t>(count));
        double total_power = 0.0;
        for (int k = 0; k < count; ++k) {
            WalkCell& c = cells[static_cast<std::size_t>(k)];
            c.tau = tau_lo + k;
            c.omega = omega_star + xi * c.tau;
            c.amp = vals[static_cast<std::size_t>(k)];
            c.power = c.amp * c.amp;
            total_power += c.power;
        }

        // Flag cells exceeding threshold + mean of the rest of the line,
        // the candidate and one guard cell each side excluded from the mean.
        std::vector<char> flagged(static_cast<std::size_t>(count), 0);
        for (int k = 0; k < count; ++k) {
            double excluded = 0.0;
            int n_excluded = 0;
            for (int g = std::max(0, k - 1); g <= std::min(count - 1, k + 1); ++g) {
                excluded += cells[static_cast<std::size_t>(g)].power;
                ++n_excluded;
            }
            const int n_mean = count - n_excluded;
            const double mean = n_mean > 0 ? (total_power - excluded) / n_mean : 0.0;
            if (cells[static_cast<std::size_t>(k)].power > threshold + mean)
                flagged[static_cast<std::size_t>(k)] = 1;
        }

        // Merge adjacent flags; one detection per merged run, at its argmax.
        int k = 0;
        while (k < count) {
            if (!flagged[static_cast<std::size_t>(k)]) {
                ++k;
                continue;
            }
            int best = k;
            int j = k;
            while (j < count && flagged[static_cast<std::size_t>(j)]) {
                if (cells[static_cast<std::size_t>(j)].power > cells[static_cast<std::size_t>(best)].power)
                    best = j;
                ++j;
            }
            Detection d;
            d.tau_hat = cells[static_cast<std::size_t>(best)].tau;
            d.omega_hat = cells[static_cast<std::size_t>(best)].omega;
            d.peak_value = cells[static_cast<std::size_t>(best)].amp;
            d.curtain_tau = 0;
            d.curtain_omega = omega_star;
            dets.push_back(d);
            k = j;
        }
    }

    // Merge duplicates landing in the same bin (two clusters can walk
    // overlapping lines), keeping the stronger one.
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        return a.peak_value > b.peak_value;
    });
    std::vector<Detection> unique;
    for (const auto& d : dets) {
        bool dup = false;
        for (const auto& u : unique)
            if (std::lround(u.tau_hat) == std::lround(d.tau_hat) &&
                std::lround(u.omega_hat) == std::lround(d.omega_hat))
                dup = true;
        if (!dup) unique.push_back(d);
    }

    // Report overlapping curtains: a weak peak on a strong target's curtain
    // can be obscured; the condition is detectable from the estimates.
    for (std::size_t a = 0; a < unique.size(); ++a)
        for (std::size_t b = a + 1; b < unique.size(); ++b)
            if (std::lround(unique[a].omega_hat - unique[b].omega_hat) ==
                xi * std::lround(unique[a].tau_hat - unique[b].tau_hat))
                local.curtain_overlap = true;

    if (stats) *stats = local;
    return unique;
}

Detection refine_fractional(const Detection& det, const ComplexSeq& echo, const ComplexSeq& ref,
                            int k_tau, int k_omega, const Zone& zone, int n_dop) {
    if (k_tau <= 1 && k_omega <= 1) return det;
    const int nd = n_dop > 0 ? n_dop
                             : (zone.kase == AfCase::Aperiodic ? echo.core_size() : echo.size());

    double tau_lo = det.tau_hat - 1.0, tau_hi = det.tau_hat + 1.0;
    double omega_lo = det.omega_hat - 1.0, omega_hi = det.omega_hat + 1.0;
    const bool clamped = tau_lo < -zone.tau_max || tau_hi > zone.tau_max ||
                         omega_lo < -zone.omega_max || omega_hi > zone.omega_max;
    tau_lo = std::max(tau_lo, static_cast<double>(-zone.tau_max));
    tau_hi = std::min(tau_hi, static_cast<double>(zone.tau_max));
    omega_lo = std::max(omega_lo, static_cast<double>(-zone.omega_max));
    omega_hi = std::min(omega_hi, static_cast<double>(zone.omega_max));
    if (clamped)
        std::fprintf(stderr, "flagseq: refinement window clamped to the zone boundary\n");

    Detection best = det;
    double best_val = 0.0;
    const int nt = k_tau <= 1 ? 1 : static_cast<int>(std::lround((tau_hi - tau_lo) * k_tau)) + 1;
    const int nw = k_omega <= 1 ? 1 : static_cast<int>(std::lround((omega_hi - omega_lo) * k_omega)) + 1;
    for (int it = 0; it < nt; ++it) {
        const double tau = k_tau <= 1 ? det.tau_hat : tau_lo + static_cast<double>(it) / k_tau;
        const ComplexSeq shifted = frac_delay(ref, tau, zone.kase);
        // prod[n] = conj(ref(n - tau)) * echo[n]; scanning omega is then a
        // direct trigonometric sum per hypothesis.
        std::vector<cplx> prod;
        std::vector<int> abs_idx;
        prod.reserve(static_cast<std::size_t>(echo.size()));
        for (int i = 0; i < echo.size(); ++i) {
            const int n = echo.start_index() + i;
            if (!shifted.contains(n)) continue;
            prod.push_back(std::conj(shifted.at(n)) * echo[i]);
            abs_idx.push_back(n);
        }
        for (int iw = 0; iw < nw; ++iw) {
            const double omega =
                k_omega <= 1 ? det.omega_hat : omega_lo + static_cast<double>(iw) / k_omega;
            cplx acc(0.0, 0.0);
            for (std::size_t j = 0; j < prod.size(); ++j)
                acc += prod[j] * std::polar(1.0, -2.0 * kPi * omega * (abs_idx[j] + 1) / nd);
            const double v = std::abs(acc);
            if (v > best_val) {
                best_val = v;
                best.tau_hat = tau;
                best.omega_hat = omega;
                best.peak_value = v;
            }
        }
    }
    return best;
}

void write_detections_csv(std::ostream& os, const std::vector<Detection>& dets) {
    os.precision(17);
    os << "tau_hat,omega_hat,peak,curtain_tau,curtain_omega\n";
    for (const auto& d : dets)
        os << d.tau_hat << ',' << d.omega_hat << ',' << d.peak_value << ',' << d.curtain_tau << ','
           << d.curtain_omega << '\n';
}

}  // namespace flagseq
