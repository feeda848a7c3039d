// Continuous-baseband signal synthesis, delay-Doppler channel with noise,
// the Monte Carlo harness, and CRLB/SB reference curves.
//
// Conventions: a target at range d and velocity v maps to delay
// tau = 2 d B / c samples and normalized Doppler omega = 2 v f_cr N / (c B)
// bins. The synthesized echo carries the per-sample Doppler phase ramp
// exp(j 2 pi omega (n - tau) / N), the discrete realization of the
// continuous post-delay carrier rotation, with the sign matching the AF's
// Doppler vector so that the receive filter peaks at (+tau, +omega).
// Noise is circular complex Gaussian with E|z|^2 = sigma_z^2 = rho^2 / SNR.

#pragma once

#include <array>
#include <random>

#include "flagseq/estimator.hpp"
#include "flagseq/objective.hpp"

namespace flagseq {

struct TargetSpec {
    double range_m = 0.0;
    double velocity_mps = 0.0;
    cplx amplitude = cplx(1.0, 0.0);
};

struct ScenarioConfig {
    double f_cr_hz = 77e9;
    double bandwidth_hz = 10e6;
    std::vector<TargetSpec> targets;
    double snr_db = 20.0;
    std::uint64_t seed = 1;

    double tau_bins(const TargetSpec& t) const;
    double omega_bins(const TargetSpec& t, int n) const;
    // Peak target power over linear SNR; E|z|^2 of each noise sample.
    double noise_power_total() const;

    // Warns on stderr for any target outside the zone.
    void validate_against_zone(const Zone& zone, int n) const;

    std::string to_json() const;
    static ScenarioConfig from_json(const std::string& text);
};

ComplexSeq synthesize_rx(const ComplexSeq& s, const ScenarioConfig& scenario, AfCase kase,
                         int n_dop, std::mt19937_64& rng);

struct FimResult {
    std::array<std::array<double, 2>, 2> phi{};   // Re{Phi}: [tau_s, omega_das] axes
    std::array<std::array<double, 2>, 2> crlb{};  // Re{Phi}^-1 / (2 SNR)
};

// Fisher information of [tau (seconds), omega (Doppler/carrier fraction)]
// for the band-limited pulse train built from s, per the D/H/T sample-domain
// matrices. Requires n1 <= 0 and n2 >= N covering s's support.
FimResult fim_crlb(const ComplexSeq& s, double bandwidth_hz, double f_cr_hz, double snr_linear,
                   int n1, int n2);

// Bin-normalized CRLB diagonals: delay variance in delay-bin^2 and Doppler
// variance in Doppler-bin^2.
double crlb_tau_bins2(const FimResult& fim, double bandwidth_hz);
double crlb_omega_bins2(const FimResult& fim, double bandwidth_hz, double f_cr_hz, int n);

struct SamplingBounds {
    double range_m2 = 0.0;   // c^2 / (48 B^2 k_tau^2)
    double speed_mps2 = 0.0; // c^2 B^2 / (48 f_cr^2 N^2 k_omega^2)
    double tau_bins2 = 0.0;  // 1 / (12 k_tau^2)
    double omega_bins2 = 0.0;
};

SamplingBounds sampling_bounds(double bandwidth_hz, double f_cr_hz, int n, int k_tau, int k_omega);

struct McConfig {
    std::vector<double> snr_db_list{20.0};
    std::vector<double> p_fa_list{1e-3};
    int detection_trials = 1000;
    int null_trials = 1000;
    int nmse_trials = 0;  // refined-estimate MSE trials per SNR (0 = skip)
    int k_tau = 16;
    int k_omega = 16;
    double f_cr_hz = 77e9;
    double bandwidth_hz = 10e6;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct RocRow {
    double snr_db = 0.0;
    double p_fa = 0.0;
    double p_d = 0.0;
    double fa_rate = 0.0;
};

// NMSE and bounds are all bin-normalized: the range columns are in
// delay-bin^2, the speed columns in Doppler-bin^2.
struct NmseRow {
    double snr_db = 0.0;
    double nmse_range = 0.0;
    double nmse_speed = 0.0;
    double crlb_range = 0.0;
    double crlb_speed = 0.0;
    double sb_range = 0.0;
    double sb_speed = 0.0;
    int successes = 0;
};

struct McResult {
    std::vector<RocRow> roc;
    std::vector<NmseRow> nmse;
};

// Sharded, seeded Monte Carlo over the scenario grid for one design member:
// detection rate on single-target trials (success = the target found within
// one bin per axis and nothing else detected), false alarm rate on
// noise-only trials, and bin-normalized MSE of refined estimates.
McResult monte_carlo(const FlagDesign& design, int member, const McConfig& cfg);

void write_roc_csv(std::ostream& os, const std::vector<RocRow>& rows);
void write_nmse_csv(std::ostream& os, const std::vector<NmseRow>& rows);

}  // namespace flagseq
