// The 2-step Flag method for delay-Doppler estimation: find the curtain with
// one transversal line search, then find the peak along the shifted curtain.
//
// The receive filter surface used throughout is
//   D(tau, omega) = A_{echo,ref}(-tau, -omega),
// i.e. the echo correlated against the reference delayed by tau and
// Doppler-compensated by omega. An echo generated at (tau0, omega0) shifts
// the AAF pattern so that D peaks exactly at (tau0, omega0) and the curtain
// through the peak keeps its designed slope.

#pragma once

#include <iosfwd>
#include <vector>

#include "flagseq/ambiguity.hpp"

namespace flagseq {

struct CfarConfig {
    double p_fa = 1e-3;     // per-trial false alarm rate
    double sigma_z2 = 1.0;  // per-quadrature noise variance estimate

    void validate() const;
};

// Detection threshold of the fixed-threshold CFAR rule: -2 sigma_z^2 ln(P_FA).
// With sigma_z2 the per-quadrature variance this is the power level a
// unit-energy reference's filter output exceeds with probability P_FA under
// noise alone.
double cfar_threshold(const CfarConfig& cfg);

struct Detection {
    double tau_hat = 0.0;
    double omega_hat = 0.0;
    double peak_value = 0.0;  // amplitude of the filter output at the peak
    int curtain_tau = 0;      // where step 1 crossed the curtain
    int curtain_omega = 0;
};

struct FlagSearchStats {
    int lines_evaluated = 0;
    int curtain_hits = 0;
    bool curtain_overlap = false;  // two detections share one curtain line
    double cell_threshold_power = 0.0;
    double cell_p_fa = 0.0;
};

// Runs the 2-step search. The per-cell threshold is derived from cfg.p_fa by
// an explicit two-stage calibration (see the implementation) so that the
// per-trial false alarm rate on noise-only input matches cfg.p_fa.
// Detections are sorted by descending peak value; duplicates within one bin
// are merged.
std::vector<Detection> flag_search(const ComplexSeq& echo, const ComplexSeq& ref, int xi,
                                   const Zone& zone, const CfarConfig& cfg, int n_dop = 0,
                                   FlagSearchStats* stats = nullptr);

// Local grid search over [tau-1, tau+1] x [omega-1, omega+1] at spacings
// 1/k_tau, 1/k_omega; fractional delay hypotheses use a band-limited shift
// of the reference. k <= 1 returns the input unchanged.
Detection refine_fractional(const Detection& det, const ComplexSeq& echo, const ComplexSeq& ref,
                            int k_tau, int k_omega, const Zone& zone, int n_dop = 0);

void write_detections_csv(std::ostream& os, const std::vector<Detection>& dets);

}  // namespace flagseq
