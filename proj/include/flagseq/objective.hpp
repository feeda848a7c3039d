// WImSL objective, masks, and constraint bookkeeping for Flag sequence sets.

#pragma once

#include <vector>

#include "flagseq/ambiguity.hpp"
#include "flagseq/curtain.hpp"

namespace flagseq {

struct DesignConfig {
    int m = 1;              // set size M
    Zone zone;
    double varrho = 1.0;    // origin weight for peak-curtain cross terms
    double alpha = 0.5;     // AAF vs CAF weight
    double beta = 0.01;     // WImSL vs penalty weight
    double epsilon = 1.0;   // target peak magnitude
    bool symmetric = false;

    double beta_prime() const { return (1.0 - beta) / beta; }
    void validate() const;

    std::string to_json() const;
    static DesignConfig from_json(const std::string& text);
};

struct MaskWeights {
    double w = 1.0;       // peak-peak
    double wbar = 1.0;    // peak-curtain cross
    double wtilde = 1.0;  // curtain-curtain
};

// W is 0 only at the matched origin, Wbar is varrho there, Wtilde is 0 for
// any matched pair.
MaskWeights masks(int m1, int m2, int tau, int omega, double varrho);

// A Curtain sequence set with jointly optimized Peak sequences. Peaks are
// stored as their length-N cores; padded forms and the Flag combinations
// f = (c + p)/sqrt(2) are derived on the stack geometry of the zone's case.
class FlagDesign {
public:
    FlagDesign(CurtainSet curtains, std::vector<ComplexSeq> peaks_tx,
               std::vector<ComplexSeq> peaks_rx);

    // Peaks drawn with i.i.d. uniform phases at modulus 1/sqrt(N); the
    // receive peaks start equal to the transmit peaks.
    static FlagDesign random_init(CurtainSet curtains, std::uint64_t seed);

    int m_count() const { return static_cast<int>(peaks_tx_.size()); }
    int n_core() const;
    int l_stack() const;  // N (periodic) or N + 2*tau_max (aperiodic)
    int pad() const;
    AfCase kase() const { return curtains_.zone.kase; }
    const Zone& zone() const { return curtains_.zone; }
    const CurtainSet& curtains() const { return curtains_; }

    const ComplexSeq& peak_tx_core(int m) const { return peaks_tx_[static_cast<std::size_t>(m)]; }
    const ComplexSeq& peak_rx_core(int m) const { return peaks_rx_[static_cast<std::size_t>(m)]; }

    ComplexSeq peak_tx(int m) const;     // padded to stack length
    ComplexSeq peak_rx(int m) const;
    ComplexSeq curtain_tx(int m) const;  // padded chirp (or plain, periodic)
    ComplexSeq curtain_rx(int m) const;  // extended reference (aperiodic)
    ComplexSeq flag_tx(int m) const;     // (c + p)/sqrt(2)
    ComplexSeq flag_rx(int m) const;

    // Constraint drift: max over m, n of ||p_tx[n]|*sqrt(N) - 1| and
    // | ||p_rx|| - 1 |.
    double constraint_drift() const;

    std::string to_json() const;
    static FlagDesign from_json(const std::string& text);

private:
    CurtainSet curtains_;
    std::vector<ComplexSeq> peaks_tx_;
    std::vector<ComplexSeq> peaks_rx_;
};

// WImSL of one (transmit, receive) pair over the zone: the masked squared
// AF terms of Eq.-16 structure, with (p, c) decompositions given explicitly.
double wimsl_pair(const ComplexSeq& p1, const ComplexSeq& c1, const ComplexSeq& p2,
                  const ComplexSeq& c2, bool same_user, const Zone& zone, double varrho,
                  int n_dop = 0);

// alpha * sum_m S(m,m) + (1-alpha) * sum_{m1 != m2} S(m1,m2).
double wimsl_total(const FlagDesign& design, const DesignConfig& cfg, int threads = 1);

// sum_m | p_m_tx^H p_m_rx - eps |^2.
double penalty(const FlagDesign& design, double eps);

// 10 log10( |f_r^H f_s|^2 / (||f_s||^2 ||f_r||^2) ).
double lpg_db(const ComplexSeq& f_s, const ComplexSeq& f_r);

// max_m of max(|p_tx^H c_tx|, |c_rx^H p_rx|) in dB (20 log10, floored at
// -300 dB).
double orthogonality_delta_db(const FlagDesign& design);

}  // namespace flagseq
