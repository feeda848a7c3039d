// Scalar quality metrics over designs: NWImSL, PMmSR, and the comparison
// table assembly.

#pragma once

#include <optional>

#include "flagseq/objective.hpp"

namespace flagseq {

// 10 log10(g / g_ref); throws on a nonpositive denominator.
double nwimsl_db(double g, double g_ref);

// Peak-to-max-masked-sidelobe ratio of one member's AAF against the ideal
// peak-curtain template (1 at the origin, 0.5 along omega = xi*tau, 0
// elsewhere). Reported as 20 log10(peak / max deviation) in dB, capped at
// 300 dB when the deviation vanishes; the printed ratio is inverted
// relative to the deviation/peak quotient so that larger is better.
double pmmsr_db(const FlagDesign& design, int member, const Zone& zone, int threads = 1);

struct MetricReport {
    // Normalizations: against iteration 0 of a solver run and against a
    // user-supplied reference WImSL (reported when available).
    std::optional<double> nwimsl_iter0_db;
    std::optional<double> nwimsl_ref_db;
    double wimsl = 0.0;  // raw G of the design under its config
    double pmmsr_set_db = 0.0;
    std::vector<double> pmmsr_member_db;
    std::vector<double> papr_db;          // transmit flags, trimmed support
    std::vector<double> lpg_measured_db;  // per member
    double lpg_theoretical_db = 0.0;      // 10log10(eps) plus extension loss
    double delta_db = 0.0;

    std::string to_json() const;
    std::string to_markdown() const;
};

MetricReport assemble_metrics(const FlagDesign& design, const DesignConfig& cfg,
                              std::optional<double> g_iter0 = std::nullopt,
                              std::optional<double> g_ref = std::nullopt, int threads = 1);

}  // namespace flagseq
