// Band-limited fractional delay, shared by the channel simulator and the
// fractional delay-Doppler refinement.

#pragma once

#include "flagseq/seqcore.hpp"

namespace flagseq {

// Delays s by delay_bins samples (real-valued). Periodic case: exact cyclic
// shift via a DFT linear phase. Aperiodic case: the same on a 2x zero-padded
// transform, which realizes the truncated-sinc interpolation of the stored
// support without wraparound artifacts. Integer delays reduce to exact
// sample shifts.
ComplexSeq frac_delay(const ComplexSeq& s, double delay_bins, AfCase kase);

}  // namespace flagseq
