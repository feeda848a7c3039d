// Thin FFTW wrapper with a shared plan cache, plus instrumentation counters
// used by the complexity assertions on the estimator.

#pragma once

#include <atomic>
#include <vector>

#include "flagseq/common.hpp"

namespace flagseq {

namespace fft {

// In-place unnormalized DFT: X[k] = sum_n x[n] exp(-j 2 pi n k / N).
void forward(std::vector<cplx>& data);

// In-place unnormalized inverse: X[k] = sum_n x[n] exp(+j 2 pi n k / N).
// Note: no 1/N factor.
void inverse(std::vector<cplx>& data);

}  // namespace fft

namespace instr {

// Global counters. reset() before a measured region, read after.
std::atomic<long>& fft_calls();
std::atomic<long>& af_line_calls();
void reset();

}  // namespace instr

}  // namespace flagseq
