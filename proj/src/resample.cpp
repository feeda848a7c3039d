#include "flagseq/resample.hpp"

#include <cmath>

#include "flagseq/fft.hpp"

namespace flagseq {

namespace {

void delay_in_place(std::vector<cplx>& x, double delay_bins) {
    const int n = static_cast<int>(x.size());
    fft::forward(x);
    for (int k = 0; k < n; ++k) {
        // Symmetric frequency mapping keeps the interpolation real-kernel.
        int f = k;
        if (2 * k > n) f = k - n;
        if (n % 2 == 0 && 2 * k == n) {
            // Nyquist bin has no signed direction; its shifted value is the
            // average of the +/- interpretations.
            x[static_cast<std::size_t>(k)] *= std::cos(kPi * delay_bins);
            continue;
        }
        x[static_cast<std::size_t>(k)] *= std::polar(1.0, -2.0 * kPi * f * delay_bins / n);
    }
    fft::inverse(x);
    const double inv_n = 1.0 / n;
    for (auto& v : x) v *= inv_n;
}

}  // namespace

ComplexSeq frac_delay(const ComplexSeq& s, double delay_bins, AfCase kase) {
    if (kase == AfCase::Periodic) {
        std::vector<cplx> x = s.samples();
        delay_in_place(x, delay_bins);
        return ComplexSeq(std::move(x), s.start_index());
    }
    const int l = s.size();
    const int p = 2 * l;
    std::vector<cplx> x(static_cast<std::size_t>(p), cplx(0.0, 0.0));
    for (int i = 0; i < l; ++i) x[static_cast<std::size_t>(i)] = s[i];
    delay_in_place(x, delay_bins);
    std::vector<cplx> out(x.begin(), x.begin() + l);
    return ComplexSeq(std::move(out), s.start_index());
}

}  // namespace flagseq
