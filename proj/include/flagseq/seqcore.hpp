// Complex-sequence types, indexing conventions and energy accounting.
//
// Sequences carry an explicit signed start index so that extended and
// zero-padded aperiodic sequences align by absolute sample index without
// per-call offset arithmetic. Nothing here normalizes energy implicitly;
// every constructor documents the energy of what it returns.

#pragma once

#include <iosfwd>
#include <vector>

#include "flagseq/common.hpp"

namespace flagseq {

enum class AfCase { Periodic, Aperiodic };

const char* to_string(AfCase c);
AfCase af_case_from_string(const std::string& s);

// Immutable vector of complex samples over absolute indices
// [start_index, start_index + size).
class ComplexSeq {
public:
    ComplexSeq() = default;
    explicit ComplexSeq(std::vector<cplx> samples, int start_index = 0);

    int size() const { return static_cast<int>(samples_.size()); }
    int start_index() const { return start_; }
    // One past the last absolute index.
    int end_index() const { return start_ + size(); }

    bool contains(int n) const { return n >= start_ && n < end_index(); }
    // Sample at absolute index n (caller keeps n in range).
    const cplx& at(int n) const { return samples_[static_cast<std::size_t>(n - start_)]; }
    // Sample at storage position i in [0, size).
    const cplx& operator[](int i) const { return samples_[static_cast<std::size_t>(i)]; }

    const std::vector<cplx>& samples() const { return samples_; }

    double energy() const;

    // Core length N of a symmetrically padded/extended sequence
    // (size + 2*start_index); equals size when start_index is 0.
    int core_size() const { return size() + 2 * start_; }

    std::string to_json() const;
    static ComplexSeq from_json(const std::string& text);
    void write_csv(std::ostream& os) const;  // rows: n,re,im
    static ComplexSeq read_csv(std::istream& is);

private:
    std::vector<cplx> samples_;
    int start_ = 0;
};

// Discrete chirp parameters: length N, chirp rate xi and phase index q,
// both in [1-N, N-1], plus the extension width for aperiodic references.
struct ChirpParams {
    int n = 0;
    int xi = 0;
    int q = 0;
    int tau_ext = 0;

    // [xi*N - q] mod 2 == 0, the ideal-curtain condition.
    bool parity_ok() const { return ((xi * static_cast<long long>(n) - q) % 2) == 0; }
    void validate() const;
};

// Delay-Doppler zone of operation Gamma(tau_max, omega_max).
struct Zone {
    int tau_max = 0;
    int omega_max = 0;
    AfCase kase = AfCase::Periodic;

    bool contains(int tau, int omega) const {
        return std::abs(tau) <= tau_max && std::abs(omega) <= omega_max;
    }
    void validate() const;
};

// c[n] = exp(j*pi*n*(xi*n+q)/N)/sqrt(N) for n = 0..N-1. Energy is exactly 1
// up to roundoff.
ComplexSeq make_chirp(const ChirpParams& p);

// Same formula over n = -tau_ext .. N-1+tau_ext; length N + 2*tau_ext,
// start index -tau_ext, energy L/N. Requires tau_ext >= 1.
ComplexSeq extend_chirp(const ChirpParams& p);

// [0_tau, c, 0_tau] with start index -tau_ext; energy unchanged.
ComplexSeq zero_pad(const ComplexSeq& c, int tau_ext);

struct Papr {
    double linear = 0.0;
    double db = 0.0;
};

// N * max|s[n]|^2 / ||s||^2 with N = length. Throws on zero energy.
Papr papr(const ComplexSeq& s);

// papr over the nonzero extent only, so padded transmit sequences report
// the PAPR of what is actually modulated.
Papr papr_trimmed(const ComplexSeq& s);

}  // namespace flagseq
