// Constructive generation and validation of Curtain sequences and sets.
//
// A parity chirp ([xi*N - q] mod 2 = 0) has a periodic AAF equal to 1 on the
// line omega = xi*tau and 0 elsewhere inside any zone with
// |xi|*tau_max + omega_max < N. The aperiodic analogue pairs the zero-padded
// transmit with an extended receive reference.

#pragma once

#include <optional>
#include <vector>

#include "flagseq/seqcore.hpp"

namespace flagseq {

enum class SetKind { NearZeroCAF, ZeroCAF };

// A validated single-curtain design; carries the attached sequences.
struct CurtainSpec {
    ChirpParams params;   // tau_ext set for the aperiodic case
    int line_slope = 0;   // curtain lies on omega = line_slope * tau
    Zone zone;
    ComplexSeq tx;        // periodic: the chirp; aperiodic: zero-padded chirp
    ComplexSeq rx;        // periodic: the chirp; aperiodic: extended reference
};

struct CurtainSet {
    std::vector<CurtainSpec> members;
    SetKind kind = SetKind::NearZeroCAF;
    Zone zone;

    std::string to_json() const;
    static CurtainSet from_json(const std::string& text);
};

// Validates Theorem-1 (periodic) or Theorem-2 (aperiodic, tau_ext defaults to
// zone.tau_max) feasibility and attaches the sequences. Each violated
// inequality raises a distinct param_error naming it.
CurtainSpec build_curtain(int n, int xi, int q, const Zone& zone,
                          std::optional<int> tau_ext = std::nullopt);

// Corollary 1/2 set: pairwise |xi_a - xi_b| coprime to N; pairwise CAF is
// 1/sqrt(N) everywhere (periodic) or for |tau| <= tau_ext (aperiodic).
CurtainSet build_near_zero_set(int n, const std::vector<int>& xis, const std::vector<int>& qs,
                               const Zone& zone, std::optional<int> tau_ext = std::nullopt);

// Corollary 3/4 set: shared xi, q's of one parity, pairwise ||qa|-|qb|| = 2d
// with |xi|*tau_max + omega_max < d; pairwise CAF is 0 inside the zone.
CurtainSet build_zero_set(int n, int xi, const std::vector<int>& q_list, const Zone& zone,
                          std::optional<int> tau_ext = std::nullopt);

// min{ floor(N / (|xi| (tau_max+1))), floor(N / (omega_max+1)) }.
int zero_caf_capacity(int n, int xi, const Zone& zone);

// Uniformly spaced q values with gap 2d, d = |xi|*tau_max + omega_max + 1
// (the smallest feasible gap), as many as fit the [1-N, N-1] range.
std::vector<int> suggest_zero_caf_qs(int n, int xi, const Zone& zone, int count);

// Greedy pick of chirp rates with pairwise differences coprime to N.
// Heuristic only; no optimality claim.
std::vector<int> suggest_near_zero_xis(int n, int count);

enum class HeisenbergClass { Delta, NonIdealChirp, IdealChirp };

// Diagnostic classification of prime-length sequences: a delta, a chirp
// failing the parity condition, or an ideal-curtain chirp. Recovers (xi, q)
// by phase-unwrapping second differences; throws on anything else.
HeisenbergClass classify_heisenberg(int n_prime, const ComplexSeq& seq,
                                    ChirpParams* recovered = nullptr);

}  // namespace flagseq
