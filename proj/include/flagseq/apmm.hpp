// Accelerated parallel partially majorization-minimization solvers for the
// WImSL design problems, asymmetric and symmetric, implemented matrix-free.
//
// The surrogate operator Omega_{x1,x2} is a 2ML x 2ML block matrix whose
// blocks are zone-weighted sums of shift-modulate operators U_{tau,omega}
// plus scaled identities. It is never materialized: each block is kept as a
// per-delay profile phi_tau[n] = sum_omega coeff(tau,omega) h_omega[n]
// (one inverse FFT per delay), and applying a block to a vector is a
// shifted multiply-accumulate over the zone's delays. The scalar
// coefficients are AF inner products computed with the same folded-FFT path
// as the ambiguity module. Per-iteration cost is O(M^2 K N log N).

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flagseq/objective.hpp"

namespace flagseq {

using Block = std::vector<cplx>;

// One side of the stacked variable vector of Eq. (26): per user a peak
// block and a curtain block, both of length L over absolute indices
// [-pad, N-1+pad]. Curtain blocks never change across iterations.
struct Stack {
    int n = 0;
    int pad = 0;
    AfCase kase = AfCase::Periodic;
    std::vector<Block> peak;
    std::vector<Block> curtain;

    int users() const { return static_cast<int>(peak.size()); }
    int length() const { return n + 2 * pad; }
    double energy() const;
};

Stack tx_stack(const FlagDesign& design);
Stack rx_stack(const FlagDesign& design);

// Majorization constant for the big surrogate:
// max{ alpha*2L, (1-alpha)*2L, beta'*L } times a strict-inequality margin.
// The penalty term is absent for symmetric designs.
double lambda_bound(const DesignConfig& cfg, int l_stack);

class OmegaOperator {
public:
    // Builds the AF coefficient tables (and the objective as a byproduct).
    // Profiles for apply()/apply_adjoint() are built only when requested.
    OmegaOperator(const Stack& x1, const Stack& x2, const DesignConfig& cfg, bool build_profiles,
                  int threads = 1);

    double g_value() const { return g_; }          // WImSL G(x1, x2)
    double penalty_value() const { return pen_; }  // sum_m |p_s^H p_r - eps|^2
    // Objective of the problem being solved: beta*G + (1-beta)*penalty for
    // the asymmetric problem, plain G for the symmetric one.
    double of_value() const;

    void apply(const Stack& v, Stack& out) const;          // out = Omega v
    void apply_adjoint(const Stack& v, Stack& out) const;  // out = Omega^H v

    // Upper bound on the largest |entry| of Omega, from the profile tables.
    double entry_bound() const;

    int users() const { return m_; }
    int length() const { return l_; }
    int pad_width() const { return pad_; }
    AfCase af_case() const { return kase_; }
    const DesignConfig& config() const { return cfg_; }

private:
    struct Profile {
        // prof[tau + tau_max][j], j = (n+1) mod N, n the absolute index.
        std::vector<std::vector<cplx>> rows;
        double max_abs = 0.0;
    };

    std::vector<cplx> table_row(const Block& x, const Block& y, int tau) const;
    Profile make_profile(const std::vector<std::vector<cplx>>& coeff) const;
    void apply_profile(const Profile& p, const Block& v, Block& out) const;
    void apply_profile_adjoint(const Profile& p, const Block& v, Block& out) const;

    DesignConfig cfg_;
    int m_ = 0, n_ = 0, pad_ = 0, l_ = 0;
    AfCase kase_ = AfCase::Periodic;
    double g_ = 0.0, pen_ = 0.0;
    std::vector<cplx> d_;                    // p_i_rx^H p_i_tx per user
    std::vector<Profile> prof_a_, prof_b_;   // Q_A, Q_B per user
    std::vector<Profile> prof_c_;            // Q_C, row-major (receive i, transmit l), l != i
    bool has_profiles_ = false;
};

// lambda_tilde = 4 M L max|Omega + Omega^H| per the inner majorization.
// Entries come from probing with basis vectors when the dimension is small
// enough, and from the profile-derived entry bound otherwise; both dominate
// the true largest eigenvalue.
double lambda_tilde(const OmegaOperator& op, int probe_dim_limit = 128);

struct IterationRecord {
    int t = 0;
    double of = 0.0;
    double g = 0.0;
    double nwimsl_db = 0.0;
    double step_alpha = 0.0;
    double wall_ms = 0.0;
};

std::string iteration_jsonl(const IterationRecord& rec);

struct ApmmOptions {
    int t_max = 500;
    double rel_tol = 1e-8;
    int threads = 1;
};

struct SolveResult {
    FlagDesign design;
    std::vector<IterationRecord> history;
    bool converged = false;
};

// Single MM images (the inner closed-form updates).
std::vector<Block> mm_rx_image(const Stack& x1, const Stack& x2, const OmegaOperator& op,
                               double lambda);
std::vector<Block> mm_tx_image(const Stack& x1, const Stack& x2, const OmegaOperator& op,
                               double lambda);
std::vector<Block> mm_sym_image(const Stack& x1, const Stack& x2, const OmegaOperator& op,
                                double lambda, double lambda_tilde_val);

enum class PeakConstraint { UnitEnergy, ConstModulus };

// Two-point acceleration with backtracking (Algorithm 1 steps 4-7 and the
// Algorithm 2 analogue). alpha = -1 reproduces the plain double MM step and
// is accepted unconditionally.
struct AccelOutcome {
    std::vector<Block> peaks;
    double alpha = -1.0;
    double of = 0.0;
};
AccelOutcome accelerate(const std::vector<Block>& prev, const std::vector<Block>& y_a,
                        const std::vector<Block>& y_b, PeakConstraint constraint, int n_core,
                        int pad, double of_ref,
                        const std::function<double(const std::vector<Block>&)>& of_fn);

SolveResult solve_asymmetric(const FlagDesign& init, const DesignConfig& cfg,
                             const ApmmOptions& opt);
SolveResult solve_symmetric(const FlagDesign& init, const DesignConfig& cfg,
                            const ApmmOptions& opt);

}  // namespace flagseq
