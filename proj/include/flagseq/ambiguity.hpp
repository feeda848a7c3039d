// Discrete periodic/aperiodic ambiguity function evaluation.
//
// Convention (fixed project-wide so complex inner products are reproducible):
//   ip(x, y, tau, omega) = sum_n conj(x[n+tau]) * y[n] * exp(j 2 pi omega (n+1) / N)
// over absolute indices n where both factors are defined; periodic case wraps
// x's index mod N. This is exactly x^H J_tau Diag(h(omega)) y with the
// periodic shift matrix J_tau[m,n] = 1 iff [m-n]_N = tau and its linear-shift
// counterpart in the aperiodic case, the combination under which a parity
// chirp has its curtain on the line omega = xi * tau.
//
// AF value: A_{s,r}(tau, omega) = |ip(r, s, tau, omega)|.

#pragma once

#include <string>
#include <vector>

#include "flagseq/seqcore.hpp"

namespace flagseq {

// Complex inner product r^H U_{tau,omega} s; omega may be fractional.
cplx af_inner(const ComplexSeq& r, const ComplexSeq& s, int tau, double omega, AfCase kase,
              int n_dop = 0);

// ip(x, y, tau, omega) for every integer Doppler bin at once, via one
// folded FFT of length n_dop; entry [w] is the bin omega = w (mod n_dop).
std::vector<cplx> af_inner_cut(const ComplexSeq& x, const ComplexSeq& y, int tau, AfCase kase,
                               int n_dop = 0);

// |r^H J_tau s_omega| per Eq.-level AF definition. Lengths must match;
// periodic case additionally requires identical supports.
double af_point(const ComplexSeq& s, const ComplexSeq& r, int tau, double omega, AfCase kase,
                int n_dop = 0);

// Lattice line in the delay-Doppler plane.
struct AfLine {
    int tau0 = 0;
    int omega0 = 0;
    int dtau = 0;
    int domega = 1;
    int count = 0;
};

// AF values along a line. A constant-tau (Doppler cut) line costs one FFT;
// any other rational direction is walked pointwise.
std::vector<double> af_line(const ComplexSeq& s, const ComplexSeq& r, const AfLine& line,
                            AfCase kase, int n_dop = 0);

// Dense |AF| over a rectangular zone.
class AfGrid {
public:
    AfGrid(Zone zone, std::string s_id, std::string r_id);

    const Zone& zone() const { return zone_; }
    double at(int tau, int omega) const {
        return values_[index(tau, omega)];
    }
    double& at(int tau, int omega) { return values_[index(tau, omega)]; }

    double max_value() const;
    double max_off_line(int xi) const;  // max over cells not on omega = xi*tau

    const std::string& s_id() const { return s_id_; }
    const std::string& r_id() const { return r_id_; }

    void write_csv(std::ostream& os) const;  // rows: tau,omega,value
    std::string to_json() const;

private:
    std::size_t index(int tau, int omega) const {
        return static_cast<std::size_t>(tau + zone_.tau_max) *
                   static_cast<std::size_t>(2 * zone_.omega_max + 1) +
               static_cast<std::size_t>(omega + zone_.omega_max);
    }
    Zone zone_;
    std::string s_id_, r_id_;
    std::vector<double> values_;
};

AfGrid af_grid(const ComplexSeq& s, const ComplexSeq& r, const Zone& zone, int n_dop = 0,
               int threads = 1, const std::string& s_id = "s", const std::string& r_id = "r");

}  // namespace flagseq
