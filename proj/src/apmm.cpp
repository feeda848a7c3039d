#include "flagseq/apmm.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flagseq/fft.hpp"

namespace flagseq {

namespace {

inline int mod_floor(long long a, int n) {
    const int r = static_cast<int>(a % n);
    return r < 0 ? r + n : r;
}

cplx dot(const Block& x, const Block& y) {
    cplx acc(0.0, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(x[i]) * y[i];
    return acc;
}

double block_energy(const Block& b) {
    double e = 0.0;
    for (const cplx& v : b) e += std::norm(v);
    return e;
}

Block padded_block(const ComplexSeq& s, int l, int pad) {
    Block b(static_cast<std::size_t>(l), cplx(0.0, 0.0));
    for (int i = 0; i < s.size(); ++i) b[static_cast<std::size_t>(i + s.start_index() + pad)] = s[i];
    return b;
}

Stack with_peaks(const Stack& base, const std::vector<Block>& cores) {
    Stack out = base;
    for (int i = 0; i < base.users(); ++i) {
        Block& p = out.peak[static_cast<std::size_t>(i)];
        std::fill(p.begin(), p.end(), cplx(0.0, 0.0));
        for (int j = 0; j < base.n; ++j)
            p[static_cast<std::size_t>(j + base.pad)] = cores[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return out;
}

std::vector<Block> peak_cores(const Stack& s) {
    std::vector<Block> cores(static_cast<std::size_t>(s.users()));
    for (int i = 0; i < s.users(); ++i) {
        Block core(static_cast<std::size_t>(s.n));
        for (int j = 0; j < s.n; ++j)
            core[static_cast<std::size_t>(j)] = s.peak[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + s.pad)];
        cores[static_cast<std::size_t>(i)] = std::move(core);
    }
    return cores;
}

Stack zero_like(const Stack& s) {
    Stack out = s;
    for (auto& b : out.peak) std::fill(b.begin(), b.end(), cplx(0.0, 0.0));
    for (auto& b : out.curtain) std::fill(b.begin(), b.end(), cplx(0.0, 0.0));
    return out;
}

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

}  // namespace

double Stack::energy() const {
    double e = 0.0;
    for (const auto& b : peak) e += block_energy(b);
    for (const auto& b : curtain) e += block_energy(b);
    return e;
}

Stack tx_stack(const FlagDesign& design) {
    Stack s;
    s.n = design.n_core();
    s.pad = design.pad();
    s.kase = design.kase();
    for (int m = 0; m < design.m_count(); ++m) {
        s.peak.push_back(padded_block(design.peak_tx(m), design.l_stack(), s.pad));
        s.curtain.push_back(padded_block(design.curtain_tx(m), design.l_stack(), s.pad));
    }
    return s;
}

Stack rx_stack(const FlagDesign& design) {
    Stack s;
    s.n = design.n_core();
    s.pad = design.pad();
    s.kase = design.kase();
    for (int m = 0; m < design.m_count(); ++m) {
        s.peak.push_back(padded_block(design.peak_rx(m), design.l_stack(), s.pad));
        s.curtain.push_back(padded_block(design.curtain_rx(m), design.l_stack(), s.pad));
    }
    return s;
}

double lambda_bound(const DesignConfig& cfg, int l_stack) {
    const double l = l_stack;
    // The zone maximum of 2L - 2|tau| sits at tau = 0.
    double lam = std::max(cfg.alpha * 2.0 * l, (1.0 - cfg.alpha) * 2.0 * l);
    // The zone cells' pattern matrices are mutually orthogonal, so
    // lambda_max equals the largest per-cell Frobenius norm: up to
    // (W^2 + 2 Wbar^2) L on matched blocks and 4L on cross blocks. The
    // 2L-2|tau| terms alone undercount that and would void the descent
    // guarantee whenever the penalty weight does not dominate.
    lam = std::max(lam, cfg.alpha * std::max(3.0, 2.0 * cfg.varrho * cfg.varrho) * l);
    if (cfg.m > 1) lam = std::max(lam, (1.0 - cfg.alpha) * 4.0 * l);
    if (!cfg.symmetric) lam = std::max(lam, cfg.beta_prime() * l);
    return lam * (1.0 + 1e-6);
}

OmegaOperator::OmegaOperator(const Stack& x1, const Stack& x2, const DesignConfig& cfg,
                             bool build_profiles, int threads)
    : cfg_(cfg), m_(x1.users()), n_(x1.n), pad_(x1.pad), l_(x1.length()), kase_(x1.kase) {
    if (x2.users() != m_ || x2.n != n_ || x2.pad != pad_)
        throw param_error("OmegaOperator: stack geometry mismatch");
    const int k_tau = 2 * cfg.zone.tau_max + 1;
    const int k_omega = 2 * cfg.zone.omega_max + 1;
    const double bprime = cfg.symmetric ? 0.0 : cfg.beta_prime();

    d_.assign(static_cast<std::size_t>(m_), cplx(0.0, 0.0));
    has_profiles_ = build_profiles;

    using Coeff = std::vector<std::vector<cplx>>;  // [tau][omega] over the zone
    std::vector<Coeff> ca(static_cast<std::size_t>(m_)), cb(static_cast<std::size_t>(m_));
    std::vector<Coeff> cc(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_));
    std::vector<double> g_same(static_cast<std::size_t>(m_), 0.0);
    std::vector<double> g_cross(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_), 0.0);

    // Matched-pair tables: psi_i = W pp + Wbar (pc + cp), masked at origin.
    parallel_for(m_, threads, [&](int i) {
        Coeff a(static_cast<std::size_t>(k_tau), std::vector<cplx>(static_cast<std::size_t>(k_omega)));
        Coeff b = a;
        double acc = 0.0;
        for (int ti = 0; ti < k_tau; ++ti) {
            const int tau = ti - cfg.zone.tau_max;
            const auto pp = table_row(x2.peak[static_cast<std::size_t>(i)], x1.peak[static_cast<std::size_t>(i)], tau);
            const auto pc = table_row(x2.peak[static_cast<std::size_t>(i)], x1.curtain[static_cast<std::size_t>(i)], tau);
            const auto cp = table_row(x2.curtain[static_cast<std::size_t>(i)], x1.peak[static_cast<std::size_t>(i)], tau);
            for (int wi = 0; wi < k_omega; ++wi) {
                const int omega = wi - cfg.zone.omega_max;
                const auto bin = static_cast<std::size_t>(mod_floor(omega, n_));
                const MaskWeights mw = masks(0, 0, tau, omega, cfg.varrho);
                const cplx psi = mw.w * pp[bin] + mw.wbar * (pc[bin] + cp[bin]);
                acc += std::norm(psi);
                if (build_profiles) {
                    a[static_cast<std::size_t>(ti)][static_cast<std::size_t>(wi)] =
                        cfg.alpha * mw.w * std::conj(psi);
                    b[static_cast<std::size_t>(ti)][static_cast<std::size_t>(wi)] =
                        cfg.alpha * mw.wbar * std::conj(psi);
                }
            }
        }
        g_same[static_cast<std::size_t>(i)] = acc;
        if (build_profiles) {
            ca[static_cast<std::size_t>(i)] = std::move(a);
            cb[static_cast<std::size_t>(i)] = std::move(b);
        }
        d_[static_cast<std::size_t>(i)] =
            dot(x2.peak[static_cast<std::size_t>(i)], x1.peak[static_cast<std::size_t>(i)]);
    });

    // Cross tables: phi_{l,k} = (p_k^r + c_k^r)^H U (p_l^s + c_l^s), l != k.
    if (m_ > 1 && cfg.alpha < 1.0) {
        std::vector<Block> gs(static_cast<std::size_t>(m_)), gr(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            Block a = x1.peak[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < a.size(); ++j) a[j] += x1.curtain[static_cast<std::size_t>(i)][j];
            gs[static_cast<std::size_t>(i)] = std::move(a);
            Block b = x2.peak[static_cast<std::size_t>(i)];
            for (std::size_t j = 0; j < b.size(); ++j) b[j] += x2.curtain[static_cast<std::size_t>(i)][j];
            gr[static_cast<std::size_t>(i)] = std::move(b);
        }
        parallel_for(m_ * m_, threads, [&](int idx) {
            const int k = idx / m_;  // receive user (block row)
            const int l = idx % m_;  // transmit user (block column)
            if (k == l) return;
            Coeff c(static_cast<std::size_t>(k_tau), std::vector<cplx>(static_cast<std::size_t>(k_omega)));
            double acc = 0.0;
            for (int ti = 0; ti < k_tau; ++ti) {
                const int tau = ti - cfg.zone.tau_max;
                const auto row = table_row(gr[static_cast<std::size_t>(k)], gs[static_cast<std::size_t>(l)], tau);
                for (int wi = 0; wi < k_omega; ++wi) {
                    const int omega = wi - cfg.zone.omega_max;
                    const cplx phi = row[static_cast<std::size_t>(mod_floor(omega, n_))];
                    acc += std::norm(phi);
                    if (build_profiles)
                        c[static_cast<std::size_t>(ti)][static_cast<std::size_t>(wi)] =
                            (1.0 - cfg.alpha) * std::conj(phi);
                }
            }
            g_cross[static_cast<std::size_t>(idx)] = acc;
            if (build_profiles) cc[static_cast<std::size_t>(idx)] = std::move(c);
        });
    } else if (m_ > 1) {
        // alpha = 1: CAF terms carry zero weight in G and in Omega, but the
        // tables would also be multiplied by (1 - alpha) = 0; skip them.
    }

    double same = 0.0, cross = 0.0;
    for (double v : g_same) same += v;
    for (double v : g_cross) cross += v;
    g_ = cfg.alpha * same + (1.0 - cfg.alpha) * cross;

    pen_ = 0.0;
    for (int i = 0; i < m_; ++i) pen_ += std::norm(std::conj(d_[static_cast<std::size_t>(i)]) - cfg.epsilon);

    if (build_profiles) {
        prof_a_.resize(static_cast<std::size_t>(m_));
        prof_b_.resize(static_cast<std::size_t>(m_));
        prof_c_.resize(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_));
        parallel_for(m_, threads, [&](int i) {
            prof_a_[static_cast<std::size_t>(i)] = make_profile(ca[static_cast<std::size_t>(i)]);
            prof_b_[static_cast<std::size_t>(i)] = make_profile(cb[static_cast<std::size_t>(i)]);
        });
        if (m_ > 1 && cfg.alpha < 1.0) {
            parallel_for(m_ * m_, threads, [&](int idx) {
                if (idx / m_ == idx % m_) return;
                prof_c_[static_cast<std::size_t>(idx)] = make_profile(cc[static_cast<std::size_t>(idx)]);
            });
        }
    }
    (void)bprime;
}

std::vector<cplx> OmegaOperator::table_row(const Block& x, const Block& y, int tau) const {
    // Fold conj(x[n+tau]) y[n] by Doppler-phase residue, then one inverse FFT
    // evaluates x^H U_{tau,omega} y for every integer omega bin.
    std::vector<cplx> bins(static_cast<std::size_t>(n_), cplx(0.0, 0.0));
    const int l = l_;
    if (kase_ == AfCase::Periodic) {
        for (int i = 0; i < l; ++i) {
            const int shifted = mod_floor(static_cast<long long>(i) + tau, l);
            bins[static_cast<std::size_t>(mod_floor(i + 1, n_))] +=
                std::conj(x[static_cast<std::size_t>(shifted)]) * y[static_cast<std::size_t>(i)];
        }
    } else {
        for (int i = 0; i < l; ++i) {
            const int shifted = i + tau;
            if (shifted < 0 || shifted >= l) continue;
            bins[static_cast<std::size_t>(mod_floor(i - pad_ + 1, n_))] +=
                std::conj(x[static_cast<std::size_t>(shifted)]) * y[static_cast<std::size_t>(i)];
        }
    }
    fft::inverse(bins);
    return bins;
}

OmegaOperator::Profile OmegaOperator::make_profile(const std::vector<std::vector<cplx>>& coeff) const {
    Profile p;
    const int k_tau = 2 * cfg_.zone.tau_max + 1;
    const int k_omega = 2 * cfg_.zone.omega_max + 1;
    p.rows.resize(static_cast<std::size_t>(k_tau));
    for (int ti = 0; ti < k_tau; ++ti) {
        std::vector<cplx> bins(static_cast<std::size_t>(n_), cplx(0.0, 0.0));
        for (int wi = 0; wi < k_omega; ++wi) {
            const int omega = wi - cfg_.zone.omega_max;
            bins[static_cast<std::size_t>(mod_floor(omega, n_))] +=
                coeff[static_cast<std::size_t>(ti)][static_cast<std::size_t>(wi)];
        }
        fft::inverse(bins);  // row[j] = sum_omega coeff exp(+j 2 pi omega j / N)
        for (const cplx& v : bins) p.max_abs = std::max(p.max_abs, std::abs(v));
        p.rows[static_cast<std::size_t>(ti)] = std::move(bins);
    }
    return p;
}

void OmegaOperator::apply_profile(const Profile& p, const Block& v, Block& out) const {
    // (Q v)[m] = sum_tau phi_tau[m - tau] v[m - tau], phi_tau[n] = row[(n+1) mod N].
    const int k_tau = 2 * cfg_.zone.tau_max + 1;
    for (int ti = 0; ti < k_tau; ++ti) {
        const int tau = ti - cfg_.zone.tau_max;
        const auto& row = p.rows[static_cast<std::size_t>(ti)];
        if (row.empty()) continue;
        for (int i = 0; i < l_; ++i) {
            int src = i - tau;
            if (kase_ == AfCase::Periodic) {
                src = mod_floor(src, l_);
            } else if (src < 0 || src >= l_) {
                continue;
            }
            out[static_cast<std::size_t>(i)] +=
                row[static_cast<std::size_t>(mod_floor(i - pad_ - tau + 1, n_))] *
                v[static_cast<std::size_t>(src)];
        }
    }
}

void OmegaOperator::apply_profile_adjoint(const Profile& p, const Block& v, Block& out) const {
    // (Q^H v)[n] = sum_tau conj(phi_tau[n]) v[n + tau].
    const int k_tau = 2 * cfg_.zone.tau_max + 1;
    for (int ti = 0; ti < k_tau; ++ti) {
        const int tau = ti - cfg_.zone.tau_max;
        const auto& row = p.rows[static_cast<std::size_t>(ti)];
        if (row.empty()) continue;
        for (int i = 0; i < l_; ++i) {
            int src = i + tau;
            if (kase_ == AfCase::Periodic) {
                src = mod_floor(src, l_);
            } else if (src < 0 || src >= l_) {
                continue;
            }
            out[static_cast<std::size_t>(i)] +=
                std::conj(row[static_cast<std::size_t>(mod_floor(i - pad_ + 1, n_))]) *
                v[static_cast<std::size_t>(src)];
        }
    }
}

double OmegaOperator::of_value() const {
    if (cfg_.symmetric) return g_;
    return cfg_.beta * g_ + (1.0 - cfg_.beta) * pen_;
}

void OmegaOperator::apply(const Stack& v, Stack& out) const {
    if (!has_profiles_) throw param_error("OmegaOperator: built without profiles");
    out = zero_like(v);
    const double bprime = cfg_.symmetric ? 0.0 : cfg_.beta_prime();
    std::vector<Block> sums(static_cast<std::size_t>(m_));
    for (int l = 0; l < m_; ++l) {
        Block s = v.peak[static_cast<std::size_t>(l)];
        for (std::size_t j = 0; j < s.size(); ++j) s[j] += v.curtain[static_cast<std::size_t>(l)][j];
        sums[static_cast<std::size_t>(l)] = std::move(s);
    }
    for (int i = 0; i < m_; ++i) {
        auto& out_p = out.peak[static_cast<std::size_t>(i)];
        auto& out_c = out.curtain[static_cast<std::size_t>(i)];
        apply_profile(prof_a_[static_cast<std::size_t>(i)], v.peak[static_cast<std::size_t>(i)], out_p);
        apply_profile(prof_b_[static_cast<std::size_t>(i)], v.curtain[static_cast<std::size_t>(i)], out_p);
        apply_profile(prof_b_[static_cast<std::size_t>(i)], v.peak[static_cast<std::size_t>(i)], out_c);
        for (int l = 0; l < m_; ++l) {
            if (l == i) continue;
            const auto& prof = prof_c_[static_cast<std::size_t>(i * m_ + l)];
            if (prof.rows.empty()) continue;
            apply_profile(prof, sums[static_cast<std::size_t>(l)], out_p);
            apply_profile(prof, sums[static_cast<std::size_t>(l)], out_c);
        }
        if (bprime > 0.0) {
            const cplx scale = bprime * std::conj(d_[static_cast<std::size_t>(i)]);
            for (int j = 0; j < l_; ++j)
                out_p[static_cast<std::size_t>(j)] += scale * v.peak[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
    }
}

void OmegaOperator::apply_adjoint(const Stack& v, Stack& out) const {
    if (!has_profiles_) throw param_error("OmegaOperator: built without profiles");
    out = zero_like(v);
    const double bprime = cfg_.symmetric ? 0.0 : cfg_.beta_prime();
    std::vector<Block> sums(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
        Block s = v.peak[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < s.size(); ++j) s[j] += v.curtain[static_cast<std::size_t>(i)][j];
        sums[static_cast<std::size_t>(i)] = std::move(s);
    }
    for (int j = 0; j < m_; ++j) {
        auto& out_p = out.peak[static_cast<std::size_t>(j)];
        auto& out_c = out.curtain[static_cast<std::size_t>(j)];
        apply_profile_adjoint(prof_a_[static_cast<std::size_t>(j)], v.peak[static_cast<std::size_t>(j)], out_p);
        apply_profile_adjoint(prof_b_[static_cast<std::size_t>(j)], v.curtain[static_cast<std::size_t>(j)], out_p);
        apply_profile_adjoint(prof_b_[static_cast<std::size_t>(j)], v.peak[static_cast<std::size_t>(j)], out_c);
        for (int i = 0; i < m_; ++i) {
            if (i == j) continue;
            const auto& prof = prof_c_[static_cast<std::size_t>(i * m_ + j)];
            if (prof.rows.empty()) continue;
            apply_profile_adjoint(prof, sums[static_cast<std::size_t>(i)], out_p);
            apply_profile_adjoint(prof, sums[static_cast<std::size_t>(i)], out_c);
        }
        if (bprime > 0.0) {
            const cplx scale = bprime * d_[static_cast<std::size_t>(j)];
            for (int k = 0; k < l_; ++k)
                out_p[static_cast<std::size_t>(k)] += scale * v.peak[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
        }
    }
}

double OmegaOperator::entry_bound() const {
    double bound = 0.0;
    const double bprime = cfg_.symmetric ? 0.0 : cfg_.beta_prime();
    for (int i = 0; i < m_; ++i) {
        bound = std::max(bound, prof_a_[static_cast<std::size_t>(i)].max_abs +
                                    bprime * std::abs(d_[static_cast<std::size_t>(i)]));
        bound = std::max(bound, prof_b_[static_cast<std::size_t>(i)].max_abs);
    }
    for (const auto& p : prof_c_) bound = std::max(bound, p.max_abs);
    return bound;
}

double lambda_tilde(const OmegaOperator& op, int probe_dim_limit) {
    const int m = op.users();
    const int l = op.length();
    const int dim = 2 * m * l;
    if (dim <= probe_dim_limit) {
        // Probe the operator with basis vectors; exact max entry of Omega + Omega^H.
        std::vector<std::vector<cplx>> dense(static_cast<std::size_t>(dim),
                                             std::vector<cplx>(static_cast<std::size_t>(dim)));
        Stack proto;
        proto.n = l - 2 * op.pad_width();
        proto.pad = op.pad_width();
        proto.kase = op.af_case();
        proto.peak.assign(static_cast<std::size_t>(m), Block(static_cast<std::size_t>(l)));
        proto.curtain.assign(static_cast<std::size_t>(m), Block(static_cast<std::size_t>(l)));
        for (int col = 0; col < dim; ++col) {
            Stack e = proto;
            const int user = col / (2 * l);
            const int within = col % (2 * l);
            if (within < l)
                e.peak[static_cast<std::size_t>(user)][static_cast<std::size_t>(within)] = 1.0;
            else
                e.curtain[static_cast<std::size_t>(user)][static_cast<std::size_t>(within - l)] = 1.0;
            Stack w;
            op.apply(e, w);
            for (int row = 0; row < dim; ++row) {
                const int ru = row / (2 * l);
                const int rw = row % (2 * l);
                dense[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] =
                    (rw < l) ? w.peak[static_cast<std::size_t>(ru)][static_cast<std::size_t>(rw)]
                             : w.curtain[static_cast<std::size_t>(ru)][static_cast<std::size_t>(rw - l)];
            }
        }
        double max_entry = 0.0;
        for (int a = 0; a < dim; ++a)
            for (int b = 0; b < dim; ++b)
                max_entry = std::max(max_entry,
                                     std::abs(dense[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +
                                              std::conj(dense[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)])));
        return 4.0 * m * l * max_entry;
    }
    // Large instance: |Omega + Omega^H| entries are at most twice the largest
    // |Omega| entry, which the profiles bound directly.
    return 4.0 * m * l * 2.0 * op.entry_bound();
}

std::string iteration_jsonl(const IterationRecord& rec) {
    nlohmann::json j;
    j["t"] = rec.t;
    j["OF"] = rec.of;
    j["G"] = rec.g;
    j["NWImSL_dB"] = rec.nwimsl_db;
    j["step_alpha"] = rec.step_alpha;
    j["wall_ms"] = rec.wall_ms;
    return j.dump();
}

std::vector<Block> mm_rx_image(const Stack& x1, const Stack& x2, const OmegaOperator& op,
                               double lambda) {
    Stack w;
    op.apply(x1, w);
    const double e1 = x1.energy();
    const double bprime = op.config().symmetric ? 0.0 : op.config().beta_prime();
    const double eps = op.config().epsilon;
    std::vector<Block> cores(static_cast<std::size_t>(x1.users()));
    for (int i = 0; i < x1.users(); ++i) {
        Block iota(static_cast<std::size_t>(x1.n));
        double norm2 = 0.0;
        for (int j = 0; j < x1.n; ++j) {
            const auto s = static_cast<std::size_t>(j + x1.pad);
            const cplx v = w.peak[static_cast<std::size_t>(i)][s] -
                           lambda * e1 * x2.peak[static_cast<std::size_t>(i)][s] -
                           bprime * eps * x1.peak[static_cast<std::size_t>(i)][s];
            iota[static_cast<std::size_t>(j)] = v;
            norm2 += std::norm(v);
        }
        if (norm2 < 1e-300) {
            std::fprintf(stderr, "flagseq: degenerate rx direction for user %d, keeping previous\n", i);
            Block keep(static_cast<std::size_t>(x1.n));
            for (int j = 0; j < x1.n; ++j)
                keep[static_cast<std::size_t>(j)] = x2.peak[static_cast<std::size_t>(i)][static_cast<std::size_t>(j + x1.pad)];
            cores[static_cast<std::size_t>(i)] = std::move(keep);
            continue;
        }
        const double inv = -1.0 / std::sqrt(norm2);
        for (auto& v : iota) v *= inv;
        cores[static_cast<std::size_t>(i)] = std::move(iota);
    }
    return cores;
}

std::vector<Block> mm_tx_image(const Stack& x1, const Stack& x2, const OmegaOperator& op,
                               double lambda) {
    Stack w;
    op.apply_adjoint(x2, w);
    const double e2 = x2.energy();
    const double bprime = op.config().symmetric ? 0.0 : op.config().beta_prime();
    const double eps = op.config().epsilon;
    const double mod = 1.0 / std::sqrt(static_cast<double>(x1.n));
    std::vector<Block> cores(static_cast<std::size_t>(x1.users()));
    for (int i = 0; i < x1.users(); ++i) {
        Block core(static_cast<std::size_t>(x1.n));
        for (int j = 0; j < x1.n; ++j) {
            const auto s = static_cast<std::size_t>(j + x1.pad);
            const cplx gamma = w.peak[static_cast<std::size_t>(i)][s] -
                               lambda * e2 * x1.peak[static_cast<std::size_t>(i)][s] -
                               bprime * eps * x2.peak[static_cast<std::size_t>(i)][s];
            if (std::abs(gamma) == 0.0) {
                // Documented tie-break: keep the previous sample's phase.
                core[static_cast<std::size_t>(j)] = x1.peak[static_cast<std::size_t>(i)][s];
            } else {
                core[static_cast<std::size_t>(j)] = -std::polar(mod, std::arg(gamma));
            }
        }
        cores[static_cast<std::size_t>(i)] = std::move(core);
    }
    return cores;
}

std::vector<Block> mm_sym_image(const Stack& x1, const Stack& x2, const OmegaOperator& op,
                                double lambda, double lambda_tilde_val) {
    Stack w1, w2;
    op.apply(x1, w1);
    op.apply_adjoint(x2, w2);
    const double e1 = x1.energy();
    const double e2 = x2.energy();
    const double mod = 1.0 / std::sqrt(static_cast<double>(x1.n));
    std::vector<Block> cores(static_cast<std::size_t>(x1.users()));
    for (int i = 0; i < x1.users(); ++i) {
        Block core(static_cast<std::size_t>(x1.n));
        for (int j = 0; j < x1.n; ++j) {
            const auto s = static_cast<std::size_t>(j + x1.pad);
            const cplx sigma = (w1.peak[static_cast<std::size_t>(i)][s] -
                                lambda * e1 * x2.peak[static_cast<std::size_t>(i)][s]) +
                               (w2.peak[static_cast<std::size_t>(i)][s] -
                                lambda * e2 * x1.peak[static_cast<std::size_t>(i)][s]) -
                               lambda_tilde_val * x1.peak[static_cast<std::size_t>(i)][s];
            if (std::abs(sigma) == 0.0) {
                core[static_cast<std::size_t>(j)] = x1.peak[static_cast<std::size_t>(i)][s];
            } else {
                core[static_cast<std::size_t>(j)] = -std::polar(mod, std::arg(sigma));
            }
        }
        cores[static_cast<std::size_t>(i)] = std::move(core);
    }
    return cores;
}

namespace {

std::vector<Block> project_peaks(const std::vector<Block>& raw, const std::vector<Block>& prev,
                                 PeakConstraint constraint, int n_core) {
    std::vector<Block> out(raw.size());
    const double mod = 1.0 / std::sqrt(static_cast<double>(n_core));
    for (std::size_t m = 0; m < raw.size(); ++m) {
        Block b = raw[m];
        if (constraint == PeakConstraint::UnitEnergy) {
            const double e = block_energy(b);
            if (e < 1e-300) {
                b = prev[m];
            } else {
                const double inv = 1.0 / std::sqrt(e);
                for (auto& v : b) v *= inv;
            }
        } else {
            for (std::size_t j = 0; j < b.size(); ++j) {
                if (std::abs(b[j]) == 0.0)
                    b[j] = prev[m][j];
                else
                    b[j] = std::polar(mod, std::arg(b[j]));
            }
        }
        out[m] = std::move(b);
    }
    return out;
}

}  // namespace

AccelOutcome accelerate(const std::vector<Block>& prev, const std::vector<Block>& y_a,
                        const std::vector<Block>& y_b, PeakConstraint constraint, int n_core,
                        int pad, const double of_ref,
                        const std::function<double(const std::vector<Block>&)>& of_fn) {
    (void)pad;
    const std::size_t m = prev.size();
    std::vector<Block> va(m), vb(m);
    double sum_va = 0.0, sum_vb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        Block a(prev[i].size()), b(prev[i].size());
        for (std::size_t j = 0; j < prev[i].size(); ++j) {
            a[j] = y_a[i][j] - prev[i][j];
            b[j] = y_b[i][j] - y_a[i][j] - a[j];
        }
        sum_va += block_energy(a);
        sum_vb += block_energy(b);
        va[i] = std::move(a);
        vb[i] = std::move(b);
    }
    AccelOutcome out;
    if (sum_vb < 1e-300) {
        out.peaks = y_b;
        out.alpha = -1.0;
        out.of = of_fn(y_b);
        return out;
    }
    double alpha = -sum_va / sum_vb;
    const double slack = 1e-12 * std::max(1.0, of_ref);
    for (;;) {
        if (std::abs(alpha + 1.0) < 1e-12) {
            // Plain double-MM step; descent is guaranteed, accept it.
            out.peaks = y_b;
            out.alpha = -1.0;
            out.of = of_fn(y_b);
            return out;
        }
        std::vector<Block> cand(m);
        for (std::size_t i = 0; i < m; ++i) {
            Block c(prev[i].size());
            for (std::size_t j = 0; j < prev[i].size(); ++j)
                c[j] = prev[i][j] - 2.0 * alpha * va[i][j] + alpha * alpha * vb[i][j];
            cand[i] = std::move(c);
        }
        cand = project_peaks(cand, prev, constraint, n_core);
        const double of = of_fn(cand);
        if (of <= of_ref + slack) {
            out.peaks = std::move(cand);
            out.alpha = alpha;
            out.of = of;
            return out;
        }
        alpha = (alpha - 1.0) / 2.0;
    }
}

namespace {

void check_init(const FlagDesign& init, const DesignConfig& cfg) {
    cfg.validate();
    if (init.m_count() != cfg.m)
        throw param_error("solver: design has M=" + std::to_string(init.m_count()) +
                          " but config says M=" + std::to_string(cfg.m));
    const Zone& z = init.zone();
    if (z.tau_max != cfg.zone.tau_max || z.omega_max != cfg.zone.omega_max || z.kase != cfg.zone.kase)
        throw param_error("solver: design zone differs from config zone");
    const double drift = init.constraint_drift();
    if (drift > 1e-9)
        throw param_error("solver: initial design violates constraints, drift = " +
                          std::to_string(drift));
}

FlagDesign design_from_stacks(const FlagDesign& proto, const Stack& x1, const Stack& x2) {
    std::vector<ComplexSeq> tx, rx;
    for (const auto& core : peak_cores(x1)) tx.emplace_back(core, 0);
    for (const auto& core : peak_cores(x2)) rx.emplace_back(core, 0);
    return FlagDesign(proto.curtains(), std::move(tx), std::move(rx));
}

bool nonfinite(double v) { return !std::isfinite(v); }

}  // namespace

SolveResult solve_asymmetric(const FlagDesign& init, const DesignConfig& cfg,
                             const ApmmOptions& opt) {
    check_init(init, cfg);
    if (cfg.symmetric)
        throw param_error("solve_asymmetric: config is marked symmetric");

    Stack x1 = tx_stack(init);
    Stack x2 = rx_stack(init);
    const double lambda = lambda_bound(cfg, x1.length());

    SolveResult result{init, {}, false};
    OmegaOperator op0(x1, x2, cfg, false, opt.threads);
    const double g0 = op0.g_value();
    double of_cur = op0.of_value();
    result.history.push_back({0, of_cur, g0, 0.0, 0.0, 0.0});

    auto of_rx = [&](const std::vector<Block>& cores) {
        const Stack cand = with_peaks(x2, cores);
        return OmegaOperator(x1, cand, cfg, false, opt.threads).of_value();
    };
    auto of_tx = [&](const std::vector<Block>& cores) {
        const Stack cand = with_peaks(x1, cores);
        return OmegaOperator(cand, x2, cfg, false, opt.threads).of_value();
    };

    for (int t = 1; t <= opt.t_max; ++t) {
        const double tic = now_ms();
        // Receive block (Algorithm 1, Steps 2-7).
        OmegaOperator op_a(x1, x2, cfg, true, opt.threads);
        const auto y_a = mm_rx_image(x1, x2, op_a, lambda);
        const Stack x2_a = with_peaks(x2, y_a);
        OmegaOperator op_b(x1, x2_a, cfg, true, opt.threads);
        const auto y_b = mm_rx_image(x1, x2_a, op_b, lambda);
        AccelOutcome rx = accelerate(peak_cores(x2), y_a, y_b, PeakConstraint::UnitEnergy, x1.n,
                                     x1.pad, of_cur, of_rx);
        x2 = with_peaks(x2, rx.peaks);
        of_cur = rx.of;

        // Transmit block (Step 8, mirrored).
        OmegaOperator op_c(x1, x2, cfg, true, opt.threads);
        const auto g_a = mm_tx_image(x1, x2, op_c, lambda);
        const Stack x1_a = with_peaks(x1, g_a);
        OmegaOperator op_d(x1_a, x2, cfg, true, opt.threads);
        const auto g_b = mm_tx_image(x1_a, x2, op_d, lambda);
        AccelOutcome tx = accelerate(peak_cores(x1), g_a, g_b, PeakConstraint::ConstModulus, x1.n,
                                     x1.pad, of_cur, of_tx);
        x1 = with_peaks(x1, tx.peaks);
        of_cur = tx.of;

        if (nonfinite(of_cur)) throw domain_error("solve_asymmetric: non-finite objective at t=" +
                                                  std::to_string(t));

        // Recover G from OF and the directly computed penalty.
        double pen = 0.0;
        for (int i = 0; i < x1.users(); ++i) {
            cplx d(0.0, 0.0);
            for (int j = 0; j < x1.n; ++j) {
                const auto s = static_cast<std::size_t>(j + x1.pad);
                d += std::conj(x1.peak[static_cast<std::size_t>(i)][s]) *
                     x2.peak[static_cast<std::size_t>(i)][s];
            }
            pen += std::norm(d - cfg.epsilon);
        }
        const double g_cur = (of_cur - (1.0 - cfg.beta) * pen) / cfg.beta;
        const double prev_of = result.history.back().of;
        result.history.push_back({t, of_cur, g_cur,
                                  10.0 * std::log10(std::max(g_cur, 1e-300) / std::max(g0, 1e-300)),
                                  tx.alpha, now_ms() - tic});
        if (std::abs(prev_of - of_cur) / std::max(prev_of, 1e-300) < opt.rel_tol) {
            result.converged = true;
            break;
        }
    }
    result.design = design_from_stacks(init, x1, x2);
    return result;
}

SolveResult solve_symmetric(const FlagDesign& init, const DesignConfig& cfg,
                            const ApmmOptions& opt) {
    check_init(init, cfg);
    if (!cfg.symmetric) throw param_error("solve_symmetric: config is not marked symmetric");
    // p_s = p_r throughout; require it of the start point.
    for (int m = 0; m < init.m_count(); ++m) {
        const auto& a = init.peak_tx_core(m);
        const auto& b = init.peak_rx_core(m);
        for (int j = 0; j < a.size(); ++j)
            if (std::abs(a[j] - b[j]) > 1e-12)
                throw param_error("solve_symmetric: initial peaks differ between tx and rx");
    }

    Stack x1 = tx_stack(init);
    Stack x2 = rx_stack(init);
    const double lambda = lambda_bound(cfg, x1.length());

    SolveResult result{init, {}, false};
    OmegaOperator op0(x1, x2, cfg, false, opt.threads);
    const double g0 = op0.g_value();
    double of_cur = op0.of_value();
    result.history.push_back({0, of_cur, g0, 0.0, 0.0, 0.0});

    auto of_fn = [&](const std::vector<Block>& cores) {
        const Stack c1 = with_peaks(x1, cores);
        const Stack c2 = with_peaks(x2, cores);
        return OmegaOperator(c1, c2, cfg, false, opt.threads).of_value();
    };

    for (int t = 1; t <= opt.t_max; ++t) {
        const double tic = now_ms();
        OmegaOperator op_a(x1, x2, cfg, true, opt.threads);
        const double lt_a = lambda_tilde(op_a);
        const auto y_a = mm_sym_image(x1, x2, op_a, lambda, lt_a);
        const Stack x1_a = with_peaks(x1, y_a);
        const Stack x2_a = with_peaks(x2, y_a);
        OmegaOperator op_b(x1_a, x2_a, cfg, true, opt.threads);
        const double lt_b = lambda_tilde(op_b);
        const auto y_b = mm_sym_image(x1_a, x2_a, op_b, lambda, lt_b);

        AccelOutcome step = accelerate(peak_cores(x1), y_a, y_b, PeakConstraint::ConstModulus, x1.n,
                                       x1.pad, of_cur, of_fn);
        x1 = with_peaks(x1, step.peaks);
        x2 = with_peaks(x2, step.peaks);
        of_cur = step.of;
        if (nonfinite(of_cur)) throw domain_error("solve_symmetric: non-finite objective at t=" +
                                                  std::to_string(t));

        const double prev_of = result.history.back().of;
        result.history.push_back({t, of_cur, of_cur,
                                  10.0 * std::log10(std::max(of_cur, 1e-300) / std::max(g0, 1e-300)),
                                  step.alpha, now_ms() - tic});
        if (std::abs(prev_of - of_cur) / std::max(prev_of, 1e-300) < opt.rel_tol) {
            result.converged = true;
            break;
        }
    }
    result.design = design_from_stacks(init, x1, x2);
    return result;
}

}  // namespace flagseq
