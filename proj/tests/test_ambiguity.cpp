#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "flagseq/ambiguity.hpp"
#include "flagseq/curtain.hpp"
#include "oracles.hpp"

using namespace flagseq;

namespace {

ComplexSeq random_seq(int n, std::mt19937_64& rng, int start = 0) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<cplx> s(static_cast<std::size_t>(n));
    for (auto& v : s) v = cplx(g(rng), g(rng));
    return ComplexSeq(std::move(s), start);
}

ComplexSeq unit_energy(const ComplexSeq& s) {
    const double inv = 1.0 / std::sqrt(s.energy());
    std::vector<cplx> v = s.samples();
    for (auto& x : v) x *= inv;
    return ComplexSeq(std::move(v), s.start_index());
}

}  // namespace

TEST_CASE("matched unit-energy pair peaks at 1 at the origin") {
    std::mt19937_64 rng(3);
    const ComplexSeq s = unit_energy(random_seq(24, rng));
    CHECK(af_point(s, s, 0, 0.0, AfCase::Periodic) == doctest::Approx(1.0).epsilon(1e-12));
    const AfGrid g = af_grid(s, s, Zone{3, 3, AfCase::Periodic});
    CHECK(g.at(0, 0) <= 1.0 + 1e-9);
}

TEST_CASE("parity chirp has an ideal periodic curtain on omega = xi*tau") {
    // [xi*N - q] even, |xi| tau_max + omega_max < N.
    const ComplexSeq c = make_chirp({37, 3, 1, 0});
    for (int tau = -5; tau <= 5; ++tau) {
        for (int omega = -5; omega <= 5; ++omega) {
            const double v = af_point(c, c, tau, omega, AfCase::Periodic);
            if (omega == 3 * tau)
                CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
            else
                CHECK(v < 1e-10);
        }
    }
}

TEST_CASE("af_line equals pointwise evaluation on every lattice point") {
    std::mt19937_64 rng(11);
    const ComplexSeq s = unit_energy(random_seq(48, rng));
    const ComplexSeq r = unit_energy(random_seq(48, rng));
    for (const AfCase kase : {AfCase::Periodic, AfCase::Aperiodic}) {
        // Doppler cut (FFT path).
        const auto cut = af_line(s, r, AfLine{5, -7, 0, 1, 15}, kase);
        for (int k = 0; k < 15; ++k)
            CHECK(cut[static_cast<std::size_t>(k)] ==
                  doctest::Approx(af_point(s, r, 5, -7 + k, kase)).epsilon(1e-10));
        // Sloped line (pointwise path).
        const auto diag = af_line(s, r, AfLine{-4, -8, 1, 2, 9}, kase);
        for (int k = 0; k < 9; ++k)
            CHECK(diag[static_cast<std::size_t>(k)] ==
                  doctest::Approx(af_point(s, r, -4 + k, -8 + 2 * k, kase)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(af_line(s, r, AfLine{0, 0, 0, 0, 4}, AfCase::Periodic), param_error);
}

TEST_CASE("doppler cut of a matched chirp is orthogonal across integer bins") {
    const ComplexSeq c = make_chirp({31, 1, 1, 0});
    const auto cut = af_line(c, c, AfLine{0, -5, 0, 1, 11}, AfCase::Periodic);
    for (int k = 0; k < 11; ++k) {
        const int omega = -5 + k;
        if (omega == 0)
            CHECK(cut[static_cast<std::size_t>(k)] == doctest::Approx(1.0).epsilon(1e-12));
        else
            CHECK(cut[static_cast<std::size_t>(k)] < 1e-12);
    }
}

TEST_CASE("grid equals the brute-force double loop") {
    std::mt19937_64 rng(5);
    for (const AfCase kase : {AfCase::Periodic, AfCase::Aperiodic}) {
        const ComplexSeq s = unit_energy(random_seq(33, rng));
        const ComplexSeq r = unit_energy(random_seq(33, rng));
        const Zone zone{4, 4, kase};
        const AfGrid g = af_grid(s, r, zone);
        for (int tau = -4; tau <= 4; ++tau)
            for (int omega = -4; omega <= 4; ++omega)
                CHECK(g.at(tau, omega) ==
                      doctest::Approx(oracle::af_direct(s, r, tau, omega,
                                                        kase == AfCase::Periodic, 33))
                          .epsilon(1e-10));
    }
}

TEST_CASE("fft line agrees with brute force across sizes") {
    std::mt19937_64 rng(17);
    for (int n : {16, 65, 128, 256}) {
        const ComplexSeq s = unit_energy(random_seq(n, rng));
        const ComplexSeq r = unit_energy(random_seq(n, rng));
        for (int tau : {0, 1, -3}) {
            const auto cut = af_line(s, r, AfLine{tau, -2, 0, 1, 5}, AfCase::Periodic);
            for (int k = 0; k < 5; ++k)
                CHECK(std::abs(cut[static_cast<std::size_t>(k)] -
                               oracle::af_direct(s, r, tau, -2 + k, true, n)) < 1e-10);
        }
    }
}

TEST_CASE("periodic AF is N-periodic in delay") {
    std::mt19937_64 rng(23);
    const int n = 29;
    const ComplexSeq s = unit_energy(random_seq(n, rng));
    const ComplexSeq r = unit_energy(random_seq(n, rng));
    for (int tau : {-3, 0, 4, 11}) {
        for (int omega : {-2, 0, 3}) {
            const double a = af_point(s, r, tau, omega, AfCase::Periodic);
            CHECK(std::abs(a - af_point(s, r, tau + n, omega, AfCase::Periodic)) < 1e-12);
            CHECK(std::abs(a - af_point(s, r, tau - n, omega, AfCase::Periodic)) < 1e-12);
        }
    }
}

TEST_CASE("aperiodic AF of constant-amplitude pairs obeys the (N-|tau|)/N bound") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 16 + static_cast<int>(rng() % 113);
        const int xi = 1 + static_cast<int>(rng() % (n - 1));
        const int q = static_cast<int>(rng() % n);
        const int xi2 = 1 + static_cast<int>(rng() % (n - 1));
        const ComplexSeq s = make_chirp({n, xi, q, 0});
        const ComplexSeq r = make_chirp({n, xi2, q, 0});
        for (int tau = -(n - 1); tau < n; tau += std::max(1, n / 7)) {
            for (int omega : {0, 1, n / 2}) {
                const double v = af_point(s, r, tau, omega, AfCase::Aperiodic);
                const double bound = static_cast<double>(n - std::abs(tau)) / n;
                CHECK(v * v <= bound * bound + 1e-12);
            }
        }
    }
}

TEST_CASE("fractional Doppler matches the direct sum") {
    std::mt19937_64 rng(31);
    const ComplexSeq s = unit_energy(random_seq(40, rng));
    const ComplexSeq r = unit_energy(random_seq(40, rng));
    for (double omega : {0.25, -1.75, 3.0625}) {
        CHECK(af_point(s, r, 2, omega, AfCase::Periodic) ==
              doctest::Approx(oracle::af_direct(s, r, 2, omega, true, 40)).epsilon(1e-12));
    }
}

TEST_CASE("parameter errors") {
    std::mt19937_64 rng(37);
    const ComplexSeq a = random_seq(8, rng);
    const ComplexSeq b = random_seq(9, rng);
    CHECK_THROWS_AS(af_point(a, b, 0, 0.0, AfCase::Periodic), param_error);
    CHECK_THROWS_AS(af_grid(a, a, Zone{8, 2, AfCase::Periodic}), param_error);
    CHECK_THROWS_AS(af_grid(a, a, Zone{2, 8, AfCase::Periodic}), param_error);
}

TEST_CASE("grid serialization carries zone metadata") {
    const ComplexSeq c = make_chirp({13, 1, 1, 0});
    const AfGrid g = af_grid(c, c, Zone{2, 2, AfCase::Periodic}, 13, 1, "tx", "rx");
    std::stringstream csv;
    g.write_csv(csv);
    CHECK(csv.str().substr(0, 16) == "tau,omega,value\n");
    const std::string j = g.to_json();
    CHECK(j.find("\"tau_max\":2") != std::string::npos);
    CHECK(j.find("\"s_id\":\"tx\"") != std::string::npos);
}
