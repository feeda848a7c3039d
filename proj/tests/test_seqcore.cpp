#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "flagseq/seqcore.hpp"

using namespace flagseq;

TEST_CASE("zero chirp rate gives a constant sequence") {
    const ComplexSeq c = make_chirp({4, 0, 0, 0});
    REQUIRE(c.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(c[i].real() == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(c[i].imag() == doctest::Approx(0.0).epsilon(1e-15));
    }
}

TEST_CASE("chirp samples match a termwise scalar evaluation") {
    const int n = 1021;
    const ComplexSeq c = make_chirp({n, 1, 1, 0});
    CHECK(std::abs(c[0] - cplx(1.0 / std::sqrt(1021.0), 0.0)) < 1e-15);
    // Independent scalar path: accumulate the phase modulo 2*pi in long double.
    const long double scale = 1.0L / std::sqrt(static_cast<long double>(n));
    for (int i = 0; i < n; i += 97) {
        long double phase = std::fmod(static_cast<long double>(i) * (i + 1) / n, 2.0L) *
                            static_cast<long double>(kPi);
        const cplx expect(static_cast<double>(scale * std::cos(phase)),
                          static_cast<double>(scale * std::sin(phase)));
        CHECK(std::abs(c[i] - expect) < 1e-12);
    }
}

TEST_CASE("chirp energy is 1 and modulus is 1/sqrt(N) for any valid parameters") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 300);
        const int xi = static_cast<int>(rng() % (2 * n - 1)) - (n - 1);
        const int q = static_cast<int>(rng() % (2 * n - 1)) - (n - 1);
        const ComplexSeq c = make_chirp({n, xi, q, 0});
        CHECK(std::abs(c.energy() - 1.0) < 1e-12);
        const double mod = 1.0 / std::sqrt(static_cast<double>(n));
        for (int i = 0; i < n; ++i) CHECK(std::abs(std::abs(c[i]) - mod) < 1e-12);
        CHECK(papr(c).linear == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("chirp parameter ranges are enforced") {
    CHECK_THROWS_AS(make_chirp({8, 8, 0, 0}), param_error);
    CHECK_THROWS_AS(make_chirp({8, 0, -8, 0}), param_error);
    CHECK_THROWS_AS(make_chirp({0, 0, 0, 0}), param_error);
}

TEST_CASE("extended reference continues the chirp formula on both sides") {
    const ChirpParams p{8, 1, 0, 2};
    const ComplexSeq e = extend_chirp(p);
    REQUIRE(e.size() == 12);
    REQUIRE(e.start_index() == -2);
    // Sample at n = -1: exp(j*pi*(-1)(-xi+q)/N)/sqrt(N).
    const cplx expect = std::polar(1.0 / std::sqrt(8.0), kPi * (-1) * (-1 + 0) / 8.0);
    CHECK(std::abs(e.at(-1) - expect) < 1e-15);
    CHECK(e.energy() == doctest::Approx(12.0 / 8.0).epsilon(1e-12));
    CHECK_THROWS_AS(extend_chirp({8, 1, 0, 0}), param_error);
}

TEST_CASE("zero padding preserves samples and energy") {
    const ComplexSeq one(std::vector<cplx>{cplx(1.0, 0.0)}, 0);
    const ComplexSeq padded = zero_pad(one, 1);
    REQUIRE(padded.size() == 3);
    CHECK(padded.start_index() == -1);
    CHECK(padded.at(-1) == cplx(0.0, 0.0));
    CHECK(padded.at(0) == cplx(1.0, 0.0));
    CHECK(padded.at(1) == cplx(0.0, 0.0));

    const ComplexSeq c = make_chirp({17, 3, 2, 0});
    const ComplexSeq cp = zero_pad(c, 5);
    CHECK(cp.size() == 17 + 10);
    CHECK(cp.energy() == doctest::Approx(c.energy()).epsilon(1e-15));
    // Restricting back to the support recovers the original bit for bit.
    for (int i = 0; i < c.size(); ++i) CHECK(cp.at(i) == c[i]);
}

TEST_CASE("papr of a delta is N and of constant modulus is 0 dB") {
    std::vector<cplx> delta(16, cplx(0.0, 0.0));
    delta[3] = cplx(1.0, 0.0);
    const Papr pd = papr(ComplexSeq(delta, 0));
    CHECK(pd.linear == doctest::Approx(16.0));
    const Papr pc = papr(make_chirp({16, 1, 0, 0}));
    CHECK(pc.db == doctest::Approx(0.0).epsilon(1e-10));
    CHECK_THROWS_AS(papr(ComplexSeq(std::vector<cplx>(4, cplx(0.0, 0.0)), 0)), domain_error);
}

TEST_CASE("json and csv round trips keep samples exactly") {
    const ComplexSeq e = extend_chirp({11, 2, 1, 3});
    const ComplexSeq via_json = ComplexSeq::from_json(e.to_json());
    REQUIRE(via_json.size() == e.size());
    CHECK(via_json.start_index() == e.start_index());
    for (int i = 0; i < e.size(); ++i) CHECK(via_json[i] == e[i]);

    std::stringstream csv;
    e.write_csv(csv);
    const ComplexSeq via_csv = ComplexSeq::read_csv(csv);
    REQUIRE(via_csv.size() == e.size());
    CHECK(via_csv.start_index() == e.start_index());
    for (int i = 0; i < e.size(); ++i) CHECK(std::abs(via_csv[i] - e[i]) < 1e-16);
}
