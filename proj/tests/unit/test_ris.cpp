// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "rissim/channel.hpp"
#include "rissim/errors.hpp"
#include "rissim/random.hpp"
#include "rissim/ris.hpp"

using namespace rissim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

double circular_distance(double a, double b)
{
    const double d = std::fmod(std::abs(a - b), 2.0 * kPi);
    return std::min(d, 2.0 * kPi - d);
}

ComplexVector random_vector(std::size_t n, Rng &rng)
{
    ComplexVector v(n);
    for (auto &x : v)
        x = rng.complex_normal(1.0);
    return v;
}

ChannelRealization rayleigh_link(std::size_t m, std::size_t n, std::size_t u, std::uint64_t seed, bool direct = false)
{
    Rng rng(seed, "link");
    ChannelRealization r;
    r.g_nb_ris = ComplexMatrix::gaussian(n, m, rng);
    r.h_ris_ue = ComplexMatrix::gaussian(u, n, rng);
    if (direct)
        r.h_nb_ue = ComplexMatrix::gaussian(u, m, rng);
    else
        r.pl_nb_ue = 0.0;
    r.seed = seed;
    return r;
}

} // namespace

TEST_CASE("theta from amplitudes and phases", "[ris]")
{
    RisPanel p(4);
    for (const Complex &t : theta(p).diagonal)
        CHECK(t == Complex(1.0, 0.0));
    const double zeros[] = {0.0, 0.0, 0.0, 0.0};
    p.set_amplitudes(zeros);
    for (const Complex &t : theta(p).diagonal)
        CHECK(t == Complex(0.0, 0.0));

    RisPanel one(1);
    one.set_amplitude(0, 0.5);
    one.set_phase(0, kPi);
    CHECK(std::abs(theta(one).diagonal[0] - Complex(-0.5, 0.0)) <= 1e-15);
}

TEST_CASE("panel invariants are enforced by setters", "[ris]")
{
    RisPanel p(3);
    CHECK_THROWS_AS(p.set_amplitude(0, 1.5), InvalidInput);
    CHECK_THROWS_AS(p.set_amplitude(0, -0.1), InvalidInput);
    CHECK_THROWS_AS(p.set_phase(3, 0.0), InvalidInput);
    p.set_phase(1, -0.5);
    CHECK(p.phases()[1] >= 0.0);
    CHECK(p.phases()[1] < 2.0 * kPi);
    p.set_phase(2, 2.0 * kPi);
    CHECK(p.phases()[2] == 0.0);

    p.set_quantization_bits(2);
    p.set_phase(0, 1.0);
    CHECK_THAT(p.phases()[0], WithinAbs(kPi / 2.0, 1e-15));

    CHECK_THROWS_AS(p.set_partition({{0, 2}, {1, 2}}), InvalidInput);
    CHECK_THROWS_AS(p.set_partition({{2, 2}}), InvalidInput);
    CHECK_THROWS_AS(RisPanel(0), InvalidInput);
}

TEST_CASE("quantize_phases examples", "[ris]")
{
    CHECK(quantize_phase(0.1, 1) == 0.0);
    CHECK_THAT(quantize_phase(kPi - 0.1, 1), WithinAbs(kPi, 1e-15));
    // Ties go to the smaller grid index, including the wrap back to 0.
    CHECK(quantize_phase(kPi / 2.0, 1) == 0.0);
    CHECK(quantize_phase(3.0 * kPi / 2.0, 1) == 0.0);

    RisPanel p(360);
    for (std::size_t k = 0; k < 360; ++k)
        p.set_phase(k, 2.0 * kPi * static_cast<double>(k) / 360.0);
    p.set_amplitude(7, 0.25);
    const RisPanel q = quantize_phases(p, 2);
    CHECK(q.amplitudes() == p.amplitudes());
    for (std::size_t k = 0; k < 360; ++k) {
        const double out = q.phases()[k];
        CHECK(circular_distance(out, p.phases()[k]) <= kPi / 4.0 + 1e-12);
        const double idx = out / (kPi / 2.0);
        CHECK_THAT(idx, WithinAbs(std::round(idx), 1e-12));
        // No other grid point is strictly closer.
        for (int j = 0; j < 4; ++j)
            CHECK(circular_distance(out, p.phases()[k]) <= circular_distance(j * kPi / 2.0, p.phases()[k]) + 1e-12);
    }
}

TEST_CASE("align_phases_miso examples", "[ris]")
{
    const ComplexVector ones(16, Complex(1.0, 0.0));
    const RisPanel p = align_phases_miso(ones, ones, 0.0);
    CHECK_THAT(std::norm(miso_composite(ones, ones, p, 0.0)), WithinRel(256.0, 1e-12));

    const ComplexVector h{std::polar(1.0, kPi / 3.0)};
    const ComplexVector g{std::polar(1.0, kPi / 6.0)};
    const RisPanel p1 = align_phases_miso(g, h, 0.0);
    CHECK(circular_distance(p1.phases()[0], -kPi / 2.0) <= 1e-12);
    CHECK_THAT(std::abs(miso_composite(g, h, p1, 0.0)), WithinAbs(1.0, 1e-12));

    CHECK_THROWS_AS(align_phases_miso(ComplexVector{}, ComplexVector{}, 0.0), InvalidInput);
}

TEST_CASE("aligned phases beat random unit-modulus configurations", "[ris][property]")
{
    Rng rng(3, "align");
    for (int t = 0; t < 50; ++t) {
        const ComplexVector g = random_vector(8, rng);
        const ComplexVector h = random_vector(8, rng);
        const Complex d = rng.complex_normal(1.0);
        const double best = std::abs(miso_composite(g, h, align_phases_miso(g, h, d), d));
        double amp = std::abs(d);
        for (std::size_t n = 0; n < 8; ++n)
            amp += std::abs(g[n] * h[n]);
        CHECK_THAT(best, WithinRel(amp, 1e-12));
        for (int k = 0; k < 20; ++k) {
            RisPanel r(8);
            for (std::size_t n = 0; n < 8; ++n)
                r.set_phase(n, rng.phase());
            CHECK(std::abs(miso_composite(g, h, r, d)) <= best + 1e-12);
        }
    }
}

TEST_CASE("N-squared law for unit-modulus channels", "[ris][property]")
{
    Rng rng(5, "n2");
    for (std::size_t n = 1; n <= 256; n *= 2) {
        ComplexVector g(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
            g[i] = std::polar(1.0, rng.phase());
            h[i] = std::polar(1.0, rng.phase());
        }
        const RisPanel p = align_phases_miso(g, h, 0.0);
        CHECK_THAT(std::norm(miso_composite(g, h, p, 0.0)), WithinRel(static_cast<double>(n * n), 1e-9));
    }
}

TEST_CASE("discrete alignment equals the exhaustive 1-bit optimum", "[ris]")
{
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed, "bits");
        const ComplexVector g = random_vector(4, rng);
        const ComplexVector h = random_vector(4, rng);
        double brute = 0.0;
        for (unsigned mask = 0; mask < 16; ++mask) {
            Complex acc = 0.0;
            for (std::size_t n = 0; n < 4; ++n)
                acc += g[n] * h[n] * ((mask >> n) & 1u ? -1.0 : 1.0);
            brute = std::max(brute, std::norm(acc));
        }
        const RisPanel opt = align_phases_discrete(g, h, 0.0, 1);
        CHECK(opt.quantization_bits() == 1);
        CHECK_THAT(std::norm(miso_composite(g, h, opt, 0.0)), WithinRel(brute, 1e-12));

        const RisPanel naive = quantize_phases(align_phases_miso(g, h, 0.0), 1);
        CHECK(std::norm(miso_composite(g, h, naive, 0.0)) <= brute * (1.0 + 1e-12));
    }
}

TEST_CASE("discrete alignment at 2 bits with a direct path", "[ris]")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed, "bits2");
        const ComplexVector g = random_vector(5, rng);
        const ComplexVector h = random_vector(5, rng);
        const Complex d = rng.complex_normal(1.0);
        double brute = 0.0;
        for (unsigned code = 0; code < 1024; ++code) {
            Complex acc = d;
            for (std::size_t n = 0; n < 5; ++n)
                acc += g[n] * h[n] * std::polar(1.0, kPi / 2.0 * ((code >> (2 * n)) & 3u));
            brute = std::max(brute, std::norm(acc));
        }
        CHECK_THAT(std::norm(miso_composite(g, h, align_phases_discrete(g, h, d, 2), d)), WithinRel(brute, 1e-12));
    }
}

TEST_CASE("optimize_phases_mimo single element matches alignment", "[ris]")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const ChannelRealization r = rayleigh_link(1, 1, 1, seed, true);
        const MimoOptResult res = optimize_phases_mimo(r, RisPanel(1), 1.0, 1.0, 20, 1e-9);
        const MisoChannel miso = effective_miso(r);
        const RisPanel aligned = align_phases_miso(miso.g, miso.h, miso.direct);
        CHECK(circular_distance(res.panel.phases()[0], aligned.phases()[0]) <= 2.0 * kPi / 64.0);
    }
}

TEST_CASE("optimize_phases_mimo ascent is monotone and never below the start", "[ris][property]")
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const ChannelRealization r = rayleigh_link(2, 8, 2, seed, seed % 2 == 0);
        const RisPanel start(8);
        const MimoOptResult res = optimize_phases_mimo(r, start, 10.0, 1.0, 15, 1e-9);
        REQUIRE_FALSE(res.trace.empty());
        for (std::size_t i = 1; i < res.trace.size(); ++i)
            CHECK(res.trace[i] >= res.trace[i - 1]);
        CHECK(res.capacity >= waterfill_capacity(assemble_effective(r, start), 10.0, 1.0) - 1e-12);
        CHECK_THAT(res.capacity, WithinRel(waterfill_capacity(assemble_effective(r, res.panel), 10.0, 1.0), 1e-9));
        CHECK(res.iterations >= 0);
        CHECK(res.iterations <= 15);
        for (const Complex &t : theta(res.panel).diagonal)
            CHECK(std::abs(t) <= 1.0 + 1e-15);
    }
}

TEST_CASE("optimize_phases_mimo keeps quantized panels on the grid", "[ris]")
{
    const ChannelRealization r = rayleigh_link(2, 6, 2, 4);
    RisPanel start(6);
    start.set_quantization_bits(2);
    const MimoOptResult res = optimize_phases_mimo(r, start, 5.0, 1.0, 10, 1e-9);
    for (double phi : res.panel.phases()) {
        const double idx = phi / (kPi / 2.0);
        CHECK_THAT(idx, WithinAbs(std::round(idx), 1e-12));
    }
    CHECK_THROWS_AS(optimize_phases_mimo(r, start, 5.0, 1.0, 0, 1e-9), InvalidInput);
    CHECK_THROWS_AS(optimize_phases_mimo(r, start, 5.0, 1.0, 5, 0.0), InvalidInput);
}

TEST_CASE("partition_panel", "[ris]")
{
    const RisPanel base(64);
    const std::size_t whole[] = {64};
    const RisPanel a = partition_panel(base, whole);
    REQUIRE(a.partition().size() == 1);
    CHECK(a.partition()[0] == IndexRange{0, 64});
    CHECK(a.amplitude_sum() == 64.0);

    const std::size_t halves[] = {32, 32};
    const RisPanel b = partition_panel(base, halves);
    REQUIRE(b.partition().size() == 2);
    CHECK(b.partition()[0] == IndexRange{0, 32});
    CHECK(b.partition()[1] == IndexRange{32, 32});

    const std::size_t quarters[] = {16, 16};
    const RisPanel c = partition_panel(base, quarters);
    CHECK(c.amplitude_sum() == 32.0);
    for (std::size_t n = 32; n < 64; ++n)
        CHECK(c.amplitudes()[n] == 0.0);

    // Per-user gain of one 16-element block against the whole panel, all-ones channel.
    const ComplexVector ones(64, Complex(1.0, 0.0));
    const MisoChannel full{ones, ones, 0.0};
    const MisoChannel block = restrict_miso(full, c.partition()[0]);
    const double whole_power = std::norm(miso_composite(ones, ones, align_phases_miso(ones, ones, 0.0), 0.0));
    const double block_power =
        std::norm(miso_composite(block.g, block.h, align_phases_miso(block.g, block.h, 0.0), 0.0));
    CHECK_THAT(block_power / whole_power, WithinRel(1.0 / 16.0, 1e-12));

    const std::size_t too_many[] = {40, 30};
    CHECK_THROWS_AS(partition_panel(base, too_many), InvalidInput);
}

TEST_CASE("whole-panel alignment dominates any block", "[ris][property]")
{
    Rng rng(8, "blocks");
    for (int t = 0; t < 30; ++t) {
        const ComplexVector g = random_vector(32, rng);
        const ComplexVector h = random_vector(32, rng);
        const double whole = std::norm(miso_composite(g, h, align_phases_miso(g, h, 0.0), 0.0));
        const std::size_t begin = rng.uniform_int(31);
        const std::size_t size = 1 + rng.uniform_int(31 - begin);
        const MisoChannel blk = restrict_miso(MisoChannel{g, h, 0.0}, IndexRange{begin, size});
        const double part = std::norm(miso_composite(blk.g, blk.h, align_phases_miso(blk.g, blk.h, 0.0), 0.0));
        CHECK(whole >= part);
    }
}
