// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rissim/channel.hpp"
#include "rissim/errors.hpp"
#include "rissim/random.hpp"

using namespace rissim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

Geometry two_nodes(double wavelength, Point3 a, Point3 b, double spacing)
{
    Geometry g;
    g.wavelength = wavelength;
    g.nodes["a"] = ArrayNode{a, spacing};
    g.nodes["b"] = ArrayNode{b, spacing};
    return g;
}

LinkScenario basic_scenario(std::size_t m, std::size_t n, std::size_t u)
{
    LinkScenario s;
    s.geometry.wavelength = 0.1;
    s.geometry.nodes["nb"] = ArrayNode{{0.0, 0.0, 10.0}, 0.05};
    s.geometry.nodes["ris"] = ArrayNode{{60.0, 10.0, 10.0}, 0.05};
    s.geometry.nodes["ue"] = ArrayNode{{60.0, 30.0, 1.5}, 0.05};
    s.params.rician_k = std::numeric_limits<double>::infinity();
    s.nb_antennas = m;
    s.ris_elements = n;
    s.ue_antennas = u;
    s.nb_ris_wavefront = Wavefront::planar;
    return s;
}

} // namespace

TEST_CASE("gen_los single elements one wavelength apart", "[channel]")
{
    const Geometry g = two_nodes(0.1, {0, 0, 0}, {0.1, 0, 0}, 0.05);
    for (Wavefront w : {Wavefront::planar, Wavefront::spherical}) {
        const ComplexMatrix h = gen_los(g, "a", "b", 1, 1, w);
        CHECK_THAT(h(0, 0).real(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(h(0, 0).imag(), WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("gen_los planar model is rank one with unit-modulus entries", "[channel]")
{
    Rng rng(11, "geometry");
    for (int t = 0; t < 25; ++t) {
        const Point3 a{rng.uniform() * 10, rng.uniform() * 10, rng.uniform() * 10};
        const Point3 b{50 + rng.uniform() * 10, rng.uniform() * 40, rng.uniform() * 10};
        Geometry g = two_nodes(0.1, a, b, 0.05 + rng.uniform() * 0.1);
        g.nodes["b"].axis = {rng.uniform(), rng.uniform(), 1.0};
        const ComplexMatrix h = gen_los(g, "a", "b", 6, 5, Wavefront::planar);
        CHECK(numerical_rank(h, 1e-8) == 1);
        for (std::size_t r = 0; r < 6; ++r)
            for (std::size_t c = 0; c < 5; ++c)
                CHECK_THAT(std::abs(h(r, c)), WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("gen_los spherical entries use exact element distances", "[channel]")
{
    const Geometry g = two_nodes(0.1, {0, 0, 0}, {3.0, 1.0, 0.5}, 0.07);
    const ComplexMatrix h = gen_los(g, "a", "b", 3, 4, Wavefront::spherical);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            const Point3 pr = g.nodes.at("b").element(r, 3);
            const Point3 pc = g.nodes.at("a").element(c, 4);
            const double d = std::sqrt((pr.x - pc.x) * (pr.x - pc.x) + (pr.y - pc.y) * (pr.y - pc.y) +
                                       (pr.z - pc.z) * (pr.z - pc.z));
            const Complex expected = std::polar(1.0, -2.0 * kPi * d / 0.1);
            CHECK_THAT(std::abs(h(r, c) - expected), WithinAbs(0.0, 1e-9));
        }
}

TEST_CASE("spherical wavefront improves conditioning in the near field", "[channel]")
{
    // 4x4 arrays with 10 wavelength aperture at 50 wavelengths.
    const double lambda = 1.0;
    const Geometry g = two_nodes(lambda, {0, 0, 0}, {50, 0, 0}, 10.0 / 3.0);
    const double planar = condition_number(gen_los(g, "a", "b", 4, 4, Wavefront::planar));
    const double spherical = condition_number(gen_los(g, "a", "b", 4, 4, Wavefront::spherical));
    CHECK(std::isfinite(spherical));
    CHECK(spherical < planar);
}

TEST_CASE("gen_los geometry errors", "[channel]")
{
    const Geometry same = two_nodes(0.1, {1, 1, 1}, {1, 1, 1}, 0.05);
    CHECK_THROWS_AS(gen_los(same, "a", "b", 1, 1, Wavefront::spherical), InvalidGeometry);
    CHECK_THROWS_AS(gen_los(same, "a", "b", 1, 1, Wavefront::planar), InvalidGeometry);
    const Geometry tight = two_nodes(0.1, {0, 0, 0}, {10, 0, 0}, 0.01);
    CHECK_THROWS_AS(gen_los(tight, "a", "b", 2, 2, Wavefront::planar), InvalidGeometry);
    CHECK_THROWS(gen_los(tight, "a", "missing", 1, 1, Wavefront::planar));
}

TEST_CASE("gen_rician limits and determinism", "[channel]")
{
    const Geometry g = two_nodes(0.1, {0, 0, 0}, {20, 3, 0}, 0.05);
    const ComplexMatrix los = gen_los(g, "a", "b", 4, 3, Wavefront::spherical);
    ChannelParams p;
    p.rician_k = 1e12;
    const ComplexMatrix near_los = gen_rician(p, los, 5);
    CHECK((near_los - los).frobenius_norm() / los.frobenius_norm() <= 1e-5);

    p.rician_k = 0.0;
    CHECK(gen_rician(p, los, 42) == gen_rician(p, los, 42));
    CHECK_FALSE(gen_rician(p, los, 42) == gen_rician(p, los, 43));

    // Per-entry variance of the Rayleigh case.
    const ComplexMatrix one = ComplexMatrix::identity(1);
    double acc = 0.0;
    Complex mean = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const Complex v = gen_rician(p, one, derive_seed(7, static_cast<std::uint64_t>(i)))(0, 0);
        acc += std::norm(v);
        mean += v;
    }
    CHECK_THAT(acc / draws, WithinAbs(1.0, 0.02));
    CHECK(std::abs(mean / static_cast<double>(draws)) < 0.03);
}

TEST_CASE("segmented_path_loss", "[channel]")
{
    const double lambda = 0.1;
    const double d0 = lambda / (4.0 * kPi);
    Geometry g;
    g.wavelength = lambda;
    g.nodes["nb"] = ArrayNode{{0, 0, 0}, 0.05};
    g.nodes["ris"] = ArrayNode{{d0, 0, 0}, 0.05};
    g.nodes["ue"] = ArrayNode{{d0, d0, 0}, 0.05};
    ChannelParams p;
    p.path_loss_exponent = 2.0;
    CHECK_THAT(segmented_path_loss(g, p, true), WithinRel(1.0, 1e-12));
    CHECK_THAT(hop_gain(lambda, d0, 2.0), WithinRel(1.0, 1e-12));

    g.nodes["ris"].position = {100, 0, 0};
    g.nodes["ue"].position = {100, 100, 0};
    const double h1 = std::pow(lambda / (4.0 * kPi * 100.0), 2.0);
    const double h2 = std::pow(lambda / (4.0 * kPi * 100.0), 2.0);
    CHECK(segmented_path_loss(g, p, true) == hop_gain(lambda, 100.0, 2.0) * hop_gain(lambda, 100.0, 2.0));
    CHECK_THAT(segmented_path_loss(g, p, true), WithinRel(h1 * h2, 1e-12));
    CHECK(segmented_path_loss(g, p, true) <= h1);
    CHECK_THAT(segmented_path_loss(g, p, false), WithinRel(std::pow(lambda / (4.0 * kPi * std::sqrt(2e4)), 2.0), 1e-12));

    g.nodes["ue"].position = g.nodes["ris"].position;
    CHECK_THROWS_AS(segmented_path_loss(g, p, true), InvalidGeometry);
    CHECK_THROWS_AS(hop_gain(lambda, 0.0, 2.0), InvalidGeometry);
}

TEST_CASE("assemble_effective identity reflection and scalar expansion", "[channel]")
{
    LinkScenario s = basic_scenario(3, 5, 2);
    s.params.rician_k = 0.0;
    s.direct_path = false;
    ChannelRealization r = draw_realization(s, 3);
    r.pl_nb_ris = r.pl_ris_ue = 1.0;
    const RisPanel panel(5);
    CHECK(assemble_effective(r, panel) == r.h_ris_ue * r.g_nb_ris);

    ChannelRealization sc;
    const Complex h(0.3, -0.4), g(1.2, 0.1), d(-0.2, 0.7);
    sc.h_ris_ue = ComplexMatrix::from_rows(1, 1, std::span<const Complex>(&h, 1));
    sc.g_nb_ris = ComplexMatrix::from_rows(1, 1, std::span<const Complex>(&g, 1));
    sc.h_nb_ue = ComplexMatrix::from_rows(1, 1, std::span<const Complex>(&d, 1));
    RisPanel p1(1);
    p1.set_phase(0, 0.9);
    p1.set_amplitude(0, 0.6);
    const Complex th = std::polar(0.6, 0.9);
    const Complex got = assemble_effective(sc, p1)(0, 0);
    CHECK(std::abs(got - (h * th * g + d)) <= 1e-15);
}

TEST_CASE("assemble_effective matches a triple-loop reference", "[channel]")
{
    LinkScenario s = basic_scenario(2, 4, 2);
    s.params.rician_k = 0.0;
    s.direct_path = true;
    const ChannelRealization r = draw_realization(s, 99);
    RisPanel panel(4);
    Rng rng(1, "phases");
    for (std::size_t n = 0; n < 4; ++n) {
        panel.set_phase(n, rng.phase());
        panel.set_amplitude(n, rng.uniform());
    }
    const double beta = 1.7;
    const ComplexMatrix got = assemble_effective(r, panel, beta);
    const double amp = std::sqrt(r.pl_nb_ris * r.pl_ris_ue) * beta;
    for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t m = 0; m < 2; ++m) {
            Complex acc = 0.0;
            for (std::size_t n = 0; n < 4; ++n)
                acc += r.h_ris_ue(u, n) * std::polar(panel.amplitudes()[n], panel.phases()[n]) * r.g_nb_ris(n, m);
            acc = amp * acc + std::sqrt(r.pl_nb_ue) * (*r.h_nb_ue)(u, m);
            CHECK(std::abs(got(u, m) - acc) <= 1e-12 * std::max(1.0, std::abs(acc)));
        }

    CHECK_THROWS_AS(assemble_effective(r, RisPanel(3)), InvalidInput);
}

TEST_CASE("keyhole: pure-LoS planar NB-RIS hop gives rank one", "[channel][property]")
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng dims(seed, "dims");
        const std::size_t sizes[] = {2, 4, 8};
        LinkScenario s = basic_scenario(sizes[dims.uniform_int(2)], dims.uniform_int(1) ? 64 : 16, sizes[dims.uniform_int(2)]);
        s.direct_path = false;
        const ChannelRealization r = draw_realization(s, seed);
        RisPanel panel(s.ris_elements);
        for (std::size_t n = 0; n < s.ris_elements; ++n)
            panel.set_phase(n, dims.phase());
        CHECK(numerical_rank(assemble_effective(r, panel), 1e-8) == 1);
    }
}

TEST_CASE("dominant RIS term controls the singular values", "[channel][property]")
{
    LinkScenario s = basic_scenario(4, 32, 4);
    s.params.rician_k = 0.0;
    s.direct_path = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        ChannelRealization r = draw_realization(s, seed);
        r.pl_nb_ris = r.pl_ris_ue = r.pl_nb_ue = 1.0;
        const RisPanel panel(32);
        const ComplexMatrix ris_only = assemble_cascade(r, panel);
        const double beta = 100.0 * r.h_nb_ue->frobenius_norm() / ris_only.frobenius_norm() * 1.01;
        const auto total = singular_values(assemble_effective(r, panel, beta));
        const auto ris = singular_values(assemble_cascade(r, panel, beta));
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < total.size(); ++i) {
            diff += (total[i] - ris[i]) * (total[i] - ris[i]);
            ref += ris[i] * ris[i];
        }
        CHECK(std::sqrt(diff / ref) < 0.02);
    }
}

TEST_CASE("draw_realization is deterministic and honors the direct-path flag", "[channel]")
{
    LinkScenario s = basic_scenario(2, 8, 2);
    s.params.rician_k = 3.0;
    CHECK(draw_realization(s, 17) == draw_realization(s, 17));
    CHECK_FALSE(draw_realization(s, 17) == draw_realization(s, 18));
    s.direct_path = false;
    const ChannelRealization r = draw_realization(s, 1);
    CHECK_FALSE(r.h_nb_ue.has_value());
    CHECK(r.pl_nb_ue == 0.0);
    CHECK(r.g_nb_ris.rows() == 8);
    CHECK(r.g_nb_ris.cols() == 2);
    CHECK(r.h_ris_ue.rows() == 2);
}

TEST_CASE("Fraunhofer test selects the wavefront", "[channel]")
{
    Geometry g = two_nodes(0.1, {0, 0, 0}, {5, 0, 0}, 0.05);
    // Aperture 63 * 0.05 = 3.15 m; far-field distance about 198 m.
    CHECK(fraunhofer_wavefront(g, "a", "b", 4, 64) == Wavefront::spherical);
    g.nodes["b"].position = {500, 0, 0};
    CHECK(fraunhofer_wavefront(g, "a", "b", 4, 64) == Wavefront::planar);
}

TEST_CASE("received_signal", "[channel]")
{
    ChannelRealization sc;
    const Complex h(0.5, 0.5), g(2.0, -1.0);
    sc.h_ris_ue = ComplexMatrix::from_rows(1, 1, std::span<const Complex>(&h, 1));
    sc.g_nb_ris = ComplexMatrix::from_rows(1, 1, std::span<const Complex>(&g, 1));
    RisPanel panel(1);
    panel.set_phase(0, 1.1);
    SignalModel sig;
    const Complex f(0.8, 0.0), x(0.6, -0.8);
    sig.precoder = ComplexMatrix::from_rows(1, 1, std::span<const Complex>(&f, 1));
    sig.symbols = {x};
    sig.noise_power = 0.0;
    const auto y = received_signal(sc, panel, sig, 5);
    CHECK(std::abs(y[0] - h * std::polar(1.0, 1.1) * g * f * x) <= 1e-15);

    // Zero input leaves pure noise, reproducible from the labelled stream.
    sig.symbols = {Complex(0.0, 0.0)};
    sig.noise_power = 0.3;
    const auto w = received_signal(sc, panel, sig, 8);
    Rng ref(8, "received_signal");
    CHECK(w[0] == ref.complex_normal(0.3));

    // Compositional reference on a larger instance.
    LinkScenario s = basic_scenario(3, 6, 2);
    s.params.rician_k = 0.0;
    const ChannelRealization r = draw_realization(s, 4);
    RisPanel p6(6);
    Rng rng(2, "x");
    SignalModel big;
    big.precoder = ComplexMatrix::gaussian(3, 2, rng);
    big.symbols = {rng.complex_normal(1.0), rng.complex_normal(1.0)};
    big.noise_power = 1e-3;
    const auto yb = received_signal(r, p6, big, 21);
    const ComplexMatrix x2 = ComplexMatrix::column(big.symbols);
    const ComplexMatrix clean = assemble_effective(r, p6) * big.precoder * x2;
    Rng noise(21, "received_signal");
    for (std::size_t u = 0; u < 2; ++u)
        CHECK(std::abs(yb[u] - (clean(u, 0) + noise.complex_normal(1e-3))) <= 1e-12);

    big.power_budget = 1e-6;
    CHECK_THROWS_AS(received_signal(r, p6, big, 1), InvalidInput);
}
