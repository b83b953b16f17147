// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "rissim/errors.hpp"
#include "rissim/numkernel.hpp"
#include "rissim/random.hpp"

using namespace rissim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ComplexMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed)
{
    Rng rng(seed, "test");
    return ComplexMatrix::gaussian(r, c, rng);
}

ComplexMatrix random_unitary(std::size_t n, std::uint64_t seed)
{
    const ComplexMatrix a = random_matrix(n, n, seed);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a.mat());
    return ComplexMatrix(Eigen::MatrixXcd(qr.householderQ()));
}

} // namespace

TEST_CASE("ComplexMatrix rejects non-finite entries and bad shapes", "[numkernel]")
{
    const Complex bad[] = {{1.0, 0.0}, {std::numeric_limits<double>::quiet_NaN(), 0.0}};
    CHECK_THROWS_AS(ComplexMatrix::from_rows(1, 2, bad), InvalidInput);
    const Complex ok[] = {{1.0, 0.0}, {2.0, 0.0}};
    CHECK_THROWS_AS(ComplexMatrix::from_rows(2, 2, ok), InvalidInput);
}

TEST_CASE("singular_values on simple matrices", "[numkernel]")
{
    const auto s = singular_values(ComplexMatrix::identity(2));
    REQUIRE(s.size() == 2);
    CHECK_THAT(s[0], WithinAbs(1.0, 1e-15));
    CHECK_THAT(s[1], WithinAbs(1.0, 1e-15));

    const double d[] = {3.0, 0.0};
    const auto s2 = singular_values(ComplexMatrix::diagonal(std::span<const double>(d)));
    CHECK_THAT(s2[0], WithinAbs(3.0, 1e-15));
    CHECK_THAT(s2[1], WithinAbs(0.0, 1e-15));

    CHECK_THROWS_AS(singular_values(ComplexMatrix()), InvalidInput);
}

TEST_CASE("singular_values match the Jacobi oracle", "[numkernel]")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const ComplexMatrix a = random_matrix(4, 6, seed);
        const auto lib = singular_values(a);
        const auto ref = oracle::jacobi_singular_values(oracle::from_library(a));
        REQUIRE(lib.size() == 4);
        REQUIRE(ref.size() == 4);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK_THAT(lib[i], WithinRel(ref[i], 1e-9));
        for (std::size_t i = 1; i < 4; ++i)
            CHECK(lib[i] <= lib[i - 1]);
    }
}

TEST_CASE("svd reconstructs the input", "[numkernel]")
{
    const ComplexMatrix a = random_matrix(5, 3, 77);
    const SvdResult r = svd(a);
    Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(3, 3);
    for (int i = 0; i < 3; ++i)
        sigma(i, i) = r.singular_values[static_cast<std::size_t>(i)];
    const Eigen::MatrixXcd rec = r.left_vectors.mat() * sigma * r.right_vectors.mat().adjoint();
    CHECK((rec - a.mat()).norm() / a.mat().norm() <= 1e-10);
    const Eigen::MatrixXcd uu = r.left_vectors.mat().adjoint() * r.left_vectors.mat();
    CHECK((uu - Eigen::MatrixXcd::Identity(3, 3)).norm() <= 1e-10);
}

TEST_CASE("singular values are unitarily invariant", "[numkernel]")
{
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const ComplexMatrix a = random_matrix(4, 4, seed);
        const ComplexMatrix u = random_unitary(4, seed + 100);
        const ComplexMatrix v = random_unitary(4, seed + 200);
        const auto s0 = singular_values(a);
        const auto s1 = singular_values(u * a * v);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK_THAT(s1[i], WithinRel(s0[i], 1e-9));
    }
}

TEST_CASE("numerical_rank", "[numkernel]")
{
    CHECK(numerical_rank(ComplexMatrix::identity(3), 1e-8) == 3);

    const Complex u[] = {{1.0, 2.0}, {-0.5, 0.3}, {0.0, 1.0}};
    const Complex v[] = {{0.2, -1.0}, {2.0, 0.0}};
    const ComplexMatrix outer = ComplexMatrix::column(u) * ComplexMatrix::column(v).adjoint();
    CHECK(numerical_rank(outer, 1e-8) == 1);

    const ComplexMatrix a = random_matrix(4, 2, 5);
    const ComplexMatrix b = random_matrix(2, 4, 6);
    const ComplexMatrix ab = a * b;
    const std::size_t r = numerical_rank(ab, 1e-8);
    CHECK(r <= 2);
    CHECK(r == oracle::rank(oracle::multiply(oracle::from_library(a), oracle::from_library(b)), 1e-8));

    CHECK(numerical_rank(ComplexMatrix(3, 3), 1e-8) == 0);
    CHECK_THROWS_AS(numerical_rank(ComplexMatrix::identity(2), 0.0), InvalidInput);
    CHECK_THROWS_AS(numerical_rank(ComplexMatrix::identity(2), 1.0), InvalidInput);
}

TEST_CASE("product rank inequality over seeded pairs", "[numkernel][property]")
{
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng dims(seed, "dims");
        const std::size_t m = 1 + dims.uniform_int(5);
        const std::size_t k = 1 + dims.uniform_int(5);
        const std::size_t n = 1 + dims.uniform_int(5);
        const ComplexMatrix a = random_matrix(m, k, derive_seed(seed, "a"));
        const ComplexMatrix b = random_matrix(k, n, derive_seed(seed, "b"));
        CHECK(numerical_rank(a * b) <= std::min(numerical_rank(a), numerical_rank(b)));
    }
}

TEST_CASE("condition_number", "[numkernel]")
{
    CHECK_THAT(condition_number(ComplexMatrix::identity(3)), WithinAbs(1.0, 1e-14));
    const double d[] = {10.0, 1.0};
    CHECK_THAT(condition_number(ComplexMatrix::diagonal(std::span<const double>(d))), WithinRel(10.0, 1e-14));

    Complex ones[4];
    for (auto &o : ones)
        o = {1.0, 0.0};
    const ComplexMatrix steer = ComplexMatrix::column(ones);
    CHECK(std::isinf(condition_number(steer * steer.adjoint())));
    CHECK_THROWS_AS(condition_number(ComplexMatrix(2, 2)), InvalidInput);
}

TEST_CASE("waterfill_capacity closed-form cases", "[numkernel]")
{
    CHECK_THAT(waterfill_capacity(ComplexMatrix::identity(1), 1.0, 1.0), WithinAbs(1.0, 1e-12));
    CHECK_THAT(waterfill_capacity(ComplexMatrix::identity(2), 2.0, 1.0), WithinAbs(2.0, 1e-12));
    CHECK(waterfill_capacity(ComplexMatrix(2, 2), 1.0, 1.0) == 0.0);
    CHECK_THROWS_AS(waterfill_capacity(ComplexMatrix::identity(2), 0.0, 1.0), InvalidInput);
    CHECK_THROWS_AS(waterfill_capacity(ComplexMatrix::identity(2), 1.0, -1.0), InvalidInput);
}

TEST_CASE("waterfill_capacity matches a brute-force power-allocation grid", "[numkernel]")
{
    const ComplexMatrix h = random_matrix(4, 4, 2024);
    const double power = 10.0;
    const auto sv = oracle::jacobi_singular_values(oracle::from_library(h));
    std::vector<double> g;
    for (double s : sv)
        g.push_back(s * s);

    // Grid over the first three powers with step P/400; the fourth takes the rest.
    const int steps = 400;
    const double dp = power / steps;
    double best = 0.0;
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; i + j <= steps; ++j)
            for (int k = 0; i + j + k <= steps; ++k) {
                const double p[4] = {i * dp, j * dp, k * dp, power - (i + j + k) * dp};
                double c = 0.0;
                for (int m = 0; m < 4; ++m)
                    c += std::log2(1.0 + p[m] * g[static_cast<std::size_t>(m)]);
                best = std::max(best, c);
            }
    const double lib = waterfill_capacity(h, power, 1.0);
    CHECK(lib >= best - 1e-9);
    CHECK_THAT(lib, WithinAbs(best, 1e-3));
    CHECK_THAT(lib, WithinAbs(oracle::capacity(oracle::from_library(h), power, 1.0), 1e-9));
}

TEST_CASE("waterfill_capacity properties", "[numkernel][property]")
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const ComplexMatrix h = random_matrix(3, 5, seed);
        double prev = 0.0;
        for (double p : {0.01, 0.1, 1.0, 3.0, 10.0, 100.0}) {
            const double c = waterfill_capacity(h, p, 1.0);
            CHECK(c >= prev);
            CHECK(c >= equal_power_capacity(h, p, 1.0) - 1e-12);
            prev = c;
        }
    }
}

TEST_CASE("waterfill powers meet the budget", "[numkernel]")
{
    const double gains[] = {5.0, 1.0, 0.01};
    const auto p = waterfill_powers(gains, 2.0);
    CHECK_THAT(p[0] + p[1] + p[2], WithinRel(2.0, 1e-10));
    CHECK(p[2] == 0.0);
    CHECK_THAT(p[0] + 1.0 / 5.0, WithinRel(p[1] + 1.0, 1e-10));
}

TEST_CASE("precoded rate of the water-filling precoder equals capacity", "[numkernel]")
{
    const ComplexMatrix h = random_matrix(3, 4, 9);
    const ComplexMatrix f = waterfill_precoder(h, 5.0, 0.5);
    CHECK(f.mat().squaredNorm() <= 5.0 * (1.0 + 1e-10));
    CHECK_THAT(precoded_rate(h, f, 0.5), WithinRel(waterfill_capacity(h, 5.0, 0.5), 1e-10));
}
