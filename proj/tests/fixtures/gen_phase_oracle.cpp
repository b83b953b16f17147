// SPDX-License-Identifier: Apache-2.0
// Writes the exhaustive phase-search fixture used by the acceptance suite.
//
// Channels are drawn with std::mt19937_64 / std::normal_distribution, not the
// library RNG. For each instance every 3-bit phase assignment of an 8-element
// surface is tried (element 0 fixed to phase 0: capacity is invariant under a
// common phase rotation) and the best water-filling capacity is recorded.
//
// usage: gen_phase_oracle <out.json>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"

namespace {

using cd = std::complex<double>;

constexpr int kM = 2;
constexpr int kU = 2;
constexpr int kN = 8;
constexpr int kLevels = 8;
constexpr int kInstances = 10;
constexpr double kPower = 10.0;
constexpr double kNoise = 1.0;
constexpr std::uint64_t kSeed = 20240611;

struct Instance {
    std::array<cd, kN * kM> g; // N x M row-major
    std::array<cd, kU * kN> h; // U x N row-major
};

// Effective U x M channel, row-major.
std::array<cd, 4> effective(const Instance &in, const std::array<int, kN> &idx)
{
    std::array<cd, 4> t{};
    for (int n = 0; n < kN; ++n) {
        const cd th = std::polar(1.0, 2.0 * std::numbers::pi * idx[n] / kLevels);
        for (int u = 0; u < kU; ++u)
            for (int m = 0; m < kM; ++m)
                t[u * kM + m] += in.h[u * kN + n] * th * in.g[n * kM + m];
    }
    return t;
}

nlohmann::json complex_rows(const cd *a, int rows, int cols)
{
    nlohmann::json out = nlohmann::json::array();
    for (int r = 0; r < rows; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < cols; ++c)
            row.push_back({a[r * cols + c].real(), a[r * cols + c].imag()});
        out.push_back(row);
    }
    return out;
}

} // namespace

int main(int argc, char **argv)
{
    if (argc != 2) {
        std::cerr << "usage: gen_phase_oracle <out.json>\n";
        return 1;
    }
    std::mt19937_64 rng(kSeed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));

    std::array<cd, kLevels> phasor;
    for (int l = 0; l < kLevels; ++l)
        phasor[l] = std::polar(1.0, 2.0 * std::numbers::pi * l / kLevels);

    nlohmann::json doc;
    doc["M"] = kM;
    doc["U"] = kU;
    doc["N"] = kN;
    doc["phase_levels"] = kLevels;
    doc["power"] = kPower;
    doc["noise"] = kNoise;
    doc["seed"] = kSeed;
    doc["instances"] = nlohmann::json::array();

    for (int k = 0; k < kInstances; ++k) {
        Instance in;
        for (auto &v : in.g)
            v = {normal(rng), normal(rng)};
        for (auto &v : in.h)
            v = {normal(rng), normal(rng)};

        // Rank-one term per element: h_n g_n^T.
        std::array<std::array<cd, 4>, kN> term;
        for (int n = 0; n < kN; ++n)
            for (int u = 0; u < kU; ++u)
                for (int m = 0; m < kM; ++m)
                    term[n][u * kM + m] = in.h[u * kN + n] * in.g[n * kM + m];

        std::array<int, kN> idx{};
        std::array<cd, 4> t{};
        for (int n = 0; n < kN; ++n)
            for (int e = 0; e < 4; ++e)
                t[e] += term[n][e];

        double best = -1.0;
        std::array<int, kN> best_idx{};
        // Odometer over elements 1..N-1 with incremental updates; refreshed on every outer carry.
        while (true) {
            const double c = oracle::capacity_2x2(t.data(), kPower, kNoise);
            if (c > best) {
                best = c;
                best_idx = idx;
            }
            int n = 1;
            while (n < kN) {
                const int old = idx[n];
                idx[n] = (old + 1) % kLevels;
                const cd delta = phasor[idx[n]] - phasor[old];
                for (int e = 0; e < 4; ++e)
                    t[e] += delta * term[n][e];
                if (idx[n] != 0)
                    break;
                ++n;
            }
            if (n == kN)
                break;
            if (n >= 3)
                t = effective(in, idx);
        }
        const double exact = oracle::capacity_2x2(effective(in, best_idx).data(), kPower, kNoise);

        nlohmann::json j;
        j["g"] = complex_rows(in.g.data(), kN, kM);
        j["h"] = complex_rows(in.h.data(), kU, kN);
        j["capacity"] = exact;
        j["phase_index"] = best_idx;
        doc["instances"].push_back(j);
        std::cerr << "instance " << k << ": capacity " << exact << "\n";
    }

    std::ofstream out(argv[1]);
    out << doc.dump(2) << "\n";
    return out ? 0 : 1;
}
