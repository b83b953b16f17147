// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/numkernel.hpp"
#include "rissim/panel.hpp"

namespace rissim {

inline constexpr std::size_t kDefaultPhaseGrid = 64;

/// Single-antenna projection of a MIMO link: composite = sum_n h_n theta_n g_n + direct.
struct MisoChannel {
    ComplexVector g;
    ComplexVector h;
    Complex direct{0.0, 0.0};
};

/**
 * Projects a realization onto its dominant NB and UE directions.
 *
 * v is the strongest right singular vector of G_nb-ris and u the strongest left
 * singular vector of H_ris-ue; then g = sqrt(pl_nb_ris) beta G v,
 * h = sqrt(pl_ris_ue) u^H H_ris-ue and direct = sqrt(pl_nb_ue) u^H H_nb-ue v.
 */
MisoChannel effective_miso(const ChannelRealization &real, double beta_gain = 1.0);

/// Restriction of a MISO channel to one block of elements.
MisoChannel restrict_miso(const MisoChannel &miso, IndexRange block);

/// sum_n h_n theta_n g_n + direct under the panel's current state.
Complex miso_composite(std::span<const Complex> g, std::span<const Complex> h, const RisPanel &panel, Complex direct);

/// Closed-form co-phasing: phi_n = arg(direct) - arg(h_n) - arg(g_n), beta_n = 1.
RisPanel align_phases_miso(std::span<const Complex> g, std::span<const Complex> h, Complex direct);

/**
 * Exact maximizer of |composite| over phases restricted to the 2^bits grid.
 *
 * The optimum co-phases every term to the nearest grid point of some common
 * reference angle; sweeping the reference through each of the N * 2^bits arcs on
 * which that nearest-point assignment is constant enumerates all candidates.
 */
RisPanel align_phases_discrete(std::span<const Complex> g, std::span<const Complex> h, Complex direct, int bits);

struct MimoOptResult {
    RisPanel panel;
    double capacity = 0.0;          ///< water-filling capacity at the returned panel
    int iterations = 0;
    std::vector<double> trace;      ///< capacity after initialization and after each sweep
};

struct SharedThetaResult {
    RisPanel panel;
    std::vector<double> capacities; ///< per link, at the returned panel
    double weighted_sum = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};

/**
 * Alternating ascent over a shared reflection state for several links.
 *
 * The objective is sum_i w_i C_i(Theta), C_i the water-filling capacity of link i.
 * Each iteration water-fills a precoder per link, then sweeps the elements in
 * order, moving each phase to the best point of the grid with all other phases
 * and the precoders held fixed. The grid is 2^bits points for a quantized panel
 * and `grid_points` otherwise. Amplitudes are never modified.
 */
SharedThetaResult optimize_shared_theta(std::span<const ChannelRealization> links, std::span<const double> weights,
                                        const RisPanel &panel, double power, double noise, int max_iters,
                                        double rel_tol, std::size_t grid_points = kDefaultPhaseGrid,
                                        double beta_gain = 1.0);

/// Single-link specialization of optimize_shared_theta().
MimoOptResult optimize_phases_mimo(const ChannelRealization &real, const RisPanel &panel, double power, double noise,
                                   int max_iters, double rel_tol, std::size_t grid_points = kDefaultPhaseGrid,
                                   double beta_gain = 1.0);

/// Consecutive blocks of the given sizes from element 0; elements left over absorb (beta = 0).
RisPanel partition_panel(const RisPanel &panel, std::span<const std::size_t> block_sizes);

} // namespace rissim
