// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/panel.hpp"
#include "rissim/ris.hpp"

namespace rissim {

struct UserContext {
    int id = 0;
    ChannelRealization channel;       ///< channel through the scheduled panel
    IndexRange subband;               ///< resource blocks; FDM users must be disjoint
    double qos_weight = 1.0;
    /// Channel through each candidate panel, used by allocate_multi_panel().
    std::vector<ChannelRealization> panel_channels;
};

struct UserAllocation {
    ComplexMatrix precoder;           ///< NB-side precoder, water-filled on the user's channel
    std::vector<std::size_t> blocks;  ///< partition block indices
    std::vector<std::size_t> panels;  ///< panel indices
    double capacity = 0.0;            ///< bits/s/Hz
    double aligned_power = 0.0;       ///< coherent MISO power through the allocated surface
};

struct ScheduleDecision {
    ThetaMatrix shared_theta;         ///< the one reflection state of this interval
    std::vector<RisPanel> panels;
    std::map<int, UserAllocation> per_user;
    double sum_metric = 0.0;          ///< qos-weighted sum capacity
    double weighted_power = 0.0;      ///< qos-weighted sum of aligned powers (multi-panel)
};

struct SchedulerOptions {
    int max_iters = 50;
    double rel_tol = 1e-9;
    std::size_t grid_points = kDefaultPhaseGrid;
};

/// One shared Theta for all users, chosen by alternating ascent on the weighted sum capacity.
ScheduleDecision schedule_shared_theta(std::span<const UserContext> users, const RisPanel &panel,
                                       double power_per_user, double noise, const SchedulerOptions &opts = {});

struct SharedVsIdeal {
    double shared_sum = 0.0;
    double ideal_sum = 0.0;
    double gap_fraction = 0.0;
    ScheduleDecision shared;
    std::vector<double> ideal_capacities;
};

/**
 * Compares the shared-Theta schedule with the unrealizable per-user optimum.
 *
 * Each user's private optimization starts from the shared state, so its capacity is
 * never below what the shared state gives it and ideal_sum >= shared_sum holds exactly.
 */
SharedVsIdeal compare_shared_vs_ideal(std::span<const UserContext> users, const RisPanel &panel,
                                      double power_per_user, double noise, const SchedulerOptions &opts = {});

/// Same-analog-beam admission: users may share an interval if the shared-Theta gap is at most max_gap.
bool admit_group(std::span<const UserContext> users, const RisPanel &panel, double power_per_user, double noise,
                 double max_gap = 0.3, const SchedulerOptions &opts = {});

/// Block sizes proportional to weights by largest remainder, at least 1 each, summing to n_elements.
std::vector<std::size_t> proportional_block_sizes(std::span<const double> weights, std::size_t n_elements);

/// Partitions the panel by QoS weight and co-phases each block toward its own user.
ScheduleDecision allocate_subblocks_qos(std::span<const UserContext> users, const RisPanel &panel,
                                        double power_per_user = 1.0, double noise = 1.0);

/**
 * Greedy panel assignment in descending QoS weight.
 *
 * Each user takes the free panel with the largest aligned power; panels left over go
 * to the highest-weight user. Every panel is co-phased for its owner only.
 */
ScheduleDecision allocate_multi_panel(std::span<const UserContext> users, std::span<const RisPanel> panels,
                                      double power_per_user = 1.0, double noise = 1.0);

/// Coherent amplitude sum_n beta_n |h_n g_n| of a panel toward a user (no direct path).
double aligned_amplitude(const ChannelRealization &real, const RisPanel &panel);

} // namespace rissim
