// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/geometry.hpp"
#include "rissim/panel.hpp"

namespace rissim {

/// Axis-aligned rectangle [x0, x1] x [y0, y1] in meters.
struct Rect {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
    bool contains(const Rect &r) const { return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1; }
};

struct BaseStation {
    Point3 position;
    double tx_power_dBm = 30.0;
    std::size_t antennas = 1; ///< transmit array gain under MRT
};

/**
 * A 2D deployment scene. Blocking is tested in the x-y plane; antenna heights
 * (z) only enter the propagation distance.
 */
struct Scene {
    Rect extent;
    std::vector<Rect> obstacles;
    std::vector<BaseStation> base_stations;
    std::vector<Point3> candidate_sites;
    double grid_resolution = 1.0;
    double wavelength = 0.1;
    double ue_height = 1.5;

    void validate() const;
};

enum class ServingPath { none, direct, ris };

struct CoverageCell {
    Point3 center;
    double snr_dB = 0.0;
    bool covered = false;
    ServingPath serving_path = ServingPath::none;
    bool inside_obstacle = false; ///< excluded from coverage statistics
    double direct_snr_dB = 0.0;
    double ris_snr_dB = 0.0;
};

struct CoverageMap {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double threshold_dB = 0.0;
    std::vector<CoverageCell> cells; ///< row-major, y outer

    const CoverageCell &at(std::size_t ix, std::size_t iy) const { return cells[iy * nx + ix]; }
    std::size_t outdoor_cells() const;
    std::size_t covered_cells() const;
    /// Covered share of the cells outside obstacles.
    double coverage_fraction() const;
};

struct PlacedPanel {
    std::size_t site = 0;
    RisPanel panel;
};

struct DeploymentPlan {
    std::vector<PlacedPanel> placed_panels;
    double cost = 0.0;
    double coverage_fraction = 0.0;
    std::vector<double> coverage_history; ///< before any panel, then after each addition
};

/// True iff segment pq touches any obstacle (closed rectangles: grazing a boundary blocks).
bool los_blocked(const Scene &scene, Point3 p, Point3 q);

/**
 * Per-cell SNR of the best direct or single-bounce RIS path.
 *
 * Direct: P_tx M (lambda / 4 pi d)^alpha / noise over LoS base stations. RIS: the
 * two hop gains multiplied together times the co-phased array factor
 * (gain_scale sum_n beta_n)^2, over (base station, panel) pairs with LoS on both
 * hops. Blocked paths contribute nothing.
 */
CoverageMap snr_map(const Scene &scene, const DeploymentPlan &plan, const ChannelParams &params, double threshold_dB,
                    double gain_scale = 1.0);

/// Adds, one at a time, the candidate site with the largest coverage gain (ties to the lowest index).
DeploymentPlan greedy_place(const Scene &scene, const RisPanel &panel_template, const ChannelParams &params,
                            double cost_per_panel, double budget, double threshold_dB, double target_fraction);

/// snr_map with every panel's power gain scaled by gain_scale^2.
CoverageMap cell_breathing(const Scene &scene, const DeploymentPlan &plan, const ChannelParams &params,
                           double gain_scale, double threshold_dB);

} // namespace rissim
