// SPDX-License-Identifier: Apache-2.0
#include "rissim/deploy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rissim/errors.hpp"

namespace rissim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double to_db(double linear) { return linear > 0.0 ? 10.0 * std::log10(linear) : kNegInf; }

// Liang-Barsky clip of p + t (q - p), t in [0, 1], against a closed rectangle.
bool segment_hits_rect(double px, double py, double qx, double qy, const Rect &r)
{
    const double dx = qx - px;
    const double dy = qy - py;
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {px - r.x0, r.x1 - px, py - r.y0, r.y1 - py};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0)
                return false;
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
        if (t0 > t1)
            return false;
    }
    return true;
}

} // namespace

void Scene::validate() const
{
    if (!(extent.x1 > extent.x0) || !(extent.y1 > extent.y0))
        throw InvalidInput("scene: extent must have positive area");
    if (!(grid_resolution > 0.0) || !std::isfinite(grid_resolution))
        throw InvalidInput("scene: grid_resolution must be positive");
    if (!(wavelength > 0.0))
        throw InvalidInput("scene: wavelength must be positive");
    for (const auto &o : obstacles) {
        if (!(o.x1 >= o.x0) || !(o.y1 >= o.y0))
            throw InvalidInput("scene: obstacle corners must be ordered");
        if (!extent.contains(o))
            throw InvalidInput("scene: obstacle lies outside the extent");
    }
    for (const auto &bs : base_stations) {
        if (!bs.position.finite() || !std::isfinite(bs.tx_power_dBm) || bs.antennas == 0)
            throw InvalidInput("scene: invalid base station");
    }
    for (const auto &s : candidate_sites)
        if (!s.finite() || !extent.contains(s.x, s.y))
            throw InvalidInput("scene: candidate site outside the extent");
}

std::size_t CoverageMap::outdoor_cells() const
{
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto &c) { return !c.inside_obstacle; }));
}

std::size_t CoverageMap::covered_cells() const
{
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const auto &c) { return !c.inside_obstacle && c.covered; }));
}

double CoverageMap::coverage_fraction() const
{
    const std::size_t n = outdoor_cells();
    return n ? static_cast<double>(covered_cells()) / static_cast<double>(n) : 0.0;
}

bool los_blocked(const Scene &scene, Point3 p, Point3 q)
{
    for (const auto &o : scene.obstacles)
        if (segment_hits_rect(p.x, p.y, q.x, q.y, o))
            return true;
    return false;
}

CoverageMap snr_map(const Scene &scene, const DeploymentPlan &plan, const ChannelParams &params, double threshold_dB,
                    double gain_scale)
{
    scene.validate();
    params.validate();
    if (!(gain_scale >= 0.0) || !std::isfinite(gain_scale))
        throw InvalidInput("snr_map: gain_scale must be finite and non-negative");
    for (const auto &pp : plan.placed_panels)
        if (pp.site >= scene.candidate_sites.size())
            throw InvalidInput("snr_map: plan refers to an unknown candidate site");

    const double alpha = params.path_loss_exponent;
    const double lambda = scene.wavelength;
    const double noise_mw = params.noise_power * 1e3;

    CoverageMap map;
    map.threshold_dB = threshold_dB;
    map.nx = static_cast<std::size_t>(std::ceil((scene.extent.x1 - scene.extent.x0) / scene.grid_resolution));
    map.ny = static_cast<std::size_t>(std::ceil((scene.extent.y1 - scene.extent.y0) / scene.grid_resolution));
    map.cells.resize(map.nx * map.ny);

    // Per panel: best received power at the panel from a LoS base station, times array factor.
    struct PanelFeed {
        Point3 pos;
        std::vector<double> bs_gain_mw; ///< per base station, 0 if blocked
        double array_power = 0.0;
    };
    std::vector<PanelFeed> feeds;
    for (const auto &pp : plan.placed_panels) {
        PanelFeed f;
        f.pos = scene.candidate_sites[pp.site];
        const double af = gain_scale * pp.panel.amplitude_sum();
        f.array_power = af * af;
        for (const auto &bs : scene.base_stations) {
            const double d = distance(bs.position, f.pos);
            if (d == 0.0 || los_blocked(scene, bs.position, f.pos)) {
                f.bs_gain_mw.push_back(0.0);
                continue;
            }
            f.bs_gain_mw.push_back(std::pow(10.0, bs.tx_power_dBm / 10.0) * static_cast<double>(bs.antennas) *
                                   hop_gain(lambda, d, alpha));
        }
        feeds.push_back(std::move(f));
    }

    for (std::size_t iy = 0; iy < map.ny; ++iy) {
        for (std::size_t ix = 0; ix < map.nx; ++ix) {
            CoverageCell &cell = map.cells[iy * map.nx + ix];
            cell.center = {scene.extent.x0 + (static_cast<double>(ix) + 0.5) * scene.grid_resolution,
                           scene.extent.y0 + (static_cast<double>(iy) + 0.5) * scene.grid_resolution, scene.ue_height};
            for (const auto &o : scene.obstacles)
                if (o.contains(cell.center.x, cell.center.y))
                    cell.inside_obstacle = true;

            double direct = 0.0;
            for (const auto &bs : scene.base_stations) {
                const double d = distance(bs.position, cell.center);
                if (d == 0.0 || los_blocked(scene, bs.position, cell.center))
                    continue;
                direct = std::max(direct, std::pow(10.0, bs.tx_power_dBm / 10.0) * static_cast<double>(bs.antennas) *
                                              hop_gain(lambda, d, alpha) / noise_mw);
            }

            double via = 0.0;
            for (const auto &f : feeds) {
                const double d2 = distance(f.pos, cell.center);
                if (d2 == 0.0 || f.array_power == 0.0 || los_blocked(scene, f.pos, cell.center))
                    continue;
                const double hop2 = hop_gain(lambda, d2, alpha);
                for (double feed_mw : f.bs_gain_mw)
                    via = std::max(via, feed_mw * hop2 * f.array_power / noise_mw);
            }

            cell.direct_snr_dB = to_db(direct);
            cell.ris_snr_dB = to_db(via);
            if (via > direct) {
                cell.serving_path = ServingPath::ris;
                cell.snr_dB = cell.ris_snr_dB;
            } else if (direct > 0.0) {
                cell.serving_path = ServingPath::direct;
                cell.snr_dB = cell.direct_snr_dB;
            } else {
                cell.serving_path = ServingPath::none;
                cell.snr_dB = kNegInf;
            }
            cell.covered = cell.snr_dB >= threshold_dB;
        }
    }
    return map;
}

DeploymentPlan greedy_place(const Scene &scene, const RisPanel &panel_template, const ChannelParams &params,
                            double cost_per_panel, double budget, double threshold_dB, double target_fraction)
{
    scene.validate();
    if (scene.candidate_sites.empty())
        throw InvalidInput("greedy_place: no candidate sites");
    if (!(target_fraction > 0.0 && target_fraction <= 1.0))
        throw InvalidInput("greedy_place: target_fraction must lie in (0, 1]");
    if (!(cost_per_panel > 0.0) || !(budget > 0.0))
        throw InvalidInput("greedy_place: cost_per_panel and budget must be positive");

    DeploymentPlan plan;
    plan.coverage_fraction = snr_map(scene, plan, params, threshold_dB).coverage_fraction();
    plan.coverage_history.push_back(plan.coverage_fraction);

    std::vector<bool> used(scene.candidate_sites.size(), false);
    while (plan.coverage_fraction < target_fraction && plan.cost + cost_per_panel <= budget) {
        std::size_t best_site = scene.candidate_sites.size();
        double best_cov = plan.coverage_fraction;
        for (std::size_t s = 0; s < scene.candidate_sites.size(); ++s) {
            if (used[s])
                continue;
            DeploymentPlan trial = plan;
            RisPanel p = panel_template;
            p.set_position(scene.candidate_sites[s]);
            trial.placed_panels.push_back({s, std::move(p)});
            const double cov = snr_map(scene, trial, params, threshold_dB).coverage_fraction();
            if (cov > best_cov) {
                best_cov = cov;
                best_site = s;
            }
        }
        if (best_site == scene.candidate_sites.size())
            break;
        RisPanel p = panel_template;
        p.set_position(scene.candidate_sites[best_site]);
        plan.placed_panels.push_back({best_site, std::move(p)});
        used[best_site] = true;
        plan.cost += cost_per_panel;
        plan.coverage_fraction = best_cov;
        plan.coverage_history.push_back(best_cov);
    }
    return plan;
}

CoverageMap cell_breathing(const Scene &scene, const DeploymentPlan &plan, const ChannelParams &params,
                           double gain_scale, double threshold_dB)
{
    if (!(gain_scale >= 0.0 && gain_scale <= 1.0))
        throw InvalidInput("cell_breathing: gain_scale must lie in [0, 1]");
    return snr_map(scene, plan, params, threshold_dB, gain_scale);
}

} // namespace rissim
