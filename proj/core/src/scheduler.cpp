// SPDX-License-Identifier: Apache-2.0
#include "rissim/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rissim/errors.hpp"

namespace rissim {

namespace {

void require_users(std::span<const UserContext> users, const char *op)
{
    if (users.empty())
        throw InvalidInput(std::string(op) + ": at least one user is required");
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (!(users[i].qos_weight > 0.0) || !std::isfinite(users[i].qos_weight))
            throw InvalidInput(std::string(op) + ": qos_weight must be positive");
        for (std::size_t j = i + 1; j < users.size(); ++j) {
            const IndexRange &a = users[i].subband;
            const IndexRange &b = users[j].subband;
            if (a.size > 0 && b.size > 0 && a.begin < b.end() && b.begin < a.end())
                throw InvalidInput(std::string(op) + ": users " + std::to_string(users[i].id) + " and " +
                                   std::to_string(users[j].id) + " have overlapping subbands");
        }
    }
}

RisPanel mask_to_block(const RisPanel &panel, IndexRange block)
{
    RisPanel out = panel;
    for (std::size_t n = 0; n < out.n_elements(); ++n)
        if (!block.contains(n))
            out.set_amplitude(n, 0.0);
    return out;
}

std::vector<std::size_t> weight_order(std::span<const UserContext> users)
{
    std::vector<std::size_t> order(users.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return users[a].qos_weight > users[b].qos_weight; });
    return order;
}

} // namespace

ScheduleDecision schedule_shared_theta(std::span<const UserContext> users, const RisPanel &panel,
                                       double power_per_user, double noise, const SchedulerOptions &opts)
{
    require_users(users, "schedule_shared_theta");
    std::vector<ChannelRealization> links;
    std::vector<double> weights;
    for (const auto &u : users) {
        links.push_back(u.channel);
        weights.push_back(u.qos_weight);
    }
    const SharedThetaResult r = optimize_shared_theta(links, weights, panel, power_per_user, noise, opts.max_iters,
                                                      opts.rel_tol, opts.grid_points);

    ScheduleDecision d;
    d.shared_theta = theta(r.panel);
    d.panels.push_back(r.panel);
    d.sum_metric = r.weighted_sum;
    for (std::size_t i = 0; i < users.size(); ++i) {
        UserAllocation a;
        a.precoder = waterfill_precoder(assemble_effective(users[i].channel, r.panel), power_per_user, noise);
        a.panels = {0};
        a.capacity = r.capacities[i];
        d.per_user[users[i].id] = std::move(a);
    }
    return d;
}

SharedVsIdeal compare_shared_vs_ideal(std::span<const UserContext> users, const RisPanel &panel,
                                      double power_per_user, double noise, const SchedulerOptions &opts)
{
    SharedVsIdeal out;
    out.shared = schedule_shared_theta(users, panel, power_per_user, noise, opts);
    const RisPanel &shared_panel = out.shared.panels.front();
    for (const auto &u : users) {
        const MimoOptResult r = optimize_phases_mimo(u.channel, shared_panel, power_per_user, noise, opts.max_iters,
                                                     opts.rel_tol, opts.grid_points);
        out.ideal_capacities.push_back(r.capacity);
        out.ideal_sum += u.qos_weight * r.capacity;
        out.shared_sum += u.qos_weight * out.shared.per_user.at(u.id).capacity;
    }
    out.gap_fraction = out.ideal_sum > 0.0 ? (out.ideal_sum - out.shared_sum) / out.ideal_sum : 0.0;
    return out;
}

bool admit_group(std::span<const UserContext> users, const RisPanel &panel, double power_per_user, double noise,
                 double max_gap, const SchedulerOptions &opts)
{
    return compare_shared_vs_ideal(users, panel, power_per_user, noise, opts).gap_fraction <= max_gap;
}

std::vector<std::size_t> proportional_block_sizes(std::span<const double> weights, std::size_t n_elements)
{
    const std::size_t k = weights.size();
    if (k == 0)
        throw InvalidInput("proportional_block_sizes: no users");
    if (k > n_elements)
        throw InvalidInput("allocate_subblocks_qos: " + std::to_string(k) + " users but only " +
                           std::to_string(n_elements) + " elements");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w))
            throw InvalidInput("proportional_block_sizes: weights must be positive");
        total += w;
    }

    std::vector<std::size_t> sizes(k);
    std::vector<double> frac(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double q = static_cast<double>(n_elements) * weights[i] / total;
        sizes[i] = std::min(static_cast<std::size_t>(std::floor(q)), n_elements);
        frac[i] = q - std::floor(q);
        assigned += sizes[i];
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (frac[a] != frac[b])
            return frac[a] > frac[b];
        return weights[a] > weights[b];
    });
    for (std::size_t r = 0; assigned < n_elements; ++r, ++assigned)
        ++sizes[order[r % k]];
    while (assigned > n_elements) { // floating rounding pushed the floors over
        const auto it = std::max_element(sizes.begin(), sizes.end());
        --*it;
        --assigned;
    }

    // Every scheduled user gets at least one element, taken from the largest block.
    for (std::size_t i = 0; i < k; ++i) {
        if (sizes[i] > 0)
            continue;
        std::size_t donor = 0;
        for (std::size_t j = 1; j < k; ++j)
            if (sizes[j] > sizes[donor] || (sizes[j] == sizes[donor] && weights[j] < weights[donor]))
                donor = j;
        --sizes[donor];
        sizes[i] = 1;
    }
    return sizes;
}

ScheduleDecision allocate_subblocks_qos(std::span<const UserContext> users, const RisPanel &panel,
                                        double power_per_user, double noise)
{
    require_users(users, "allocate_subblocks_qos");
    std::vector<double> weights;
    for (const auto &u : users) {
        if (u.channel.ris_elements() != panel.n_elements())
            throw InvalidInput("allocate_subblocks_qos: user channel does not match the panel size");
        weights.push_back(u.qos_weight);
    }
    const auto sizes = proportional_block_sizes(weights, panel.n_elements());
    RisPanel part = partition_panel(panel, sizes);

    std::vector<MisoChannel> miso;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const IndexRange block = part.partition()[i];
        miso.push_back(restrict_miso(effective_miso(users[i].channel), block));
        const RisPanel aligned = align_phases_miso(miso.back().g, miso.back().h, miso.back().direct);
        for (std::size_t n = 0; n < block.size; ++n)
            part.set_phase(block.begin + n, aligned.phases()[n]);
    }

    ScheduleDecision d;
    d.shared_theta = theta(part);
    for (std::size_t i = 0; i < users.size(); ++i) {
        const IndexRange block = part.partition()[i];
        const RisPanel own = mask_to_block(part, block);
        const ComplexMatrix h = assemble_effective(users[i].channel, own);
        UserAllocation a;
        a.precoder = waterfill_precoder(h, power_per_user, noise);
        a.capacity = waterfill_capacity(h, power_per_user, noise);
        a.blocks = {i};
        a.panels = {0};
        MisoChannel m = miso[i];
        m.direct = Complex(0.0, 0.0);
        double amp = 0.0;
        for (std::size_t n = 0; n < block.size; ++n)
            amp += std::abs(m.h[n] * m.g[n]) * part.amplitudes()[block.begin + n];
        a.aligned_power = amp * amp;
        d.sum_metric += users[i].qos_weight * a.capacity;
        d.weighted_power += users[i].qos_weight * a.aligned_power;
        d.per_user[users[i].id] = std::move(a);
    }
    d.panels.push_back(std::move(part));
    return d;
}

double aligned_amplitude(const ChannelRealization &real, const RisPanel &panel)
{
    if (panel.n_elements() != real.ris_elements())
        throw InvalidInput("aligned_amplitude: panel size does not match the channel");
    const MisoChannel m = effective_miso(real);
    double amp = 0.0;
    for (std::size_t n = 0; n < m.g.size(); ++n)
        amp += panel.amplitudes()[n] * std::abs(m.h[n] * m.g[n]);
    return amp;
}

ScheduleDecision allocate_multi_panel(std::span<const UserContext> users, std::span<const RisPanel> panels,
                                      double power_per_user, double noise)
{
    if (panels.empty())
        throw InvalidInput("allocate_multi_panel: at least one panel is required");
    require_users(users, "allocate_multi_panel");
    for (const auto &u : users)
        if (u.panel_channels.size() != panels.size())
            throw InvalidInput("allocate_multi_panel: user " + std::to_string(u.id) +
                               " needs one channel per panel");

    std::vector<std::vector<double>> amp(users.size(), std::vector<double>(panels.size()));
    for (std::size_t i = 0; i < users.size(); ++i)
        for (std::size_t p = 0; p < panels.size(); ++p)
            amp[i][p] = aligned_amplitude(users[i].panel_channels[p], panels[p]);

    const auto order = weight_order(users);
    std::vector<int> owner(panels.size(), -1);
    for (std::size_t i : order) {
        int best = -1;
        for (std::size_t p = 0; p < panels.size(); ++p)
            if (owner[p] < 0 && (best < 0 || amp[i][p] > amp[i][static_cast<std::size_t>(best)]))
                best = static_cast<int>(p);
        if (best < 0)
            break;
        owner[static_cast<std::size_t>(best)] = static_cast<int>(i);
    }
    for (auto &o : owner)
        if (o < 0)
            o = static_cast<int>(order.front());

    ScheduleDecision d;
    std::vector<ComplexVector> diag;
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const std::size_t i = static_cast<std::size_t>(owner[p]);
        const MisoChannel m = effective_miso(users[i].panel_channels[p]);
        const RisPanel aligned = align_phases_miso(m.g, m.h, Complex(0.0, 0.0));
        RisPanel configured = panels[p];
        configured.set_phases(aligned.phases());
        d.panels.push_back(std::move(configured));
    }
    for (const auto &pnl : d.panels) {
        const ThetaMatrix th = theta(pnl);
        d.shared_theta.diagonal.insert(d.shared_theta.diagonal.end(), th.diagonal.begin(), th.diagonal.end());
    }

    for (std::size_t i = 0; i < users.size(); ++i) {
        const UserContext &u = users[i];
        UserAllocation a;
        double coherent = 0.0;
        std::optional<ComplexMatrix> h;
        for (std::size_t p = 0; p < panels.size(); ++p) {
            if (owner[p] != static_cast<int>(i))
                continue;
            a.panels.push_back(p);
            coherent += amp[i][p];
            ComplexMatrix c = assemble_cascade(u.panel_channels[p], d.panels[p]);
            h = h ? *h + c : c;
        }
        if (u.channel.h_nb_ue) {
            const ComplexMatrix direct = std::sqrt(u.channel.pl_nb_ue) * *u.channel.h_nb_ue;
            h = h ? *h + direct : direct;
        }
        a.aligned_power = coherent * coherent;
        if (h) {
            a.precoder = waterfill_precoder(*h, power_per_user, noise);
            a.capacity = waterfill_capacity(*h, power_per_user, noise);
        }
        d.sum_metric += u.qos_weight * a.capacity;
        d.weighted_power += u.qos_weight * a.aligned_power;
        d.per_user[u.id] = std::move(a);
    }
    return d;
}

} // namespace rissim
