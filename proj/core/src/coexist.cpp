// SPDX-License-Identifier: Apache-2.0
#include "rissim/coexist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rissim/channel.hpp"
#include "rissim/errors.hpp"
#include "rissim/random.hpp"
#include "rissim/ris.hpp"

namespace rissim {

namespace {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

void validate_network(const NetworkConfig &n, const char *name)
{
    const std::string who = name;
    if (n.nb_antennas == 0 || n.ue_antennas == 0)
        throw InvalidInput("network " + who + ": antenna counts must be >= 1");
    if (n.ris_elements && *n.ris_elements == 0)
        throw InvalidInput("network " + who + ": ris_elements must be >= 1");
    if (!(n.direct_gain >= 0.0) || !(n.foreign_bounce_gain >= 0.0) || !(n.own_ris_gain >= 0.0))
        throw InvalidInput("network " + who + ": gains must be non-negative");
    if (!(n.tx_power > 0.0) || !(n.noise_power > 0.0))
        throw InvalidInput("network " + who + ": tx_power and noise_power must be positive");
    for (double v : {n.signal_dBm, n.noise_dBm, n.power_at_peer_dBm, n.aoa_at_peer, n.interference_at_peer_ue_dBm,
                     n.ris_interference_at_peer_ue_dBm})
        if (!std::isfinite(v))
            throw InvalidInput("network " + who + ": link-budget values must be finite");
}

std::uint64_t theta_key(const CoexScenario &s, std::uint64_t slot)
{
    switch (s.policy) {
    case RisUpdatePolicy::static_phases:
        return 0;
    case RisUpdatePolicy::rerandomize_each_slot:
        return slot;
    case RisUpdatePolicy::frozen_during_foreign_slot:
        // B holds the medium from its measurement slot through its transmission slot.
        return (slot >= s.t1 && slot <= s.t2) ? s.t1 : slot;
    }
    return slot;
}

ComplexVector random_theta(std::uint64_t stream, std::uint64_t key, std::size_t n)
{
    Rng rng(derive_seed(stream, key));
    ComplexVector th(n);
    for (auto &t : th)
        t = std::polar(1.0, rng.phase());
    return th;
}

Eigen::MatrixXcd cascade(const Eigen::MatrixXcd &h, const ComplexVector &th, const Eigen::MatrixXcd &g)
{
    Eigen::MatrixXcd scaled = h;
    for (Eigen::Index n = 0; n < scaled.cols(); ++n)
        scaled.col(n) *= th[static_cast<std::size_t>(n)];
    return scaled * g;
}

double stale_rate(const ComplexMatrix &measured, const ComplexMatrix &actual, double power, double noise)
{
    return precoded_rate(actual, waterfill_precoder(measured, power, noise), noise);
}

} // namespace

void CoexScenario::validate() const
{
    validate_network(a, "A");
    validate_network(b, "B");
    if (t1 > t2)
        throw InvalidInput("coexistence scenario: t1 must not exceed t2");
}

ComplexMatrix network_b_channel(const CoexScenario &s, std::uint64_t trial_seed, std::uint64_t slot,
                                double bounce_scale)
{
    const NetworkConfig &b = s.b;
    const std::size_t m = b.nb_antennas;
    const std::size_t u = b.ue_antennas;

    Rng direct_rng(trial_seed, "b_direct");
    Eigen::MatrixXcd h = std::sqrt(b.direct_gain) * ComplexMatrix::gaussian(u, m, direct_rng).mat();

    if (s.a.ris_elements && b.foreign_bounce_gain > 0.0 && bounce_scale > 0.0) {
        const std::size_t n = *s.a.ris_elements;
        Rng g_rng(trial_seed, "nb_b_to_ris_a");
        Rng h_rng(trial_seed, "ris_a_to_ue_b");
        const ComplexMatrix g = ComplexMatrix::gaussian(n, m, g_rng);
        const ComplexMatrix hr = ComplexMatrix::gaussian(u, n, h_rng);
        const ComplexVector th = random_theta(derive_seed(trial_seed, "theta_a"), theta_key(s, slot), n);
        h += std::sqrt(b.foreign_bounce_gain * bounce_scale) * cascade(hr.mat(), th, g.mat());
    }

    if (b.ris_elements && b.own_ris_gain > 0.0) {
        // B's own surface, co-phased by B toward its UE and held over the grant.
        const std::size_t n = *b.ris_elements;
        Rng g_rng(trial_seed, "nb_b_to_ris_b");
        Rng h_rng(trial_seed, "ris_b_to_ue_b");
        ChannelRealization own;
        own.g_nb_ris = ComplexMatrix::gaussian(n, m, g_rng);
        own.h_ris_ue = ComplexMatrix::gaussian(u, n, h_rng);
        own.pl_nb_ris = b.own_ris_gain;
        const MisoChannel miso = effective_miso(own);
        const RisPanel aligned = align_phases_miso(miso.g, miso.h, Complex(0.0, 0.0));
        h += assemble_cascade(own, aligned).mat();
    }
    return ComplexMatrix(std::move(h));
}

StaleCsiTrial stale_csi_trial(const CoexScenario &s, std::uint64_t trial_seed)
{
    const ComplexMatrix measured = network_b_channel(s, trial_seed, s.t1);
    const ComplexMatrix actual = network_b_channel(s, trial_seed, s.t2);
    const double p = s.b.tx_power;
    const double n0 = s.b.noise_power;

    StaleCsiTrial t;
    t.fresh_rate = stale_rate(actual, actual, p, n0);
    t.stale_rate = stale_rate(measured, actual, p, n0);
    t.loss_fraction = t.fresh_rate > 0.0 ? (t.fresh_rate - t.stale_rate) / t.fresh_rate : 0.0;
    return t;
}

std::vector<StaleCsiTrial> run_stale_csi(const CoexScenario &s, std::size_t trials, std::uint64_t seed)
{
    if (trials == 0)
        throw InvalidInput("run_stale_csi: trials must be >= 1");
    s.validate();
    std::vector<StaleCsiTrial> out;
    out.reserve(trials);
    for (std::size_t k = 0; k < trials; ++k)
        out.push_back(stale_csi_trial(s, derive_seed(seed, static_cast<std::uint64_t>(k))));
    return out;
}

// ---------------------------------------------------------------------------------------------
// Listen before talk

double LbtConfig::sense_gain_dB(double aoa) const
{
    if (!directional || pattern.empty())
        return 0.0;
    double a = std::fmod(aoa + std::numbers::pi, 2.0 * std::numbers::pi);
    if (a < 0.0)
        a += 2.0 * std::numbers::pi;
    a -= std::numbers::pi;
    // Angles before the first sector start belong to the last sector (wrap-around).
    double gain = pattern.back().gain_dB;
    for (const auto &sec : pattern) {
        if (sec.start <= a)
            gain = sec.gain_dB;
        else
            break;
    }
    return gain;
}

void LbtConfig::validate() const
{
    if (!std::isfinite(sense_threshold_dBm))
        throw InvalidInput("LBT: sense_threshold must be finite");
    if (backoff_slots_max == 0)
        throw InvalidInput("LBT: backoff_slots_max must be >= 1");
    if (txop_slots == 0)
        throw InvalidInput("LBT: txop_slots must be >= 1");
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        if (!std::isfinite(pattern[i].start) || !std::isfinite(pattern[i].gain_dB))
            throw InvalidInput("LBT: sense pattern entries must be finite");
        if (i > 0 && pattern[i].start <= pattern[i - 1].start)
            throw InvalidInput("LBT: sense pattern must be sorted by start angle");
    }
}

LbtDecision lbt_decide(const LbtConfig &cfg, std::span<const Interferer> interferers)
{
    double sensed_mw = 0.0;
    for (const auto &i : interferers) {
        if (!std::isfinite(i.power_dBm))
            throw InvalidInput("lbt_decide: interferer power must be finite");
        sensed_mw += dbm_to_mw(i.power_dBm + cfg.sense_gain_dB(i.aoa));
    }
    const double sensed_dbm = sensed_mw > 0.0 ? 10.0 * std::log10(sensed_mw) : -std::numeric_limits<double>::infinity();
    return sensed_dbm < cfg.sense_threshold_dBm ? LbtDecision::transmit : LbtDecision::defer;
}

namespace {

struct Station {
    const NetworkConfig *cfg = nullptr;
    const NetworkConfig *peer = nullptr;
    Rng rng;
    std::size_t backoff = 0;
    std::size_t remaining = 0; ///< slots left in the current transmission
    bool transmitting = false;
    std::size_t tx_slots = 0;
    double rate_sum = 0.0;
};

double ris_factor(const CoexScenario &s, std::uint64_t stream, const NetworkConfig &n, std::uint64_t slot)
{
    if (!n.ris_elements)
        return 0.0;
    const std::uint64_t key = s.policy == RisUpdatePolicy::rerandomize_each_slot ? slot : 0;
    const ComplexVector th = random_theta(stream, key, *n.ris_elements);
    Complex sum(0.0, 0.0);
    for (const auto &t : th)
        sum += t;
    return std::norm(sum) / static_cast<double>(th.size());
}

} // namespace

LbtResult run_lbt_sim(const CoexScenario &s, const LbtConfig &cfg, std::size_t slots, std::uint64_t seed)
{
    if (slots == 0)
        throw InvalidInput("run_lbt_sim: slots must be >= 1");
    s.validate();
    cfg.validate();

    Station st[2] = {{&s.a, &s.b, Rng(seed, "lbt_a")}, {&s.b, &s.a, Rng(seed, "lbt_b")}};
    const std::uint64_t theta_stream[2] = {derive_seed(seed, "lbt_theta_a"), derive_seed(seed, "lbt_theta_b")};

    std::size_t busy = 0;
    std::size_t collisions = 0;
    for (std::size_t t = 0; t < slots; ++t) {
        // Sensing sees only transmissions already under way at the slot boundary.
        bool ongoing[2] = {st[0].remaining > 0, st[1].remaining > 0};
        for (int x = 0; x < 2; ++x) {
            Station &me = st[x];
            me.transmitting = false;
            if (me.remaining > 0) {
                me.transmitting = true;
                continue;
            }
            if (!me.cfg->saturated)
                continue;
            std::vector<Interferer> heard;
            if (ongoing[1 - x] && s.same_frequency)
                heard.push_back({me.peer->power_at_peer_dBm, me.peer->aoa_at_peer});
            const bool idle = lbt_decide(cfg, heard) == LbtDecision::transmit;
            if (!idle) {
                if (me.backoff == 0)
                    me.backoff = me.rng.uniform_int(cfg.backoff_slots_max);
                continue;
            }
            if (me.backoff > 0) {
                --me.backoff;
                continue;
            }
            me.transmitting = true;
            me.remaining = cfg.txop_slots;
        }

        const bool both = st[0].transmitting && st[1].transmitting;
        if (st[0].transmitting || st[1].transmitting)
            ++busy;
        const bool collided = both && s.same_frequency;
        if (collided)
            ++collisions;

        for (int x = 0; x < 2; ++x) {
            Station &me = st[x];
            if (!me.transmitting)
                continue;
            double interference = 0.0;
            if (collided) {
                interference = dbm_to_mw(me.peer->interference_at_peer_ue_dBm) +
                               dbm_to_mw(me.peer->ris_interference_at_peer_ue_dBm) *
                                   ris_factor(s, theta_stream[1 - x], *me.peer, t);
            }
            const double sinr = dbm_to_mw(me.cfg->signal_dBm) / (dbm_to_mw(me.cfg->noise_dBm) + interference);
            me.rate_sum += std::log2(1.0 + sinr);
            ++me.tx_slots;
            if (--me.remaining == 0)
                me.backoff = me.rng.uniform_int(cfg.backoff_slots_max);
        }
    }

    LbtResult r;
    r.busy_slots = busy;
    if (busy > 0) {
        r.airtime_a = static_cast<double>(st[0].tx_slots) / static_cast<double>(busy);
        r.airtime_b = static_cast<double>(st[1].tx_slots) / static_cast<double>(busy);
        r.collision_fraction = static_cast<double>(collisions) / static_cast<double>(busy);
    }
    r.mean_rate_a = st[0].tx_slots ? st[0].rate_sum / static_cast<double>(st[0].tx_slots) : 0.0;
    r.mean_rate_b = st[1].tx_slots ? st[1].rate_sum / static_cast<double>(st[1].tx_slots) : 0.0;
    return r;
}

// ---------------------------------------------------------------------------------------------
// Adjacent-channel filtering

void BandFilter::validate() const
{
    if (!(per_pass_oob_attenuation_dB >= 0.0) || !(inband_insertion_loss_dB >= 0.0))
        throw InvalidInput("band filter: attenuations must be non-negative");
    if (passes_on_reflection < 1)
        throw InvalidInput("band filter: passes_on_reflection must be >= 1");
}

FilteredPower apply_band_filter(const BandFilter &filter, double inband_dBm, double oob_dBm, bool reflective)
{
    filter.validate();
    if (!std::isfinite(inband_dBm) || !std::isfinite(oob_dBm))
        throw InvalidInput("apply_band_filter: powers must be finite");
    const double passes = reflective ? static_cast<double>(filter.passes_on_reflection) : 1.0;
    FilteredPower out;
    out.inband_out_dBm = inband_dBm - filter.inband_insertion_loss_dB * passes;
    out.oob_out_dBm = oob_dBm - filter.per_pass_oob_attenuation_dB * passes - filter.inband_insertion_loss_dB * passes;
    return out;
}

AdjacentTrial adjacent_channel_trial(const CoexScenario &s, const std::optional<BandFilter> &filter,
                                     std::uint64_t trial_seed)
{
    const double p = s.b.tx_power;
    const double n0 = s.b.noise_power;
    auto rate = [&](double scale) {
        return stale_rate(network_b_channel(s, trial_seed, s.t1, scale), network_b_channel(s, trial_seed, s.t2, scale),
                          p, n0);
    };
    double scale = 1.0;
    if (filter) {
        // B's signal is out of band for RIS-A's filter and crosses it on the way in and out.
        const double delta_db = apply_band_filter(*filter, 0.0, 0.0, true).oob_out_dBm;
        scale = std::pow(10.0, delta_db / 10.0);
    }
    AdjacentTrial t;
    t.rate_b_no_filter = rate(1.0);
    t.rate_b_with_filter = filter ? rate(scale) : t.rate_b_no_filter;
    t.rate_b_no_ris = rate(0.0);
    return t;
}

AdjacentResult run_adjacent_channel_sim(const CoexScenario &s, const std::optional<BandFilter> &filter,
                                        std::size_t trials, std::uint64_t seed)
{
    if (s.same_frequency)
        throw InvalidInput("run_adjacent_channel_sim: scenario must be adjacent-channel (same_frequency = false)");
    if (trials == 0)
        throw InvalidInput("run_adjacent_channel_sim: trials must be >= 1");
    s.validate();
    if (filter)
        filter->validate();

    AdjacentResult r;
    r.trials.reserve(trials);
    for (std::size_t k = 0; k < trials; ++k) {
        r.trials.push_back(adjacent_channel_trial(s, filter, derive_seed(seed, static_cast<std::uint64_t>(k))));
        r.rate_b_no_filter += r.trials.back().rate_b_no_filter;
        r.rate_b_with_filter += r.trials.back().rate_b_with_filter;
    }
    r.rate_b_no_filter /= static_cast<double>(trials);
    r.rate_b_with_filter /= static_cast<double>(trials);
    return r;
}

} // namespace rissim
