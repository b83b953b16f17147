// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rissim/numkernel.hpp"

namespace rissim {

/// How network A re-configures its RIS between B's measurement and B's transmission.
enum class RisUpdatePolicy {
    static_phases,             ///< never changes
    rerandomize_each_slot,     ///< new configuration every slot, uncorrelated with B
    frozen_during_foreign_slot ///< held fixed while B owns the medium (TDM)
};

/**
 * One network of a two-network coexistence scenario.
 *
 * The MIMO fields drive the stale-CSI and adjacent-channel experiments; gains are
 * linear and multiply unit-variance Rayleigh segments. The dBm fields drive the
 * slotted LBT simulation.
 */
struct NetworkConfig {
    std::size_t nb_antennas = 4;
    std::size_t ue_antennas = 1;
    std::optional<std::size_t> ris_elements; ///< RIS owned by this network
    double direct_gain = 1.0;                ///< NB -> own UE
    double foreign_bounce_gain = 0.0;        ///< per-element gain NB -> peer RIS -> own UE
    double own_ris_gain = 0.0;               ///< per-element gain NB -> own RIS -> own UE
    double tx_power = 1.0;
    double noise_power = 1.0;

    bool saturated = true;                   ///< has queued traffic every slot
    double signal_dBm = -60.0;               ///< received power at own UE
    double noise_dBm = -95.0;
    double power_at_peer_dBm = -60.0;        ///< this network's emission as seen by the peer's sensing node
    double aoa_at_peer = 0.0;                ///< radians, angle of that emission at the peer
    double interference_at_peer_ue_dBm = -80.0;
    double ris_interference_at_peer_ue_dBm = -200.0; ///< mean extra interference via own RIS
};

struct CoexScenario {
    NetworkConfig a;
    NetworkConfig b;
    bool same_frequency = true;
    std::uint64_t t1 = 0; ///< B's measurement slot
    std::uint64_t t2 = 1; ///< B's transmission slot
    RisUpdatePolicy policy = RisUpdatePolicy::static_phases;

    void validate() const;
};

struct StaleCsiTrial {
    double fresh_rate = 0.0;
    double stale_rate = 0.0;
    double loss_fraction = 0.0;
};

/// B's channel at slot t, including the uncontrolled bounce off RIS-A scaled by bounce_scale (power).
ComplexMatrix network_b_channel(const CoexScenario &s, std::uint64_t trial_seed, std::uint64_t slot,
                                double bounce_scale = 1.0);

/// One trial: precoder water-filled on H_B(t1), evaluated on H_B(t2).
StaleCsiTrial stale_csi_trial(const CoexScenario &s, std::uint64_t trial_seed);

/// trials independent draws; trial k uses derive_seed(seed, k).
std::vector<StaleCsiTrial> run_stale_csi(const CoexScenario &s, std::size_t trials, std::uint64_t seed);

/// Piecewise-constant receive gain: applies from `start` (radians) up to the next sector.
struct SenseSector {
    double start = 0.0;
    double gain_dB = 0.0;
};

struct LbtConfig {
    double sense_threshold_dBm = -72.0;
    bool directional = false;
    std::vector<SenseSector> pattern; ///< sorted by start, angles in [-pi, pi)
    std::size_t backoff_slots_max = 15;
    std::size_t txop_slots = 4;

    /// 0 dB when omnidirectional.
    double sense_gain_dB(double aoa) const;
    void validate() const;
};

struct Interferer {
    double power_dBm = 0.0;
    double aoa = 0.0;
};

enum class LbtDecision { transmit, defer };

/// Transmit iff the pattern-weighted sum of interferer powers is below the threshold.
LbtDecision lbt_decide(const LbtConfig &cfg, std::span<const Interferer> interferers);

struct LbtResult {
    double airtime_a = 0.0;          ///< share of busy slots in which A transmits
    double airtime_b = 0.0;
    double collision_fraction = 0.0; ///< share of busy slots with both transmitting co-channel
    double mean_rate_a = 0.0;        ///< bits/s/Hz, averaged over A's transmitting slots
    double mean_rate_b = 0.0;
    std::size_t busy_slots = 0;
};

/**
 * Slotted LBT between the two networks of a scenario.
 *
 * A saturated network that finds the medium idle counts its backoff down and
 * starts a txop_slots-long transmission at zero; when the medium is busy it
 * freezes, drawing a fresh backoff if it was about to transmit. After every
 * transmission a new backoff, uniform in [0, backoff_slots_max], is drawn.
 * Networks starting in the same slot don't hear each other and collide.
 */
LbtResult run_lbt_sim(const CoexScenario &s, const LbtConfig &cfg, std::size_t slots, std::uint64_t seed);

struct BandFilter {
    double per_pass_oob_attenuation_dB = 0.0;
    int passes_on_reflection = 2;
    double inband_insertion_loss_dB = 0.0;

    void validate() const;
};

struct FilteredPower {
    double inband_out_dBm = 0.0;
    double oob_out_dBm = 0.0;
};

/// Band-limiting layer: reflective surfaces traverse it on the way in and again on the way out.
FilteredPower apply_band_filter(const BandFilter &filter, double inband_dBm, double oob_dBm, bool reflective);

struct AdjacentTrial {
    double rate_b_no_filter = 0.0;
    double rate_b_with_filter = 0.0;
    double rate_b_no_ris = 0.0; ///< RIS-A bounce removed entirely
};

struct AdjacentResult {
    double rate_b_no_filter = 0.0;
    double rate_b_with_filter = 0.0;
    std::vector<AdjacentTrial> trials;
};

/// One paired trial: B's stale-CSI rate with the RIS-A bounce unfiltered, filtered, and absent.
AdjacentTrial adjacent_channel_trial(const CoexScenario &s, const std::optional<BandFilter> &filter,
                                     std::uint64_t trial_seed);

AdjacentResult run_adjacent_channel_sim(const CoexScenario &s, const std::optional<BandFilter> &filter,
                                        std::size_t trials, std::uint64_t seed);

} // namespace rissim
