// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "rissim/geometry.hpp"
#include "rissim/numkernel.hpp"
#include "rissim/panel.hpp"

namespace rissim {

enum class Wavefront { planar, spherical };

/// Uniform linear array anchored at `position`, elements laid out along `axis`.
struct ArrayNode {
    Point3 position;
    double spacing = 0.0; ///< meters; must be >= wavelength / 2
    Point3 axis{0.0, 1.0, 0.0};

    /// Position of element k out of n, centered on `position`.
    Point3 element(std::size_t k, std::size_t n) const;
};

struct Geometry {
    double wavelength = 0.1;
    std::map<std::string, ArrayNode> nodes;

    /// Throws InvalidGeometry when wavelength, positions or spacings are out of range.
    void validate() const;
    const ArrayNode &node(const std::string &id) const;
    double distance(const std::string &a, const std::string &b) const;
};

struct ChannelParams {
    double rician_k = 0.0;          ///< linear; 0 is Rayleigh, +inf is pure LoS
    double path_loss_exponent = 2.0;
    double noise_power = 1.0;       ///< watts
    Wavefront wavefront = Wavefront::planar;

    void validate() const;
};

/**
 * One draw of the three channel segments.
 *
 * g_nb_ris is N x M, h_ris_ue is U x N and h_nb_ue (when present) is U x M. The
 * matrices are unit-scale; path loss is kept separately as linear power gains and
 * applied as amplitude factors at assembly time.
 */
struct ChannelRealization {
    ComplexMatrix g_nb_ris;
    ComplexMatrix h_ris_ue;
    std::optional<ComplexMatrix> h_nb_ue; ///< absent: direct path blocked
    double pl_nb_ris = 1.0;
    double pl_ris_ue = 1.0;
    double pl_nb_ue = 1.0;
    std::uint64_t seed = 0;

    std::size_t nb_antennas() const { return g_nb_ris.cols(); }
    std::size_t ris_elements() const { return g_nb_ris.rows(); }
    std::size_t ue_antennas() const { return h_ris_ue.rows(); }
    /// Throws InvalidInput if the segment shapes disagree.
    void validate() const;
    friend bool operator==(const ChannelRealization &, const ChannelRealization &) = default;
};

struct SignalModel {
    ComplexMatrix precoder; ///< M x S
    ComplexVector symbols;  ///< S
    double noise_power = 1.0;
    double power_budget = std::numeric_limits<double>::infinity();
};

/// A full NB / RIS / UE link description from which realizations are drawn.
struct LinkScenario {
    Geometry geometry; ///< must contain nodes "nb", "ris" and "ue"
    ChannelParams params;
    std::size_t nb_antennas = 1;
    std::size_t ris_elements = 1;
    std::size_t ue_antennas = 1;
    double ris_ue_k = 0.0;
    double nb_ue_k = 0.0;
    bool direct_path = true;
    /// NB-RIS LoS model; unset selects by the Fraunhofer distance.
    std::optional<Wavefront> nb_ris_wavefront;
};

/**
 * Deterministic LoS matrix between two arrays.
 *
 * Entry (r, c) is exp(-j 2 pi d_rc / lambda) with r indexing `to` elements and c
 * indexing `from` elements. The planar model replaces d_rc by its first-order
 * expansion around the array centers, which makes the result an outer product.
 */
ComplexMatrix gen_los(const Geometry &geometry, const std::string &from, const std::string &to, std::size_t rows,
                      std::size_t cols, Wavefront wavefront);

/// sqrt(K/(K+1)) los + sqrt(1/(K+1)) CN(0, 1); K = +inf returns los unchanged.
ComplexMatrix gen_rician(const ChannelParams &params, const ComplexMatrix &los_component, std::uint64_t seed);

/// Free-space style single-hop power gain (lambda / (4 pi d))^alpha.
double hop_gain(double wavelength, double distance, double exponent);

/// Direct NB-UE gain, or the product of the NB-RIS and RIS-UE hop gains when via_ris.
double segmented_path_loss(const Geometry &geometry, const ChannelParams &params, bool via_ris,
                           const std::string &nb = "nb", const std::string &ris = "ris",
                           const std::string &ue = "ue");

/// Spherical when the link is shorter than 2 D^2 / lambda, D the larger aperture.
Wavefront fraunhofer_wavefront(const Geometry &geometry, const std::string &from, const std::string &to,
                               std::size_t n_from, std::size_t n_to);

/// Draws all three segments and their path-loss scalars for a scenario.
ChannelRealization draw_realization(const LinkScenario &scenario, std::uint64_t seed);

/// H_T = sqrt(pl_ris_ue pl_nb_ris) H_ris-ue (beta Theta) G_nb-ris [+ sqrt(pl_nb_ue) H_nb-ue].
ComplexMatrix assemble_effective(const ChannelRealization &real, const RisPanel &panel, double beta_gain = 1.0);

/// Cascaded (RIS-only) part of assemble_effective.
ComplexMatrix assemble_cascade(const ChannelRealization &real, const RisPanel &panel, double beta_gain = 1.0);

/// Sum of per-panel cascades plus the direct term of the first realization, if any.
ComplexMatrix assemble_multi_panel(std::span<const ChannelRealization> per_panel, std::span<const RisPanel> panels,
                                   double beta_gain = 1.0);

/// Y = H_T F X + W, W ~ CN(0, noise_power I) drawn from `seed`.
ComplexVector received_signal(const ChannelRealization &real, const RisPanel &panel, const SignalModel &sig,
                              std::uint64_t seed, double beta_gain = 1.0);

} // namespace rissim
