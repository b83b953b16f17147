// SPDX-License-Identifier: Apache-2.0
#include "rissim/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "rissim/errors.hpp"
#include "rissim/random.hpp"

namespace rissim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Point3 unit(Point3 v)
{
    const double n = v.norm();
    return (1.0 / n) * v;
}

void require_spacing(const Geometry &g, const ArrayNode &node, std::size_t n, const std::string &id)
{
    // Allow a relative slack for spacings written as lambda/2 in decimal.
    if (n > 1 && node.spacing < 0.5 * g.wavelength * (1.0 - 1e-12))
        throw InvalidGeometry("node '" + id + "': element spacing below half a wavelength");
}

} // namespace

Point3 ArrayNode::element(std::size_t k, std::size_t n) const
{
    const double offset = (static_cast<double>(k) - 0.5 * static_cast<double>(n - 1)) * spacing;
    return position + offset * unit(axis);
}

void Geometry::validate() const
{
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
        throw InvalidGeometry("wavelength must be positive and finite");
    for (const auto &[id, node] : nodes) {
        if (!node.position.finite())
            throw InvalidGeometry("node '" + id + "': position is not finite");
        if (!(node.spacing >= 0.0) || !std::isfinite(node.spacing))
            throw InvalidGeometry("node '" + id + "': spacing must be finite and non-negative");
        if (!node.axis.finite() || node.axis.norm() == 0.0)
            throw InvalidGeometry("node '" + id + "': array axis must be a finite nonzero vector");
    }
}

const ArrayNode &Geometry::node(const std::string &id) const
{
    const auto it = nodes.find(id);
    if (it == nodes.end())
        throw InvalidInput("geometry has no node '" + id + "'");
    return it->second;
}

double Geometry::distance(const std::string &a, const std::string &b) const
{
    return rissim::distance(node(a).position, node(b).position);
}

void ChannelParams::validate() const
{
    if (!(rician_k >= 0.0))
        throw InvalidInput("rician_k must be non-negative");
    if (!(path_loss_exponent >= 2.0) || !std::isfinite(path_loss_exponent))
        throw InvalidInput("path_loss_exponent must be >= 2");
    if (!(noise_power > 0.0) || !std::isfinite(noise_power))
        throw InvalidInput("noise_power must be positive");
}

void ChannelRealization::validate() const
{
    const std::size_t n = g_nb_ris.rows();
    const std::size_t m = g_nb_ris.cols();
    const std::size_t u = h_ris_ue.rows();
    if (n == 0 || m == 0 || u == 0)
        throw InvalidInput("channel realization has an empty segment");
    if (h_ris_ue.cols() != n)
        throw InvalidInput("h_ris_ue columns (" + std::to_string(h_ris_ue.cols()) + ") must equal g_nb_ris rows (" +
                           std::to_string(n) + ")");
    if (h_nb_ue && (h_nb_ue->rows() != u || h_nb_ue->cols() != m))
        throw InvalidInput("h_nb_ue must be U x M");
    if (!(pl_nb_ris >= 0.0) || !(pl_ris_ue >= 0.0) || !(pl_nb_ue >= 0.0))
        throw InvalidInput("path-loss gains must be non-negative");
}

ComplexMatrix gen_los(const Geometry &geometry, const std::string &from, const std::string &to, std::size_t rows,
                      std::size_t cols, Wavefront wavefront)
{
    geometry.validate();
    if (rows == 0 || cols == 0)
        throw InvalidInput("gen_los: rows and cols must be >= 1");
    const ArrayNode &src = geometry.node(from);
    const ArrayNode &dst = geometry.node(to);
    require_spacing(geometry, src, cols, from);
    require_spacing(geometry, dst, rows, to);

    const double k = kTwoPi / geometry.wavelength;
    ComplexMatrix out(rows, cols);

    if (wavefront == Wavefront::spherical) {
        for (std::size_t r = 0; r < rows; ++r) {
            const Point3 pr = dst.element(r, rows);
            for (std::size_t c = 0; c < cols; ++c) {
                const double d = distance(pr, src.element(c, cols));
                if (d == 0.0)
                    throw InvalidGeometry("gen_los: coincident elements between '" + from + "' and '" + to + "'");
                out(r, c) = std::polar(1.0, -k * d);
            }
        }
        return out;
    }

    const Point3 delta = dst.position - src.position;
    const double d0 = delta.norm();
    if (d0 == 0.0)
        throw InvalidGeometry("gen_los: coincident array centers '" + from + "' and '" + to + "'");
    const Point3 u = (1.0 / d0) * delta;
    for (std::size_t r = 0; r < rows; ++r) {
        const double rx = u.dot(dst.element(r, rows) - dst.position);
        for (std::size_t c = 0; c < cols; ++c) {
            const double tx = u.dot(src.element(c, cols) - src.position);
            out(r, c) = std::polar(1.0, -k * (d0 + rx - tx));
        }
    }
    return out;
}

ComplexMatrix gen_rician(const ChannelParams &params, const ComplexMatrix &los_component, std::uint64_t seed)
{
    if (!los_component.all_finite())
        throw InvalidInput("gen_rician: LoS component is not finite");
    if (!(params.rician_k >= 0.0))
        throw InvalidInput("gen_rician: rician_k must be non-negative");
    if (std::isinf(params.rician_k))
        return los_component;

    const double k = params.rician_k;
    const double los_amp = std::sqrt(k / (k + 1.0));
    const double nlos_amp = std::sqrt(1.0 / (k + 1.0));
    Rng rng(seed, "gen_rician");
    const ComplexMatrix scatter = ComplexMatrix::gaussian(los_component.rows(), los_component.cols(), rng);
    return los_amp * los_component + nlos_amp * scatter;
}

double hop_gain(double wavelength, double distance, double exponent)
{
    if (!(distance > 0.0))
        throw InvalidGeometry("path loss: distance must be positive");
    return std::pow(wavelength / (4.0 * std::numbers::pi * distance), exponent);
}

double segmented_path_loss(const Geometry &geometry, const ChannelParams &params, bool via_ris, const std::string &nb,
                           const std::string &ris, const std::string &ue)
{
    geometry.validate();
    const double alpha = params.path_loss_exponent;
    if (!via_ris)
        return hop_gain(geometry.wavelength, geometry.distance(nb, ue), alpha);
    return hop_gain(geometry.wavelength, geometry.distance(nb, ris), alpha) *
           hop_gain(geometry.wavelength, geometry.distance(ris, ue), alpha);
}

Wavefront fraunhofer_wavefront(const Geometry &geometry, const std::string &from, const std::string &to,
                               std::size_t n_from, std::size_t n_to)
{
    const ArrayNode &a = geometry.node(from);
    const ArrayNode &b = geometry.node(to);
    const double ap_a = n_from > 1 ? static_cast<double>(n_from - 1) * a.spacing : 0.0;
    const double ap_b = n_to > 1 ? static_cast<double>(n_to - 1) * b.spacing : 0.0;
    const double aperture = std::max(ap_a, ap_b);
    const double far_field = 2.0 * aperture * aperture / geometry.wavelength;
    return geometry.distance(from, to) < far_field ? Wavefront::spherical : Wavefront::planar;
}

ChannelRealization draw_realization(const LinkScenario &s, std::uint64_t seed)
{
    s.geometry.validate();
    s.params.validate();
    if (s.nb_antennas == 0 || s.ris_elements == 0 || s.ue_antennas == 0)
        throw InvalidInput("draw_realization: array sizes must be >= 1");

    const Wavefront nb_ris_wf =
        s.nb_ris_wavefront.value_or(fraunhofer_wavefront(s.geometry, "nb", "ris", s.nb_antennas, s.ris_elements));

    ChannelRealization out;
    out.seed = seed;

    const ComplexMatrix g_los = gen_los(s.geometry, "nb", "ris", s.ris_elements, s.nb_antennas, nb_ris_wf);
    out.g_nb_ris = gen_rician(s.params, g_los, derive_seed(seed, "g_nb_ris"));

    ChannelParams ris_ue = s.params;
    ris_ue.rician_k = s.ris_ue_k;
    const ComplexMatrix h_los = gen_los(s.geometry, "ris", "ue", s.ue_antennas, s.ris_elements, s.params.wavefront);
    out.h_ris_ue = gen_rician(ris_ue, h_los, derive_seed(seed, "h_ris_ue"));

    out.pl_nb_ris = hop_gain(s.geometry.wavelength, s.geometry.distance("nb", "ris"), s.params.path_loss_exponent);
    out.pl_ris_ue = hop_gain(s.geometry.wavelength, s.geometry.distance("ris", "ue"), s.params.path_loss_exponent);

    if (s.direct_path) {
        ChannelParams direct = s.params;
        direct.rician_k = s.nb_ue_k;
        const ComplexMatrix d_los = gen_los(s.geometry, "nb", "ue", s.ue_antennas, s.nb_antennas, s.params.wavefront);
        out.h_nb_ue = gen_rician(direct, d_los, derive_seed(seed, "h_nb_ue"));
        out.pl_nb_ue = hop_gain(s.geometry.wavelength, s.geometry.distance("nb", "ue"), s.params.path_loss_exponent);
    } else {
        out.pl_nb_ue = 0.0;
    }
    return out;
}

ComplexMatrix assemble_cascade(const ChannelRealization &real, const RisPanel &panel, double beta_gain)
{
    real.validate();
    if (panel.n_elements() != real.ris_elements())
        throw InvalidInput("assemble_effective: panel has " + std::to_string(panel.n_elements()) +
                           " elements but the channel has " + std::to_string(real.ris_elements()));
    if (!(beta_gain >= 0.0) || !std::isfinite(beta_gain))
        throw InvalidInput("assemble_effective: beta_gain must be finite and non-negative");

    const ThetaMatrix th = theta(panel);
    Eigen::MatrixXcd scaled = real.h_ris_ue.mat();
    for (Eigen::Index n = 0; n < scaled.cols(); ++n)
        scaled.col(n) *= th.diagonal[static_cast<std::size_t>(n)];
    const double amp = std::sqrt(real.pl_ris_ue * real.pl_nb_ris) * beta_gain;
    return ComplexMatrix(Eigen::MatrixXcd(amp * (scaled * real.g_nb_ris.mat())));
}

ComplexMatrix assemble_effective(const ChannelRealization &real, const RisPanel &panel, double beta_gain)
{
    ComplexMatrix h = assemble_cascade(real, panel, beta_gain);
    if (real.h_nb_ue)
        h = h + std::sqrt(real.pl_nb_ue) * *real.h_nb_ue;
    return h;
}

ComplexMatrix assemble_multi_panel(std::span<const ChannelRealization> per_panel, std::span<const RisPanel> panels,
                                   double beta_gain)
{
    if (per_panel.empty() || per_panel.size() != panels.size())
        throw InvalidInput("assemble_multi_panel: need one realization per panel");
    ComplexMatrix h = assemble_cascade(per_panel[0], panels[0], beta_gain);
    for (std::size_t k = 1; k < per_panel.size(); ++k)
        h = h + assemble_cascade(per_panel[k], panels[k], beta_gain);
    if (per_panel[0].h_nb_ue)
        h = h + std::sqrt(per_panel[0].pl_nb_ue) * *per_panel[0].h_nb_ue;
    return h;
}

ComplexVector received_signal(const ChannelRealization &real, const RisPanel &panel, const SignalModel &sig,
                              std::uint64_t seed, double beta_gain)
{
    const ComplexMatrix h = assemble_effective(real, panel, beta_gain);
    if (sig.precoder.rows() != h.cols())
        throw InvalidInput("received_signal: precoder rows must equal NB antennas");
    if (sig.precoder.cols() != sig.symbols.size())
        throw InvalidInput("received_signal: precoder columns must equal the number of streams");
    if (!(sig.noise_power >= 0.0))
        throw InvalidInput("received_signal: noise_power must be non-negative");
    const double fro2 = sig.precoder.mat().squaredNorm();
    if (fro2 > sig.power_budget * (1.0 + 1e-12))
        throw InvalidInput("received_signal: precoder exceeds the transmit power budget");

    const Eigen::Map<const Eigen::VectorXcd> x(sig.symbols.data(), static_cast<Eigen::Index>(sig.symbols.size()));
    const Eigen::VectorXcd clean = h.mat() * (sig.precoder.mat() * x);

    Rng rng(seed, "received_signal");
    ComplexVector y(static_cast<std::size_t>(clean.size()));
    for (std::size_t u = 0; u < y.size(); ++u)
        y[u] = clean(static_cast<Eigen::Index>(u)) + rng.complex_normal(sig.noise_power);
    return y;
}

} // namespace rissim
