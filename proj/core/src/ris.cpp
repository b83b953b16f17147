// SPDX-License-Identifier: Apache-2.0
#include "rissim/ris.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rissim/errors.hpp"

namespace rissim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double arg_or_zero(Complex z) { return z == Complex(0.0, 0.0) ? 0.0 : std::arg(z); }

} // namespace

// ---------------------------------------------------------------------------------------------
// Panel state

double wrap_phase(double phi)
{
    if (!std::isfinite(phi))
        throw InvalidInput("phase must be finite");
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0)
        r += kTwoPi;
    if (r >= kTwoPi)
        r = 0.0;
    return r;
}

double quantize_phase(double phi, int bits)
{
    if (bits < 1 || bits > 30)
        throw InvalidInput("quantization bits must lie in [1, 30]");
    const long levels = 1L << bits;
    const double step = kTwoPi / static_cast<double>(levels);
    const double t = wrap_phase(phi) / step;
    const double lo = std::floor(t);
    const double frac = t - lo;
    const long k_lo = static_cast<long>(lo) % levels;
    const long k_hi = (static_cast<long>(lo) + 1) % levels;
    long k;
    if (frac < 0.5)
        k = k_lo;
    else if (frac > 0.5)
        k = k_hi;
    else
        k = std::min(k_lo, k_hi);
    return static_cast<double>(k) * step;
}

RisPanel::RisPanel(std::size_t n_elements, Point3 position)
    : amplitudes_(n_elements, 1.0), phases_(n_elements, 0.0), position_(position)
{
    if (n_elements == 0)
        throw InvalidInput("RisPanel: n_elements must be >= 1");
}

void RisPanel::set_amplitude(std::size_t n, double beta)
{
    if (n >= n_elements())
        throw InvalidInput("RisPanel::set_amplitude: element index out of range");
    if (!(beta >= 0.0 && beta <= 1.0))
        throw InvalidInput("RisPanel: amplitude must lie in [0, 1]");
    amplitudes_[n] = beta;
}

void RisPanel::set_phase(std::size_t n, double phi)
{
    if (n >= n_elements())
        throw InvalidInput("RisPanel::set_phase: element index out of range");
    phases_[n] = bits_ ? quantize_phase(phi, *bits_) : wrap_phase(phi);
}

void RisPanel::set_phases(std::span<const double> phi)
{
    if (phi.size() != n_elements())
        throw InvalidInput("RisPanel::set_phases: length mismatch");
    for (std::size_t n = 0; n < phi.size(); ++n)
        set_phase(n, phi[n]);
}

void RisPanel::set_amplitudes(std::span<const double> beta)
{
    if (beta.size() != n_elements())
        throw InvalidInput("RisPanel::set_amplitudes: length mismatch");
    for (std::size_t n = 0; n < beta.size(); ++n)
        set_amplitude(n, beta[n]);
}

void RisPanel::set_quantization_bits(int bits)
{
    if (bits < 1 || bits > 30)
        throw InvalidInput("quantization bits must lie in [1, 30]");
    bits_ = bits;
    for (double &phi : phases_)
        phi = quantize_phase(phi, bits);
}

void RisPanel::set_partition(std::vector<IndexRange> blocks)
{
    std::vector<bool> used(n_elements(), false);
    for (const auto &b : blocks) {
        if (b.size == 0)
            throw InvalidInput("RisPanel: partition blocks must be non-empty");
        if (b.end() > n_elements())
            throw InvalidInput("RisPanel: partition block exceeds the panel");
        for (std::size_t i = b.begin; i < b.end(); ++i) {
            if (used[i])
                throw InvalidInput("RisPanel: partition blocks overlap");
            used[i] = true;
        }
    }
    partition_ = std::move(blocks);
}

double RisPanel::amplitude_sum() const
{
    double s = 0.0;
    for (double a : amplitudes_)
        s += a;
    return s;
}

ThetaMatrix theta(const RisPanel &panel)
{
    ThetaMatrix th;
    th.diagonal.resize(panel.n_elements());
    for (std::size_t n = 0; n < panel.n_elements(); ++n)
        th.diagonal[n] = std::polar(panel.amplitudes()[n], panel.phases()[n]);
    return th;
}

RisPanel quantize_phases(const RisPanel &panel, int bits)
{
    RisPanel out = panel;
    out.set_quantization_bits(bits);
    return out;
}

// ---------------------------------------------------------------------------------------------
// MISO alignment

MisoChannel effective_miso(const ChannelRealization &real, double beta_gain)
{
    real.validate();
    const SvdResult gs = svd(real.g_nb_ris);
    const SvdResult hs = svd(real.h_ris_ue);
    const Eigen::VectorXcd v = gs.right_vectors.mat().col(0);
    const Eigen::VectorXcd u = hs.left_vectors.mat().col(0);

    const Eigen::VectorXcd gv = std::sqrt(real.pl_nb_ris) * beta_gain * (real.g_nb_ris.mat() * v);
    const Eigen::RowVectorXcd uh = std::sqrt(real.pl_ris_ue) * (u.adjoint() * real.h_ris_ue.mat());

    MisoChannel out;
    out.g.assign(gv.data(), gv.data() + gv.size());
    out.h.assign(uh.data(), uh.data() + uh.size());
    if (real.h_nb_ue)
        out.direct = std::sqrt(real.pl_nb_ue) * (u.adjoint() * real.h_nb_ue->mat() * v)(0, 0);
    return out;
}

MisoChannel restrict_miso(const MisoChannel &miso, IndexRange block)
{
    if (block.end() > miso.g.size())
        throw InvalidInput("restrict_miso: block exceeds the channel");
    MisoChannel out;
    out.g.assign(miso.g.begin() + static_cast<std::ptrdiff_t>(block.begin),
                 miso.g.begin() + static_cast<std::ptrdiff_t>(block.end()));
    out.h.assign(miso.h.begin() + static_cast<std::ptrdiff_t>(block.begin),
                 miso.h.begin() + static_cast<std::ptrdiff_t>(block.end()));
    out.direct = miso.direct;
    return out;
}

Complex miso_composite(std::span<const Complex> g, std::span<const Complex> h, const RisPanel &panel, Complex direct)
{
    if (g.size() != h.size() || g.size() != panel.n_elements())
        throw InvalidInput("miso_composite: length mismatch");
    Complex s = direct;
    const ThetaMatrix th = theta(panel);
    for (std::size_t n = 0; n < g.size(); ++n)
        s += h[n] * th.diagonal[n] * g[n];
    return s;
}

RisPanel align_phases_miso(std::span<const Complex> g, std::span<const Complex> h, Complex direct)
{
    if (g.empty() || h.empty())
        throw InvalidInput("align_phases_miso: vectors must be non-empty");
    if (g.size() != h.size())
        throw InvalidInput("align_phases_miso: g and h lengths differ");
    RisPanel panel(g.size());
    const double ref = arg_or_zero(direct);
    for (std::size_t n = 0; n < g.size(); ++n)
        panel.set_phase(n, ref - arg_or_zero(h[n]) - arg_or_zero(g[n]));
    return panel;
}

RisPanel align_phases_discrete(std::span<const Complex> g, std::span<const Complex> h, Complex direct, int bits)
{
    if (g.empty() || h.empty())
        throw InvalidInput("align_phases_discrete: vectors must be non-empty");
    if (g.size() != h.size())
        throw InvalidInput("align_phases_discrete: g and h lengths differ");
    if (bits < 1 || bits > 16)
        throw InvalidInput("align_phases_discrete: bits must lie in [1, 16]");

    const std::size_t n_el = g.size();
    const long levels = 1L << bits;
    const double step = kTwoPi / static_cast<double>(levels);

    std::vector<double> mag(n_el), ang(n_el);
    std::vector<double> breaks;
    for (std::size_t n = 0; n < n_el; ++n) {
        const Complex t = h[n] * g[n];
        mag[n] = std::abs(t);
        ang[n] = arg_or_zero(t);
        if (mag[n] == 0.0)
            continue;
        for (long j = 0; j < levels; ++j)
            breaks.push_back(wrap_phase(ang[n] + (static_cast<double>(j) + 0.5) * step));
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<double> refs;
    if (breaks.empty()) {
        refs.push_back(0.0);
    } else {
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            refs.push_back(0.5 * (breaks[i] + breaks[i + 1]));
        refs.push_back(wrap_phase(0.5 * (breaks.back() + breaks.front() + kTwoPi)));
    }

    RisPanel best(n_el);
    best.set_quantization_bits(bits);
    double best_power = -1.0;
    RisPanel trial = best;
    for (double psi : refs) {
        for (std::size_t n = 0; n < n_el; ++n)
            trial.set_phase(n, mag[n] == 0.0 ? 0.0 : psi - ang[n]);
        const double p = std::norm(miso_composite(g, h, trial, direct));
        if (p > best_power) {
            best_power = p;
            best = trial;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------------------------
// Alternating MIMO optimization

namespace {

struct Link {
    Eigen::MatrixXcd h; ///< U x N, cascade amplitude folded in
    Eigen::MatrixXcd g; ///< N x M
    Eigen::MatrixXcd d; ///< U x M, zero when the direct path is blocked
};

Link make_link(const ChannelRealization &real, double beta_gain)
{
    real.validate();
    Link l;
    l.h = std::sqrt(real.pl_ris_ue * real.pl_nb_ris) * beta_gain * real.h_ris_ue.mat();
    l.g = real.g_nb_ris.mat();
    if (real.h_nb_ue)
        l.d = std::sqrt(real.pl_nb_ue) * real.h_nb_ue->mat();
    else
        l.d = Eigen::MatrixXcd::Zero(l.h.rows(), l.g.cols());
    return l;
}

Eigen::MatrixXcd link_channel(const Link &l, const ThetaMatrix &th)
{
    Eigen::MatrixXcd scaled = l.h;
    for (Eigen::Index n = 0; n < scaled.cols(); ++n)
        scaled.col(n) *= th.diagonal[static_cast<std::size_t>(n)];
    return scaled * l.g + l.d;
}

struct Evaluation {
    std::vector<double> capacities;
    double weighted = 0.0;
};

Evaluation evaluate(const std::vector<Link> &links, std::span<const double> w, const RisPanel &panel, double power,
                    double noise)
{
    const ThetaMatrix th = theta(panel);
    Evaluation e;
    e.capacities.reserve(links.size());
    for (std::size_t i = 0; i < links.size(); ++i) {
        const double c = waterfill_capacity(ComplexMatrix(link_channel(links[i], th)), power, noise);
        e.capacities.push_back(c);
        e.weighted += w[i] * c;
    }
    return e;
}

RisPanel aligned_start(const ChannelRealization &real, const RisPanel &panel, double beta_gain)
{
    const MisoChannel miso = effective_miso(real, beta_gain);
    RisPanel out = panel;
    const double ref = arg_or_zero(miso.direct);
    for (std::size_t n = 0; n < out.n_elements(); ++n)
        out.set_phase(n, ref - arg_or_zero(miso.h[n]) - arg_or_zero(miso.g[n]));
    return out;
}

// Per-link data for one element during a coordinate sweep with fixed precoders.
// With X = X_rest + theta a b^T, X X^H = X_rest X_rest^H + W C W^H where W = [a, X_rest b^*]
// and C = [[|b|^2, theta], [conj(theta), 0]] for |theta| = 1, so by the determinant lemma
// log det(I + X X^H / s) = const + log det(I_2 + C K / s), K = W^H (I + X_rest X_rest^H / s)^-1 W.
struct ElementTerm {
    double b2 = 0.0;
    Eigen::Matrix2cd k;
};

double lemma_logdet(const ElementTerm &t, Complex th, double noise)
{
    Eigen::Matrix2cd c;
    c << Complex(t.b2, 0.0), th, std::conj(th), Complex(0.0, 0.0);
    const Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity() + (c * t.k) / noise;
    const Complex det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return std::log2(std::max(det.real(), std::numeric_limits<double>::min()));
}

} // namespace

SharedThetaResult optimize_shared_theta(std::span<const ChannelRealization> links, std::span<const double> weights,
                                        const RisPanel &panel, double power, double noise, int max_iters,
                                        double rel_tol, std::size_t grid_points, double beta_gain)
{
    if (links.empty())
        throw InvalidInput("optimize_shared_theta: at least one link is required");
    if (weights.size() != links.size())
        throw InvalidInput("optimize_shared_theta: one weight per link is required");
    for (double w : weights)
        if (!(w > 0.0) || !std::isfinite(w))
            throw InvalidInput("optimize_shared_theta: weights must be positive");
    if (max_iters < 1)
        throw InvalidInput("optimize_phases: max_iters must be >= 1");
    if (!(rel_tol > 0.0))
        throw InvalidInput("optimize_phases: rel_tol must be positive");
    if (!(power > 0.0) || !(noise > 0.0))
        throw InvalidInput("optimize_phases: power and noise must be positive");
    if (grid_points < 2)
        throw InvalidInput("optimize_phases: phase grid needs at least 2 points");

    std::vector<Link> ls;
    ls.reserve(links.size());
    for (const auto &r : links) {
        if (r.ris_elements() != panel.n_elements())
            throw InvalidInput("optimize_phases: panel size does not match the channel");
        ls.push_back(make_link(r, beta_gain));
    }

    const std::size_t n_el = panel.n_elements();
    const std::size_t levels = panel.quantization_bits() ? (std::size_t{1} << *panel.quantization_bits()) : grid_points;
    const double step = kTwoPi / static_cast<double>(levels);
    std::vector<Complex> grid(levels);
    for (std::size_t k = 0; k < levels; ++k)
        grid[k] = std::polar(1.0, static_cast<double>(k) * step);

    // Initialization: the caller's panel or a co-phased start per link, whichever scores best.
    RisPanel current = panel;
    Evaluation cur_eval = evaluate(ls, weights, current, power, noise);
    for (const auto &r : links) {
        RisPanel cand = aligned_start(r, panel, beta_gain);
        Evaluation e = evaluate(ls, weights, cand, power, noise);
        if (e.weighted > cur_eval.weighted) {
            current = std::move(cand);
            cur_eval = std::move(e);
        }
    }

    SharedThetaResult out;
    out.trace.push_back(cur_eval.weighted);

    for (int it = 0; it < max_iters; ++it) {
        const ThetaMatrix th0 = theta(current);
        std::vector<Eigen::MatrixXcd> x(ls.size());   // H_T F per link
        std::vector<Eigen::MatrixXcd> gf(ls.size());  // G F per link
        for (std::size_t i = 0; i < ls.size(); ++i) {
            const Eigen::MatrixXcd ht = link_channel(ls[i], th0);
            Eigen::MatrixXcd f = waterfill_precoder(ComplexMatrix(ht), power, noise).mat();
            if (f.squaredNorm() == 0.0) {
                // A dead link would ignore every phase move; spread power so it can be revived.
                const Eigen::Index m = ls[i].g.cols();
                f = std::sqrt(power / static_cast<double>(m)) * Eigen::MatrixXcd::Identity(m, m);
            }
            x[i] = ht * f;
            gf[i] = ls[i].g * f;
        }

        RisPanel next = current;
        std::vector<ElementTerm> terms(ls.size());
        for (std::size_t n = 0; n < n_el; ++n) {
            const double beta = next.amplitudes()[n];
            if (beta == 0.0)
                continue;
            const Complex old_unit = std::polar(1.0, next.phases()[n]);

            for (std::size_t i = 0; i < ls.size(); ++i) {
                const Eigen::VectorXcd a = beta * ls[i].h.col(static_cast<Eigen::Index>(n));
                const Eigen::RowVectorXcd b = gf[i].row(static_cast<Eigen::Index>(n));
                const Eigen::MatrixXcd rest = x[i] - old_unit * a * b;
                const Eigen::Index u = rest.rows();
                Eigen::MatrixXcd amat = Eigen::MatrixXcd::Identity(u, u) + rest * rest.adjoint() / noise;
                Eigen::MatrixXcd w(u, 2);
                w.col(0) = a;
                w.col(1) = rest * b.adjoint();
                const Eigen::MatrixXcd sol = amat.llt().solve(w);
                terms[i].b2 = b.squaredNorm();
                terms[i].k = w.adjoint() * sol;
            }

            auto score = [&](Complex th) {
                double s = 0.0;
                for (std::size_t i = 0; i < ls.size(); ++i)
                    s += weights[i] * lemma_logdet(terms[i], th, noise);
                return s;
            };

            double best = score(old_unit);
            std::size_t best_k = levels; // sentinel: keep the current phase
            for (std::size_t k = 0; k < levels; ++k) {
                const double s = score(grid[k]);
                if (s > best) {
                    best = s;
                    best_k = k;
                }
            }
            if (best_k == levels)
                continue;

            next.set_phase(n, static_cast<double>(best_k) * step);
            const Complex new_unit = std::polar(1.0, next.phases()[n]);
            for (std::size_t i = 0; i < ls.size(); ++i) {
                const Eigen::VectorXcd a = beta * ls[i].h.col(static_cast<Eigen::Index>(n));
                x[i] += (new_unit - old_unit) * a * gf[i].row(static_cast<Eigen::Index>(n));
            }
        }

        out.iterations = it + 1;
        Evaluation next_eval = evaluate(ls, weights, next, power, noise);
        if (!(next_eval.weighted >= cur_eval.weighted)) {
            // Floating-point noise in the sweep; never report a decrease.
            out.trace.push_back(cur_eval.weighted);
            break;
        }
        const double gain = next_eval.weighted - cur_eval.weighted;
        current = std::move(next);
        cur_eval = std::move(next_eval);
        out.trace.push_back(cur_eval.weighted);
        if (gain <= rel_tol * std::max(std::abs(out.trace[out.trace.size() - 2]), 1e-300))
            break;
    }

    out.panel = std::move(current);
    out.capacities = std::move(cur_eval.capacities);
    out.weighted_sum = cur_eval.weighted;
    return out;
}

MimoOptResult optimize_phases_mimo(const ChannelRealization &real, const RisPanel &panel, double power, double noise,
                                   int max_iters, double rel_tol, std::size_t grid_points, double beta_gain)
{
    const double w = 1.0;
    SharedThetaResult r = optimize_shared_theta(std::span<const ChannelRealization>(&real, 1),
                                                std::span<const double>(&w, 1), panel, power, noise, max_iters,
                                                rel_tol, grid_points, beta_gain);
    MimoOptResult out{std::move(r.panel), r.capacities.front(), r.iterations, std::move(r.trace)};
    return out;
}

RisPanel partition_panel(const RisPanel &panel, std::span<const std::size_t> block_sizes)
{
    std::size_t total = 0;
    for (std::size_t s : block_sizes) {
        if (s == 0)
            throw InvalidInput("partition_panel: block sizes must be positive");
        total += s;
    }
    if (total > panel.n_elements())
        throw InvalidInput("partition_panel: block sizes sum to " + std::to_string(total) + " but the panel has " +
                           std::to_string(panel.n_elements()) + " elements");

    RisPanel out = panel;
    std::vector<IndexRange> blocks;
    std::size_t at = 0;
    for (std::size_t s : block_sizes) {
        blocks.push_back({at, s});
        at += s;
    }
    for (std::size_t n = at; n < out.n_elements(); ++n)
        out.set_amplitude(n, 0.0);
    out.set_partition(std::move(blocks));
    return out;
}

} // namespace rissim
