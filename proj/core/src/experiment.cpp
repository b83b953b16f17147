// SPDX-License-Identifier: Apache-2.0
#include "rissim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <thread>
#include <utility>

#include <nlohmann/json.hpp>

#include "rissim/errors.hpp"
#include "rissim/numkernel.hpp"
#include "rissim/random.hpp"
#include "rissim/ris.hpp"

#ifndef RISSIM_VERSION
#define RISSIM_VERSION "0.0.0"
#endif

namespace rissim {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Strict field reader

struct Check {
    std::function<bool(double)> ok;
    const char *message;
};

const Check kAny{[](double) { return true; }, ""};
const Check kFinite{[](double v) { return std::isfinite(v); }, "must be finite"};
const Check kPositive{[](double v) { return std::isfinite(v) && v > 0.0; }, "must be positive"};
const Check kNonNegative{[](double v) { return std::isfinite(v) && v >= 0.0; }, "must be non-negative"};
const Check kUnit{[](double v) { return v >= 0.0 && v <= 1.0; }, "must lie in [0, 1]"};

class Fields {
  public:
    Fields(const json *obj, std::string path, std::vector<std::string> &errors)
        : obj_(obj), path_(std::move(path)), errors_(errors)
    {
        if (obj_ && !obj_->is_object()) {
            error("", "must be an object");
            obj_ = nullptr;
        }
    }

    std::string at(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }

    void error(const std::string &key, const std::string &msg)
    {
        const std::string p = key.empty() ? (path_.empty() ? "(root)" : path_) : at(key);
        errors_.push_back(p + ": " + msg);
    }

    bool has(const std::string &key) const { return obj_ && obj_->contains(key); }

    const json *take(const std::string &key)
    {
        used_.insert(key);
        if (!obj_)
            return nullptr;
        auto it = obj_->find(key);
        return it == obj_->end() ? nullptr : &*it;
    }

    void number(const std::string &key, double &out, const Check &c = kFinite, bool required = false)
    {
        const json *v = take(key);
        if (!v) {
            if (required)
                error(key, "required field is missing");
            return;
        }
        if (!v->is_number()) {
            error(key, "expected a number");
            return;
        }
        const double d = v->get<double>();
        if (!c.ok(d)) {
            error(key, c.message);
            return;
        }
        out = d;
    }

    template <class Int>
    void integer(const std::string &key, Int &out, long long min_value = 0,
                 long long max_value = std::numeric_limits<long long>::max(), bool required = false)
    {
        const json *v = take(key);
        if (!v) {
            if (required)
                error(key, "required field is missing");
            return;
        }
        if (!v->is_number_integer()) {
            error(key, "expected an integer");
            return;
        }
        if (v->is_number_unsigned()) {
            const auto u = v->get<unsigned long long>();
            if (u > static_cast<unsigned long long>(max_value)) {
                error(key, "must be at most " + std::to_string(max_value));
                return;
            }
            if (static_cast<long long>(u) < min_value) {
                error(key, "must be at least " + std::to_string(min_value));
                return;
            }
            out = static_cast<Int>(u);
            return;
        }
        const auto s = v->get<long long>();
        if (s < min_value) {
            error(key, "must be at least " + std::to_string(min_value));
            return;
        }
        if (s > max_value) {
            error(key, "must be at most " + std::to_string(max_value));
            return;
        }
        out = static_cast<Int>(s);
    }

    void uint64(const std::string &key, std::uint64_t &out)
    {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_number_unsigned()) {
            error(key, "expected a non-negative 64-bit integer");
            return;
        }
        out = v->get<std::uint64_t>();
    }

    void boolean(const std::string &key, bool &out)
    {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_boolean()) {
            error(key, "expected true or false");
            return;
        }
        out = v->get<bool>();
    }

    void string(const std::string &key, std::string &out)
    {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_string()) {
            error(key, "expected a string");
            return;
        }
        out = v->get<std::string>();
    }

    template <class E> void enumeration(const std::string &key, E &out, std::initializer_list<std::pair<const char *, E>> names)
    {
        const json *v = take(key);
        if (!v)
            return;
        std::string allowed;
        for (const auto &[n, e] : names) {
            if (v->is_string() && v->get<std::string>() == n) {
                out = e;
                return;
            }
            allowed += allowed.empty() ? n : std::string(", ") + n;
        }
        error(key, "expected one of: " + allowed);
    }

    bool numbers(const std::string &key, std::vector<double> &out, std::size_t arity = 0, const Check &c = kFinite,
                 bool required = false)
    {
        const json *v = take(key);
        if (!v) {
            if (required)
                error(key, "required field is missing");
            return false;
        }
        return read_numbers(*v, at(key), out, arity, c);
    }

    bool read_numbers(const json &v, const std::string &path, std::vector<double> &out, std::size_t arity,
                      const Check &c)
    {
        if (!v.is_array() || (arity && v.size() != arity)) {
            errors_.push_back(path + ": expected an array of " + (arity ? std::to_string(arity) + " " : "") + "numbers");
            return false;
        }
        std::vector<double> tmp;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !c.ok(v[i].get<double>())) {
                errors_.push_back(path + "[" + std::to_string(i) + "]: " +
                                  (v[i].is_number() ? c.message : "expected a number"));
                return false;
            }
            tmp.push_back(v[i].get<double>());
        }
        out = std::move(tmp);
        return true;
    }

    void point(const std::string &key, Point3 &out, bool required = false)
    {
        std::vector<double> xyz;
        if (numbers(key, xyz, 3, kFinite, required))
            out = {xyz[0], xyz[1], xyz[2]};
    }

    void sizes(const std::string &key, std::vector<std::size_t> &out, std::size_t min_value)
    {
        const json *v = take(key);
        if (!v)
            return;
        if (!v->is_array() || v->empty()) {
            error(key, "expected a non-empty array of integers");
            return;
        }
        std::vector<std::size_t> tmp;
        for (std::size_t i = 0; i < v->size(); ++i) {
            const json &e = (*v)[i];
            if (!e.is_number_unsigned() || e.get<std::size_t>() < min_value) {
                errors_.push_back(at(key) + "[" + std::to_string(i) + "]: expected an integer >= " +
                                  std::to_string(min_value));
                return;
            }
            tmp.push_back(e.get<std::size_t>());
        }
        out = std::move(tmp);
    }

    Fields child(const std::string &key, bool required = false)
    {
        const json *v = take(key);
        if (!v && required)
            error(key, "required field is missing");
        return Fields(v, at(key), errors_);
    }

    bool present() const { return obj_ != nullptr; }

    void finish()
    {
        if (!obj_)
            return;
        for (const auto &[k, v] : obj_->items()) {
            (void)v;
            if (!used_.count(k))
                error(k, "unknown field");
        }
    }

    std::vector<std::string> &errors() { return errors_; }

  private:
    const json *obj_;
    std::string path_;
    std::vector<std::string> &errors_;
    std::set<std::string> used_;
};

template <class F> void semantic(std::vector<std::string> &errors, const std::string &path, F &&f)
{
    try {
        f();
    } catch (const std::invalid_argument &e) {
        errors.push_back(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Per-experiment readers

void read_link(Fields &f, LinkConfig &l)
{
    f.integer("nb_antennas", l.nb_antennas, 1, 4096);
    f.integer("ris_elements", l.ris_elements, 1, 65536);
    f.integer("ue_antennas", l.ue_antennas, 1, 4096);
    f.number("wavelength", l.wavelength, kPositive);
    f.number("element_spacing", l.element_spacing, kPositive);
    f.point("nb_position", l.nb_position);
    f.point("ris_position", l.ris_position);
    f.point("ue_position", l.ue_position);
    f.boolean("nb_ris_los", l.nb_ris_los);
    f.number("rician_k", l.rician_k, kNonNegative);
    f.number("ris_ue_k", l.ris_ue_k, kNonNegative);
    f.number("nb_ue_k", l.nb_ue_k, kNonNegative);
    f.boolean("direct_path", l.direct_path);
    f.number("path_loss_exponent", l.path_loss_exponent,
             {[](double v) { return std::isfinite(v) && v >= 2.0; }, "must be >= 2"});
    f.number("noise_power", l.noise_power, kPositive);
    enum class WavefrontChoice { automatic, planar, spherical };
    WavefrontChoice wf = !l.wavefront                             ? WavefrontChoice::automatic
                         : *l.wavefront == Wavefront::spherical ? WavefrontChoice::spherical
                                                                : WavefrontChoice::planar;
    f.enumeration<WavefrontChoice>("wavefront", wf,
                                   {{"auto", WavefrontChoice::automatic},
                                    {"planar", WavefrontChoice::planar},
                                    {"spherical", WavefrontChoice::spherical}});
    if (wf == WavefrontChoice::automatic)
        l.wavefront.reset();
    else
        l.wavefront = wf == WavefrontChoice::spherical ? Wavefront::spherical : Wavefront::planar;
    f.boolean("apply_path_loss", l.apply_path_loss);
    f.number("snr_dB", l.snr_dB);
}

void read_network(Fields &f, NetworkConfig &n)
{
    f.integer("nb_antennas", n.nb_antennas, 1, 4096);
    f.integer("ue_antennas", n.ue_antennas, 1, 4096);
    if (f.has("ris_elements")) {
        std::size_t e = 0;
        f.integer("ris_elements", e, 1, 65536);
        n.ris_elements = e;
    } else {
        f.take("ris_elements");
    }
    f.number("direct_gain", n.direct_gain, kNonNegative);
    f.number("foreign_bounce_gain", n.foreign_bounce_gain, kNonNegative);
    f.number("own_ris_gain", n.own_ris_gain, kNonNegative);
    f.number("tx_power", n.tx_power, kPositive);
    f.number("noise_power", n.noise_power, kPositive);
    f.boolean("saturated", n.saturated);
    f.number("signal_dBm", n.signal_dBm);
    f.number("noise_dBm", n.noise_dBm);
    f.number("power_at_peer_dBm", n.power_at_peer_dBm);
    f.number("aoa_at_peer", n.aoa_at_peer);
    f.number("interference_at_peer_ue_dBm", n.interference_at_peer_ue_dBm);
    f.number("ris_interference_at_peer_ue_dBm", n.ris_interference_at_peer_ue_dBm);
    f.finish();
}

void read_coex_scenario(Fields &f, CoexScenario &s)
{
    Fields a = f.child("a");
    read_network(a, s.a);
    Fields b = f.child("b");
    read_network(b, s.b);
    f.boolean("same_frequency", s.same_frequency);
    f.integer("t1", s.t1);
    f.integer("t2", s.t2);
    f.enumeration<RisUpdatePolicy>("policy", s.policy,
                                   {{"static", RisUpdatePolicy::static_phases},
                                    {"rerandomize", RisUpdatePolicy::rerandomize_each_slot},
                                    {"frozen", RisUpdatePolicy::frozen_during_foreign_slot}});
}

void read_rank(Fields &f, RankExperiment &e)
{
    read_link(f, e.link);
    f.integer("panels", e.panels, 1, 64);
    f.point("panel_offset", e.panel_offset);
}

void read_beamform(Fields &f, BeamformExperiment &e)
{
    f.sizes("ris_elements", e.ris_elements, 1);
    f.enumeration<BeamformChannel>("channel", e.channel,
                                   {{"unit", BeamformChannel::unit},
                                    {"random_phase", BeamformChannel::random_phase},
                                    {"rayleigh", BeamformChannel::rayleigh}});
    const json *bits = f.take("quantization_bits");
    if (bits) {
        std::vector<int> tmp;
        bool ok = bits->is_array();
        if (ok)
            for (const auto &b : *bits) {
                if (!b.is_number_integer() || b.get<long long>() < 1 || b.get<long long>() > 16) {
                    ok = false;
                    break;
                }
                tmp.push_back(b.get<int>());
            }
        if (ok)
            e.quantization_bits = std::move(tmp);
        else
            f.error("quantization_bits", "expected an array of integers in [1, 16]");
    }
}

void read_multiuser(Fields &f, MultiuserExperiment &e)
{
    read_link(f, e.link);
    f.integer("users", e.users, 1, 64);
    f.numbers("qos_weights", e.qos_weights, 0, kPositive);
    f.point("user_offset", e.user_offset);
    f.integer("max_iters", e.options.max_iters, 1, 100000);
    f.number("rel_tol", e.options.rel_tol, kNonNegative);
    f.integer("grid_points", e.options.grid_points, 2, 4096);
    f.number("max_gap", e.max_gap, kUnit);
    if (!e.qos_weights.empty() && e.qos_weights.size() != e.users)
        f.error("qos_weights", "needs one weight per user");
    if (e.users > e.link.ris_elements)
        f.error("users", "cannot exceed ris_elements");
}

void read_coex(Fields &f, CoexExperiment &e)
{
    read_coex_scenario(f, e.scenario);
    Fields l = f.child("lbt");
    if (l.present()) {
        LbtConfig cfg;
        l.number("sense_threshold_dBm", cfg.sense_threshold_dBm);
        l.boolean("directional", cfg.directional);
        const json *pattern = l.take("pattern");
        if (pattern) {
            if (!pattern->is_array()) {
                l.error("pattern", "expected an array of {start, gain_dB}");
            } else {
                for (std::size_t i = 0; i < pattern->size(); ++i) {
                    Fields s(&(*pattern)[i], l.at("pattern") + "[" + std::to_string(i) + "]", f.errors());
                    SenseSector sec;
                    s.number("start", sec.start, kFinite, true);
                    s.number("gain_dB", sec.gain_dB, kFinite, true);
                    s.finish();
                    cfg.pattern.push_back(sec);
                }
            }
        }
        l.integer("backoff_slots_max", cfg.backoff_slots_max, 0, 1 << 20);
        l.integer("txop_slots", cfg.txop_slots, 1, 1 << 20);
        l.integer("slots", e.lbt_slots, 1, 100000000);
        l.finish();
        semantic(f.errors(), l.at(""), [&] { cfg.validate(); });
        e.lbt = std::move(cfg);
    }
}

void read_adjacent(Fields &f, AdjacentExperiment &e)
{
    e.scenario.same_frequency = false;
    read_coex_scenario(f, e.scenario);
    if (e.scenario.same_frequency)
        f.error("same_frequency", "adjacent-channel experiments require false");
    Fields flt = f.child("filter");
    if (flt.present()) {
        BandFilter bf;
        flt.number("per_pass_oob_attenuation_dB", bf.per_pass_oob_attenuation_dB, kNonNegative);
        flt.integer("passes_on_reflection", bf.passes_on_reflection, 1, 16);
        flt.number("inband_insertion_loss_dB", bf.inband_insertion_loss_dB, kNonNegative);
        flt.finish();
        e.filter = bf;
    }
}

Rect read_rect(Fields &f, const json &v, const std::string &path)
{
    std::vector<double> r;
    if (!f.read_numbers(v, path, r, 4, kFinite))
        return {};
    return {r[0], r[1], r[2], r[3]};
}

void read_deploy(Fields &f, DeployExperiment &e)
{
    e.params.noise_power = 1e-12;
    if (const json *ext = f.take("extent"))
        e.scene.extent = read_rect(f, *ext, f.at("extent"));
    else
        f.error("extent", "required field is missing");
    if (const json *obs = f.take("obstacles")) {
        if (!obs->is_array())
            f.error("obstacles", "expected an array of [x0, y0, x1, y1]");
        else
            for (std::size_t i = 0; i < obs->size(); ++i)
                e.scene.obstacles.push_back(read_rect(f, (*obs)[i], f.at("obstacles") + "[" + std::to_string(i) + "]"));
    }
    if (const json *bss = f.take("base_stations")) {
        if (!bss->is_array())
            f.error("base_stations", "expected an array of objects");
        else
            for (std::size_t i = 0; i < bss->size(); ++i) {
                Fields b(&(*bss)[i], f.at("base_stations") + "[" + std::to_string(i) + "]", f.errors());
                BaseStation bs;
                b.point("position", bs.position, true);
                b.number("tx_power_dBm", bs.tx_power_dBm);
                b.integer("antennas", bs.antennas, 1, 4096);
                b.finish();
                e.scene.base_stations.push_back(bs);
            }
    }
    if (const json *sites = f.take("candidate_sites")) {
        if (!sites->is_array())
            f.error("candidate_sites", "expected an array of [x, y, z]");
        else
            for (std::size_t i = 0; i < sites->size(); ++i) {
                std::vector<double> p;
                if (f.read_numbers((*sites)[i], f.at("candidate_sites") + "[" + std::to_string(i) + "]", p, 3, kFinite))
                    e.scene.candidate_sites.push_back({p[0], p[1], p[2]});
            }
    }
    f.number("grid_resolution", e.scene.grid_resolution, kPositive);
    f.number("wavelength", e.scene.wavelength, kPositive);
    f.number("ue_height", e.scene.ue_height);
    f.number("path_loss_exponent", e.params.path_loss_exponent,
             {[](double v) { return std::isfinite(v) && v >= 2.0; }, "must be >= 2"});
    f.number("noise_power", e.params.noise_power, kPositive);
    f.integer("panel_elements", e.panel_elements, 1, 1 << 20);
    f.number("cost_per_panel", e.cost_per_panel, kPositive);
    f.number("budget", e.budget, kPositive);
    f.number("threshold_dB", e.threshold_dB, kFinite, true);
    f.number("target_fraction", e.target_fraction,
             {[](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0, 1]"});
    f.numbers("gain_scales", e.gain_scales, 0, kUnit);
    if (e.scene.candidate_sites.empty())
        f.error("candidate_sites", "at least one candidate site is required");
}

// `byte` is the 1-based offset of the offending character.
std::size_t line_of(std::string_view text, std::size_t byte, std::size_t &column)
{
    byte = std::min(byte, text.size() + 1);
    std::size_t line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            line_start = i + 1;
        }
    }
    column = byte > line_start ? byte - line_start : 1;
    return line;
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Trials

struct Metric {
    std::string name;
    std::string unit;
    double value;
};

using TrialRows = std::vector<Metric>;

std::string fmt_g(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

ChannelRealization unit_gains(ChannelRealization r)
{
    r.pl_nb_ris = 1.0;
    r.pl_ris_ue = 1.0;
    r.pl_nb_ue = r.h_nb_ue ? 1.0 : 0.0;
    return r;
}

TrialRows rank_trial(const RankExperiment &e, std::uint64_t seed)
{
    std::vector<ChannelRealization> reals;
    std::vector<RisPanel> panels;
    for (std::size_t k = 0; k < e.panels; ++k) {
        LinkScenario sc = e.link.scenario();
        const Point3 pos = e.link.ris_position + static_cast<double>(k) * e.panel_offset;
        sc.geometry.nodes["ris"].position = pos;
        sc.direct_path = e.link.direct_path && k == 0;
        ChannelRealization r = draw_realization(sc, derive_seed(seed, static_cast<std::uint64_t>(k)));
        reals.push_back(e.link.apply_path_loss ? std::move(r) : unit_gains(std::move(r)));
        panels.emplace_back(e.link.ris_elements, pos);
    }
    const ComplexMatrix h = assemble_multi_panel(reals, panels);
    const double power = e.link.noise_power * std::pow(10.0, e.link.snr_dB / 10.0);
    const double fro = h.frobenius_norm();
    TrialRows rows;
    rows.push_back({"rank", "count", static_cast<double>(numerical_rank(h))});
    rows.push_back({"condition_number", "ratio", fro > 0.0 ? condition_number(h) : kInf});
    rows.push_back({"capacity_waterfill", "bit/s/Hz", waterfill_capacity(h, power, e.link.noise_power)});
    rows.push_back({"capacity_equal_power", "bit/s/Hz", equal_power_capacity(h, power, e.link.noise_power)});
    return rows;
}

TrialRows beamform_trial(const BeamformExperiment &e, std::uint64_t seed)
{
    TrialRows rows;
    for (std::size_t n : e.ris_elements) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n)), "beamform");
        ComplexVector g(n), h(n);
        for (std::size_t i = 0; i < n; ++i) {
            switch (e.channel) {
            case BeamformChannel::unit:
                g[i] = h[i] = Complex(1.0, 0.0);
                break;
            case BeamformChannel::random_phase:
                g[i] = std::polar(1.0, rng.phase());
                h[i] = std::polar(1.0, rng.phase());
                break;
            case BeamformChannel::rayleigh:
                g[i] = rng.complex_normal(1.0);
                h[i] = rng.complex_normal(1.0);
                break;
            }
        }
        const Complex none(0.0, 0.0);
        const RisPanel aligned = align_phases_miso(g, h, none);
        const double power = std::norm(miso_composite(g, h, aligned, none));
        const std::string tag = "_n" + std::to_string(n);
        rows.push_back({"gain" + tag, "linear", power});
        for (int b : e.quantization_bits) {
            const RisPanel q = quantize_phases(aligned, b);
            const RisPanel opt = align_phases_discrete(g, h, none, b);
            const std::string bt = "_" + std::to_string(b) + "bit" + tag;
            rows.push_back({"quantized_ratio" + bt, "ratio", power > 0.0 ? std::norm(miso_composite(g, h, q, none)) / power : 1.0});
            rows.push_back({"discrete_opt_ratio" + bt, "ratio",
                            power > 0.0 ? std::norm(miso_composite(g, h, opt, none)) / power : 1.0});
        }
    }
    return rows;
}

TrialRows multiuser_trial(const MultiuserExperiment &e, std::uint64_t seed)
{
    const LinkScenario base = e.link.scenario();
    std::vector<UserContext> users;
    for (std::size_t u = 0; u < e.users; ++u) {
        LinkScenario sc = base;
        sc.geometry.nodes["ue"].position = e.link.ue_position + static_cast<double>(u) * e.user_offset;
        ChannelRealization r = draw_realization(sc, derive_seed(seed, static_cast<std::uint64_t>(u)));
        if (u > 0) {
            r.g_nb_ris = users[0].channel.g_nb_ris;
            r.pl_nb_ris = users[0].channel.pl_nb_ris;
        }
        UserContext ctx;
        ctx.id = static_cast<int>(u);
        ctx.channel = e.link.apply_path_loss ? std::move(r) : unit_gains(std::move(r));
        ctx.subband = IndexRange{u, 1};
        ctx.qos_weight = e.qos_weights.empty() ? 1.0 : e.qos_weights[u];
        users.push_back(std::move(ctx));
    }
    const RisPanel panel(e.link.ris_elements, e.link.ris_position);
    const double power = e.link.noise_power * std::pow(10.0, e.link.snr_dB / 10.0);
    const SharedVsIdeal cmp = compare_shared_vs_ideal(users, panel, power, e.link.noise_power, e.options);
    const ScheduleDecision sub = allocate_subblocks_qos(users, panel, power, e.link.noise_power);
    TrialRows rows;
    rows.push_back({"shared_sum", "bit/s/Hz", cmp.shared_sum});
    rows.push_back({"ideal_sum", "bit/s/Hz", cmp.ideal_sum});
    rows.push_back({"gap_fraction", "fraction", cmp.gap_fraction});
    rows.push_back({"admitted", "flag", cmp.gap_fraction <= e.max_gap ? 1.0 : 0.0});
    rows.push_back({"subblock_sum", "bit/s/Hz", sub.sum_metric});
    for (const auto &[id, alloc] : cmp.shared.per_user)
        rows.push_back({"shared_capacity_u" + std::to_string(id), "bit/s/Hz", alloc.capacity});
    return rows;
}

TrialRows coexist_trial(const CoexExperiment &e, std::uint64_t seed)
{
    const StaleCsiTrial t = stale_csi_trial(e.scenario, seed);
    TrialRows rows;
    rows.push_back({"fresh_rate", "bit/s/Hz", t.fresh_rate});
    rows.push_back({"stale_rate", "bit/s/Hz", t.stale_rate});
    rows.push_back({"loss_fraction", "fraction", t.loss_fraction});
    if (e.lbt) {
        const LbtResult r = run_lbt_sim(e.scenario, *e.lbt, e.lbt_slots, derive_seed(seed, "lbt"));
        rows.push_back({"airtime_a", "fraction", r.airtime_a});
        rows.push_back({"airtime_b", "fraction", r.airtime_b});
        rows.push_back({"collision_fraction", "fraction", r.collision_fraction});
        rows.push_back({"mean_rate_a", "bit/s/Hz", r.mean_rate_a});
        rows.push_back({"mean_rate_b", "bit/s/Hz", r.mean_rate_b});
    }
    return rows;
}

TrialRows adjacent_trial(const AdjacentExperiment &e, std::uint64_t seed)
{
    const AdjacentTrial t = adjacent_channel_trial(e.scenario, e.filter, seed);
    return {{"rate_b_no_filter", "bit/s/Hz", t.rate_b_no_filter},
            {"rate_b_with_filter", "bit/s/Hz", t.rate_b_with_filter},
            {"rate_b_no_ris", "bit/s/Hz", t.rate_b_no_ris}};
}

TrialRows deploy_trial(const DeployExperiment &e, std::uint64_t)
{
    const RisPanel tmpl(e.panel_elements, Point3{});
    const DeploymentPlan plan =
        greedy_place(e.scene, tmpl, e.params, e.cost_per_panel, e.budget, e.threshold_dB, e.target_fraction);
    TrialRows rows;
    rows.push_back({"coverage_bare", "fraction", plan.coverage_history.front()});
    rows.push_back({"coverage_final", "fraction", plan.coverage_fraction});
    rows.push_back({"panels_placed", "count", static_cast<double>(plan.placed_panels.size())});
    rows.push_back({"cost", "cost", plan.cost});
    for (std::size_t i = 0; i < plan.placed_panels.size(); ++i) {
        rows.push_back({"placed_site_" + std::to_string(i + 1), "index", static_cast<double>(plan.placed_panels[i].site)});
        rows.push_back({"coverage_after_" + std::to_string(i + 1), "fraction", plan.coverage_history[i + 1]});
    }
    for (double gs : e.gain_scales) {
        const CoverageMap m = cell_breathing(e.scene, plan, e.params, gs, e.threshold_dB);
        rows.push_back({"coverage_gain_scale_" + fmt_g(gs), "fraction", m.coverage_fraction()});
        rows.push_back({"covered_cells_gain_scale_" + fmt_g(gs), "count", static_cast<double>(m.covered_cells())});
    }
    return rows;
}

std::vector<TrialRows> fan_out(std::size_t trials, unsigned threads,
                               const std::function<TrialRows(std::uint64_t)> &trial, std::uint64_t seed)
{
    std::vector<TrialRows> out(trials);
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(trials)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= trials)
                return;
            try {
                out[t] = trial(derive_seed(seed, static_cast<std::uint64_t>(t)));
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next.store(trials);
                return;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (auto &th : pool)
            th.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

std::string csv_escape(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"')
            o += '"';
        o += c;
    }
    return o + "\"";
}

std::string format_real(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

void write_file(const std::string &path, const std::string &content)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw IoError("cannot open '" + path + "' for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.close();
    if (!os)
        throw IoError("failed writing '" + path + "'");
}

} // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(ExperimentKind kind)
{
    switch (kind) {
    case ExperimentKind::rank:
        return "rank";
    case ExperimentKind::beamform:
        return "beamform";
    case ExperimentKind::multiuser:
        return "multiuser";
    case ExperimentKind::coexist:
        return "coexist";
    case ExperimentKind::adjacent:
        return "adjacent";
    case ExperimentKind::deploy:
        return "deploy";
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name)
{
    for (auto k : {ExperimentKind::rank, ExperimentKind::beamform, ExperimentKind::multiuser, ExperimentKind::coexist,
                   ExperimentKind::adjacent, ExperimentKind::deploy})
        if (to_string(k) == name)
            return k;
    return std::nullopt;
}

LinkScenario LinkConfig::scenario() const
{
    LinkScenario s;
    s.geometry.wavelength = wavelength;
    s.geometry.nodes["nb"] = ArrayNode{nb_position, element_spacing, {0.0, 1.0, 0.0}};
    s.geometry.nodes["ris"] = ArrayNode{ris_position, element_spacing, {0.0, 1.0, 0.0}};
    s.geometry.nodes["ue"] = ArrayNode{ue_position, element_spacing, {0.0, 1.0, 0.0}};
    s.params.rician_k = nb_ris_los ? kInf : rician_k;
    s.params.path_loss_exponent = path_loss_exponent;
    s.params.noise_power = noise_power;
    s.params.wavefront = wavefront.value_or(Wavefront::planar);
    s.nb_antennas = nb_antennas;
    s.ris_elements = ris_elements;
    s.ue_antennas = ue_antennas;
    s.ris_ue_k = ris_ue_k;
    s.nb_ue_k = nb_ue_k;
    s.direct_path = direct_path;
    s.nb_ris_wavefront = wavefront;
    return s;
}

ValidationError::ValidationError(std::vector<std::string> errors)
    : std::runtime_error([&] {
          std::string msg = "invalid config:";
          for (const auto &e : errors)
              msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors))
{
}

ExperimentConfig validate_config(std::string_view raw, std::optional<ExperimentKind> expected)
{
    json root;
    try {
        root = json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error &e) {
        std::size_t column = 1;
        const std::size_t line = line_of(raw, e.byte, column);
        throw ParseError("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                             e.what(),
                         line, column);
    }

    std::vector<std::string> errors;
    ExperimentConfig cfg;
    Fields top(&root, "", errors);
    if (!top.present())
        throw ValidationError(std::move(errors));

    std::string kind_name;
    top.string("experiment", kind_name);
    if (!kind_name.empty()) {
        const auto k = parse_experiment_kind(kind_name);
        if (!k)
            top.error("experiment", "unknown experiment '" + kind_name + "'");
        else if (expected && *k != *expected)
            top.error("experiment", "config is for '" + kind_name + "' but '" + std::string(to_string(*expected)) +
                                        "' was requested");
        else
            cfg.experiment = *k;
    } else if (expected) {
        cfg.experiment = *expected;
    } else if (!top.has("experiment")) {
        top.error("experiment", "required field is missing");
    }
    top.uint64("seed", cfg.seed);
    top.integer("trials", cfg.trials, 1, 100000000);
    top.string("output_path", cfg.output_path);

    Fields sc = top.child("scenario");
    switch (cfg.experiment) {
    case ExperimentKind::rank: {
        RankExperiment e;
        read_rank(sc, e);
        cfg.scenario = e;
        break;
    }
    case ExperimentKind::beamform: {
        BeamformExperiment e;
        read_beamform(sc, e);
        cfg.scenario = e;
        break;
    }
    case ExperimentKind::multiuser: {
        MultiuserExperiment e;
        read_multiuser(sc, e);
        cfg.scenario = e;
        break;
    }
    case ExperimentKind::coexist: {
        CoexExperiment e;
        read_coex(sc, e);
        cfg.scenario = e;
        break;
    }
    case ExperimentKind::adjacent: {
        AdjacentExperiment e;
        read_adjacent(sc, e);
        cfg.scenario = e;
        break;
    }
    case ExperimentKind::deploy: {
        DeployExperiment e;
        if (!sc.present())
            top.error("scenario", "required field is missing");
        read_deploy(sc, e);
        if (cfg.trials != 1)
            top.error("trials", "deploy experiments are deterministic and take exactly 1 trial");
        cfg.scenario = e;
        break;
    }
    }
    sc.finish();
    top.finish();

    if (errors.empty()) {
        std::visit(
            [&](const auto &e) {
                using T = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<T, RankExperiment> || std::is_same_v<T, MultiuserExperiment>) {
                    semantic(errors, "scenario", [&] {
                        const LinkScenario s = e.link.scenario();
                        s.geometry.validate();
                        s.params.validate();
                    });
                } else if constexpr (std::is_same_v<T, CoexExperiment> || std::is_same_v<T, AdjacentExperiment>) {
                    semantic(errors, "scenario", [&] { e.scenario.validate(); });
                } else if constexpr (std::is_same_v<T, DeployExperiment>) {
                    semantic(errors, "scenario", [&] {
                        e.scene.validate();
                        e.params.validate();
                    });
                }
            },
            cfg.scenario);
    }
    if (!errors.empty())
        throw ValidationError(std::move(errors));

    json canon = root;
    canon.erase("seed");
    canon.erase("output_path");
    canon["experiment"] = std::string(to_string(cfg.experiment));
    cfg.canonical = canon.dump();
    return cfg;
}

std::uint64_t config_hash(const ExperimentConfig &cfg)
{
    return fnv1a(cfg.canonical + "\nseed=" + std::to_string(cfg.seed));
}

void ResultTable::add_row(std::vector<Cell> row)
{
    if (row.size() != columns.size())
        throw InvalidInput("ResultTable: row has " + std::to_string(row.size()) + " cells but the table has " +
                           std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
}

std::string_view tool_version() { return RISSIM_VERSION; }

ResultTable run_experiment(const ExperimentConfig &cfg, unsigned threads)
{
    std::function<TrialRows(std::uint64_t)> trial;
    std::visit(
        [&](const auto &e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, RankExperiment>)
                trial = [&e](std::uint64_t s) { return rank_trial(e, s); };
            else if constexpr (std::is_same_v<T, BeamformExperiment>)
                trial = [&e](std::uint64_t s) { return beamform_trial(e, s); };
            else if constexpr (std::is_same_v<T, MultiuserExperiment>)
                trial = [&e](std::uint64_t s) { return multiuser_trial(e, s); };
            else if constexpr (std::is_same_v<T, CoexExperiment>)
                trial = [&e](std::uint64_t s) { return coexist_trial(e, s); };
            else if constexpr (std::is_same_v<T, AdjacentExperiment>)
                trial = [&e](std::uint64_t s) { return adjacent_trial(e, s); };
            else
                trial = [&e](std::uint64_t s) { return deploy_trial(e, s); };
        },
        cfg.scenario);

    const std::vector<TrialRows> results = fan_out(cfg.trials, threads, trial, cfg.seed);

    ResultTable table;
    table.columns = {{"trial", ""}, {"metric", ""}, {"unit", ""}, {"value", ""}};
    table.metadata = {config_hash(cfg), cfg.seed, std::string(tool_version()), std::string(to_string(cfg.experiment)),
                      cfg.trials};
    for (std::size_t t = 0; t < results.size(); ++t)
        for (const auto &m : results[t])
            table.add_row({static_cast<std::int64_t>(t), m.name, m.unit, m.value});
    return table;
}

std::string to_csv(const ResultTable &table)
{
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        out += (c ? "," : "") + csv_escape(table.columns[c].name);
    out += '\n';
    for (const auto &row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c)
                out += ',';
            std::visit(
                [&](const auto &v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, std::int64_t>)
                        out += std::to_string(v);
                    else if constexpr (std::is_same_v<T, double>)
                        out += format_real(v);
                    else
                        out += csv_escape(v);
                },
                row[c]);
        }
        out += '\n';
    }
    return out;
}

namespace {

json metadata_object(const ResultMetadata &m)
{
    return json{{"config_hash", hex64(m.config_hash)},
                {"seed", m.seed},
                {"tool_version", m.tool_version},
                {"experiment", m.experiment},
                {"trials", m.trials}};
}

} // namespace

std::string to_json(const ResultTable &table)
{
    json cols = json::array();
    for (const auto &c : table.columns)
        cols.push_back({{"name", c.name}, {"unit", c.unit}});
    json rows = json::array();
    for (const auto &row : table.rows) {
        json r = json::array();
        for (const auto &cell : row)
            std::visit(
                [&](const auto &v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        if (std::isfinite(v))
                            r.push_back(v);
                        else
                            r.push_back(format_real(v));
                    } else {
                        r.push_back(v);
                    }
                },
                cell);
        rows.push_back(std::move(r));
    }
    json doc{{"metadata", metadata_object(table.metadata)}, {"columns", cols}, {"rows", rows}};
    return doc.dump(1) + "\n";
}

std::string metadata_json(const ResultTable &table) { return metadata_object(table.metadata).dump(2) + "\n"; }

void write_outputs(const ResultTable &table, const std::string &path)
{
    if (path.empty())
        throw IoError("no output path given");
    write_file(path, to_csv(table));
    write_file(path + ".json", to_json(table));
    write_file(path + ".meta.json", metadata_json(table));
}

} // namespace rissim
