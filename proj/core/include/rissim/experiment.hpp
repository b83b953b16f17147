// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rissim/channel.hpp"
#include "rissim/coexist.hpp"
#include "rissim/deploy.hpp"
#include "rissim/geometry.hpp"
#include "rissim/scheduler.hpp"

namespace rissim {

enum class ExperimentKind { rank, beamform, multiuser, coexist, adjacent, deploy };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

/// NB -> RIS -> UE link description shared by the rank and multiuser experiments.
struct LinkConfig {
    std::size_t nb_antennas = 4;
    std::size_t ris_elements = 64;
    std::size_t ue_antennas = 4;
    double wavelength = 0.1;
    double element_spacing = 0.05;
    Point3 nb_position{0.0, 0.0, 10.0};
    Point3 ris_position{50.0, 0.0, 10.0};
    Point3 ue_position{50.0, 20.0, 1.5};
    bool nb_ris_los = true;   ///< pure LoS NB -> RIS hop; otherwise Rician with rician_k
    double rician_k = 0.0;
    double ris_ue_k = 0.0;
    double nb_ue_k = 0.0;
    bool direct_path = false;
    double path_loss_exponent = 2.0;
    double noise_power = 1.0;
    std::optional<Wavefront> wavefront; ///< NB -> RIS LoS model; unset picks by the Fraunhofer distance
    bool apply_path_loss = false; ///< false: unit hop gains, SNR set by snr_dB
    double snr_dB = 20.0;

    LinkScenario scenario() const;
};

struct RankExperiment {
    LinkConfig link;
    std::size_t panels = 1;
    Point3 panel_offset{0.0, 15.0, 0.0}; ///< panel k sits at ris_position + k * panel_offset
};

enum class BeamformChannel { unit, random_phase, rayleigh };

struct BeamformExperiment {
    std::vector<std::size_t> ris_elements{1, 4, 16};
    BeamformChannel channel = BeamformChannel::unit;
    std::vector<int> quantization_bits{1, 2};
};

struct MultiuserExperiment {
    LinkConfig link;
    std::size_t users = 4;
    std::vector<double> qos_weights; ///< empty: all 1
    Point3 user_offset{0.0, 10.0, 0.0};
    SchedulerOptions options;
    double max_gap = 0.3;
};

struct CoexExperiment {
    CoexScenario scenario;
    std::optional<LbtConfig> lbt;
    std::size_t lbt_slots = 1000;
};

struct AdjacentExperiment {
    CoexScenario scenario;
    std::optional<BandFilter> filter;
};

struct DeployExperiment {
    Scene scene;
    ChannelParams params;
    std::size_t panel_elements = 256;
    double cost_per_panel = 1.0;
    double budget = 1.0;
    double threshold_dB = 0.0; ///< required in the config file
    double target_fraction = 0.95;
    std::vector<double> gain_scales{0.0, 0.5, 1.0};
};

using ExperimentScenario = std::variant<RankExperiment, BeamformExperiment, MultiuserExperiment, CoexExperiment,
                                        AdjacentExperiment, DeployExperiment>;

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::rank;
    std::uint64_t seed = 0;
    std::size_t trials = 1;
    std::string output_path;
    ExperimentScenario scenario;
    std::string canonical; ///< normalized config text without seed and output_path
};

/// Malformed config text.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string &what, std::size_t line, std::size_t column)
        : std::runtime_error(what), line_(line), column_(column)
    {
    }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed config with one or more semantic errors; each entry starts with its field path.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(std::vector<std::string> errors);
    const std::vector<std::string> &errors() const { return errors_; }

  private:
    std::vector<std::string> errors_;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/**
 * Parses a JSON experiment config. Unknown fields are rejected. If `expected`
 * is given, the "experiment" field may be omitted and must match when present.
 */
ExperimentConfig validate_config(std::string_view raw, std::optional<ExperimentKind> expected = std::nullopt);

/// FNV-1a over the canonical config text and the seed.
std::uint64_t config_hash(const ExperimentConfig &cfg);

struct Column {
    std::string name;
    std::string unit;
};

using Cell = std::variant<std::int64_t, double, std::string>;

struct ResultMetadata {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string experiment;
    std::size_t trials = 0;
};

struct ResultTable {
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;
    ResultMetadata metadata;

    void add_row(std::vector<Cell> row);
};

std::string_view tool_version();

/// Runs every trial with per-trial seeds derive_seed(seed, trial); output is independent of `threads`.
ResultTable run_experiment(const ExperimentConfig &cfg, unsigned threads = 1);

std::string to_csv(const ResultTable &table);
std::string to_json(const ResultTable &table);
std::string metadata_json(const ResultTable &table);

/// Writes `path` (CSV), `path.json` and `path.meta.json`.
void write_outputs(const ResultTable &table, const std::string &path);

} // namespace rissim
