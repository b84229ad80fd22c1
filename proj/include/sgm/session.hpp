#pragma once

#include "sgm/report.hpp"
#include "sgm/separation.hpp"
#include "sgm/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sgm {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

/// Environment variable that overrides the built-in default seed.
inline constexpr const char* kSeedEnvVar = "SGM_SEED";

struct SignalEntry {
  std::filesystem::path excitation;  // safeguarded period (first L samples are used)
  std::filesystem::path recording;
};

/// Measurement session: P excitation/recording pairs analysed with a common
/// segment plan. Relative paths resolve against the manifest's directory.
struct SessionManifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<SignalEntry> signals;
  std::optional<std::filesystem::path> background;
  Eigen::Index period_length = 0;
  int sample_rate = 0;
  Eigen::Index segments = 0;  // M
  std::optional<Eigen::Index> skip_preamble;
  Eigen::Index delay_allowance = 0;
  double theta_db = 0.0;  // flooring level used to build the excitations
  std::optional<std::uint64_t> seed;

  Eigen::Index effective_skip() const {
    return skip_preamble.value_or(default_skip(period_length, delay_allowance));
  }
};

SessionManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
SessionManifest load_manifest(const std::filesystem::path& path);
std::string to_json(const SessionManifest& manifest);

/// Segment the recordings, estimate per-segment transfer functions and
/// separate the responses. `smoothing_fraction` adds fractional-octave
/// smoothed columns; otherwise those columns are null.
AnalysisReport analyze_session(const SessionManifest& manifest,
                               std::optional<double> smoothing_fraction);

/// Settings for the `simulate` and `render` subcommands. Unset fields take
/// experiment-specific defaults.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  Eigen::Index period_length = 100000;
  int sample_rate = 44100;
  int seeds = 5;
  std::optional<std::vector<double>> theta_db_grid;
  std::vector<double> snr_db_list{20.0, 40.0, 60.0};
  std::optional<double> snr_db;
  int repeats = 4;
  int signals = 4;
  std::optional<double> alpha;
  double theta_db = 0.0;
  double input_level_db = 0.0;
  std::vector<double> input_level_db_list{0.0, -5.0, -10.0, -15.0, -20.0, -25.0, -30.0};
  RealVector impulse_response = RealVector::Ones(1);
  double smoothing_fraction = 1.0 / 3.0;
};

std::uint64_t default_seed();

ExperimentConfig parse_experiment_config(const std::string& text);

ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& config);

/// Chain settings for rendering a recording from a test stream.
SimulationConfig chain_config(const ExperimentConfig& config);

}  // namespace sgm
