#pragma once

#include "sgm/safeguard.hpp"
#include "sgm/types.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sgm {

/// Virtual measurement chain: gain -> memoryless nonlinearity -> circular LTI
/// convolution -> additive Gaussian noise.
struct SimulationConfig {
  RealVector impulse_response = RealVector::Ones(1);
  double alpha = 0.0;  // 0 disables the nonlinearity
  double snr_db = std::numeric_limits<double>::infinity();  // +inf: noise off
  double input_level_db = 0.0;
  std::uint64_t seed = 1;
  int repeats_per_signal = 4;  // M
  int signal_count = 4;        // P
};

void validate(const SimulationConfig& config);

/// (exp(alpha x) - 1) / alpha, with the linear limit at alpha == 0.
double nonlinearity(double x, double alpha);

/// Runs the chain over the whole stream. Convolution wraps around the stream
/// end, which is the periodic steady state when the stream is whole periods.
/// Noise power is the pre-noise output power lowered by snr_db.
SampleStream simulate_chain(const SampleStream& test, const SimulationConfig& config);

/// Unit-variance Gaussian white noise period.
PeriodicSignal white_noise_period(Eigen::Index length, int sample_rate, std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares of y on x; DegenerateFit below three points.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Tabular result: one row per sweep point, axis columns first.
struct ExperimentResult {
  std::string experiment;
  std::vector<std::string> columns;
  Eigen::MatrixXd rows;
  std::vector<std::pair<std::string, double>> scalars;

  Eigen::Index column_index(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const { return rows.col(column_index(name)); }
  double scalar(const std::string& name) const;
};

struct FlooringPoint {
  double theta_db = 0.0;
  SafeguardReport report;
};

struct FlooringRegression {
  LinearFit fit;
  std::vector<FlooringPoint> points;
  std::size_t usable_points = 0;
};

std::vector<double> default_theta_grid();

/// Added-component level against flooring level for one white-noise period,
/// fitted over the grid points that change at least one bin.
FlooringRegression run_flooring_regression(std::uint64_t seed, Eigen::Index period_length,
                                           int sample_rate, std::span<const double> theta_db_grid);

/// Per-seed regressions averaged over `seed_count` derived seeds.
ExperimentResult run_regression_experiment(std::span<const double> theta_db_grid,
                                           int seed_count, std::uint64_t seed,
                                           Eigen::Index period_length = 100000,
                                           int sample_rate = 44100);

/// Identity-system gain deviation per (SNR, flooring level). Also reports
/// spread of the raw and fractional-octave smoothed gain in dB.
ExperimentResult run_max_deviation_sweep(std::span<const double> snr_db_list,
                                         std::span<const double> theta_db_list,
                                         std::uint64_t seed,
                                         Eigen::Index period_length = 100000,
                                         int sample_rate = 44100,
                                         double smoothing_fraction = 1.0 / 3.0);

ExperimentResult run_random_response_experiment(std::span<const double> theta_db_list,
                                                double snr_db, int repeats,
                                                std::uint64_t seed,
                                                Eigen::Index period_length = 100000,
                                                int sample_rate = 44100);

struct NonlinearitySettings {
  double alpha = 0.4;
  double snr_db = 20.0;
  int signal_count = 4;
  int repeats = 4;
  double theta_db = 0.0;
  RealVector impulse_response = RealVector::Ones(1);
};

ExperimentResult run_nonlinearity_experiment(std::span<const double> input_level_db_list,
                                             const NonlinearitySettings& settings,
                                             std::uint64_t seed,
                                             Eigen::Index period_length = 100000,
                                             int sample_rate = 44100);

}  // namespace sgm
