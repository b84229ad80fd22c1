#include "sgm/simulation.hpp"

#include "sgm/rng.hpp"
#include "sgm/separation.hpp"
#include "sgm/spectral.hpp"

#include <cmath>

namespace sgm {
namespace {

constexpr std::uint64_t kNoiseStream = 0x6E6F697365ULL;
constexpr std::uint64_t kExcitationStream = 0x6578636974ULL;
constexpr Eigen::Index kDirectConvolutionMax = 64;

// Seeds for excitation p and for noise at sweep point i, signal p.
std::uint64_t excitation_seed(std::uint64_t seed, int p) {
  return derive_seed(seed, 1, static_cast<std::uint64_t>(p));
}
std::uint64_t noise_seed(std::uint64_t seed, std::size_t point, int p) {
  return derive_seed(seed, 2 + point, static_cast<std::uint64_t>(p));
}

double std_dev(const Eigen::Ref<const RealVector>& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

}  // namespace

void validate(const SimulationConfig& config) {
  if (config.impulse_response.size() < 1 || !config.impulse_response.allFinite()) {
    throw Error(ErrorCode::ConfigInvalid, "impulse response must be non-empty and finite");
  }
  if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha)) {
    throw Error(ErrorCode::ConfigInvalid, "alpha must be finite and >= 0");
  }
  if (std::isnan(config.snr_db) || config.snr_db == -std::numeric_limits<double>::infinity()) {
    throw Error(ErrorCode::ConfigInvalid, "snr_db must be finite or +inf");
  }
  if (!std::isfinite(config.input_level_db)) {
    throw Error(ErrorCode::ConfigInvalid, "input_level_db must be finite");
  }
  if (config.repeats_per_signal < 1 || config.signal_count < 1) {
    throw Error(ErrorCode::ConfigInvalid, "repeat and signal counts must be positive");
  }
}

double nonlinearity(double x, double alpha) {
  if (!(alpha >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0");
  }
  if (alpha == 0.0) return x;
  const double y = std::expm1(alpha * x) / alpha;
  if (!std::isfinite(y)) {
    throw Error(ErrorCode::Overflow, "nonlinearity overflow; input level is nonphysical");
  }
  return y;
}

SampleStream simulate_chain(const SampleStream& test, const SimulationConfig& config) {
  validate(test);
  validate(config);
  if (config.impulse_response.size() > test.length()) {
    throw Error(ErrorCode::ImpulseResponseTooLong, "impulse response longer than the stream");
  }
  const double gain = std::pow(10.0, config.input_level_db / 20.0);
  RealVector driven = gain * test.samples;
  if (config.alpha != 0.0) {
    for (Eigen::Index i = 0; i < driven.size(); ++i) driven[i] = nonlinearity(driven[i], config.alpha);
  }

  const RealVector& h = config.impulse_response;
  RealVector output;
  if (h.size() <= kDirectConvolutionMax) {
    const Eigen::Index n = driven.size();
    output = RealVector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = 0.0;
      for (Eigen::Index m = 0; m < h.size(); ++m) {
        Eigen::Index j = i - m;
        if (j < 0) j += n;
        acc += h[m] * driven[j];
      }
      output[i] = acc;
    }
  } else {
    output = circular_convolve_fast(driven, h);
  }

  if (std::isfinite(config.snr_db)) {
    const double signal_power = output.array().abs2().mean();
    const double sigma = std::sqrt(signal_power * std::pow(10.0, -config.snr_db / 10.0));
    const CounterRng rng(config.seed, kNoiseStream);
    for (Eigen::Index i = 0; i < output.size(); ++i) {
      output[i] += sigma * rng.normal(static_cast<std::uint64_t>(i));
    }
  }
  return {std::move(output), test.sample_rate, test.label + "|simulated"};
}

PeriodicSignal white_noise_period(Eigen::Index length, int sample_rate, std::uint64_t seed) {
  return PeriodicSignal(CounterRng(seed, kExcitationStream).normal_vector(length), sample_rate);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::InvalidArgument, "fit inputs differ in length");
  }
  if (x.size() < 3) {
    throw Error(ErrorCode::DegenerateFit, "fewer than three usable points");
  }
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) {
    throw Error(ErrorCode::DegenerateFit, "fit abscissae are all equal");
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

Eigen::Index ExperimentResult::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<Eigen::Index>(i);
  }
  throw Error(ErrorCode::InvalidArgument, "no column named " + name);
}

double ExperimentResult::scalar(const std::string& name) const {
  for (const auto& [key, value] : scalars) {
    if (key == name) return value;
  }
  throw Error(ErrorCode::InvalidArgument, "no scalar named " + name);
}

std::vector<double> default_theta_grid() {
  std::vector<double> grid;
  for (int t = -50; t <= 20; t += 5) grid.push_back(t);
  return grid;
}

FlooringRegression run_flooring_regression(std::uint64_t seed, Eigen::Index period_length,
                                           int sample_rate, std::span<const double> theta_db_grid) {
  const PeriodicSignal source = white_noise_period(period_length, sample_rate, excitation_seed(seed, 0));
  const Spectrum spectrum = forward_dft(source);

  FlooringRegression result;
  std::vector<double> xs, ys;
  for (const double theta_db : theta_db_grid) {
    const auto [floored, report] = safeguard_signal(source, threshold_at_db(spectrum, theta_db));
    result.points.push_back({theta_db, report});
    if (report.bins_changed > 0) {
      xs.push_back(theta_db);
      ys.push_back(report.added_component_db);
    }
  }
  result.usable_points = xs.size();
  result.fit = fit_line(xs, ys);
  return result;
}

ExperimentResult run_regression_experiment(std::span<const double> theta_db_grid,
                                           int seed_count, std::uint64_t seed,
                                           Eigen::Index period_length, int sample_rate) {
  if (seed_count < 1) {
    throw Error(ErrorCode::ConfigInvalid, "seed count must be positive");
  }
  const auto points = static_cast<Eigen::Index>(theta_db_grid.size());
  RealVector changed = RealVector::Zero(points);
  RealVector fraction = RealVector::Zero(points);
  RealVector level_sum = RealVector::Zero(points);
  Eigen::VectorXi level_count = Eigen::VectorXi::Zero(points);
  double slope = 0.0, intercept = 0.0;
  double usable_min = static_cast<double>(points);

  for (int s = 0; s < seed_count; ++s) {
    const auto run = run_flooring_regression(derive_seed(seed, 100, static_cast<std::uint64_t>(s)),
                                             period_length, sample_rate, theta_db_grid);
    slope += run.fit.slope;
    intercept += run.fit.intercept;
    usable_min = std::min(usable_min, static_cast<double>(run.usable_points));
    for (Eigen::Index i = 0; i < points; ++i) {
      const auto& report = run.points[static_cast<std::size_t>(i)].report;
      changed[i] += static_cast<double>(report.bins_changed);
      fraction[i] += report.fraction_changed;
      if (report.bins_changed > 0) {
        level_sum[i] += report.added_component_db;
        ++level_count[i];
      }
    }
  }

  ExperimentResult result;
  result.experiment = "regression";
  result.columns = {"theta_db", "bins_changed", "fraction_changed", "added_component_db"};
  result.rows.resize(points, 4);
  for (Eigen::Index i = 0; i < points; ++i) {
    result.rows(i, 0) = theta_db_grid[static_cast<std::size_t>(i)];
    result.rows(i, 1) = changed[i] / seed_count;
    result.rows(i, 2) = fraction[i] / seed_count;
    result.rows(i, 3) = level_count[i] > 0 ? level_sum[i] / level_count[i]
                                             : -std::numeric_limits<double>::infinity();
  }
  result.scalars = {{"slope", slope / seed_count},
                    {"intercept", intercept / seed_count},
                    {"seeds", static_cast<double>(seed_count)},
                    {"min_usable_points", usable_min},
                    {"period_length", static_cast<double>(period_length)},
                    {"sample_rate", static_cast<double>(sample_rate)}};
  return result;
}

ExperimentResult run_max_deviation_sweep(std::span<const double> snr_db_list,
                                         std::span<const double> theta_db_list,
                                         std::uint64_t seed, Eigen::Index period_length,
                                         int sample_rate, double smoothing_fraction) {
  const PeriodicSignal source = white_noise_period(period_length, sample_rate, excitation_seed(seed, 0));
  const Spectrum spectrum = forward_dft(source);
  const Eigen::Index half = period_length / 2;

  ExperimentResult result;
  result.experiment = "max-deviation";
  result.columns = {"snr_db", "theta_db", "bins_changed", "max_deviation_db",
                    "gain_std_db", "smoothed_gain_std_db"};
  result.rows.resize(static_cast<Eigen::Index>(snr_db_list.size() * theta_db_list.size()), 6);

  Eigen::Index row = 0;
  std::size_t point = 0;
  for (const double snr_db : snr_db_list) {
    for (const double theta_db : theta_db_list) {
      const auto [floored, report] = safeguard_signal(source, threshold_at_db(spectrum, theta_db));
      const Spectrum excitation = forward_dft(floored);
      SimulationConfig config;
      config.snr_db = snr_db;
      config.seed = noise_seed(seed, point++, 0);
      const SampleStream recording = simulate_chain(build_test_stream(floored, 2), config);
      const auto estimate = estimate_transfer(excitation, recording, period_length);

      const RealVector power = estimate.h_bins.cwiseAbs2();
      const RealVector gain_db = (10.0 * power.array().log10()).matrix();
      const RealVector smoothed =
          fractional_octave_smooth(power, smoothing_fraction, sample_rate);
      const RealVector smoothed_db = (10.0 * smoothed.array().log10()).matrix();

      result.rows(row, 0) = snr_db;
      result.rows(row, 1) = theta_db;
      result.rows(row, 2) = static_cast<double>(report.bins_changed);
      result.rows(row, 3) = gain_db.head(half + 1).cwiseAbs().maxCoeff();
      result.rows(row, 4) = std_dev(gain_db.segment(1, half));
      result.rows(row, 5) = std_dev(smoothed_db.segment(1, half));
      ++row;
    }
  }
  result.scalars = {{"period_length", static_cast<double>(period_length)},
                    {"sample_rate", static_cast<double>(sample_rate)},
                    {"smoothing_fraction", smoothing_fraction}};
  return result;
}

ExperimentResult run_random_response_experiment(std::span<const double> theta_db_list,
                                                double snr_db, int repeats, std::uint64_t seed,
                                                Eigen::Index period_length, int sample_rate) {
  if (repeats < 2) {
    throw Error(ErrorCode::InsufficientRepetitions, "random response needs M >= 2");
  }
  const PeriodicSignal source = white_noise_period(period_length, sample_rate, excitation_seed(seed, 0));
  const Spectrum spectrum = forward_dft(source);

  ExperimentResult result;
  result.experiment = "random";
  result.columns = {"theta_db", "bins_changed", "random_level_db", "injected_noise_db"};
  result.rows.resize(static_cast<Eigen::Index>(theta_db_list.size()), 4);

  for (std::size_t i = 0; i < theta_db_list.size(); ++i) {
    const double theta_db = theta_db_list[i];
    const auto [floored, report] = safeguard_signal(source, threshold_at_db(spectrum, theta_db));
    const Spectrum excitation = forward_dft(floored);
    SimulationConfig config;
    config.snr_db = snr_db;
    config.seed = noise_seed(seed, i, 0);
    config.repeats_per_signal = repeats;
    const SampleStream recording = simulate_chain(build_test_stream(floored, repeats + 1), config);
    const auto plan = plan_segments(recording.length(), period_length, repeats,
                                    default_skip(period_length));
    const auto response = time_invariant_response(estimate_all(excitation, recording, plan));

    const auto r = static_cast<Eigen::Index>(i);
    result.rows(r, 0) = theta_db;
    result.rows(r, 1) = static_cast<double>(report.bins_changed);
    result.rows(r, 2) = to_db_power(response.d_stv_sq.mean());
    result.rows(r, 3) = -snr_db;
  }
  result.scalars = {{"snr_db", snr_db},
                    {"repeats", static_cast<double>(repeats)},
                    {"period_length", static_cast<double>(period_length)},
                    {"sample_rate", static_cast<double>(sample_rate)}};
  return result;
}

ExperimentResult run_nonlinearity_experiment(std::span<const double> input_level_db_list,
                                             const NonlinearitySettings& settings,
                                             std::uint64_t seed, Eigen::Index period_length,
                                             int sample_rate) {
  if (settings.repeats < 2) {
    throw Error(ErrorCode::InsufficientRepetitions, "random response needs M >= 2");
  }
  if (settings.signal_count < 2) {
    throw Error(ErrorCode::InsufficientSignals, "signal-dependent response needs P >= 2");
  }
  const int signals = settings.signal_count;
  const int repeats = settings.repeats;

  std::vector<PeriodicSignal> periods;
  std::vector<Spectrum> spectra;
  for (int p = 0; p < signals; ++p) {
    const PeriodicSignal source =
        white_noise_period(period_length, sample_rate, excitation_seed(seed, p));
    periods.push_back(safeguard_signal_db(source, settings.theta_db).first);
    spectra.push_back(forward_dft(periods.back()));
  }

  ExperimentResult result;
  result.experiment = "nonlinearity";
  result.columns = {"input_level_db",      "output_level_db",
                    "random_level_db",     "signal_dependent_level_db",
                    "random_level_norm_db", "signal_dependent_level_norm_db",
                    "effective_random_level_norm_db"};
  result.rows.resize(static_cast<Eigen::Index>(input_level_db_list.size()), 7);

  for (std::size_t i = 0; i < input_level_db_list.size(); ++i) {
    const double level_db = input_level_db_list[i];
    const double gain = std::pow(10.0, level_db / 20.0);
    std::vector<TimeInvariantResponse> per_signal;
    double total_power = 0.0;
    double random_power = 0.0;
    for (int p = 0; p < signals; ++p) {
      SimulationConfig config;
      config.impulse_response = settings.impulse_response;
      config.alpha = settings.alpha;
      config.snr_db = settings.snr_db;
      config.input_level_db = level_db;
      config.seed = noise_seed(seed, i, p);
      config.repeats_per_signal = repeats;
      config.signal_count = signals;
      const SampleStream recording = simulate_chain(
          build_test_stream(periods[static_cast<std::size_t>(p)], repeats + 1), config);
      const Spectrum excitation(gain * spectra[static_cast<std::size_t>(p)].bins(), sample_rate, true);
      const auto plan = plan_segments(recording.length(), period_length, repeats,
                                      default_skip(period_length));
      const auto estimates = estimate_all(excitation, recording, plan, p);
      for (const auto& e : estimates) total_power += e.h_bins.cwiseAbs2().mean();
      per_signal.push_back(time_invariant_response(estimates));
      random_power += per_signal.back().d_stv_sq.mean();
    }
    total_power /= static_cast<double>(signals * repeats);
    random_power /= static_cast<double>(signals);
    const double sdr_power = signal_dependent_response(per_signal).h_ssdr_sq.mean();

    const auto r = static_cast<Eigen::Index>(i);
    const double output_db = to_db_power(total_power);
    result.rows(r, 0) = level_db;
    result.rows(r, 1) = output_db;
    result.rows(r, 2) = to_db_power(random_power);
    result.rows(r, 3) = to_db_power(sdr_power);
    result.rows(r, 4) = to_db_power(random_power) - output_db;
    result.rows(r, 5) = to_db_power(sdr_power) - output_db;
    result.rows(r, 6) = result.rows(r, 4) - 10.0 * std::log10(static_cast<double>(repeats));
  }
  result.scalars = {{"alpha", settings.alpha},
                    {"snr_db", settings.snr_db},
                    {"signals", static_cast<double>(signals)},
                    {"repeats", static_cast<double>(repeats)},
                    {"theta_db", settings.theta_db},
                    {"period_length", static_cast<double>(period_length)},
                    {"sample_rate", static_cast<double>(sample_rate)}};
  return result;
}

}  // namespace sgm
