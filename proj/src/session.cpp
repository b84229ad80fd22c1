#include "sgm/session.hpp"

#include "sgm/safeguard.hpp"
#include "sgm/separation.hpp"
#include "sgm/spectral.hpp"
#include "sgm/wav.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>

namespace sgm {
namespace {

using nlohmann::json;

[[noreturn]] void manifest_error(const std::string& what) {
  throw Error(ErrorCode::ManifestInvalid, "manifest: " + what);
}

[[noreturn]] void config_error(const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, "config: " + what);
}

SampleStream load_checked(const std::filesystem::path& path, int sample_rate) {
  if (!std::filesystem::exists(path)) manifest_error("missing file " + path.string());
  SampleStream stream = read_audio(path);
  if (stream.sample_rate != sample_rate) {
    throw Error(ErrorCode::SampleRateMismatch,
                path.string() + ": sample rate " + std::to_string(stream.sample_rate) +
                    " differs from the session rate " + std::to_string(sample_rate));
  }
  return stream;
}

double db_or_nan(double power) {
  const double db = to_db_power(power);
  return std::isfinite(db) ? db : std::nan("");
}

std::vector<double> number_list(const json& j, const char* key) {
  if (!j.is_array()) config_error(std::string(key) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) config_error(std::string(key) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  if (out.empty()) config_error(std::string(key) + " must not be empty");
  return out;
}

// JSON cannot carry infinity, so "snr_db": null means noise off.
double snr_value(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (!j.is_number()) config_error("snr_db must be a number or null");
  return j.get<double>();
}

}  // namespace

SessionManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    manifest_error(e.what());
  }
  SessionManifest m;
  try {
    m.schema_version = doc.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      manifest_error("unsupported schema_version " + std::to_string(m.schema_version));
    }
    m.period_length = doc.at("period_length").get<Eigen::Index>();
    m.sample_rate = doc.at("sample_rate").get<int>();
    m.segments = doc.at("segments").get<Eigen::Index>();
    if (doc.contains("skip_preamble")) m.skip_preamble = doc["skip_preamble"].get<Eigen::Index>();
    m.delay_allowance = doc.value("delay_allowance", Eigen::Index{0});
    m.theta_db = doc.value("theta_db", 0.0);
    if (doc.contains("seed")) m.seed = doc["seed"].get<std::uint64_t>();
    for (const auto& s : doc.at("signals")) {
      m.signals.push_back({base_dir / s.at("excitation").get<std::string>(),
                           base_dir / s.at("recording").get<std::string>()});
    }
    if (doc.contains("background") && !doc["background"].is_null()) {
      m.background = base_dir / doc["background"].get<std::string>();
    }
  } catch (const json::exception& e) {
    manifest_error(e.what());
  }
  if (m.signals.empty()) manifest_error("at least one signal entry is required");
  if (m.period_length < 2) manifest_error("period_length must be at least 2");
  if (m.sample_rate <= 0) manifest_error("sample_rate must be positive");
  if (m.segments < 1) manifest_error("segments must be positive");
  if (m.delay_allowance < 0) manifest_error("delay_allowance must be nonnegative");
  if (m.skip_preamble && *m.skip_preamble < 0) manifest_error("skip_preamble must be nonnegative");
  return m;
}

SessionManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text(path), path.parent_path());
}

std::string to_json(const SessionManifest& m) {
  nlohmann::ordered_json doc;
  doc["schema_version"] = m.schema_version;
  doc["period_length"] = m.period_length;
  doc["sample_rate"] = m.sample_rate;
  doc["segments"] = m.segments;
  if (m.skip_preamble) doc["skip_preamble"] = *m.skip_preamble;
  doc["delay_allowance"] = m.delay_allowance;
  doc["theta_db"] = m.theta_db;
  if (m.seed) doc["seed"] = *m.seed;
  doc["signals"] = nlohmann::ordered_json::array();
  for (const auto& s : m.signals) {
    doc["signals"].push_back({{"excitation", s.excitation.string()},
                              {"recording", s.recording.string()}});
  }
  if (m.background) doc["background"] = m.background->string();
  return doc.dump(2) + "\n";
}

AnalysisReport analyze_session(const SessionManifest& m, std::optional<double> smoothing_fraction) {
  const Eigen::Index n = m.period_length;
  if (m.segments < 2) {
    throw Error(ErrorCode::InsufficientRepetitions,
                "the random response needs segments >= 2; record more repetitions of "
                "each excitation and raise \"segments\" in the manifest");
  }

  std::vector<Spectrum> excitations;
  std::vector<SampleStream> recordings;
  Eigen::Index shortest = std::numeric_limits<Eigen::Index>::max();
  for (const auto& entry : m.signals) {
    const SampleStream excitation = load_checked(entry.excitation, m.sample_rate);
    if (excitation.length() < n) {
      throw Error(ErrorCode::StreamTooShort,
                  entry.excitation.string() + " is shorter than one period");
    }
    excitations.push_back(forward_dft(PeriodicSignal(excitation.samples.head(n), m.sample_rate)));
    recordings.push_back(load_checked(entry.recording, m.sample_rate));
    shortest = std::min(shortest, recordings.back().length());
  }
  const SegmentPlan plan = plan_segments(shortest, n, m.segments, m.effective_skip());
  const SeparationResult separation = separate_responses(excitations, recordings, plan);
  const auto p_count = separation.p_count;
  const auto m_count = static_cast<double>(separation.m_count);

  RealVector random_power = RealVector::Zero(n);
  double total_power = 0.0;
  for (const auto& r : separation.per_signal) {
    random_power += r.d_stv_sq;
    // mean over m of |H_m|^2 = |mean|^2 + (M - 1)/M * unbiased variance
    total_power += (r.h_sti.cwiseAbs2() + ((m_count - 1.0) / m_count) * r.d_stv_sq).mean();
  }
  random_power /= static_cast<double>(p_count);
  total_power /= static_cast<double>(p_count);

  const bool have_sdr = p_count >= 2;
  const ComplexVector& lti = have_sdr ? separation.across_signals.h_slti
                                      : separation.per_signal.front().h_sti;
  const RealVector lti_power = lti.cwiseAbs2();
  const RealVector sdr_power = have_sdr ? separation.across_signals.h_ssdr_sq
                                        : RealVector::Constant(n, std::nan(""));

  std::optional<RealVector> background;
  if (m.background) {
    const SampleStream noise = load_checked(*m.background, m.sample_rate);
    const Eigen::Index skip = m.effective_skip();
    const Eigen::Index fit = noise.length() > skip ? (noise.length() - skip) / n : 0;
    if (fit < 1) {
      throw Error(ErrorCode::StreamTooShort,
                  "background recording holds no full period after the preamble");
    }
    background = background_level(excitations.front(), noise,
                                  plan_segments(noise.length(), n, std::min(fit, m.segments), skip));
  }

  const std::vector<std::string> columns = {
      "frequency_hz",
      "lti_gain_db",
      "random_level_db",
      "signal_dependent_level_db",
      "background_level_db",
      "random_level_norm_db",
      "signal_dependent_level_norm_db",
      "lti_gain_smoothed_db",
      "random_level_smoothed_db",
      "signal_dependent_level_smoothed_db",
      "background_level_smoothed_db",
  };
  const Eigen::Index half = n / 2;
  AnalysisReport report;
  report.columns = columns;
  report.table = Eigen::MatrixXd::Constant(half + 1, static_cast<Eigen::Index>(columns.size()),
                                           std::nan(""));
  const double output_db = to_db_power(total_power);

  std::optional<RealVector> s_lti, s_random, s_sdr, s_background;
  if (smoothing_fraction) {
    s_lti = fractional_octave_smooth(lti_power, *smoothing_fraction, m.sample_rate);
    s_random = fractional_octave_smooth(random_power, *smoothing_fraction, m.sample_rate);
    if (have_sdr) s_sdr = fractional_octave_smooth(sdr_power, *smoothing_fraction, m.sample_rate);
    if (background) {
      s_background = fractional_octave_smooth(*background, *smoothing_fraction, m.sample_rate);
    }
  }

  for (Eigen::Index k = 0; k <= half; ++k) {
    auto row = report.table.row(k);
    row(0) = static_cast<double>(k) * m.sample_rate / static_cast<double>(n);
    row(1) = db_or_nan(lti_power[k]);
    row(2) = db_or_nan(random_power[k]);
    if (have_sdr) row(3) = db_or_nan(sdr_power[k]);
    if (background) row(4) = db_or_nan((*background)[k]);
    row(5) = db_or_nan(random_power[k]) - output_db;
    if (have_sdr) row(6) = db_or_nan(sdr_power[k]) - output_db;
    if (s_lti) row(7) = db_or_nan((*s_lti)[k]);
    if (s_random) row(8) = db_or_nan((*s_random)[k]);
    if (s_sdr) row(9) = db_or_nan((*s_sdr)[k]);
    if (s_background) row(10) = db_or_nan((*s_background)[k]);
  }
  report.table = report.table.unaryExpr([](double v) { return std::isfinite(v) ? v : std::nan(""); });

  const double nan = std::nan("");
  const double random_db = db_or_nan(random_power.mean());
  const double sdr_db = have_sdr ? db_or_nan(sdr_power.mean()) : nan;
  report.summary = {
      {"period_length", static_cast<double>(n)},
      {"sample_rate", static_cast<double>(m.sample_rate)},
      {"m_count", m_count},
      {"p_count", static_cast<double>(p_count)},
      {"skip_preamble", static_cast<double>(plan.skip_preamble)},
      {"theta_db", m.theta_db},
      {"smoothing_fraction", smoothing_fraction.value_or(nan)},
      {"output_level_db", std::isfinite(output_db) ? output_db : nan},
      {"random_level_mean_db", random_db},
      {"random_level_norm_db", random_db - output_db},
      {"signal_dependent_level_mean_db", sdr_db},
      {"signal_dependent_level_norm_db", sdr_db - output_db},
      {"background_level_mean_db", background ? db_or_nan(background->mean()) : nan},
  };
  for (auto& entry : report.summary) {
    if (!std::isfinite(entry.second)) entry.second = nan;
  }
  return report;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != nullptr && *end == '\0') return v;
    throw Error(ErrorCode::ConfigInvalid, std::string(kSeedEnvVar) + " must be an unsigned integer");
  }
  return 1;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  if (!doc.is_object()) config_error("top level must be an object");
  ExperimentConfig c;
  c.seed = default_seed();
  try {
    if (doc.contains("schema_version") && doc["schema_version"].get<int>() != kConfigSchemaVersion) {
      config_error("unsupported schema_version");
    }
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    c.period_length = doc.value("period_length", c.period_length);
    c.sample_rate = doc.value("sample_rate", c.sample_rate);
    c.seeds = doc.value("seeds", c.seeds);
    if (doc.contains("theta_db_grid")) c.theta_db_grid = number_list(doc["theta_db_grid"], "theta_db_grid");
    if (doc.contains("snr_db_list")) c.snr_db_list = number_list(doc["snr_db_list"], "snr_db_list");
    if (doc.contains("snr_db")) c.snr_db = snr_value(doc["snr_db"]);
    c.repeats = doc.value("repeats", c.repeats);
    c.signals = doc.value("signals", c.signals);
    if (doc.contains("alpha")) c.alpha = doc["alpha"].get<double>();
    c.theta_db = doc.value("theta_db", c.theta_db);
    c.input_level_db = doc.value("input_level_db", c.input_level_db);
    if (doc.contains("input_level_db_list")) {
      c.input_level_db_list = number_list(doc["input_level_db_list"], "input_level_db_list");
    }
    if (doc.contains("impulse_response")) {
      const auto ir = number_list(doc["impulse_response"], "impulse_response");
      c.impulse_response = Eigen::Map<const RealVector>(ir.data(), static_cast<Eigen::Index>(ir.size()));
    }
    c.smoothing_fraction = doc.value("smoothing_fraction", c.smoothing_fraction);
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  if (c.period_length < 2) config_error("period_length must be at least 2");
  if (c.sample_rate <= 0) config_error("sample_rate must be positive");
  if (c.seeds < 1) config_error("seeds must be positive");
  if (c.alpha && !(*c.alpha >= 0.0)) config_error("alpha must be >= 0");
  if (!(c.smoothing_fraction > 0.0)) config_error("smoothing_fraction must be positive");
  return c;
}

ExperimentResult run_experiment(const std::string& name, const ExperimentConfig& c) {
  const std::vector<double> grid = c.theta_db_grid.value_or(default_theta_grid());
  if (name == "regression") {
    return run_regression_experiment(grid, c.seeds, c.seed, c.period_length, c.sample_rate);
  }
  if (name == "max-deviation") {
    return run_max_deviation_sweep(c.snr_db_list, grid, c.seed, c.period_length, c.sample_rate,
                                   c.smoothing_fraction);
  }
  if (name == "random") {
    return run_random_response_experiment(grid, c.snr_db.value_or(40.0), c.repeats, c.seed,
                                          c.period_length, c.sample_rate);
  }
  if (name == "nonlinearity") {
    NonlinearitySettings s;
    s.alpha = c.alpha.value_or(0.4);
    s.snr_db = c.snr_db.value_or(20.0);
    s.signal_count = c.signals;
    s.repeats = c.repeats;
    s.theta_db = c.theta_db;
    s.impulse_response = c.impulse_response;
    return run_nonlinearity_experiment(c.input_level_db_list, s, c.seed, c.period_length,
                                       c.sample_rate);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown experiment " + name);
}

SimulationConfig chain_config(const ExperimentConfig& c) {
  SimulationConfig s;
  s.impulse_response = c.impulse_response;
  s.alpha = c.alpha.value_or(0.0);
  s.snr_db = c.snr_db.value_or(std::numeric_limits<double>::infinity());
  s.input_level_db = c.input_level_db;
  s.seed = c.seed;
  s.repeats_per_signal = c.repeats;
  s.signal_count = c.signals;
  validate(s);
  return s;
}

}  // namespace sgm
