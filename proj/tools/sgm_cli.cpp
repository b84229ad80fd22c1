// sgmeasure: safeguarded test-signal generation, simulation and response analysis.

#include "sgm/report.hpp"
#include "sgm/safeguard.hpp"
#include "sgm/session.hpp"
#include "sgm/simulation.hpp"
#include "sgm/spectral.hpp"
#include "sgm/wav.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitAnalysis = 4;

int exit_code_for(sgm::ErrorCode code) {
  using sgm::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
      return kExitUsage;
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::SampleRateMismatch:
    case ErrorCode::CorruptFile:
    case ErrorCode::ManifestInvalid:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::IoFailure:
      return kExitInput;
    default:
      return kExitAnalysis;
  }
}

int report_error(const std::string& code, const std::string& message, int exit_code) {
  nlohmann::ordered_json err;
  err["error"] = code;
  err["message"] = message;
  err["exit_code"] = exit_code;
  std::cerr << err.dump() << "\n";
  return exit_code;
}

// Accepts "1/3", "0.5" or "none".
std::optional<double> parse_fraction(const std::string& text) {
  if (text.empty() || text == "none") return std::nullopt;
  double value = 0.0;
  try {
    if (const auto slash = text.find('/'); slash != std::string::npos) {
      value = std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
    } else {
      value = std::stod(text);
    }
  } catch (const std::exception&) {
    throw sgm::Error(sgm::ErrorCode::InvalidArgument, "bad smoothing fraction " + text);
  }
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw sgm::Error(sgm::ErrorCode::InvalidArgument, "bad smoothing fraction " + text);
  }
  return value;
}

sgm::PeriodicSignal read_period(const std::string& path, Eigen::Index period) {
  const sgm::SampleStream in = sgm::read_audio(path);
  const Eigen::Index n = period > 0 ? period : in.length();
  if (in.length() < n || n < 2) {
    throw sgm::Error(sgm::ErrorCode::StreamTooShort, path + " holds fewer than one period");
  }
  return sgm::PeriodicSignal(in.samples.head(n), in.sample_rate);
}

double json_safe(double v) { return std::isfinite(v) ? v : std::nan(""); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safeguarded transfer-function measurement with arbitrary periodic sounds"};
  app.require_subcommand(1);

  std::string in_path, out_path, report_path, manifest_path, config_path, experiment, smooth = "none";
  Eigen::Index period = 0;
  double theta_db = 0.0;
  int repeats = 0;

  auto* safeguard = app.add_subcommand("safeguard", "Floor the DFT magnitudes of one period");
  safeguard->add_option("--in", in_path, "Input WAV (first period is used)")->required();
  safeguard->add_option("--period", period, "Period length L in samples (default: whole file)");
  safeguard->add_option("--theta-db", theta_db, "Flooring level in dB re. mean bin magnitude");
  safeguard->add_option("--out", out_path, "Safeguarded period WAV (float32)")->required();
  safeguard->add_option("--report", report_path, "Safeguard report JSON")->required();

  auto* make_test = app.add_subcommand("make-test", "Concatenate a period into a test stream");
  make_test->add_option("--in", in_path, "Period WAV")->required();
  make_test->add_option("--period", period, "Period length L (default: whole file)");
  make_test->add_option("--repeats", repeats, "Number of repetitions R >= 1")->required();
  make_test->add_option("--out", out_path, "Output WAV (float32)")->required();

  auto* analyze = app.add_subcommand("analyze", "Separate responses of a measurement session");
  analyze->add_option("--manifest", manifest_path, "Session manifest JSON")->required();
  analyze->add_option("--smooth", smooth, "Fractional-octave smoothing width, e.g. 1/3 or none");
  analyze->add_option("--out", out_path, "Report path (.csv or .json)")->required();

  auto* simulate = app.add_subcommand("simulate", "Run a numerical experiment");
  simulate->add_option("--config", config_path, "Experiment config JSON");
  simulate->add_option("--experiment", experiment, "Experiment to run")
      ->required()
      ->check(CLI::IsMember({"regression", "max-deviation", "random", "nonlinearity"}));
  simulate->add_option("--out", out_path, "Result path (.csv or .json)")->required();

  auto* render = app.add_subcommand("render", "Play a test stream through the virtual chain");
  render->add_option("--in", in_path, "Test stream WAV")->required();
  render->add_option("--config", config_path, "Chain config JSON");
  render->add_option("--out", out_path, "Recording WAV (float32)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report_error("UsageError", e.what(), kExitUsage);
  }

  try {
    if (safeguard->parsed()) {
      const sgm::PeriodicSignal source = read_period(in_path, period);
      const sgm::Spectrum spectrum = sgm::forward_dft(source);
      const sgm::FloorThreshold theta = sgm::threshold_at_db(spectrum, theta_db);
      const auto [floored, report] = sgm::safeguard_signal(source, theta);
      sgm::write_audio(out_path, {floored.samples(), floored.sample_rate(), out_path});

      nlohmann::ordered_json doc;
      doc["schema_version"] = sgm::kReportSchemaVersion;
      doc["kind"] = "safeguard";
      doc["period_length"] = source.length();
      doc["sample_rate"] = source.sample_rate();
      doc["theta_db"] = theta.reference_db;
      doc["theta_linear"] = theta.theta_linear;
      doc["mean_magnitude"] = sgm::mean_magnitude(spectrum);
      doc["bins_changed"] = report.bins_changed;
      doc["fraction_changed"] = report.fraction_changed;
      doc["added_component_db"] = json_safe(report.added_component_db);
      sgm::write_text(report_path, doc.dump(1) + "\n");
    } else if (make_test->parsed()) {
      if (repeats < 1) return report_error("UsageError", "--repeats must be at least 1", kExitUsage);
      const sgm::PeriodicSignal source = read_period(in_path, period);
      sgm::write_audio(out_path, sgm::build_test_stream(source, repeats, out_path));
    } else if (analyze->parsed()) {
      const auto manifest = sgm::load_manifest(manifest_path);
      sgm::write_report(out_path, sgm::analyze_session(manifest, parse_fraction(smooth)));
    } else if (simulate->parsed()) {
      sgm::ExperimentConfig config = config_path.empty()
                                         ? sgm::parse_experiment_config("{}")
                                         : sgm::parse_experiment_config(sgm::read_text(config_path));
      sgm::format_for(out_path);
      sgm::write_report(out_path, sgm::to_report(sgm::run_experiment(experiment, config)));
    } else if (render->parsed()) {
      const sgm::ExperimentConfig config = config_path.empty()
                                               ? sgm::parse_experiment_config("{}")
                                               : sgm::parse_experiment_config(sgm::read_text(config_path));
      const sgm::SampleStream test = sgm::read_audio(in_path);
      sgm::write_audio(out_path, sgm::simulate_chain(test, sgm::chain_config(config)));
    }
  } catch (const sgm::Error& e) {
    return report_error(sgm::to_string(e.code()), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), 1);
  }
  return 0;
}
