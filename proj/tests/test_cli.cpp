#include "sgm/report.hpp"
#include "sgm/safeguard.hpp"
#include "sgm/simulation.hpp"
#include "sgm/wav.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

using namespace sgm;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("sgm_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + SGM_CLI_PATH + "\" " + args + " 2>\"" +
                          (work_dir() / "stderr.txt").string() + "\" >/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

nlohmann::json last_error() { return nlohmann::json::parse(read_text(work_dir() / "stderr.txt")); }

// Writes P excitations and noiseless recordings of a gain-plus-delay chain,
// exactly representable in float32.
fs::path make_session(const std::string& name, Eigen::Index n, int p_count, int segments,
                      bool with_background) {
  const fs::path dir = work_dir() / name;
  fs::create_directories(dir);
  RealVector ir = RealVector::Zero(4);
  ir[3] = 0.5;
  SimulationConfig chain;
  chain.impulse_response = ir;
  nlohmann::json manifest = {{"schema_version", 1}, {"period_length", n}, {"sample_rate", 44100},
                             {"segments", segments}, {"delay_allowance", 3}};
  for (int p = 0; p < p_count; ++p) {
    const PeriodicSignal xs = safeguard_signal_db(white_noise_period(n, 44100, 40 + static_cast<std::uint64_t>(p)), 0.0).first;
    const RealVector rounded = (0.25 * xs.samples()).cast<float>().cast<double>();
    const PeriodicSignal period(rounded, 44100);
    const std::string x = "x" + std::to_string(p) + ".wav";
    const std::string y = "y" + std::to_string(p) + ".wav";
    write_audio(dir / x, {rounded, 44100, x});
    write_audio(dir / y, simulate_chain(build_test_stream(period, segments + 2), chain));
    manifest["signals"].push_back({{"excitation", x}, {"recording", y}});
  }
  if (with_background) {
    const RealVector noise = (1e-3 * white_noise_period(3 * n, 44100, 5).samples()).cast<float>().cast<double>();
    write_audio(dir / "bg.wav", {noise, 44100, "bg"});
    manifest["background"] = "bg.wav";
  }
  write_text(dir / "manifest.json", manifest.dump(2));
  return dir / "manifest.json";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("safeguard subcommand") {
  const fs::path dir = work_dir();
  write_audio(dir / "noise.wav", {white_noise_period(20000, 44100, 3).samples().cast<float>().cast<double>() * 0.1, 44100, "n"});

  REQUIRE(run("safeguard --in " + q(dir / "noise.wav") + " --theta-db -200 --out " + q(dir / "s1.wav") +
              " --report " + q(dir / "s1.json")) == 0);
  auto report = nlohmann::json::parse(read_text(dir / "s1.json"));
  CHECK(report["bins_changed"] == 0);
  CHECK((read_audio(dir / "s1.wav").samples - read_audio(dir / "noise.wav").samples).cwiseAbs().maxCoeff() < 1e-7);

  REQUIRE(run("safeguard --in " + q(dir / "noise.wav") + " --period 20000 --theta-db 0 --out " +
              q(dir / "s2.wav") + " --report " + q(dir / "s2.json")) == 0);
  report = nlohmann::json::parse(read_text(dir / "s2.json"));
  CHECK(report["kind"] == "safeguard");
  CHECK(std::abs(report["added_component_db"].get<double>() - (-10.3)) < 1.0);
  CHECK(report["bins_changed"].get<int>() > 0);
}

TEST_CASE("make-test subcommand") {
  const fs::path dir = work_dir();
  const RealVector period = white_noise_period(300, 44100, 1).samples().cast<float>().cast<double>();
  write_audio(dir / "period.wav", {period, 44100, "p"});
  REQUIRE(run("make-test --in " + q(dir / "period.wav") + " --repeats 1 --out " + q(dir / "r1.wav")) == 0);
  CHECK((read_audio(dir / "r1.wav").samples.array() == period.array()).all());
  REQUIRE(run("make-test --in " + q(dir / "period.wav") + " --repeats 6 --out " + q(dir / "r6.wav")) == 0);
  const SampleStream six = read_audio(dir / "r6.wav");
  CHECK(six.length() == 1800);
  CHECK((six.samples.segment(900, 300).array() == period.array()).all());
  CHECK(run("make-test --in " + q(dir / "period.wav") + " --repeats 0 --out " + q(dir / "r0.wav")) == 2);
  CHECK(last_error()["exit_code"] == 2);
  CHECK(!fs::exists(dir / "r0.wav"));
}

TEST_CASE("analyze recovers a noiseless chain") {
  const Eigen::Index n = 4096;
  const fs::path manifest = make_session("clean", n, 3, 4, true);
  const fs::path out = manifest.parent_path() / "report.csv";
  REQUIRE(run("analyze --manifest " + q(manifest) + " --smooth 1/3 --out " + q(out)) == 0);
  const AnalysisReport r = read_report(out);
  CHECK(r.table.rows() == n / 2 + 1);
  CHECK(r.summary_value("m_count") == 4);
  CHECK(r.summary_value("p_count") == 3);
  const double gain = 20.0 * std::log10(0.5);
  CHECK((r.column("lti_gain_db").array() - gain).abs().maxCoeff() < 1e-6);
  CHECK((r.column("lti_gain_smoothed_db").array() - gain).abs().maxCoeff() < 1e-6);
  const RealVector random = r.column("random_level_db");
  for (Eigen::Index k = 0; k < random.size(); ++k) CHECK((std::isnan(random[k]) || random[k] < -200.0));
  const RealVector background = r.column("background_level_db");
  CHECK(background.allFinite());
  CHECK(r.column("frequency_hz")[1] == doctest::Approx(44100.0 / n));

  const fs::path json_out = manifest.parent_path() / "report.json";
  REQUIRE(run("analyze --manifest " + q(manifest) + " --out " + q(json_out)) == 0);
  const AnalysisReport j = read_report(json_out);
  CHECK((j.column("lti_gain_db").array() - gain).abs().maxCoeff() < 1e-6);
  CHECK(std::isnan(j.column("lti_gain_smoothed_db")[5]));
}

TEST_CASE("analyze error paths") {
  const fs::path single = make_session("single", 1024, 1, 1, false);
  CHECK(run("analyze --manifest " + q(single) + " --out " + q(single.parent_path() / "r.csv")) == 4);
  const auto err = last_error();
  CHECK(err["error"] == "InsufficientRepetitions");
  CHECK(err["message"].get<std::string>().find("segments") != std::string::npos);

  const fs::path one_signal = make_session("one", 1024, 1, 3, false);
  REQUIRE(run("analyze --manifest " + q(one_signal) + " --out " + q(one_signal.parent_path() / "r.csv")) == 0);
  const AnalysisReport r = read_report(one_signal.parent_path() / "r.csv");
  CHECK(std::isnan(r.column("signal_dependent_level_db")[3]));

  CHECK(run("analyze --manifest " + q(work_dir() / "nope.json") + " --out x.csv") == 3);
  write_text(work_dir() / "broken.json", "{\"schema_version\": 1");
  CHECK(run("analyze --manifest " + q(work_dir() / "broken.json") + " --out x.csv") == 3);
  CHECK(run("analyze --manifest " + q(one_signal) + " --smooth banana --out x.csv") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("simulate is deterministic") {
  const fs::path dir = work_dir();
  write_text(dir / "cfg.json", R"({"seed": 3, "period_length": 4096, "input_level_db_list": [0, -20]})");
  REQUIRE(run("simulate --config " + q(dir / "cfg.json") + " --experiment nonlinearity --out " + q(dir / "a.csv")) == 0);
  REQUIRE(run("simulate --config " + q(dir / "cfg.json") + " --experiment nonlinearity --out " + q(dir / "b.csv")) == 0);
  CHECK(read_text(dir / "a.csv") == read_text(dir / "b.csv"));
  const AnalysisReport r = read_report(dir / "a.csv");
  CHECK(r.kind == "nonlinearity");
  CHECK(r.table.rows() == 2);

  CHECK(run("simulate --config " + q(dir / "cfg.json") + " --experiment nope --out " + q(dir / "c.csv")) == 2);
  write_text(dir / "bad.json", R"({"period_length": 1})");
  CHECK(run("simulate --config " + q(dir / "bad.json") + " --experiment random --out " + q(dir / "c.csv")) == 3);
  CHECK(run("simulate --config " + q(dir / "cfg.json") + " --experiment random --out " + q(dir / "c.txt")) == 2);
}

}
