#include "oracles.hpp"

#include "sgm/rng.hpp"
#include "sgm/safeguard.hpp"
#include "sgm/separation.hpp"
#include "sgm/simulation.hpp"
#include "sgm/spectral.hpp"

#include <doctest.h>

#include <random>

using namespace sgm;

namespace {

constexpr double kPi = std::numbers::pi;

struct Excitation {
  PeriodicSignal period;
  Spectrum spectrum;
};

Excitation make_excitation(Eigen::Index n, std::uint64_t seed, double theta_db = 0.0) {
  PeriodicSignal xs = safeguard_signal_db(white_noise_period(n, 44100, seed), theta_db).first;
  Spectrum spectrum = forward_dft(xs);
  return {std::move(xs), std::move(spectrum)};
}

// Recording of a noiseless circular chain with impulse response h.
SampleStream chain_recording(const PeriodicSignal& period, int repeats, const RealVector& h) {
  SimulationConfig config;
  config.impulse_response = h;
  return simulate_chain(build_test_stream(period, repeats), config);
}

RealVector decaying_ir(Eigen::Index length, std::uint64_t seed) {
  const CounterRng rng(seed, 99);
  RealVector h(length);
  for (Eigen::Index i = 0; i < length; ++i) h[i] = rng.normal(i) * std::exp(-6.0 * i / length);
  return h;
}

ComplexVector padded_dft(const RealVector& h, Eigen::Index n) {
  RealVector padded = RealVector::Zero(n);
  padded.head(h.size()) = h;
  const auto direct = oracle::direct_dft(padded);
  return Eigen::Map<const ComplexVector>(direct.data(), n);
}

}  // namespace

TEST_SUITE("separation") {

TEST_CASE("plan_segments") {
  const Eigen::Index n = 100;
  const SegmentPlan four = plan_segments(6 * n, n, 4, n);
  CHECK(four.starts == std::vector<Eigen::Index>{n, 2 * n, 3 * n, 4 * n});
  CHECK(plan_segments(2 * n, n, 1, n).starts == std::vector<Eigen::Index>{n});
  CHECK_THROWS_AS(plan_segments(2 * n, n, 2, n), Error);
  try {
    plan_segments(2 * n, n, 2, n);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StreamTooShort);
  }
  // Arbitrary alignment relative to the period phase is allowed.
  const SegmentPlan shifted = plan_segments(6 * n, n, 3, n + 37);
  CHECK(shifted.starts.back() == n + 37 + 2 * n);
  CHECK_NOTHROW(validate(shifted, 6 * n));

  SegmentPlan overlapping = four;
  overlapping.starts[1] = overlapping.starts[0] + n / 2;
  CHECK_THROWS_AS(validate(overlapping, 6 * n), Error);
}

TEST_CASE("estimate_transfer on identity, delay and known IR") {
  const Eigen::Index n = 512;
  const Excitation ex = make_excitation(n, 4);

  SUBCASE("identity") {
    const SampleStream stream = build_test_stream(ex.period, 3);
    for (const Eigen::Index start : {n, 2 * n}) {
      const TransferEstimate h = estimate_transfer(ex.spectrum, stream, start);
      CHECK((h.h_bins.array() - Complex(1.0, 0.0)).abs().maxCoeff() < 1e-10);
    }
  }
  SUBCASE("pure delay is a phase ramp") {
    const Eigen::Index d = 13;
    RealVector delta = RealVector::Zero(d + 1);
    delta[d] = 1.0;
    const SampleStream stream = chain_recording(ex.period, 3, delta);
    const TransferEstimate h = estimate_transfer(ex.spectrum, stream, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Complex expected = std::polar(1.0, -2.0 * kPi * static_cast<double>((k * d) % n) / n);
      CHECK(std::abs(h.h_bins[k] - expected) < 1e-9);
    }
  }
  SUBCASE("known impulse response at every planned start") {
    const RealVector ir = decaying_ir(40, 1);
    const ComplexVector truth = padded_dft(ir, n);
    const SampleStream stream = chain_recording(ex.period, 6, ir);
    const SegmentPlan plan = plan_segments(stream.length(), n, 4, n);
    for (const auto& e : estimate_all(ex.spectrum, stream, plan)) {
      for (Eigen::Index k = 0; k < n; ++k) {
        CHECK(std::abs(e.h_bins[k] - truth[k]) <= 1e-8 * std::max(std::abs(truth[k]), 1e-3));
      }
    }
  }
  SUBCASE("errors") {
    const SampleStream stream = build_test_stream(ex.period, 2);
    CHECK_THROWS_AS(estimate_transfer(ex.spectrum, stream, n + 1), Error);
    ComplexVector holed = ex.spectrum.bins();
    holed[5] = 0.0;
    holed[n - 5] = 0.0;
    try {
      estimate_transfer(Spectrum(holed, 44100, true), stream, n);
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ZeroBinExcitation);
    }
  }
}

TEST_CASE("segment-start and excitation invariance for a noiseless LTI chain") {
  const Eigen::Index n = 1024;
  const RealVector ir = decaying_ir(64, 2);
  std::vector<ComplexVector> per_signal;
  ComplexVector reference;
  for (int p = 0; p < 4; ++p) {
    const Excitation ex = make_excitation(n, 100 + static_cast<std::uint64_t>(p));
    const SampleStream stream = chain_recording(ex.period, 6, ir);
    const auto estimates =
        estimate_all(ex.spectrum, stream, plan_segments(stream.length(), n, 4, n * (1 + p % 2)), p);
    for (const auto& e : estimates) {
      if (reference.size() == 0) reference = e.h_bins;
      const double rel = ((e.h_bins - reference).cwiseAbs().array() / reference.cwiseAbs().array()).maxCoeff();
      CHECK(rel < 1e-8);
    }
    const auto ti = time_invariant_response(estimates);
    CHECK(ti.d_stv_sq.maxCoeff() < 1e-16 * reference.cwiseAbs2().minCoeff());
    per_signal.push_back(ti.h_sti);
  }
  const auto sdr = signal_dependent_response(per_signal);
  CHECK(((sdr.h_slti - reference).cwiseAbs().array() / reference.cwiseAbs().array()).maxCoeff() < 1e-8);
  CHECK(sdr.h_ssdr_sq.maxCoeff() < 1e-16 * reference.cwiseAbs2().minCoeff());
}

TEST_CASE("time_invariant_response examples") {
  std::mt19937_64 rng(8);
  const Eigen::Index n = 16;
  ComplexVector h(n);
  for (Eigen::Index k = 0; k < n; ++k) h[k] = Complex(oracle::random_vector(rng, 1)[0], oracle::random_vector(rng, 1)[0]);

  const std::vector<TransferEstimate> same(3, TransferEstimate{h, 0, 0});
  const auto zero = time_invariant_response(same);
  CHECK((zero.h_sti - h).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(zero.d_stv_sq.maxCoeff() <= 1e-30 * h.cwiseAbs2().maxCoeff());

  const std::vector<TransferEstimate> opposite{{h, 0, 0}, {-h, 0, 0}};
  const auto pm = time_invariant_response(opposite);
  CHECK(pm.h_sti.cwiseAbs().maxCoeff() == 0.0);
  CHECK((pm.d_stv_sq - 2.0 * h.cwiseAbs2()).cwiseAbs().maxCoeff() < 1e-14);

  try {
    time_invariant_response({TransferEstimate{h, 0, 0}});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientRepetitions);
  }
  CHECK_THROWS_AS(time_invariant_response({{h, 0, 0}, {h, 1, 0}}), Error);
}

TEST_CASE("signal_dependent_response examples") {
  const ComplexVector h = ComplexVector::Constant(8, Complex(0.5, -0.25));
  const auto same = signal_dependent_response(std::vector<ComplexVector>(4, h));
  CHECK(same.h_ssdr_sq.maxCoeff() == 0.0);
  try {
    signal_dependent_response(std::vector<ComplexVector>{h});
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientSignals);
  }
}

TEST_CASE("estimators match direct summation exactly") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<oracle::cplx>> table(3, std::vector<oracle::cplx>(8));
    std::vector<TransferEstimate> estimates;
    std::vector<ComplexVector> responses;
    for (int m = 0; m < 3; ++m) {
      ComplexVector v(8);
      for (int k = 0; k < 8; ++k) {
        table[m][k] = {g(rng), g(rng)};
        v[k] = table[m][k];
      }
      estimates.push_back({v, 0, 0});
      responses.push_back(v);
    }
    const auto expected = oracle::sample_moments(table);
    const auto ti = time_invariant_response(estimates);
    const auto sd = signal_dependent_response(responses);
    for (int k = 0; k < 8; ++k) {
      CHECK(ti.h_sti[k] == expected.mean[k]);
      CHECK(ti.d_stv_sq[k] == expected.variance[k]);
      CHECK(sd.h_slti[k] == expected.mean[k]);
      CHECK(sd.h_ssdr_sq[k] == expected.variance[k]);
    }
  }
}

TEST_CASE("averaging commutes with scaling") {
  std::mt19937_64 rng(12);
  std::vector<TransferEstimate> raw, scaled;
  for (int m = 0; m < 5; ++m) {
    ComplexVector v = oracle::random_vector(rng, 32).cast<Complex>() +
                      Complex(0.0, 1.0) * oracle::random_vector(rng, 32).cast<Complex>();
    raw.push_back({v, 0, 0});
    scaled.push_back({0.25 * v, 0, 0});
  }
  const auto a = time_invariant_response(raw);
  const auto b = time_invariant_response(scaled);
  CHECK(((0.25 * a.h_sti).array() == b.h_sti.array()).all());
  CHECK(((0.0625 * a.d_stv_sq).array() == b.d_stv_sq.array()).all());
}

TEST_CASE("random-response estimator is unbiased under per-bin noise") {
  const Eigen::Index n = 8;
  const int repeats = 4;
  const int trials = 10000;
  const double sigma2 = 0.01;
  const Excitation ex = make_excitation(n, 77);
  const ComplexVector y = ex.spectrum.bins();  // identity system
  const CounterRng rng(2718, 1);
  RealVector mean_variance = RealVector::Zero(n);
  std::uint64_t counter = 0;
  for (int t = 0; t < trials; ++t) {
    std::vector<TransferEstimate> estimates;
    for (int m = 0; m < repeats; ++m) {
      ComplexVector h(n);
      for (Eigen::Index k = 0; k < n; ++k) {
        const Complex noise(rng.normal(counter), rng.normal(counter + 1));
        counter += 2;
        h[k] = (y[k] + std::sqrt(sigma2 / 2.0) * noise) / ex.spectrum.bins()[k];
      }
      estimates.push_back({h, 0, 0});
    }
    mean_variance += time_invariant_response(estimates).d_stv_sq;
  }
  mean_variance /= trials;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double expected = sigma2 / std::norm(ex.spectrum.bins()[k]);
    CHECK(std::abs(mean_variance[k] / expected - 1.0) < 0.05);
  }
}

TEST_CASE("fractional-octave smoothing") {
  SUBCASE("constant spectrum is unchanged") {
    const RealVector flat = RealVector::Constant(1000, 2.5);
    CHECK((fractional_octave_smooth(flat) - flat).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("matches a brute-force window in Hz") {
    const Eigen::Index n = 200;
    const int fs = 8000;
    std::mt19937_64 rng(4);
    const RealVector power = oracle::random_vector(rng, n).cwiseAbs();
    const RealVector smooth = fractional_octave_smooth(power, 1.0 / 3.0, fs);
    CHECK(smooth[0] == power[0]);
    for (Eigen::Index k = 1; k <= n / 2; ++k) {
      const double fk = static_cast<double>(k) * fs / n;
      double sum = 0.0;
      int count = 0;
      for (Eigen::Index j = 1; j <= n / 2; ++j) {
        const double fj = static_cast<double>(j) * fs / n;
        if (fj >= fk * std::pow(2.0, -1.0 / 6.0) - 1e-9 && fj <= fk * std::pow(2.0, 1.0 / 6.0) + 1e-9) {
          sum += power[j];
          ++count;
        }
      }
      CHECK(smooth[k] == doctest::Approx(sum / count).epsilon(1e-12));
      if (k > 0 && k < n / 2) CHECK(smooth[n - k] == smooth[k]);
    }
  }
  SUBCASE("an impulse spreads and stays bounded") {
    RealVector power = RealVector::Zero(4096);
    power[300] = 1.0;
    power[4096 - 300] = 1.0;
    const RealVector smooth = fractional_octave_smooth(power);
    CHECK(smooth.maxCoeff() <= 1.0);
    CHECK(smooth.minCoeff() >= 0.0);
    CHECK(smooth[290] > 0.0);
    CHECK(smooth[310] > 0.0);
    CHECK(smooth[200] == 0.0);
  }
  SUBCASE("mean preserved on interior bins") {
    const CounterRng rng(5, 5);
    const Eigen::Index n = 1 << 16;
    RealVector power(n);
    for (Eigen::Index k = 0; k < n; ++k) power[k] = -std::log(rng.uniform(k));
    const RealVector smooth = fractional_octave_smooth(power);
    CHECK(smooth.minCoeff() >= 0.0);
    const Eigen::Index lo = 2000, hi = 20000;
    const double before = power.segment(lo, hi - lo).mean();
    const double after = smooth.segment(lo, hi - lo).mean();
    CHECK(std::abs(after / before - 1.0) < 0.01);
  }
  SUBCASE("negative power is rejected") {
    RealVector bad = RealVector::Ones(8);
    bad[2] = -1.0;
    CHECK_THROWS_AS(fractional_octave_smooth(bad), Error);
  }
}

TEST_CASE("impulse_response") {
  SUBCASE("all ones is a unit impulse") {
    const RealVector h = impulse_response({ComplexVector::Ones(16), 0, 0});
    CHECK(std::abs(h[0] - 1.0) < 1e-15);
    CHECK(h.tail(15).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("phase ramp is a delayed impulse") {
    const Eigen::Index n = 64, d = 9;
    ComplexVector ramp(n);
    for (Eigen::Index k = 0; k < n; ++k) ramp[k] = std::polar(1.0, -2.0 * kPi * k * d / n);
    const RealVector h = impulse_response({ramp, 0, 0});
    for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(h[i] - (i == d ? 1.0 : 0.0)) < 1e-12);
  }
  SUBCASE("recovers a simulated chain") {
    const Eigen::Index n = 8192;
    const RealVector ir = decaying_ir(512, 3);
    const Excitation ex = make_excitation(n, 55);
    const SampleStream stream = chain_recording(ex.period, 2, ir);
    const RealVector h = impulse_response(estimate_transfer(ex.spectrum, stream, n));
    CHECK((h.head(512) - ir).cwiseAbs().maxCoeff() < 1e-7);
    CHECK(h.tail(n - 512).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("background level of a noise-only recording") {
  const Eigen::Index n = 256;
  const Excitation ex = make_excitation(n, 10);
  SampleStream noise{0.01 * CounterRng(3, 3).normal_vector(4 * n), 44100, "bg"};
  const RealVector level = background_level(ex.spectrum, noise, plan_segments(noise.length(), n, 3, n));
  const double expected_per_bin = 1e-4 * n;  // E|D[k]|^2 for white noise
  const double ratio = (level.array() * ex.spectrum.bins().cwiseAbs2().array()).mean() / expected_per_bin;
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.1));
}

}
