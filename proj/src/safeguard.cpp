#include "sgm/safeguard.hpp"

#include "sgm/spectral.hpp"

#include <cmath>

namespace sgm {

double mean_magnitude(const Spectrum& spectrum) {
  return spectrum.bins().cwiseAbs().mean();
}

FloorThreshold default_threshold(const Spectrum& spectrum) {
  return threshold_at_db(spectrum, 0.0);
}

FloorThreshold threshold_at_db(const Spectrum& spectrum, double offset_db) {
  const double mean = mean_magnitude(spectrum);
  if (!(mean > 0.0)) {
    throw Error(ErrorCode::DegenerateSpectrum, "spectrum is identically zero");
  }
  if (!std::isfinite(offset_db)) {
    throw Error(ErrorCode::InvalidArgument, "flooring level must be finite");
  }
  const double theta = mean * std::pow(10.0, offset_db / 20.0);
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error(ErrorCode::InvalidArgument, "flooring level out of range");
  }
  return {theta, offset_db};
}

Spectrum apply_floor(const Spectrum& spectrum, const FloorThreshold& theta) {
  if (!(theta.theta_linear > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold must be positive");
  }
  const double t = theta.theta_linear;
  ComplexVector out = spectrum.bins();
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const double magnitude = std::abs(out[k]);
    if (magnitude == 0.0) {
      out[k] = Complex(t, 0.0);
    } else if (magnitude < t) {
      Complex scaled = out[k] * (t / magnitude);
      // Rounding may land one ulp under t; nudge up so the floor is idempotent.
      double gain = 1.0;
      while (std::abs(scaled) < t) {
        gain = std::nextafter(gain, 2.0);
        scaled = out[k] * (gain * t / magnitude);
      }
      out[k] = scaled;
    }
  }
  return Spectrum(std::move(out), spectrum.sample_rate(), spectrum.hermitian());
}

Eigen::Index count_floored_bins(const Spectrum& spectrum, const FloorThreshold& theta) {
  return (spectrum.bins().cwiseAbs().array() < theta.theta_linear).count();
}

std::pair<PeriodicSignal, SafeguardReport> safeguard_signal(
    const PeriodicSignal& signal, const FloorThreshold& theta) {
  const Spectrum source = forward_dft(signal);
  if (!(mean_magnitude(source) > 0.0)) {
    throw Error(ErrorCode::DegenerateSpectrum, "signal is identically zero");
  }
  SafeguardReport report;
  report.bins_changed = count_floored_bins(source, theta);
  report.fraction_changed =
      static_cast<double>(report.bins_changed) / static_cast<double>(signal.length());

  if (report.bins_changed == 0) {
    report.added_component_db = -std::numeric_limits<double>::infinity();
    return {signal, report};
  }
  PeriodicSignal floored = inverse_dft(apply_floor(source, theta));
  const RealVector added = floored.samples() - signal.samples();
  report.added_component_db = power_db(added) - power_db(signal.samples());
  return {std::move(floored), report};
}

std::pair<PeriodicSignal, SafeguardReport> safeguard_signal_db(
    const PeriodicSignal& signal, double theta_db) {
  return safeguard_signal(signal, threshold_at_db(forward_dft(signal), theta_db));
}

SampleStream build_test_stream(const PeriodicSignal& period, int repeats,
                               std::string label) {
  if (repeats < 1) {
    throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
  }
  SampleStream stream;
  stream.sample_rate = period.sample_rate();
  stream.label = std::move(label);
  stream.samples = period.samples().replicate(repeats, 1);
  return stream;
}

}  // namespace sgm
