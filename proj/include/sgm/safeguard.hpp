#pragma once

#include "sgm/types.hpp"

#include <utility>

namespace sgm {

/// Flooring threshold on DFT magnitudes. `reference_db` is its level relative
/// to the mean absolute bin magnitude of the source spectrum.
struct FloorThreshold {
  double theta_linear = 0.0;
  double reference_db = 0.0;
};

struct SafeguardReport {
  Eigen::Index bins_changed = 0;
  double fraction_changed = 0.0;
  // Power of (x_s - x) relative to power of x, in dB.
  double added_component_db = 0.0;
};

double mean_magnitude(const Spectrum& spectrum);

/// Threshold at the mean absolute bin magnitude (0 dB reference).
FloorThreshold default_threshold(const Spectrum& spectrum);

/// Threshold `offset_db` above (or below) the mean absolute bin magnitude.
FloorThreshold threshold_at_db(const Spectrum& spectrum, double offset_db);

/// Raise every bin magnitude below theta to theta, keeping its phase. Zero
/// bins become theta + 0i. Bins at or above theta are copied unchanged.
Spectrum apply_floor(const Spectrum& spectrum, const FloorThreshold& theta);

Eigen::Index count_floored_bins(const Spectrum& spectrum, const FloorThreshold& theta);

std::pair<PeriodicSignal, SafeguardReport> safeguard_signal(
    const PeriodicSignal& signal, const FloorThreshold& theta);

/// Same as above with the threshold given relative to the mean magnitude.
std::pair<PeriodicSignal, SafeguardReport> safeguard_signal_db(
    const PeriodicSignal& signal, double theta_db);

/// `repeats` back-to-back copies of the period.
SampleStream build_test_stream(const PeriodicSignal& period, int repeats,
                               std::string label = {});

}  // namespace sgm
