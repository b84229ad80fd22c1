#pragma once

#include "sgm/types.hpp"

#include <vector>

namespace sgm {

/// Analysis windows of exactly one period each, taken after a discarded
/// preamble (first cycle plus propagation delay).
struct SegmentPlan {
  Eigen::Index period_length = 0;
  Eigen::Index skip_preamble = 0;
  std::vector<Eigen::Index> starts;

  Eigen::Index count() const noexcept { return static_cast<Eigen::Index>(starts.size()); }
};

/// Default preamble: one whole period plus the delay allowance.
inline Eigen::Index default_skip(Eigen::Index period_length, Eigen::Index delay_allowance = 0) {
  return period_length + delay_allowance;
}

SegmentPlan plan_segments(Eigen::Index stream_length, Eigen::Index period_length,
                          Eigen::Index count, Eigen::Index skip);

/// Throws InvalidArgument unless the plan satisfies its invariants against a
/// stream of the given length.
void validate(const SegmentPlan& plan, Eigen::Index stream_length);

struct TransferEstimate {
  ComplexVector h_bins;
  int source_signal_id = 0;
  Eigen::Index segment_start = 0;
};

/// H_s[k] = Y_s[k] / X_s[k] for the length-L recording segment at `start`.
TransferEstimate estimate_transfer(const Spectrum& excitation,
                                   const SampleStream& recording,
                                   Eigen::Index start, int source_signal_id = 0);

std::vector<TransferEstimate> estimate_all(const Spectrum& excitation,
                                           const SampleStream& recording,
                                           const SegmentPlan& plan,
                                           int source_signal_id = 0);

/// Bin-wise sample mean and unbiased (n - 1) sample variance over columns.
struct BinStatistics {
  ComplexVector mean;
  RealVector variance;
};

/// Columns are independent instances of a length-L response. Accumulation
/// runs column by column in index order.
template <typename Derived>
BinStatistics bin_mean_and_variance(const Eigen::MatrixBase<Derived>& columns) {
  const Eigen::Index bins = columns.rows();
  const Eigen::Index n = columns.cols();
  BinStatistics stats{ComplexVector::Zero(bins), RealVector::Zero(bins)};
  for (Eigen::Index k = 0; k < bins; ++k) {
    Complex sum(0.0, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) sum += Complex(columns(k, j));
    const Complex mean = sum / static_cast<double>(n);
    double squares = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Complex d = Complex(columns(k, j)) - mean;
      squares += d.real() * d.real() + d.imag() * d.imag();
    }
    stats.mean[k] = mean;
    stats.variance[k] = squares / static_cast<double>(n - 1);
  }
  return stats;
}

struct TimeInvariantResponse {
  ComplexVector h_sti;     // mean over repetitions
  RealVector d_stv_sq;     // squared random / time-varying response
  Eigen::Index m_count = 0;
  int source_signal_id = 0;
};

TimeInvariantResponse time_invariant_response(const std::vector<TransferEstimate>& estimates);

struct SignalDependentResponse {
  ComplexVector h_slti;    // mean over excitation signals
  RealVector h_ssdr_sq;    // squared signal-dependent response
  Eigen::Index p_count = 0;
};

SignalDependentResponse signal_dependent_response(
    const std::vector<ComplexVector>& per_signal_h_sti);

SignalDependentResponse signal_dependent_response(
    const std::vector<TimeInvariantResponse>& per_signal);

struct SeparationResult {
  std::vector<TimeInvariantResponse> per_signal;
  SignalDependentResponse across_signals;  // empty when only one signal
  Eigen::Index m_count = 0;
  Eigen::Index p_count = 0;
};

/// Full separation for P excitation/recording pairs sharing one plan. With a
/// single signal the across-signal statistics are left empty.
SeparationResult separate_responses(const std::vector<Spectrum>& excitations,
                                    const std::vector<SampleStream>& recordings,
                                    const SegmentPlan& plan);

/// Rectangular log-frequency smoothing of a power spectrum. Bin k>0 becomes
/// the mean over bins in [k 2^(-fraction/2), k 2^(fraction/2)] clamped to
/// 1..L/2; bin 0 passes through and the upper half mirrors the lower.
RealVector fractional_octave_smooth(const Eigen::Ref<const RealVector>& power,
                                    double fraction = 1.0 / 3.0,
                                    int sample_rate = 44100);

/// Real impulse response from the Hermitian part of H.
RealVector impulse_response(const TransferEstimate& estimate);

/// |D[k]|^2 / |X_s[k]|^2 averaged over the plan's segments of a noise-only
/// recording.
RealVector background_level(const Spectrum& excitation, const SampleStream& noise,
                            const SegmentPlan& plan);

}  // namespace sgm
