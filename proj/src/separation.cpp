#include "sgm/separation.hpp"

#include "sgm/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace sgm {

SegmentPlan plan_segments(Eigen::Index stream_length, Eigen::Index period_length,
                          Eigen::Index count, Eigen::Index skip) {
  if (period_length < 2 || count < 1 || skip < 0) {
    throw Error(ErrorCode::InvalidArgument,
                "segment plan needs L >= 2, count >= 1 and skip >= 0");
  }
  if (skip + count * period_length > stream_length) {
    throw Error(ErrorCode::StreamTooShort,
                "stream holds fewer than the requested segments after the preamble");
  }
  SegmentPlan plan;
  plan.period_length = period_length;
  plan.skip_preamble = skip;
  plan.starts.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index m = 0; m < count; ++m) plan.starts.push_back(skip + m * period_length);
  return plan;
}

void validate(const SegmentPlan& plan, Eigen::Index stream_length) {
  std::vector<Eigen::Index> sorted = plan.starts;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < plan.skip_preamble || sorted[i] + plan.period_length > stream_length) {
      throw Error(ErrorCode::SegmentOutOfRange, "segment outside the usable stream");
    }
    if (i > 0 && sorted[i] - sorted[i - 1] < plan.period_length) {
      throw Error(ErrorCode::InvalidArgument, "analysis segments overlap");
    }
  }
}

TransferEstimate estimate_transfer(const Spectrum& excitation,
                                   const SampleStream& recording,
                                   Eigen::Index start, int source_signal_id) {
  const Eigen::Index n = excitation.length();
  if (start < 0 || start + n > recording.length()) {
    throw Error(ErrorCode::SegmentOutOfRange, "segment exceeds the recording");
  }
  const ComplexVector& x = excitation.bins();
  if ((x.array().abs() == 0.0).any()) {
    throw Error(ErrorCode::ZeroBinExcitation,
                "excitation has an empty DFT bin; safeguard it first");
  }
  const ComplexVector y = fft(recording.samples.segment(start, n));
  return {(y.array() / x.array()).matrix(), source_signal_id, start};
}

std::vector<TransferEstimate> estimate_all(const Spectrum& excitation,
                                           const SampleStream& recording,
                                           const SegmentPlan& plan,
                                           int source_signal_id) {
  if (plan.period_length != excitation.length()) {
    throw Error(ErrorCode::InvalidArgument, "plan and excitation disagree on L");
  }
  validate(plan, recording.length());
  std::vector<TransferEstimate> out;
  out.reserve(plan.starts.size());
  for (const Eigen::Index start : plan.starts) {
    out.push_back(estimate_transfer(excitation, recording, start, source_signal_id));
  }
  return out;
}

TimeInvariantResponse time_invariant_response(const std::vector<TransferEstimate>& estimates) {
  if (estimates.size() < 2) {
    throw Error(ErrorCode::InsufficientRepetitions,
                "random response needs at least two segments (M >= 2)");
  }
  const Eigen::Index bins = estimates.front().h_bins.size();
  Eigen::MatrixXcd columns(bins, static_cast<Eigen::Index>(estimates.size()));
  for (std::size_t m = 0; m < estimates.size(); ++m) {
    if (estimates[m].h_bins.size() != bins ||
        estimates[m].source_signal_id != estimates.front().source_signal_id) {
      throw Error(ErrorCode::InvalidArgument,
                  "estimates must share the excitation signal and length");
    }
    columns.col(static_cast<Eigen::Index>(m)) = estimates[m].h_bins;
  }
  BinStatistics stats = bin_mean_and_variance(columns);
  return {std::move(stats.mean), std::move(stats.variance), columns.cols(),
          estimates.front().source_signal_id};
}

SignalDependentResponse signal_dependent_response(
    const std::vector<ComplexVector>& per_signal_h_sti) {
  if (per_signal_h_sti.size() < 2) {
    throw Error(ErrorCode::InsufficientSignals,
                "signal-dependent response needs at least two excitations (P >= 2)");
  }
  const Eigen::Index bins = per_signal_h_sti.front().size();
  Eigen::MatrixXcd columns(bins, static_cast<Eigen::Index>(per_signal_h_sti.size()));
  for (std::size_t p = 0; p < per_signal_h_sti.size(); ++p) {
    if (per_signal_h_sti[p].size() != bins) {
      throw Error(ErrorCode::InvalidArgument, "responses differ in length");
    }
    columns.col(static_cast<Eigen::Index>(p)) = per_signal_h_sti[p];
  }
  BinStatistics stats = bin_mean_and_variance(columns);
  return {std::move(stats.mean), std::move(stats.variance), columns.cols()};
}

SignalDependentResponse signal_dependent_response(
    const std::vector<TimeInvariantResponse>& per_signal) {
  std::vector<ComplexVector> h;
  h.reserve(per_signal.size());
  for (const auto& r : per_signal) h.push_back(r.h_sti);
  return signal_dependent_response(h);
}

SeparationResult separate_responses(const std::vector<Spectrum>& excitations,
                                    const std::vector<SampleStream>& recordings,
                                    const SegmentPlan& plan) {
  if (excitations.empty() || excitations.size() != recordings.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "need one recording per excitation and at least one pair");
  }
  SeparationResult result;
  for (std::size_t p = 0; p < excitations.size(); ++p) {
    const auto estimates =
        estimate_all(excitations[p], recordings[p], plan, static_cast<int>(p));
    result.per_signal.push_back(time_invariant_response(estimates));
  }
  result.m_count = plan.count();
  result.p_count = static_cast<Eigen::Index>(excitations.size());
  if (result.p_count >= 2) result.across_signals = signal_dependent_response(result.per_signal);
  return result;
}

RealVector fractional_octave_smooth(const Eigen::Ref<const RealVector>& power,
                                    double fraction, int sample_rate) {
  if (!(fraction > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "smoothing fraction must be positive");
  }
  if (sample_rate <= 0) {
    throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  }
  if ((power.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "smoothing expects nonnegative power");
  }
  const Eigen::Index n = power.size();
  RealVector out = power;
  if (n < 2) return out;
  const Eigen::Index half = n / 2;

  // Window edges are ratios of bin frequencies k fs / L, so fs cancels.
  std::vector<double> prefix(static_cast<std::size_t>(half) + 1, 0.0);
  for (Eigen::Index k = 1; k <= half; ++k) prefix[k] = prefix[k - 1] + power[k];

  const double lower_ratio = std::pow(2.0, -fraction / 2.0);
  const double upper_ratio = std::pow(2.0, fraction / 2.0);
  constexpr double kEdge = 1e-9;
  for (Eigen::Index k = 1; k <= half; ++k) {
    auto lo = static_cast<Eigen::Index>(std::ceil(k * lower_ratio - kEdge));
    auto hi = static_cast<Eigen::Index>(std::floor(k * upper_ratio + kEdge));
    lo = std::clamp<Eigen::Index>(lo, 1, k);
    hi = std::clamp<Eigen::Index>(hi, k, half);
    out[k] = (prefix[hi] - prefix[lo - 1]) / static_cast<double>(hi - lo + 1);
  }
  for (Eigen::Index k = half + 1; k < n; ++k) out[k] = out[n - k];
  return out;
}

RealVector impulse_response(const TransferEstimate& estimate) {
  const ComplexVector& h = estimate.h_bins;
  const Eigen::Index n = h.size();
  if (!h.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "transfer estimate is not finite");
  }
  ComplexVector symmetric(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    symmetric[k] = 0.5 * (h[k] + std::conj(h[(n - k) % n]));
  }
  return ifft(symmetric).real();
}

RealVector background_level(const Spectrum& excitation, const SampleStream& noise,
                            const SegmentPlan& plan) {
  const auto estimates = estimate_all(excitation, noise, plan);
  RealVector level = RealVector::Zero(excitation.length());
  for (const auto& e : estimates) level += e.h_bins.cwiseAbs2();
  return level / static_cast<double>(estimates.size());
}

}  // namespace sgm
