#include "sgm/types.hpp"

#include <cmath>

namespace sgm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonHermitianInput: return "NonHermitianInput";
    case ErrorCode::ImpulseResponseTooLong: return "ImpulseResponseTooLong";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::StreamTooShort: return "StreamTooShort";
    case ErrorCode::SegmentOutOfRange: return "SegmentOutOfRange";
    case ErrorCode::ZeroBinExcitation: return "ZeroBinExcitation";
    case ErrorCode::InsufficientRepetitions: return "InsufficientRepetitions";
    case ErrorCode::InsufficientSignals: return "InsufficientSignals";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::SampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ManifestInvalid: return "ManifestInvalid";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

PeriodicSignal::PeriodicSignal(RealVector samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "period length must be at least 2");
  }
  if (sample_rate_ <= 0) {
    throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  }
  if (!samples_.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "period contains non-finite samples");
  }
}

Spectrum::Spectrum(ComplexVector bins, int sample_rate, bool hermitian)
    : bins_(std::move(bins)), sample_rate_(sample_rate), hermitian_(hermitian) {
  if (bins_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "spectrum length must be at least 2");
  }
  if (sample_rate_ <= 0) {
    throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  }
}

bool Spectrum::satisfies_hermitian(double rel_tol) const {
  const Eigen::Index n = bins_.size();
  const double scale = std::max(bins_.cwiseAbs().maxCoeff(), 1e-300);
  const double tol = rel_tol * scale;
  if (std::abs(bins_[0].imag()) > tol) return false;
  if (n % 2 == 0 && std::abs(bins_[n / 2].imag()) > tol) return false;
  for (Eigen::Index k = 1; k < n; ++k) {
    if (std::abs(bins_[k] - std::conj(bins_[n - k])) > tol) return false;
  }
  return true;
}

void validate(const SampleStream& stream) {
  if (stream.sample_rate <= 0) {
    throw Error(ErrorCode::InvalidArgument, "stream sample rate must be positive");
  }
  if (!stream.samples.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "stream contains non-finite samples");
  }
}

}  // namespace sgm
