#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace sgm {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

enum class ErrorCode {
  InvalidArgument,
  NonHermitianInput,
  ImpulseResponseTooLong,
  DegenerateSpectrum,
  StreamTooShort,
  SegmentOutOfRange,
  ZeroBinExcitation,
  InsufficientRepetitions,
  InsufficientSignals,
  Overflow,
  DegenerateFit,
  UnsupportedFormat,
  SampleRateMismatch,
  CorruptFile,
  ManifestInvalid,
  ConfigInvalid,
  IoFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// One period of a real discrete-time signal. Repetition is an operation on
/// streams, never a property of this type.
class PeriodicSignal {
 public:
  PeriodicSignal(RealVector samples, int sample_rate);

  const RealVector& samples() const noexcept { return samples_; }
  int sample_rate() const noexcept { return sample_rate_; }
  Eigen::Index length() const noexcept { return samples_.size(); }

 private:
  RealVector samples_;
  int sample_rate_;
};

/// Length-L DFT bins. When `hermitian` is set the bins satisfy
/// X[k] == conj(X[L-k]) and the DC/Nyquist bins are real.
class Spectrum {
 public:
  Spectrum(ComplexVector bins, int sample_rate, bool hermitian);

  const ComplexVector& bins() const noexcept { return bins_; }
  int sample_rate() const noexcept { return sample_rate_; }
  bool hermitian() const noexcept { return hermitian_; }
  Eigen::Index length() const noexcept { return bins_.size(); }

  // Checks conjugate symmetry to `rel_tol` relative to the largest bin.
  bool satisfies_hermitian(double rel_tol = 1e-12) const;

 private:
  ComplexVector bins_;
  int sample_rate_;
  bool hermitian_;
};

struct SampleStream {
  RealVector samples;
  int sample_rate = 0;
  std::string label;

  Eigen::Index length() const noexcept { return samples.size(); }
};

void validate(const SampleStream& stream);

}  // namespace sgm
