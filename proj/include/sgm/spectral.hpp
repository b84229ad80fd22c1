#pragma once

#include "sgm/types.hpp"

#include <cmath>
#include <limits>

namespace sgm {

// DFT convention: X[k] = sum_n x[n] exp(-i 2 pi k n / L), inverse scaled by 1/L.

/// Forward DFT of one period. The result is exactly conjugate-symmetric: the
/// upper half is mirrored from the lower half.
Spectrum forward_dft(const PeriodicSignal& signal);

/// 1/L-scaled inverse DFT. Hermitian spectra drop their imaginary residue;
/// others throw NonHermitianInput when the residue exceeds 1e-6 of the RMS.
PeriodicSignal inverse_dft(const Spectrum& spectrum);

// Raw transforms over arbitrary-length vectors (mixed-radix FFT).
ComplexVector fft(const Eigen::Ref<const RealVector>& x);
ComplexVector fft(const Eigen::Ref<const ComplexVector>& x);
ComplexVector ifft(const Eigen::Ref<const ComplexVector>& bins);

/// Direct-summation circular convolution, y[n] = sum_m h[m] x[(n-m) mod L].
PeriodicSignal circular_convolve(const PeriodicSignal& x,
                                 const Eigen::Ref<const RealVector>& h);

/// Circular convolution over the whole of `x` via spectral multiplication.
RealVector circular_convolve_fast(const Eigen::Ref<const RealVector>& x,
                                  const Eigen::Ref<const RealVector>& h);

/// 10 log10(mean square); -inf for an all-zero input.
template <typename Derived>
double power_db(const Eigen::DenseBase<Derived>& samples) {
  if (samples.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "power_db of an empty sequence");
  }
  const double mean_square = samples.derived().array().abs2().mean();
  if (mean_square == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(mean_square);
}

inline double to_db_power(double power) {
  return power > 0.0 ? 10.0 * std::log10(power)
                     : -std::numeric_limits<double>::infinity();
}

}  // namespace sgm
