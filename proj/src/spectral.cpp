#include "sgm/spectral.hpp"

#include <unsupported/Eigen/FFT>

namespace sgm {
namespace {

// Plans are cached per thread so concurrent callers never share state.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> instance;
  return instance;
}

// Mirror bins 1..floor((L-1)/2) onto their conjugate partners and clear the
// imaginary part of the self-conjugate bins.
void enforce_hermitian(ComplexVector& bins) {
  const Eigen::Index n = bins.size();
  bins[0] = Complex(bins[0].real(), 0.0);
  for (Eigen::Index k = 1; k < (n + 1) / 2; ++k) {
    bins[n - k] = std::conj(bins[k]);
  }
  if (n % 2 == 0) bins[n / 2] = Complex(bins[n / 2].real(), 0.0);
}

}  // namespace

ComplexVector fft(const Eigen::Ref<const RealVector>& x) {
  ComplexVector out(x.size());
  if (x.size() == 0) return out;
  RealVector contiguous = x;
  engine().fwd(out.data(), contiguous.data(), contiguous.size());
  return out;
}

ComplexVector fft(const Eigen::Ref<const ComplexVector>& x) {
  ComplexVector out(x.size());
  if (x.size() == 0) return out;
  ComplexVector contiguous = x;
  engine().fwd(out.data(), contiguous.data(), contiguous.size());
  return out;
}

ComplexVector ifft(const Eigen::Ref<const ComplexVector>& bins) {
  ComplexVector out(bins.size());
  if (bins.size() == 0) return out;
  ComplexVector contiguous = bins;
  engine().inv(out.data(), contiguous.data(), contiguous.size());
  return out;
}

Spectrum forward_dft(const PeriodicSignal& signal) {
  ComplexVector bins = fft(signal.samples());
  enforce_hermitian(bins);
  return Spectrum(std::move(bins), signal.sample_rate(), true);
}

PeriodicSignal inverse_dft(const Spectrum& spectrum) {
  const ComplexVector time = ifft(spectrum.bins());
  RealVector real = time.real();
  if (!spectrum.hermitian()) {
    const double rms = std::sqrt(real.array().abs2().mean());
    const double residue = time.imag().cwiseAbs().maxCoeff();
    if (residue > 1e-6 * std::max(rms, 1e-300)) {
      throw Error(ErrorCode::NonHermitianInput,
                  "inverse DFT has a significant imaginary part");
    }
  }
  return PeriodicSignal(std::move(real), spectrum.sample_rate());
}

PeriodicSignal circular_convolve(const PeriodicSignal& x,
                                 const Eigen::Ref<const RealVector>& h) {
  const Eigen::Index n = x.length();
  if (h.size() > n) {
    throw Error(ErrorCode::ImpulseResponseTooLong,
                "impulse response longer than the period");
  }
  const RealVector& in = x.samples();
  RealVector y = RealVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index m = 0; m < h.size(); ++m) {
      Eigen::Index j = i - m;
      if (j < 0) j += n;
      acc += h[m] * in[j];
    }
    y[i] = acc;
  }
  return PeriodicSignal(std::move(y), x.sample_rate());
}

RealVector circular_convolve_fast(const Eigen::Ref<const RealVector>& x,
                                  const Eigen::Ref<const RealVector>& h) {
  const Eigen::Index n = x.size();
  if (h.size() > n) {
    throw Error(ErrorCode::ImpulseResponseTooLong,
                "impulse response longer than the signal");
  }
  RealVector padded = RealVector::Zero(n);
  padded.head(h.size()) = h;
  const ComplexVector product = (fft(x).array() * fft(padded).array()).matrix();
  return ifft(product).real();
}

}  // namespace sgm
