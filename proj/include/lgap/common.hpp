#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace lgap {

using Complex = std::complex<double>;

// Local estimators divide by the trial amplitude; samples below this
// magnitude are discarded and counted instead of propagating 1/0.
inline constexpr double kAmplitudeFloor = 1e-150;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OracleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ln cosh z without overflow for large |Re z|:
//   Re z >= 0:  z - ln 2 + ln(1 + e^{-2z})
//   Re z <  0: -z - ln 2 + ln(1 + e^{+2z})
// The branch only shifts the result by multiples of 2*pi*i, which drops out
// of amplitude ratios and of d/dz ln cosh = tanh.
inline Complex log_cosh(Complex z) {
  constexpr double ln2 = 0.6931471805599453094;
  if (z.real() >= 0.0) {
    return z - ln2 + std::log(1.0 + std::exp(-2.0 * z));
  }
  return -z - ln2 + std::log(1.0 + std::exp(2.0 * z));
}

}  // namespace lgap
