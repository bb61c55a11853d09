#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "lgap/model.hpp"
#include "lgap/rbm.hpp"
#include "lgap/rng.hpp"

namespace lgap {

struct ChainConfig {
  long samples = 0;       // chain length N_s per chain
  double burn_in = 0.05;  // dropped fraction, ceil(burn_in * samples)
  int chains = 1;
  std::uint64_t seed = 0;
  bool exact_summation = false;  // full 4^N enumeration instead of MCMC
  OkVariant ok_variant = OkVariant::ChainRule;
};

// Sample moments of the local estimators, indexed by real parameters.
// The second-moment matrix is accumulated as conjugate-symmetric pairs and
// is Hermitian exactly; ldag_ok is the elementwise conjugate of okdag_l.
struct EstimatorBundle {
  long n_samples = 0;
  long n_discarded = 0;
  double acceptance = 1.0;
  double discard_rate = 0.0;
  Complex mean_liouville{0.0, 0.0};  // <L>
  Eigen::VectorXcd mean_ok;          // <O_k>
  Eigen::MatrixXcd okdag_ok;         // <O_k^+ O_k'>
  Eigen::VectorXcd okdag_l;          // <O_k^+ L>
  Eigen::VectorXcd ldag_ok;          // <L^+ O_k>
  std::vector<std::string> warnings;
};

// One proposal: flips 1..min(4, 2N) distinct sites chosen uniformly,
// accepted with min(1, |rho'(x')/rho'(x)|^2). On acceptance x, the lookup
// table and cur_amp are updated in place. Returns whether it accepted.
bool metropolis_step(const TrialState& trial, LookupTable& table,
                     BiBaseConfig& x, Complex& cur_amp, Rng& rng);

// sum over <x|L|x'> of amplitude * rho'(x')/rho'(x); *discarded is set when
// |rho'(x)| sits below the underflow floor and the value is unusable.
Complex local_liouvillian(const TrialState& trial, const LookupTable& table,
                          const VectorizedLiouvillian& liouv,
                          const BiBaseConfig& x, bool* discarded);

// Markov-chain (or exact-summation) estimation of all five families.
// Chains run with independent seed streams and merge by chain index.
EstimatorBundle run_estimation(const TrialState& trial,
                               const VectorizedLiouvillian& liouv,
                               const ChainConfig& cfg);

struct TraceEstimate {
  Complex value{0.0, 0.0};
  double std_error = 0.0;
  bool exact = false;
};

// Tr(rho_rbm) = 2^N * E(rho_{l,l}) over uniform diagonal configurations.
TraceEstimate estimate_trace(const RbmParameters& rbm, long n_t, Rng& rng);

// Exhaustive diagonal sum, exact.
TraceEstimate exact_trace(const RbmParameters& rbm);

// Test hook: exact-summation moments for arbitrary amplitude/derivative
// functions on the 4^N basis. k_complex is the reduced (complex) parameter
// count; derivatives fill that many entries.
using AmplitudeFn = std::function<Complex(const BiBaseConfig&)>;
using ReducedDerivFn =
    std::function<void(const BiBaseConfig&, Eigen::VectorXcd&)>;
EstimatorBundle exact_estimate(const VectorizedLiouvillian& liouv,
                               int n_half, int k_complex,
                               const AmplitudeFn& amplitude,
                               const ReducedDerivFn& reduced_derivs);

}  // namespace lgap
