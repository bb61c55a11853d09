#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lgap/sampler.hpp"

namespace lgap {

// One stochastic-reconfiguration linear system over real parameter
// indices: (S + lambda I) y = F + beta F', update = epsilon y.
struct SrSystem {
  Eigen::MatrixXd s;
  Eigen::VectorXd f;        // real-time force
  Eigen::VectorXd f_imag;   // force of the i*L evolution
  double lambda = 0.0;
  double epsilon = 0.0;
  double beta = 0.0;
};

struct ScheduleValues {
  double epsilon;
  double lambda;
};

// epsilon = max(0.01, 0.1 * 0.96^p), lambda = max(1e-4, 0.9^p).
ScheduleValues schedules(int p);

// Builds S, F, F' from the bundle. The complex assembly is algebraically
// real; imaginary residue above 1e-10 is truncated with a warning, above
// 1e-6 it is an estimator-inconsistency error.
SrSystem assemble(const EstimatorBundle& bundle,
                  std::vector<std::string>* warnings = nullptr);

// Cholesky solve of the regularized system with doubled-lambda retries and
// a least-squares fallback.
Eigen::VectorXd solve_update(const SrSystem& sys);

struct IterationRecord {
  int step = 0;
  double re_liouville = 0.0;
  double im_liouville = 0.0;
  double acceptance = 0.0;
  double discard_rate = 0.0;
  double step_norm = 0.0;
  Complex alpha{0.0, 0.0};
  Complex trace_estimate{0.0, 0.0};
};

struct RunTrace {
  std::vector<IterationRecord> records;
  std::vector<std::string> warnings;
};

struct OptimizerConfig {
  int max_iters = 500;
  double beta = 0.0;
  // With beta > 0: run a real-time phase first and switch beta on after it
  // converges (or after half the budget); false evolves jointly from the
  // start.
  bool two_phase = true;
  int window = 20;
  double tolerance = 1e-3;
  long trace_samples = 1024;     // N_t for the sampled trace
  bool exhaustive_trace = true;  // full 2^N diagonal sum
  OkVariant ok_variant = OkVariant::ChainRule;
};

struct RunResult {
  TrialState trial;
  RunTrace trace;
  bool converged = false;
};

// Carries the partial trace out of a failed run.
struct RunError : std::runtime_error {
  RunTrace partial;
  RunError(const std::string& what, RunTrace trace)
      : std::runtime_error(what), partial(std::move(trace)) {}
};

using IterationCallback = std::function<void(const IterationRecord&)>;

// sample -> assemble -> solve -> update -> refresh alpha, iterated until
// the moving window of Re<L> settles or the budget runs out.
RunResult run(TrialState trial, const VectorizedLiouvillian& liouv,
              const ChainConfig& chain_cfg, const OptimizerConfig& opt_cfg,
              const IterationCallback& on_iteration = nullptr);

struct GapEstimate {
  double gap = 0.0;
  double std_error = 0.0;
  // Set when the estimate is consistent with zero: the trial likely kept a
  // steady-state component.
  bool flagged_near_zero = false;
};

// -Re<L> averaged over the final window only; transients may overshoot
// -Delta, so no running minimum is ever taken.
GapEstimate gap_estimate(const RunTrace& trace, int window);

}  // namespace lgap
