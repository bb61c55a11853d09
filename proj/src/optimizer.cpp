#include "lgap/optimizer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <cmath>

namespace lgap {

ScheduleValues schedules(int p) {
  if (p < 0) {
    throw SolverError("iteration index must be >= 0");
  }
  const double eps = std::max(0.01, 0.1 * std::pow(0.96, p));
  const double lam = std::max(1e-4, std::pow(0.9, p));
  return {eps, lam};
}

SrSystem assemble(const EstimatorBundle& bundle,
                  std::vector<std::string>* warnings) {
  const Eigen::Index k = bundle.mean_ok.size();
  SrSystem sys;
  sys.s.resize(k, k);
  sys.f.resize(k);
  sys.f_imag.resize(k);

  const Complex iu(0.0, 1.0);
  double max_residue = 0.0;
  for (Eigen::Index p = 0; p < k; ++p) {
    const Complex mp = bundle.mean_ok(p);
    for (Eigen::Index q = 0; q < k; ++q) {
      const Complex mq = bundle.mean_ok(q);
      const Complex s_pq = bundle.okdag_ok(p, q) + bundle.okdag_ok(q, p) -
                           std::conj(mp) * mq - std::conj(mq) * mp;
      max_residue = std::max(max_residue, std::abs(s_pq.imag()));
      sys.s(p, q) = s_pq.real();
    }
    const Complex z = bundle.okdag_l(p);       // <O_p^+ L>
    const Complex zbar = bundle.ldag_ok(p);    // <L^+ O_p>
    const Complex w = std::conj(mp) * bundle.mean_liouville;
    const Complex wbar = std::conj(bundle.mean_liouville) * mp;
    const Complex f_p = zbar + z - wbar - w;
    const Complex fi_p = -iu * zbar + iu * z + iu * wbar - iu * w;
    max_residue = std::max(max_residue, std::abs(f_p.imag()));
    max_residue = std::max(max_residue, std::abs(fi_p.imag()));
    sys.f(p) = f_p.real();
    sys.f_imag(p) = fi_p.real();
  }
  if (max_residue > 1e-6) {
    throw SolverError("estimator inconsistency: imaginary residue " +
                      std::to_string(max_residue) + " in the SR assembly");
  }
  if (max_residue > 1e-10 && warnings) {
    warnings->push_back("SR assembly truncated imaginary residue " +
                        std::to_string(max_residue));
  }
  return sys;
}

Eigen::VectorXd solve_update(const SrSystem& sys) {
  const Eigen::VectorXd rhs = sys.f + sys.beta * sys.f_imag;
  double lambda = sys.lambda;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd reg = sys.s;
    reg.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(reg);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd y = llt.solve(rhs);
      if (y.allFinite()) {
        return sys.epsilon * y;
      }
    }
    lambda *= 2.0;
  }
  Eigen::MatrixXd reg = sys.s;
  reg.diagonal().array() += sys.lambda;
  Eigen::VectorXd y =
      reg.completeOrthogonalDecomposition().solve(rhs);
  if (!y.allFinite()) {
    throw SolverError("SR solve failed: regularized system is singular");
  }
  return sys.epsilon * y;
}

namespace {

TraceEstimate trace_for(const TrialState& trial, const ChainConfig& chain_cfg,
                        const OptimizerConfig& opt_cfg, Rng& trace_rng) {
  if (chain_cfg.exact_summation || opt_cfg.exhaustive_trace) {
    return exact_trace(trial.rbm);
  }
  return estimate_trace(trial.rbm, opt_cfg.trace_samples, trace_rng);
}

double window_mean(const std::vector<IterationRecord>& records,
                   std::size_t begin, std::size_t end) {
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    sum += records[i].re_liouville;
  }
  return sum / static_cast<double>(end - begin);
}

}  // namespace

RunResult run(TrialState trial, const VectorizedLiouvillian& liouv,
              const ChainConfig& chain_cfg, const OptimizerConfig& opt_cfg,
              const IterationCallback& on_iteration) {
  RunTrace trace;
  Rng trace_rng = make_rng(chain_cfg.seed, kTraceStream);

  try {
    TraceEstimate tr = trace_for(trial, chain_cfg, opt_cfg, trace_rng);
    refresh_alpha(trial, tr.value);

    const int window = std::max(1, opt_cfg.window);
    const bool joint_from_start = opt_cfg.beta > 0.0 && !opt_cfg.two_phase;
    bool beta_active = joint_from_start;
    int phase_start = 0;
    bool converged = false;

    for (int p = 0; p < opt_cfg.max_iters; ++p) {
      ChainConfig step_cfg = chain_cfg;
      step_cfg.seed = stream_seed(chain_cfg.seed, 1000000u + p);
      step_cfg.ok_variant = opt_cfg.ok_variant;
      EstimatorBundle bundle = run_estimation(trial, liouv, step_cfg);
      for (const std::string& w : bundle.warnings) {
        // One line per distinct message; per-iteration repeats add noise.
        bool seen = false;
        for (const std::string& prev : trace.warnings) {
          if (prev.size() >= w.size() &&
              prev.compare(prev.size() - w.size(), w.size(), w) == 0) {
            seen = true;
            break;
          }
        }
        if (!seen) {
          trace.warnings.push_back("iter " + std::to_string(p) + ": " + w);
        }
      }

      SrSystem sys = assemble(bundle, &trace.warnings);
      const ScheduleValues sched = schedules(p);
      sys.epsilon = sched.epsilon;
      sys.lambda = sched.lambda;
      sys.beta = beta_active ? opt_cfg.beta : 0.0;

      Eigen::VectorXd delta = solve_update(sys);
      // Trust cap: a heavy-tailed estimate can hand the solver a step far
      // off the recent scale and throw a settled run; clip to 5x the
      // trailing median step norm.
      if (trace.records.size() >= 20) {
        std::vector<double> norms;
        norms.reserve(20);
        for (std::size_t i = trace.records.size() - 20;
             i < trace.records.size(); ++i) {
          norms.push_back(trace.records[i].step_norm);
        }
        std::nth_element(norms.begin(), norms.begin() + 10, norms.end());
        const double cap = 3.0 * norms[10];
        if (cap > 0.0 && delta.norm() > cap) {
          delta *= cap / delta.norm();
          trace.warnings.push_back("iter " + std::to_string(p) +
                                   ": step clipped to the trust cap");
        }
      }
      trial.rbm.add_flat(delta);

      tr = trace_for(trial, chain_cfg, opt_cfg, trace_rng);
      refresh_alpha(trial, tr.value);

      IterationRecord rec;
      rec.step = p;
      rec.re_liouville = bundle.mean_liouville.real();
      rec.im_liouville = bundle.mean_liouville.imag();
      rec.acceptance = bundle.acceptance;
      rec.discard_rate = bundle.discard_rate;
      rec.step_norm = delta.norm();
      rec.alpha = trial.alpha;
      rec.trace_estimate = tr.value;
      trace.records.push_back(rec);
      if (on_iteration) on_iteration(rec);

      // Moving-average plateau test over two adjacent windows.
      const std::size_t done = trace.records.size();
      const std::size_t in_phase = done - static_cast<std::size_t>(phase_start);
      if (in_phase >= 2 * static_cast<std::size_t>(window)) {
        const double ma1 = window_mean(trace.records, done - window, done);
        const double ma0 =
            window_mean(trace.records, done - 2 * window, done - window);
        if (std::abs(ma1 - ma0) < opt_cfg.tolerance) {
          if (opt_cfg.beta > 0.0 && opt_cfg.two_phase && !beta_active) {
            beta_active = true;
            phase_start = p + 1;
            trace.warnings.push_back(
                "iter " + std::to_string(p) +
                ": real-time phase settled, enabling beta evolution");
            continue;
          }
          converged = true;
          break;
        }
      }
      // Do not starve the beta phase of its budget.
      if (opt_cfg.beta > 0.0 && opt_cfg.two_phase && !beta_active &&
          p + 1 >= opt_cfg.max_iters / 2) {
        beta_active = true;
        phase_start = p + 1;
        trace.warnings.push_back(
            "iter " + std::to_string(p) +
            ": half budget used, enabling beta evolution");
      }
    }

    return RunResult{std::move(trial), std::move(trace), converged};
  } catch (const RunError&) {
    throw;
  } catch (const std::exception& e) {
    throw RunError(e.what(), std::move(trace));
  }
}

GapEstimate gap_estimate(const RunTrace& trace, int window) {
  if (trace.records.empty()) {
    throw SolverError("gap estimate needs a non-empty trace");
  }
  const std::size_t n = trace.records.size();
  const std::size_t w =
      std::min<std::size_t>(std::max(window, 1), n);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = n - w; i < n; ++i) {
    const double v = -trace.records[i].re_liouville;
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / static_cast<double>(w);
  GapEstimate est;
  est.gap = mean;
  if (w > 1) {
    const double var =
        std::max(0.0, sum2 / static_cast<double>(w) - mean * mean);
    est.std_error = std::sqrt(var / static_cast<double>(w - 1));
  }
  est.flagged_near_zero = est.gap < 1e-12 || est.gap < 2.0 * est.std_error;
  return est;
}

}  // namespace lgap
