#include "lgap/sampler.hpp"

#include <cmath>

namespace lgap {

namespace {

constexpr int kFlushBlock = 512;

// Moments over the reduced complex parameter index; the real-indexed
// bundle is expanded at the end. Merging is plain summation, done in
// chain-index order so results do not depend on scheduling.
struct ReducedMoments {
  long n = 0;
  long discarded = 0;
  double weight = 0.0;
  Complex sum_l{0.0, 0.0};
  Eigen::VectorXcd sum_d;
  Eigen::VectorXcd sum_dconj_l;
  Eigen::MatrixXcd sum_h;  // lower triangle of sum w * o o^+
  Eigen::MatrixXcd buf;
  int buffered = 0;

  explicit ReducedMoments(int k)
      : sum_d(Eigen::VectorXcd::Zero(k)),
        sum_dconj_l(Eigen::VectorXcd::Zero(k)),
        sum_h(Eigen::MatrixXcd::Zero(k, k)),
        buf(k, kFlushBlock) {}

  void flush() {
    if (buffered == 0) return;
    sum_h.selfadjointView<Eigen::Lower>().rankUpdate(buf.leftCols(buffered),
                                                     1.0);
    buffered = 0;
  }

  void add(const Eigen::VectorXcd& d, Complex l_loc, double w) {
    const double sw = std::sqrt(w);
    buf.col(buffered) = sw * d;
    if (++buffered == kFlushBlock) flush();
    sum_d += w * d;
    sum_dconj_l += (w * l_loc) * d.conjugate();
    sum_l += w * l_loc;
    weight += w;
    ++n;
  }

  void merge(const ReducedMoments& other) {
    n += other.n;
    discarded += other.discarded;
    weight += other.weight;
    sum_l += other.sum_l;
    sum_d += other.sum_d;
    sum_dconj_l += other.sum_dconj_l;
    sum_h += other.sum_h;
  }
};

EstimatorBundle finalize(const ReducedMoments& mom, int k_complex) {
  if (mom.weight <= 0.0) {
    throw SamplerError("estimator collected no usable samples");
  }
  const double inv_w = 1.0 / mom.weight;
  const Eigen::VectorXcd mean_d = mom.sum_d * inv_w;
  const Eigen::VectorXcd odagl_red = mom.sum_dconj_l * inv_w;
  Eigen::MatrixXcd h = mom.sum_h.selfadjointView<Eigen::Lower>();
  // sum w * o o^+ has entries o_k conj(o_k'); the wanted moment
  // <conj(O_k) O_k'> is its elementwise conjugate.
  const Eigen::MatrixXcd g = h.conjugate() * inv_w;

  EstimatorBundle out;
  out.n_samples = mom.n;
  out.n_discarded = mom.discarded;
  out.discard_rate =
      mom.n + mom.discarded > 0
          ? static_cast<double>(mom.discarded) / (mom.n + mom.discarded)
          : 0.0;
  out.mean_liouville = mom.sum_l * inv_w;

  const Complex iu(0.0, 1.0);
  const int k2 = 2 * k_complex;
  out.mean_ok.resize(k2);
  out.okdag_l.resize(k2);
  out.ldag_ok.resize(k2);
  out.okdag_ok.resize(k2, k2);
  for (int p = 0; p < k_complex; ++p) {
    out.mean_ok(2 * p) = mean_d(p);
    out.mean_ok(2 * p + 1) = iu * mean_d(p);
    out.okdag_l(2 * p) = odagl_red(p);
    out.okdag_l(2 * p + 1) = -iu * odagl_red(p);
  }
  out.ldag_ok = out.okdag_l.conjugate();
  for (int q = 0; q < k_complex; ++q) {
    for (int p = 0; p < k_complex; ++p) {
      const Complex gpq = g(p, q);
      out.okdag_ok(2 * p, 2 * q) = gpq;
      out.okdag_ok(2 * p, 2 * q + 1) = iu * gpq;
      out.okdag_ok(2 * p + 1, 2 * q) = -iu * gpq;
      out.okdag_ok(2 * p + 1, 2 * q + 1) = gpq;
    }
  }
  return out;
}

int propose_flips(const BiBaseConfig& x, Rng& rng, int* flips) {
  const int sites = x.size();
  const int max_flips = sites < 4 ? sites : 4;
  const int count = 1 + static_cast<int>(uniform_below(rng, max_flips));
  for (int i = 0; i < count; ++i) {
    int s;
    bool dup;
    do {
      s = static_cast<int>(uniform_below(rng, sites));
      dup = false;
      for (int q = 0; q < i; ++q) {
        if (flips[q] == s) {
          dup = true;
          break;
        }
      }
    } while (dup);
    flips[i] = s;
  }
  return count;
}

}  // namespace

bool metropolis_step(const TrialState& trial, LookupTable& table,
                     BiBaseConfig& x, Complex& cur_amp, Rng& rng) {
  int flips[4];
  const int count = propose_flips(x, rng, flips);
  const std::span<const int> span(flips, static_cast<std::size_t>(count));

  const Complex rbm_new = std::exp(table.log_amp() + table.log_ratio(trial.rbm, x, span));
  Complex prop_amp;
  if (trial.alpha == Complex(0.0, 0.0)) {
    prop_amp = rbm_new;
  } else {
    BiBaseConfig scratch = x;
    for (int i = 0; i < count; ++i) scratch.spins[flips[i]] *= -1;
    prop_amp = trial.alpha * trial.ancillary.amplitude(scratch) + rbm_new;
  }

  const double num = std::norm(prop_amp);
  const double den = std::norm(cur_amp);
  const bool accept = den <= 0.0 ? num > 0.0 : uniform01(rng) * den < num;
  if (accept) {
    table.apply_flips(trial.rbm, x, span);
    cur_amp = trial.alpha * trial.ancillary.amplitude(x) +
              std::exp(table.log_amp());
  }
  return accept;
}

Complex local_liouvillian(const TrialState& trial, const LookupTable& table,
                          const VectorizedLiouvillian& liouv,
                          const BiBaseConfig& x, bool* discarded) {
  const Complex rbm_amp = std::exp(table.log_amp());
  const Complex denom =
      trial.alpha * trial.ancillary.amplitude(x) + rbm_amp;
  if (std::abs(denom) < kAmplitudeFloor) {
    if (discarded) *discarded = true;
    return Complex(0.0, 0.0);
  }
  if (discarded) *discarded = false;

  const bool pure_rbm = trial.alpha == Complex(0.0, 0.0);
  BiBaseConfig scratch = x;
  Complex acc(0.0, 0.0);
  for_each_connection(
      liouv, x, /*bra_side=*/true,
      [&](const int* flips, int n_flips, Complex amp) {
        if (n_flips == 0) {
          acc += amp;
          return;
        }
        const std::span<const int> span(flips,
                                        static_cast<std::size_t>(n_flips));
        const Complex rbm_conn = rbm_amp * std::exp(table.log_ratio(trial.rbm, x, span));
        Complex numer = rbm_conn;
        if (!pure_rbm) {
          for (int f = 0; f < n_flips; ++f) scratch.spins[flips[f]] *= -1;
          numer += trial.alpha * trial.ancillary.amplitude(scratch);
          for (int f = 0; f < n_flips; ++f) scratch.spins[flips[f]] *= -1;
        }
        acc += amp * (numer / denom);
      });
  return acc;
}

namespace {

void run_chain(const TrialState& trial, const VectorizedLiouvillian& liouv,
               const ChainConfig& cfg, int chain_index, ReducedMoments& mom,
               double& acceptance, std::vector<std::string>& warnings) {
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain_index));
  const int n_half = liouv.half_sites;

  BiBaseConfig x;
  Complex cur_amp;
  LookupTable table;
  bool started = false;
  for (int attempt = 0; attempt < 200 && !started; ++attempt) {
    x = BiBaseConfig::from_index(
        uniform_below(rng, std::size_t{1} << (2 * n_half)), n_half);
    table.rebuild(trial.rbm, x);
    cur_amp = trial.alpha * trial.ancillary.amplitude(x) +
              std::exp(table.log_amp());
    started = std::abs(cur_amp) >= kAmplitudeFloor;
  }
  if (!started) {
    throw SamplerError("could not find a starting configuration with "
                       "nonzero trial amplitude");
  }

  const long burn =
      static_cast<long>(std::ceil(cfg.burn_in * static_cast<double>(cfg.samples)));
  if (cfg.samples - burn <= 0) {
    throw SamplerError("chain has no samples left after burn-in");
  }

  Eigen::VectorXcd derivs(trial.rbm.complex_count());
  long accepted = 0;
  for (long step = 0; step < cfg.samples; ++step) {
    accepted += metropolis_step(trial, table, x, cur_amp, rng) ? 1 : 0;
    if (step < burn) continue;

    bool discard = false;
    const Complex l_loc = local_liouvillian(trial, table, liouv, x, &discard);
    if (discard) {
      ++mom.discarded;
      continue;
    }
    rbm_log_derivatives(trial.rbm, x, table.theta(), derivs);
    if (cfg.ok_variant == OkVariant::ChainRule) {
      derivs *= std::exp(table.log_amp()) / cur_amp;
    }
    mom.add(derivs, l_loc, 1.0);
  }
  mom.flush();
  acceptance = static_cast<double>(accepted) / static_cast<double>(cfg.samples);
  if (acceptance < 0.01) {
    warnings.push_back("chain " + std::to_string(chain_index) +
                       " stagnated: acceptance rate " +
                       std::to_string(acceptance));
  }
}

}  // namespace

EstimatorBundle run_estimation(const TrialState& trial,
                               const VectorizedLiouvillian& liouv,
                               const ChainConfig& cfg) {
  const int k_complex = trial.rbm.complex_count();

  if (cfg.exact_summation) {
    EstimatorBundle out = exact_estimate(
        liouv, liouv.half_sites, k_complex,
        [&](const BiBaseConfig& x) { return trial_amplitude(trial, x); },
        [&](const BiBaseConfig& x, Eigen::VectorXcd& d) {
          LookupTable table;
          table.rebuild(trial.rbm, x);
          rbm_log_derivatives(trial.rbm, x, table.theta(), d);
          if (cfg.ok_variant == OkVariant::ChainRule) {
            const Complex rbm_amp = std::exp(table.log_amp());
            const Complex total =
                trial.alpha * trial.ancillary.amplitude(x) + rbm_amp;
            d *= rbm_amp / total;
          }
        });
    return out;
  }

  if (cfg.chains < 1) {
    throw SamplerError("need at least one chain");
  }
  ReducedMoments total(k_complex);
  std::vector<std::string> warnings;
  double acceptance_sum = 0.0;
  for (int chain = 0; chain < cfg.chains; ++chain) {
    ReducedMoments part(k_complex);
    double acc = 0.0;
    run_chain(trial, liouv, cfg, chain, part, acc, warnings);
    acceptance_sum += acc;
    total.merge(part);
  }

  EstimatorBundle out = finalize(total, k_complex);
  out.acceptance = acceptance_sum / cfg.chains;
  out.warnings = std::move(warnings);
  const long advisory = 10l * 2 * k_complex;
  if (out.n_samples < advisory) {
    out.warnings.push_back(
        "retained sample count " + std::to_string(out.n_samples) +
        " is below 10x the parameter count (" + std::to_string(advisory) +
        ")");
  }
  return out;
}

EstimatorBundle exact_estimate(const VectorizedLiouvillian& liouv,
                               int n_half, int k_complex,
                               const AmplitudeFn& amplitude,
                               const ReducedDerivFn& reduced_derivs) {
  if (n_half > 8) {
    throw SamplerError("exact summation is limited to N <= 8");
  }
  const std::size_t dim = std::size_t{1} << (2 * n_half);
  std::vector<Complex> amps(dim);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    amps[idx] = amplitude(BiBaseConfig::from_index(idx, n_half));
  }

  ReducedMoments mom(k_complex);
  Eigen::VectorXcd derivs(k_complex);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const Complex v = amps[idx];
    const double av = std::abs(v);
    if (av == 0.0) continue;
    if (av < kAmplitudeFloor) {
      ++mom.discarded;
      continue;
    }
    const BiBaseConfig x = BiBaseConfig::from_index(idx, n_half);
    Complex l_loc(0.0, 0.0);
    for_each_connection(liouv, x, /*bra_side=*/true,
                        [&](const int* flips, int n_flips, Complex amp) {
                          std::size_t idx2 = idx;
                          for (int f = 0; f < n_flips; ++f) {
                            idx2 ^= std::size_t{1}
                                    << (2 * n_half - 1 - flips[f]);
                          }
                          l_loc += amp * (amps[idx2] / v);
                        });
    reduced_derivs(x, derivs);
    mom.add(derivs, l_loc, av * av);
  }
  mom.flush();
  EstimatorBundle out = finalize(mom, k_complex);
  out.acceptance = 1.0;
  return out;
}

TraceEstimate estimate_trace(const RbmParameters& rbm, long n_t, Rng& rng) {
  if (n_t < 1) {
    throw SamplerError("trace estimation needs at least one sample");
  }
  const double scale = std::pow(2.0, rbm.n);
  const std::size_t dim = std::size_t{1} << rbm.n;
  Complex sum(0.0, 0.0);
  double sum_re2 = 0.0, sum_im2 = 0.0;
  for (long t = 0; t < n_t; ++t) {
    const std::size_t l = uniform_below(rng, dim);
    const Complex amp = std::exp(
        log_amplitude(rbm, BiBaseConfig::diagonal_from_index(l, rbm.n)));
    sum += amp;
    sum_re2 += amp.real() * amp.real();
    sum_im2 += amp.imag() * amp.imag();
  }
  const double inv = 1.0 / static_cast<double>(n_t);
  const Complex mean = sum * inv;
  TraceEstimate est;
  est.value = scale * mean;
  if (n_t > 1) {
    const double var_re = (sum_re2 * inv - mean.real() * mean.real());
    const double var_im = (sum_im2 * inv - mean.imag() * mean.imag());
    const double var = std::max(0.0, var_re) + std::max(0.0, var_im);
    est.std_error = scale * std::sqrt(var / static_cast<double>(n_t - 1));
  }
  est.exact = false;
  return est;
}

TraceEstimate exact_trace(const RbmParameters& rbm) {
  const std::size_t dim = std::size_t{1} << rbm.n;
  Complex sum(0.0, 0.0);
  for (std::size_t l = 0; l < dim; ++l) {
    sum += std::exp(
        log_amplitude(rbm, BiBaseConfig::diagonal_from_index(l, rbm.n)));
  }
  return TraceEstimate{sum, 0.0, true};
}

}  // namespace lgap
