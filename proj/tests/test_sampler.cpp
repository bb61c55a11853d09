#include <doctest.h>

#include <bit>
#include <cmath>

#include "lgap/sampler.hpp"
#include "oracles.hpp"

using namespace lgap;

namespace {

TrialState random_trial(int n, int m, double scale, std::uint64_t seed,
                        AncillaryState anc = AncillaryState::identity(),
                        Complex alpha = Complex(0.0, 0.0)) {
  Rng rng = make_rng(seed, kInitStream);
  TrialState trial;
  trial.rbm = init_parameters(n, m, scale, rng);
  trial.ancillary = std::move(anc);
  trial.alpha = alpha;
  return trial;
}

LindbladModel xxz_chain(int n, double jz, double gamma) {
  return build_xyz_model(build_chain(n, true), 1.0, 1.0, jz, gamma);
}

Eigen::VectorXcd dense_trial(const TrialState& trial, int n) {
  const std::size_t dim = std::size_t{1} << (2 * n);
  Eigen::VectorXcd v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    v(i) = trial_amplitude(trial, BiBaseConfig::from_index(i, n));
  }
  return v;
}

}  // namespace

TEST_CASE("metropolis acceptance edge cases") {
  const int n = 2;

  SUBCASE("unit ratio always accepts") {
    // Zero weights: every amplitude is 1, every proposal has |ratio| = 1.
    TrialState trial = random_trial(n, 4, 0.1, 1);
    trial.rbm.a.setZero();
    trial.rbm.b.setZero();
    trial.rbm.c.setZero();
    trial.rbm.wr.setZero();
    trial.rbm.wl.setZero();
    Rng rng = make_rng(2, 0);
    BiBaseConfig x = BiBaseConfig::all_down(n);
    LookupTable table;
    table.rebuild(trial.rbm, x);
    Complex amp = trial_amplitude(trial, x);
    for (int step = 0; step < 200; ++step) {
      CHECK(metropolis_step(trial, table, x, amp, rng));
    }
  }

  SUBCASE("zero-amplitude targets are never accepted") {
    // alpha = -1 with the identity ancillary zeroes the whole diagonal.
    TrialState trial = random_trial(n, 4, 0.1, 3);
    trial.rbm.a.setZero();
    trial.rbm.b.setZero();
    trial.rbm.c.setZero();
    trial.rbm.wr.setZero();
    trial.rbm.wl.setZero();
    trial.alpha = Complex(-1.0, 0.0);
    Rng rng = make_rng(4, 0);
    BiBaseConfig x = BiBaseConfig::from_index(1, n);  // off-diagonal
    REQUIRE(!x.is_diagonal());
    LookupTable table;
    table.rebuild(trial.rbm, x);
    Complex amp = trial_amplitude(trial, x);
    for (int step = 0; step < 2000; ++step) {
      metropolis_step(trial, table, x, amp, rng);
      CHECK(!x.is_diagonal());
    }
  }
}

TEST_CASE("chain histogram matches the target distribution") {
  const int n = 2;
  const TrialState trial = random_trial(n, 4, 0.5, 7);

  const std::size_t dim = 16;
  Eigen::VectorXd target(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    target(i) =
        std::norm(trial_amplitude(trial, BiBaseConfig::from_index(i, n)));
  }
  target /= target.sum();

  Rng rng = make_rng(99, 0);
  BiBaseConfig x = BiBaseConfig::all_down(n);
  LookupTable table;
  table.rebuild(trial.rbm, x);
  Complex amp = trial_amplitude(trial, x);

  // Thin the chain so the multinomial 3-sigma bound applies to
  // effectively independent draws.
  const int n_draws = 20000;
  const int thin = 20;
  std::vector<long> counts(dim, 0);
  for (int burn = 0; burn < 1000; ++burn) {
    metropolis_step(trial, table, x, amp, rng);
  }
  for (int draw = 0; draw < n_draws; ++draw) {
    for (int s = 0; s < thin; ++s) {
      metropolis_step(trial, table, x, amp, rng);
    }
    ++counts[x.basis_index()];
  }
  int violations = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double expected = n_draws * target(i);
    const double sigma = std::sqrt(n_draws * target(i) * (1.0 - target(i)));
    if (std::abs(counts[i] - expected) > 3.0 * sigma) ++violations;
  }
  CHECK(violations <= 1);
}

TEST_CASE("transition matrix satisfies detailed balance and stationarity") {
  for (int n : {1, 2}) {
    CAPTURE(n);
    const TrialState trial = random_trial(n, 3, 0.6, 11 + n);
    const int sites = 2 * n;
    const std::size_t dim = std::size_t{1} << sites;
    Eigen::VectorXd pi(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      pi(i) =
          std::norm(trial_amplitude(trial, BiBaseConfig::from_index(i, n)));
    }
    pi /= pi.sum();

    // Proposal law of the implementation: flip count uniform on
    // 1..min(4, 2N), then a uniform subset of distinct sites.
    const int max_flips = std::min(4, sites);
    auto choose = [](int a, int b) {
      double r = 1.0;
      for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
      return r;
    };
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t from = 0; from < dim; ++from) {
      for (std::size_t to = 0; to < dim; ++to) {
        if (to == from) continue;
        const int d = std::popcount(from ^ to);
        if (d > max_flips) continue;
        const double q = 1.0 / (max_flips * choose(sites, d));
        const double accept =
            pi(from) == 0.0 ? 1.0 : std::min(1.0, pi(to) / pi(from));
        p(from, to) = q * accept;
      }
      p(from, from) = 1.0 - p.row(from).sum();
    }

    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < dim; ++b) {
        CHECK(std::abs(pi(a) * p(a, b) - pi(b) * p(b, a)) < 1e-12);
      }
    }
    const Eigen::VectorXd stationary = p.transpose() * pi;
    CHECK((stationary - pi).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("local estimator") {
  SUBCASE("exact steady state gives zero") {
    const LindbladModel model = xxz_chain(2, 2.0, 3.0);
    const VectorizedLiouvillian liouv = vectorize(model);
    const std::size_t down = BiBaseConfig::all_down(2).basis_index();
    EstimatorBundle bundle = exact_estimate(
        liouv, 2, 1,
        [&](const BiBaseConfig& x) {
          return x.basis_index() == down ? Complex(1.0, 0.0)
                                         : Complex(0.0, 0.0);
        },
        [](const BiBaseConfig&, Eigen::VectorXcd& d) { d.setZero(); });
    CHECK(std::abs(bundle.mean_liouville) == 0.0);
  }

  SUBCASE("trivial generator gives zero for any trial") {
    const LindbladModel empty =
        build_xyz_model(build_chain(2, true), 0.0, 0.0, 0.0, 0.0);
    const VectorizedLiouvillian liouv = vectorize(empty);
    const TrialState trial = random_trial(2, 4, 0.4, 21);
    BiBaseConfig x = BiBaseConfig::from_index(5, 2);
    LookupTable table;
    table.rebuild(trial.rbm, x);
    bool discarded = false;
    CHECK(std::abs(local_liouvillian(trial, table, liouv, x, &discarded)) ==
          0.0);
    CHECK(!discarded);
  }
}

TEST_CASE("exact summation reproduces dense moments") {
  const int n = 2;
  const LindbladModel model =
      build_xyz_model(build_chain(n, true), 4.0, 0.5, 2.0, 1.0);
  const VectorizedLiouvillian liouv = vectorize(model);

  for (bool with_alpha : {false, true}) {
    CAPTURE(with_alpha);
    TrialState trial = random_trial(n, 4, 0.4, 31, AncillaryState::identity());
    if (with_alpha) {
      refresh_alpha(trial, exact_trace(trial.rbm).value);
    }

    ChainConfig cfg;
    cfg.exact_summation = true;
    cfg.ok_variant = OkVariant::ChainRule;
    const EstimatorBundle bundle = run_estimation(trial, liouv, cfg);

    const Eigen::MatrixXcd dense = oracles::kron_liouvillian(model);
    const Eigen::VectorXcd v = dense_trial(trial, n);
    const int k2 = trial.rbm.real_count();
    Eigen::MatrixXcd o_cols(v.size(), k2);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      o_cols.row(i) = log_derivatives(trial, BiBaseConfig::from_index(i, n),
                                      OkVariant::ChainRule)
                          .transpose();
    }
    const oracles::DenseMoments ref = oracles::dense_moments(dense, v, o_cols);

    CHECK(std::abs(bundle.mean_liouville - ref.mean_l) < 1e-12);
    CHECK((bundle.mean_ok - ref.mean_o).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((bundle.okdag_l - ref.odag_l).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((bundle.ldag_ok - ref.ldag_o).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((bundle.okdag_ok - ref.odag_o).cwiseAbs().maxCoeff() < 1e-12);

    // Hermitian exactly, by construction.
    CHECK((bundle.okdag_ok - bundle.okdag_ok.adjoint())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("markov sampling matches exact summation") {
  const int n = 2;
  const LindbladModel model = xxz_chain(n, 2.0, 3.0);
  const VectorizedLiouvillian liouv = vectorize(model);
  TrialState trial = random_trial(n, 4, 0.4, 37);
  refresh_alpha(trial, exact_trace(trial.rbm).value);

  ChainConfig exact_cfg;
  exact_cfg.exact_summation = true;
  const Complex exact_l =
      run_estimation(trial, liouv, exact_cfg).mean_liouville;

  const int repeats = 8;
  std::vector<Complex> estimates;
  for (int r = 0; r < repeats; ++r) {
    ChainConfig cfg;
    cfg.samples = 4000;
    cfg.chains = 2;
    cfg.seed = 1000 + r;
    const EstimatorBundle bundle = run_estimation(trial, liouv, cfg);
    CHECK(bundle.acceptance > 0.0);
    CHECK(bundle.acceptance <= 1.0);
    estimates.push_back(bundle.mean_liouville);
  }
  Complex mean(0.0, 0.0);
  for (Complex e : estimates) mean += e;
  mean /= double(repeats);
  double var_re = 0.0, var_im = 0.0;
  for (Complex e : estimates) {
    var_re += (e.real() - mean.real()) * (e.real() - mean.real());
    var_im += (e.imag() - mean.imag()) * (e.imag() - mean.imag());
  }
  const double se_re = std::sqrt(var_re / (repeats - 1) / repeats);
  const double se_im = std::sqrt(var_im / (repeats - 1) / repeats);
  CHECK(std::abs(mean.real() - exact_l.real()) < 4.0 * se_re);
  CHECK(std::abs(mean.imag() - exact_l.imag()) < 4.0 * se_im);
}

TEST_CASE("estimation bookkeeping") {
  const int n = 2;
  const LindbladModel model = xxz_chain(n, 2.0, 3.0);
  const VectorizedLiouvillian liouv = vectorize(model);
  TrialState trial = random_trial(n, 4, 0.4, 41);
  refresh_alpha(trial, exact_trace(trial.rbm).value);

  SUBCASE("burn-in drops exactly ceil(0.05 Ns) per chain") {
    ChainConfig cfg;
    cfg.samples = 1001;
    cfg.chains = 3;
    cfg.seed = 5;
    const EstimatorBundle bundle = run_estimation(trial, liouv, cfg);
    // ceil(0.05 * 1001) = 51 dropped; no underflow discards expected here.
    CHECK(bundle.n_samples + bundle.n_discarded == 3 * (1001 - 51));
  }

  SUBCASE("zero-length post-burn-in chain errors") {
    ChainConfig cfg;
    cfg.samples = 0;
    cfg.chains = 1;
    cfg.seed = 5;
    CHECK_THROWS_AS(run_estimation(trial, liouv, cfg), SamplerError);
  }

  SUBCASE("repeated runs merge bit-identically") {
    ChainConfig cfg;
    cfg.samples = 500;
    cfg.chains = 4;
    cfg.seed = 77;
    const EstimatorBundle b1 = run_estimation(trial, liouv, cfg);
    const EstimatorBundle b2 = run_estimation(trial, liouv, cfg);
    CHECK(b1.mean_liouville == b2.mean_liouville);
    CHECK(b1.mean_ok == b2.mean_ok);
    CHECK(b1.okdag_ok == b2.okdag_ok);
    CHECK(b1.okdag_l == b2.okdag_l);
    CHECK(b1.acceptance == b2.acceptance);
  }

  SUBCASE("split budgets agree within statistical error") {
    auto mean_of = [&](int chains, long samples, int rep) {
      ChainConfig cfg;
      cfg.samples = samples;
      cfg.chains = chains;
      cfg.seed = 300 + rep;
      return run_estimation(trial, liouv, cfg).mean_liouville.real();
    };
    const int repeats = 6;
    std::vector<double> v1, v4;
    double m1 = 0.0, m4 = 0.0;
    for (int r = 0; r < repeats; ++r) {
      v1.push_back(mean_of(1, 4000, r));
      v4.push_back(mean_of(4, 1000, 100 + r));
      m1 += v1.back();
      m4 += v4.back();
    }
    m1 /= repeats;
    m4 /= repeats;
    double s1 = 0.0, s4 = 0.0;
    for (int r = 0; r < repeats; ++r) {
      s1 += (v1[r] - m1) * (v1[r] - m1);
      s4 += (v4[r] - m4) * (v4[r] - m4);
    }
    s1 = std::sqrt(s1 / (repeats - 1) / repeats);
    s4 = std::sqrt(s4 / (repeats - 1) / repeats);
    CHECK(std::abs(m1 - m4) < 4.0 * std::hypot(s1, s4));
  }
}

TEST_CASE("trace estimation") {
  const int n = 2;

  SUBCASE("zero-weight network has trace 2^N exactly") {
    TrialState trial = random_trial(n, 4, 0.1, 51);
    trial.rbm.a.setZero();
    trial.rbm.b.setZero();
    trial.rbm.c.setZero();
    trial.rbm.wr.setZero();
    trial.rbm.wl.setZero();
    Rng rng = make_rng(1, kTraceStream);
    const TraceEstimate est = estimate_trace(trial.rbm, 64, rng);
    CHECK(std::abs(est.value - Complex(4.0, 0.0)) < 1e-12);
    CHECK(exact_trace(trial.rbm).value == Complex(4.0, 0.0));
  }

  SUBCASE("sampled trace brackets the exact diagonal sum") {
    const TrialState trial = random_trial(n, 4, 0.5, 53);
    const Complex exact = exact_trace(trial.rbm).value;
    Rng rng = make_rng(9, kTraceStream);
    const TraceEstimate est = estimate_trace(trial.rbm, 4096, rng);
    CHECK(std::abs(est.value - exact) < 3.0 * est.std_error + 1e-9);
    CHECK(!est.exact);
    CHECK(exact_trace(trial.rbm).exact);
  }
}
