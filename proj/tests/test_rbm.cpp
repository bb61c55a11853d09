#include <doctest.h>

#include <cmath>

#include "lgap/rbm.hpp"

using namespace lgap;

namespace {

BiBaseConfig random_config(int n, Rng& rng) {
  BiBaseConfig cfg;
  cfg.spins.resize(2 * n);
  for (auto& s : cfg.spins) {
    s = uniform01(rng) < 0.5 ? -1 : +1;
  }
  return cfg;
}

// Direct product-form evaluation: exp(sum a s + b s) * prod cosh(theta).
Complex direct_amplitude(const RbmParameters& rbm, const BiBaseConfig& x) {
  Complex vis(0.0, 0.0);
  for (int j = 0; j < rbm.n; ++j) {
    vis += rbm.a(j) * double(x.spins[j]) + rbm.b(j) * double(x.spins[j + rbm.n]);
  }
  Complex amp = std::exp(vis);
  for (int k = 0; k < rbm.m; ++k) {
    Complex theta = rbm.c(k);
    for (int j = 0; j < rbm.n; ++j) {
      theta += rbm.wr(k, j) * double(x.spins[j]);
      theta += rbm.wl(k, j) * double(x.spins[j + rbm.n]);
    }
    amp *= std::cosh(theta);
  }
  return amp;
}

}  // namespace

TEST_CASE("parameter initialization") {
  Rng rng = make_rng(11, kInitStream);
  const RbmParameters rbm = init_parameters(4, 24, 0.01, rng);
  CHECK(rbm.real_count() == 448);  // 2*(8 + 24 + 192)
  CHECK(rbm.complex_count() == 224);

  Rng rng_a = make_rng(5, kInitStream);
  Rng rng_b = make_rng(5, kInitStream);
  const RbmParameters p1 = init_parameters(3, 9, 0.05, rng_a);
  const RbmParameters p2 = init_parameters(3, 9, 0.05, rng_b);
  CHECK(p1.flatten() == p2.flatten());

  CHECK_THROWS_AS(init_parameters(3, 9, 0.0, rng), ModelError);
  CHECK_THROWS_AS(init_parameters(0, 9, 0.1, rng), ModelError);
}

TEST_CASE("flatten round-trip is the identity") {
  Rng rng = make_rng(3, kInitStream);
  const RbmParameters rbm = init_parameters(3, 7, 0.4, rng);
  const Eigen::VectorXd flat = rbm.flatten();
  const RbmParameters back = RbmParameters::unflatten(3, 7, flat);
  CHECK(back.flatten() == flat);
  CHECK(back.a == rbm.a);
  CHECK(back.wl == rbm.wl);

  RbmParameters shifted = rbm;
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(rbm.real_count());
  delta(1) = 0.5;   // Im a_0
  delta(6) = -2.0;  // complex slot 3 = b_0, real part
  shifted.add_flat(delta);
  CHECK(shifted.a(0).imag() == rbm.a(0).imag() + 0.5);
  CHECK(shifted.b(0).real() == rbm.b(0).real() - 2.0);
}

TEST_CASE("log amplitude") {
  Rng rng = make_rng(17, kInitStream);

  SUBCASE("zero weights give zero log amplitude") {
    RbmParameters rbm = init_parameters(3, 5, 0.1, rng);
    rbm.a.setZero();
    rbm.b.setZero();
    rbm.c.setZero();
    rbm.wr.setZero();
    rbm.wl.setZero();
    for (int trial = 0; trial < 5; ++trial) {
      const BiBaseConfig x = random_config(3, rng);
      CHECK(std::abs(log_amplitude(rbm, x)) == 0.0);
    }
  }

  SUBCASE("single visible bias term") {
    RbmParameters rbm = init_parameters(2, 3, 0.1, rng);
    rbm.a.setZero();
    rbm.b.setZero();
    rbm.c.setZero();
    rbm.wr.setZero();
    rbm.wl.setZero();
    rbm.a(0) = Complex(1.0, 0.0);
    BiBaseConfig x = BiBaseConfig::all_down(2);
    x.spins[0] = +1;
    CHECK(std::abs(log_amplitude(rbm, x) - Complex(1.0, 0.0)) < 1e-15);
  }

  SUBCASE("matches the direct product form") {
    const RbmParameters rbm = init_parameters(2, 4, 0.7, rng);
    for (int trial = 0; trial < 20; ++trial) {
      const BiBaseConfig x = random_config(2, rng);
      const Complex via_log = std::exp(log_amplitude(rbm, x));
      const Complex direct = direct_amplitude(rbm, x);
      CHECK(std::abs(via_log - direct) < 1e-10 * std::abs(direct));
    }
  }

  SUBCASE("overflow-safe for large arguments") {
    RbmParameters rbm = init_parameters(2, 2, 0.1, rng);
    rbm.c(0) = Complex(400.0, 0.3);
    rbm.c(1) = Complex(-380.0, -2.1);
    const BiBaseConfig x = random_config(2, rng);
    const Complex value = log_amplitude(rbm, x);
    CHECK(std::isfinite(value.real()));
    CHECK(std::isfinite(value.imag()));
  }
}

TEST_CASE("lookup table stays consistent under flips") {
  Rng rng = make_rng(23, kInitStream);
  const int n = 3;
  const RbmParameters rbm = init_parameters(n, 9, 0.3, rng);
  BiBaseConfig x = random_config(n, rng);
  LookupTable table;
  table.rebuild(rbm, x);

  for (int step = 0; step < 1000; ++step) {
    int flips[3];
    const int count = 1 + int(uniform_below(rng, 3));
    for (int f = 0; f < count; ++f) {
      flips[f] = int(uniform_below(rng, 2 * n));
    }
    table.apply_flips(rbm, x, std::span<const int>(flips, std::size_t(count)));
  }
  LookupTable fresh;
  fresh.rebuild(rbm, x);
  CHECK((table.theta() - fresh.theta()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(std::abs(std::exp(table.log_amp()) - std::exp(fresh.log_amp())) <
        1e-10 * std::abs(std::exp(fresh.log_amp())));
}

TEST_CASE("amplitude ratios") {
  Rng rng = make_rng(31, kInitStream);
  const int n = 3;
  const RbmParameters rbm = init_parameters(n, 9, 0.5, rng);

  SUBCASE("empty flip list and involution") {
    const BiBaseConfig x = random_config(n, rng);
    LookupTable table;
    table.rebuild(rbm, x);
    CHECK(amplitude_ratio(rbm, table, x, {}) == Complex(1.0, 0.0));
    const int twice[2] = {2, 2};
    CHECK(std::abs(amplitude_ratio(rbm, table, x, twice) -
                   Complex(1.0, 0.0)) < 1e-14);
  }

  SUBCASE("ratio equals the log-amplitude difference, 1000 random triples") {
    for (int trial = 0; trial < 1000; ++trial) {
      const BiBaseConfig x = random_config(n, rng);
      LookupTable table;
      table.rebuild(rbm, x);
      int flips[4];
      const int count = 1 + int(uniform_below(rng, 4));
      for (int f = 0; f < count; ++f) {
        flips[f] = int(uniform_below(rng, 2 * n));
      }
      const std::span<const int> span(flips, std::size_t(count));
      BiBaseConfig x2 = x;
      for (int f = 0; f < count; ++f) x2.spins[flips[f]] *= -1;
      const Complex expected =
          std::exp(log_amplitude(rbm, x2) - log_amplitude(rbm, x));
      const Complex got = amplitude_ratio(rbm, table, x, span);
      CHECK(std::abs(got - expected) < 1e-10 * std::abs(expected));
    }
  }
}

TEST_CASE("trial amplitude composition") {
  Rng rng = make_rng(41, kInitStream);
  const int n = 2;

  SUBCASE("product ancillary adds only at its configuration") {
    TrialState trial;
    trial.rbm = init_parameters(n, 4, 0.2, rng);
    trial.ancillary = AncillaryState::all_down(n);
    trial.alpha = Complex(2.5, -1.0);
    const BiBaseConfig down = BiBaseConfig::all_down(n);
    BiBaseConfig other = down;
    other.spins[1] = +1;
    CHECK(std::abs(trial_amplitude(trial, other) -
                   std::exp(log_amplitude(trial.rbm, other))) < 1e-14);
    CHECK(std::abs(trial_amplitude(trial, down) -
                   (trial.alpha + std::exp(log_amplitude(trial.rbm, down)))) <
          1e-14);
  }

  SUBCASE("identity ancillary acts on the diagonal only") {
    TrialState trial;
    trial.rbm = init_parameters(n, 4, 0.2, rng);
    trial.ancillary = AncillaryState::identity();
    trial.alpha = Complex(0.0, 3.0);
    const BiBaseConfig diag = BiBaseConfig::diagonal_from_index(1, n);
    BiBaseConfig off = diag;
    off.spins[0] *= -1;
    CHECK(std::abs(trial_amplitude(trial, off) -
                   std::exp(log_amplitude(trial.rbm, off))) < 1e-14);
    CHECK(std::abs(trial_amplitude(trial, diag) -
                   (trial.alpha + std::exp(log_amplitude(trial.rbm, diag)))) <
          1e-14);
  }
}

TEST_CASE("alpha refresh and the trace-zero invariant") {
  Rng rng = make_rng(43, kInitStream);
  const int n = 2;

  SUBCASE("zero trace estimate gives zero alpha") {
    TrialState trial;
    trial.rbm = init_parameters(n, 4, 0.2, rng);
    trial.ancillary = AncillaryState::identity();
    refresh_alpha(trial, Complex(0.0, 0.0));
    CHECK(trial.alpha == Complex(0.0, 0.0));
  }

  SUBCASE("identity ancillary divides by 2^N") {
    TrialState trial;
    trial.rbm = init_parameters(n, 4, 0.2, rng);
    trial.ancillary = AncillaryState::identity();
    refresh_alpha(trial, Complex(4.0, 0.0));
    CHECK(std::abs(trial.alpha - Complex(-1.0, 0.0)) < 1e-15);
  }

  SUBCASE("non-diagonal product ancillary is rejected") {
    TrialState trial;
    trial.rbm = init_parameters(n, 4, 0.2, rng);
    BiBaseConfig off = BiBaseConfig::all_down(n);
    off.spins[0] = +1;  // right half differs from left half
    trial.ancillary = AncillaryState::product(off);
    CHECK_THROWS_AS(refresh_alpha(trial, Complex(1.0, 0.0)), ModelError);
  }

  SUBCASE("diagonal trial sum vanishes after refresh with the exact trace") {
    for (auto kind : {AncillaryState::Kind::Identity,
                      AncillaryState::Kind::ProductBiBase}) {
      TrialState trial;
      trial.rbm = init_parameters(n, 6, 0.4, rng);
      trial.ancillary = kind == AncillaryState::Kind::Identity
                            ? AncillaryState::identity()
                            : AncillaryState::all_down(n);
      Complex exact(0.0, 0.0);
      for (std::size_t l = 0; l < 4; ++l) {
        exact += std::exp(log_amplitude(
            trial.rbm, BiBaseConfig::diagonal_from_index(l, n)));
      }
      refresh_alpha(trial, exact);
      Complex diag_sum(0.0, 0.0);
      for (std::size_t l = 0; l < 4; ++l) {
        diag_sum +=
            trial_amplitude(trial, BiBaseConfig::diagonal_from_index(l, n));
      }
      CHECK(std::abs(diag_sum) < 1e-12 * std::abs(exact));
    }
  }
}

TEST_CASE("log derivatives against finite differences") {
  Rng rng = make_rng(47, kInitStream);
  const int n = 2;
  const int m = 4;

  auto trial_with = [&](const Eigen::VectorXd& flat, const AncillaryState& anc,
                        Complex alpha) {
    TrialState t;
    t.rbm = RbmParameters::unflatten(n, m, flat);
    t.ancillary = anc;
    t.alpha = alpha;
    return t;
  };

  for (bool with_ancillary : {false, true}) {
    CAPTURE(with_ancillary);
    const RbmParameters rbm = init_parameters(n, m, 0.4, rng);
    const Eigen::VectorXd flat = rbm.flatten();
    const Complex alpha =
        with_ancillary ? Complex(0.8, -0.3) : Complex(0.0, 0.0);
    const AncillaryState anc = AncillaryState::identity();
    const TrialState trial = trial_with(flat, anc, alpha);

    for (int sample = 0; sample < 6; ++sample) {
      const BiBaseConfig x = random_config(n, rng);
      const Eigen::VectorXcd got =
          log_derivatives(trial, x, OkVariant::ChainRule);
      const double h = 1e-6;
      for (int p = 0; p < rbm.real_count(); ++p) {
        Eigen::VectorXd plus = flat, minus = flat;
        plus(p) += h;
        minus(p) -= h;
        // alpha held frozen while differentiating.
        const Complex vp = trial_amplitude(trial_with(plus, anc, alpha), x);
        const Complex vm = trial_amplitude(trial_with(minus, anc, alpha), x);
        const Complex fd = std::log(vp / vm) / (2.0 * h);
        CHECK(std::abs(got(p) - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }

  SUBCASE("pure-RBM closed forms") {
    const RbmParameters rbm = init_parameters(n, m, 0.3, rng);
    TrialState trial;
    trial.rbm = rbm;
    trial.ancillary = AncillaryState::identity();
    trial.alpha = Complex(0.0, 0.0);
    const BiBaseConfig x = random_config(n, rng);
    const Eigen::VectorXcd got =
        log_derivatives(trial, x, OkVariant::ChainRule);
    // O_{Re a_j} = s_{j,R}, O_{Im a_j} = i s_{j,R}
    for (int j = 0; j < n; ++j) {
      CHECK(got(2 * j) == Complex(double(x.spins[j]), 0.0));
      CHECK(got(2 * j + 1) == Complex(0.0, double(x.spins[j])));
    }
  }

  SUBCASE("zero-weight hidden derivatives vanish") {
    RbmParameters rbm = init_parameters(n, m, 0.3, rng);
    rbm.c.setZero();
    rbm.wr.setZero();
    rbm.wl.setZero();
    TrialState trial;
    trial.rbm = rbm;
    trial.ancillary = AncillaryState::identity();
    const BiBaseConfig x = random_config(n, rng);
    const Eigen::VectorXcd got =
        log_derivatives(trial, x, OkVariant::ChainRule);
    for (int k = 0; k < m; ++k) {
      CHECK(std::abs(got(2 * (2 * n + k))) == 0.0);  // tanh 0
    }
  }

  SUBCASE("plain variant drops the composite correction") {
    const RbmParameters rbm = init_parameters(n, m, 0.4, rng);
    TrialState trial;
    trial.rbm = rbm;
    trial.ancillary = AncillaryState::identity();
    trial.alpha = Complex(1.0, 0.5);
    const BiBaseConfig x = BiBaseConfig::diagonal_from_index(2, n);
    const Eigen::VectorXcd plain = log_derivatives(trial, x, OkVariant::Plain);
    const Eigen::VectorXcd chain =
        log_derivatives(trial, x, OkVariant::ChainRule);
    const Complex rbm_amp = std::exp(log_amplitude(rbm, x));
    const Complex factor = rbm_amp / (trial.alpha + rbm_amp);
    CHECK(std::abs(chain(0) - plain(0) * factor) < 1e-12);
  }
}
