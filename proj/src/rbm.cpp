#include "lgap/rbm.hpp"

#include <cstring>

namespace lgap {

namespace {

// Complex entries are layout-compatible with pairs of doubles, so the flat
// real vector is the concatenated (re, im) view of [a; b; c; wr; wl].
void write_block(double* dst, const Eigen::VectorXcd& v) {
  std::memcpy(dst, v.data(), sizeof(Complex) * v.size());
}

void read_block(Eigen::VectorXcd& v, const double* src) {
  std::memcpy(v.data(), src, sizeof(Complex) * v.size());
}

}  // namespace

Eigen::VectorXd RbmParameters::flatten() const {
  Eigen::VectorXd flat(real_count());
  double* p = flat.data();
  write_block(p, a);
  p += 2 * n;
  write_block(p, b);
  p += 2 * n;
  write_block(p, c);
  p += 2 * m;
  std::memcpy(p, wr.data(), sizeof(Complex) * m * n);
  p += 2 * m * n;
  std::memcpy(p, wl.data(), sizeof(Complex) * m * n);
  return flat;
}

RbmParameters RbmParameters::unflatten(int n, int m,
                                       const Eigen::VectorXd& flat) {
  RbmParameters rbm;
  rbm.n = n;
  rbm.m = m;
  if (flat.size() != rbm.real_count()) {
    throw ModelError("parameter vector has wrong length");
  }
  rbm.a.resize(n);
  rbm.b.resize(n);
  rbm.c.resize(m);
  rbm.wr.resize(m, n);
  rbm.wl.resize(m, n);
  const double* p = flat.data();
  read_block(rbm.a, p);
  p += 2 * n;
  read_block(rbm.b, p);
  p += 2 * n;
  read_block(rbm.c, p);
  p += 2 * m;
  std::memcpy(rbm.wr.data(), p, sizeof(Complex) * m * n);
  p += 2 * m * n;
  std::memcpy(rbm.wl.data(), p, sizeof(Complex) * m * n);
  return rbm;
}

void RbmParameters::add_flat(const Eigen::VectorXd& delta) {
  if (delta.size() != real_count()) {
    throw ModelError("update vector has wrong length");
  }
  const double* p = delta.data();
  auto add_to = [&p](Complex* dst, int count) {
    for (int i = 0; i < count; ++i) {
      dst[i] += Complex(p[2 * i], p[2 * i + 1]);
    }
    p += 2 * count;
  };
  add_to(a.data(), n);
  add_to(b.data(), n);
  add_to(c.data(), m);
  add_to(wr.data(), m * n);
  add_to(wl.data(), m * n);
}

RbmParameters init_parameters(int n, int m, double scale, Rng& rng) {
  if (n < 1 || m < 1) {
    throw ModelError("RBM needs n >= 1 and m >= 1");
  }
  if (scale <= 0.0) {
    throw ModelError("init scale must be > 0");
  }
  RbmParameters rbm;
  rbm.n = n;
  rbm.m = m;
  auto draw = [&rng, scale]() {
    const double re = uniform_symmetric(rng, scale);
    const double im = uniform_symmetric(rng, scale);
    return Complex(re, im);
  };
  rbm.a = Eigen::VectorXcd::NullaryExpr(n, [&](Eigen::Index) { return draw(); });
  rbm.b = Eigen::VectorXcd::NullaryExpr(n, [&](Eigen::Index) { return draw(); });
  rbm.c = Eigen::VectorXcd::NullaryExpr(m, [&](Eigen::Index) { return draw(); });
  rbm.wr = Eigen::MatrixXcd::NullaryExpr(
      m, n, [&](Eigen::Index, Eigen::Index) { return draw(); });
  rbm.wl = Eigen::MatrixXcd::NullaryExpr(
      m, n, [&](Eigen::Index, Eigen::Index) { return draw(); });
  return rbm;
}

AncillaryState AncillaryState::identity() {
  AncillaryState anc;
  anc.kind = Kind::Identity;
  return anc;
}

AncillaryState AncillaryState::product(BiBaseConfig cfg) {
  AncillaryState anc;
  anc.kind = Kind::ProductBiBase;
  anc.config = std::move(cfg);
  return anc;
}

AncillaryState AncillaryState::all_down(int n_half) {
  return product(BiBaseConfig::all_down(n_half));
}

double AncillaryState::amplitude(const BiBaseConfig& x) const {
  if (kind == Kind::Identity) {
    return x.is_diagonal() ? 1.0 : 0.0;
  }
  return x == config ? 1.0 : 0.0;
}

double AncillaryState::trace(int n_half) const {
  if (kind == Kind::Identity) {
    return static_cast<double>(std::size_t{1} << n_half);
  }
  return config.is_diagonal() ? 1.0 : 0.0;
}

Complex log_amplitude(const RbmParameters& rbm, const BiBaseConfig& x) {
  const int n = rbm.n;
  Complex visible(0.0, 0.0);
  for (int j = 0; j < n; ++j) {
    visible += rbm.a(j) * static_cast<double>(x.spins[j]);
    visible += rbm.b(j) * static_cast<double>(x.spins[j + n]);
  }
  Complex hidden(0.0, 0.0);
  for (int k = 0; k < rbm.m; ++k) {
    Complex theta = rbm.c(k);
    for (int j = 0; j < n; ++j) {
      theta += rbm.wr(k, j) * static_cast<double>(x.spins[j]);
      theta += rbm.wl(k, j) * static_cast<double>(x.spins[j + n]);
    }
    hidden += log_cosh(theta);
  }
  return visible + hidden;
}

void LookupTable::rebuild(const RbmParameters& rbm, const BiBaseConfig& x) {
  const int n = rbm.n;
  theta_ = rbm.c;
  for (int j = 0; j < n; ++j) {
    theta_ += rbm.wr.col(j) * static_cast<double>(x.spins[j]);
    theta_ += rbm.wl.col(j) * static_cast<double>(x.spins[j + n]);
  }
  log_amp_ = log_amplitude(rbm, x);
  updates_since_rebuild_ = 0;
}

namespace {

// Net flip list: sites flipped an odd number of times (|flips| <= 4).
int net_flips(std::span<const int> flips, int* net) {
  int count = 0;
  for (int s : flips) {
    bool cancelled = false;
    for (int i = 0; i < count; ++i) {
      if (net[i] == s) {
        net[i] = net[--count];
        cancelled = true;
        break;
      }
    }
    if (!cancelled) net[count++] = s;
  }
  return count;
}

}  // namespace

Complex LookupTable::log_ratio(const RbmParameters& rbm, const BiBaseConfig& x,
                               std::span<const int> flips) const {
  int net[8];
  const int count = net_flips(flips, net);
  if (count == 0) return Complex(0.0, 0.0);

  const int n = rbm.n;
  Complex visible(0.0, 0.0);
  for (int i = 0; i < count; ++i) {
    const int s = net[i];
    const double old = static_cast<double>(x.spins[s]);
    visible += (s < n ? rbm.a(s) : rbm.b(s - n)) * (-2.0 * old);
  }
  Complex hidden(0.0, 0.0);
  for (int k = 0; k < rbm.m; ++k) {
    Complex theta_new = theta_(k);
    for (int i = 0; i < count; ++i) {
      const int s = net[i];
      const double old = static_cast<double>(x.spins[s]);
      theta_new += (s < n ? rbm.wr(k, s) : rbm.wl(k, s - n)) * (-2.0 * old);
    }
    hidden += log_cosh(theta_new) - log_cosh(theta_(k));
  }
  return visible + hidden;
}

void LookupTable::apply_flips(const RbmParameters& rbm, BiBaseConfig& x,
                              std::span<const int> flips) {
  int net[8];
  const int count = net_flips(flips, net);
  if (count == 0) return;
  log_amp_ += log_ratio(rbm, x, flips);
  const int n = rbm.n;
  for (int i = 0; i < count; ++i) {
    const int s = net[i];
    const double old = static_cast<double>(x.spins[s]);
    if (s < n) {
      theta_ += rbm.wr.col(s) * (-2.0 * old);
    } else {
      theta_ += rbm.wl.col(s - n) * (-2.0 * old);
    }
    x.spins[s] = static_cast<std::int8_t>(-x.spins[s]);
  }
  // Incremental updates drift at machine precision; refresh periodically so
  // the cache stays within 1e-10 of a from-scratch evaluation.
  if (++updates_since_rebuild_ >= 512) {
    rebuild(rbm, x);
  }
}

Complex amplitude_ratio(const RbmParameters& rbm, const LookupTable& table,
                        const BiBaseConfig& x, std::span<const int> flips) {
  return std::exp(table.log_ratio(rbm, x, flips));
}

Complex trial_amplitude(const TrialState& trial, const BiBaseConfig& x) {
  const Complex rbm_amp = std::exp(log_amplitude(trial.rbm, x));
  const double anc = trial.ancillary.amplitude(x);
  return trial.alpha * anc + rbm_amp;
}

void rbm_log_derivatives(const RbmParameters& rbm, const BiBaseConfig& x,
                         const Eigen::VectorXcd& theta,
                         Eigen::VectorXcd& out) {
  const int n = rbm.n;
  const int m = rbm.m;
  out.resize(rbm.complex_count());
  for (int j = 0; j < n; ++j) {
    out(j) = Complex(static_cast<double>(x.spins[j]), 0.0);
    out(n + j) = Complex(static_cast<double>(x.spins[j + n]), 0.0);
  }
  const int c0 = 2 * n;
  for (int k = 0; k < m; ++k) {
    out(c0 + k) = std::tanh(theta(k));
  }
  const int wr0 = 2 * n + m;
  const int wl0 = wr0 + m * n;
  for (int j = 0; j < n; ++j) {
    const double sr = static_cast<double>(x.spins[j]);
    const double sl = static_cast<double>(x.spins[j + n]);
    for (int k = 0; k < m; ++k) {
      const Complex t = out(c0 + k);
      out(wr0 + j * m + k) = sr * t;  // column-major within the wr block
      out(wl0 + j * m + k) = sl * t;
    }
  }
}

Eigen::VectorXcd log_derivatives(const TrialState& trial,
                                 const BiBaseConfig& x, OkVariant variant) {
  LookupTable table;
  table.rebuild(trial.rbm, x);
  Eigen::VectorXcd reduced;
  rbm_log_derivatives(trial.rbm, x, table.theta(), reduced);
  if (variant == OkVariant::ChainRule) {
    const Complex rbm_amp = std::exp(table.log_amp());
    const Complex total = trial.alpha * trial.ancillary.amplitude(x) + rbm_amp;
    if (std::abs(total) < kAmplitudeFloor) {
      throw SamplerError("trial amplitude below underflow floor");
    }
    reduced *= rbm_amp / total;
  }
  Eigen::VectorXcd full(2 * reduced.size());
  for (Eigen::Index kappa = 0; kappa < reduced.size(); ++kappa) {
    full(2 * kappa) = reduced(kappa);
    full(2 * kappa + 1) = Complex(0.0, 1.0) * reduced(kappa);
  }
  return full;
}

void refresh_alpha(TrialState& trial, Complex trace_estimate) {
  const double anc_trace = trial.ancillary.trace(trial.rbm.n);
  if (anc_trace == 0.0) {
    throw ModelError(
        "ancillary state has zero trace (non-diagonal product state)");
  }
  trial.rbm_trace = trace_estimate;
  trial.alpha = -trace_estimate / anc_trace;
}

}  // namespace lgap
