#include "lgap/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace lgap {

double xxz_gap(double gamma) {
  if (gamma < 0.0) {
    throw ModelError("dissipation rate must be >= 0");
  }
  return 0.5 * gamma;
}

double magnon_real_part(int m, double gamma, int n_sites) {
  if (m < 0 || m > 2 * n_sites) {
    throw ModelError("magnon number out of range [0, 2N]");
  }
  return -0.5 * gamma * static_cast<double>(m);
}

Complex bethe_energy(std::span<const Complex> roots, double j, double jz,
                     double gamma, BetheBranch branch) {
  Complex band(0.0, 0.0);
  for (const Complex& k : roots) {
    band += 2.0 * j * std::cos(k) - jz;
  }
  const Complex iu = branch == BetheBranch::Left ? Complex(0.0, 1.0)
                                                 : Complex(0.0, -1.0);
  return -0.5 * gamma * static_cast<double>(roots.size()) + iu * band;
}

Complex bethe_energy_h_right(std::span<const Complex> roots, int n, double j,
                             double jz, double gamma) {
  const Complex e_g(0.0, -0.25 * jz * n);
  return e_g + bethe_energy(roots, j, jz, gamma, BetheBranch::Right);
}

std::vector<double> solve_bethe_m1(int n) {
  if (n < 2) {
    throw ModelError("single-magnon quantization needs N >= 2");
  }
  std::vector<double> ks(n);
  for (int q = 0; q < n; ++q) {
    ks[q] = 2.0 * M_PI * q / n;
  }
  return ks;
}

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

// Pole-free residuals of the two-magnon equations,
//   g1 = e^{i k1 N} D + Nm,  g2 = e^{-i k2 N} D + Nm,
// where the scattering ratio is -Nm/D.
struct M2System {
  int n;
  double j, jz;

  void numerator_denominator(Complex k1, Complex k2, Complex& nm,
                             Complex& d) const {
    const Complex iu(0.0, 1.0);
    const Complex common = j * (std::exp(iu * (k1 + k2)) + 1.0);
    nm = common - jz * std::exp(iu * k1);
    d = common - jz * std::exp(iu * k2);
  }

  void residual(Complex k1, Complex k2, Complex& g1, Complex& g2) const {
    const Complex iu(0.0, 1.0);
    Complex nm, d;
    numerator_denominator(k1, k2, nm, d);
    g1 = std::exp(iu * k1 * static_cast<double>(n)) * d + nm;
    g2 = std::exp(-iu * k2 * static_cast<double>(n)) * d + nm;
  }

  // Original-form residual, for acceptance of converged roots.
  double check(Complex k1, Complex k2) const {
    const Complex iu(0.0, 1.0);
    Complex nm, d;
    numerator_denominator(k1, k2, nm, d);
    if (std::abs(d) < 1e-12) return 1.0;
    const Complex rhs = -nm / d;
    const double r1 =
        std::abs(std::exp(iu * k1 * static_cast<double>(n)) - rhs);
    const double r2 =
        std::abs(std::exp(-iu * k2 * static_cast<double>(n)) - rhs);
    return std::max(r1, r2);
  }
};

// Multiplying the two equations gives e^{i(k1+k2)N} = 1 exactly, so the
// total momentum K = k1 + k2 is quantized at 2 pi Q / N and the pair can
// be parametrized as k = K/2 +- u with a single complex unknown u.
bool newton_m2_u(const M2System& sys, double half_k, Complex& u) {
  const Complex h(1e-8, 0.0);
  auto g = [&](Complex uu) {
    Complex g1, g2;
    sys.residual(half_k + uu, half_k - uu, g1, g2);
    return g1;
  };
  Complex gu = g(u);
  double err = std::abs(gu);
  for (int it = 0; it < 200; ++it) {
    if (err < 1e-13) return true;
    const Complex slope = (g(u + h) - gu) / h;
    if (std::abs(slope) < 1e-14) return false;
    const Complex delta = gu / slope;
    double step = 1.0;
    bool moved = false;
    for (int half = 0; half < 40; ++half) {
      const Complex trial = u - step * delta;
      const Complex gt = g(trial);
      if (std::abs(gt) < err) {
        u = trial;
        gu = gt;
        err = std::abs(gt);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) return false;
  }
  return err < 1e-13;
}

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

}  // namespace

BetheM2Result solve_bethe_m2(int n, double j, double jz) {
  if (n < 3) {
    throw ModelError("two-magnon solver needs N >= 3");
  }
  const M2System sys{n, j, jz};
  BetheM2Result result;
  result.expected = n * (n - 1) / 2;

  auto canonical = [](Complex k1, Complex k2) {
    k1 = Complex(wrap_angle(k1.real()), k1.imag());
    k2 = Complex(wrap_angle(k2.real()), k2.imag());
    if (k1.real() > k2.real() ||
        (k1.real() == k2.real() && k1.imag() > k2.imag())) {
      std::swap(k1, k2);
    }
    return std::make_pair(k1, k2);
  };
  auto close = [](const std::pair<Complex, Complex>& a,
                  const std::pair<Complex, Complex>& b) {
    auto wrap_dist = [](Complex x, Complex y) {
      double dre = std::abs(x.real() - y.real());
      dre = std::min(dre, kTwoPi - dre);
      return dre + std::abs(x.imag() - y.imag());
    };
    return (wrap_dist(a.first, b.first) < 1e-7 &&
            wrap_dist(a.second, b.second) < 1e-7) ||
           (wrap_dist(a.first, b.second) < 1e-7 &&
            wrap_dist(a.second, b.first) < 1e-7);
  };

  std::vector<std::pair<Complex, Complex>> found;
  auto consider = [&](Complex k1, Complex k2, double residual) {
    const auto canon = canonical(k1, k2);
    for (const auto& f : found) {
      if (close(canon, f)) return;
    }
    found.push_back(canon);
    BetheSolution sol;
    sol.magnons = 2;
    sol.roots = {canon.first, canon.second};
    sol.energy = bethe_energy(sol.roots, j, jz, 0.0, BetheBranch::Right);
    sol.residual = residual;
    result.solutions.push_back(std::move(sol));
  };

  // u seeds: real scattering pairs, conjugate strings, and mixed points.
  std::vector<Complex> seeds;
  for (int r = 1; r < 2 * n; ++r) {
    seeds.emplace_back(M_PI * r / (2.0 * n), 0.0);
  }
  for (double v : {0.3, 0.7, 1.2, 2.0}) {
    seeds.emplace_back(0.0, v);
    seeds.emplace_back(0.0, -v);
    seeds.emplace_back(0.4, v);
    seeds.emplace_back(0.4, -v);
  }

  for (int q = 0; q < 2 * n; ++q) {
    const double half_k = M_PI * q / n;

    // Degenerate pair k1 = k2 = K/2: both numerator and denominator of the
    // scattering ratio vanish, which happens when 2 J cos(K/2) = J_z; the
    // residual reported is that of the pole-free form.
    {
      Complex nm, d;
      sys.numerator_denominator(half_k, half_k, nm, d);
      const double scale = std::abs(j) + std::abs(jz) + 1.0;
      if (std::abs(nm) < 1e-9 * scale && std::abs(d) < 1e-9 * scale) {
        consider(Complex(half_k, 0.0), Complex(half_k, 0.0),
                 std::max(std::abs(nm), std::abs(d)));
      }
    }

    for (const Complex& seed : seeds) {
      Complex u = seed;
      if (!newton_m2_u(sys, half_k, u)) continue;
      const Complex k1(half_k + u), k2(half_k - u);
      // Wide strings are vanishing-amplitude limits in this
      // parametrization, not converged roots.
      if (std::abs(u.imag()) > 3.0) continue;
      // Coinciding momenta (mod 2 pi) outside the degenerate point carry
      // an identically vanishing pair amplitude.
      const Complex iu(0.0, 1.0);
      const Complex z1 = std::exp(iu * k1), z2 = std::exp(iu * k2);
      if (std::abs(z1 - z2) < 1e-6 * (std::abs(z1) + std::abs(z2))) continue;
      const double residual = sys.check(k1, k2);
      if (residual > 1e-10) continue;
      consider(k1, k2, residual);
    }
  }

  std::sort(result.solutions.begin(), result.solutions.end(),
            [](const BetheSolution& a, const BetheSolution& b) {
              if (a.roots[0].real() != b.roots[0].real())
                return a.roots[0].real() < b.roots[0].real();
              return a.roots[0].imag() < b.roots[0].imag();
            });
  result.complete =
      static_cast<int>(result.solutions.size()) == result.expected;
  return result;
}

MeanFieldResult meanfield_steady_state(double jx, double jy, double jz,
                                       double gamma) {
  if (gamma <= 0.0) {
    throw ModelError("mean-field steady state needs gamma > 0");
  }
  const double product = (jy - jz) * (jz - jx);
  MeanFieldResult result;
  result.discriminant = 4.0 * product - gamma * gamma;
  if (product <= 0.0 || result.discriminant <= 0.0) {
    // Fully down-polarized unique steady state.
    result.phase = MeanFieldPhase::UniqueGapped;
    result.sx = 0.0;
    result.sy = 0.0;
    result.sz = -0.5;
    return result;
  }
  result.phase = MeanFieldPhase::Degenerate;
  result.sz = -gamma / (4.0 * std::sqrt(product));
  // In-plane components from the fixed-point equations; the parity partner
  // (-sx, -sy) solves them as well.
  const double c1 = 4.0 * (jy - jz) * result.sz / gamma;  // sx = c1 sy
  const double sy2 =
      gamma * (result.sz + 0.5) / (2.0 * (jx - jy) * c1);
  result.sy = std::sqrt(sy2);
  result.sx = c1 * result.sy;
  return result;
}

void meanfield_flow(double jx, double jy, double jz, double gamma,
                    const MeanFieldResult& state, double out[3]) {
  const double sx = state.sx, sy = state.sy, sz = state.sz;
  out[0] = 2.0 * (jy - jz) * sy * sz - 0.5 * gamma * sx;
  out[1] = 2.0 * (jz - jx) * sz * sx - 0.5 * gamma * sy;
  out[2] = 2.0 * (jx - jy) * sx * sy - gamma * (sz + 0.5);
}

}  // namespace lgap
