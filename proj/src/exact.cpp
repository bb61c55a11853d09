#include "lgap/exact.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <bit>
#include <cmath>

namespace lgap {

namespace {

constexpr double kTol = 1e-8;

Eigen::MatrixXcd dense_from_terms(const std::vector<LocalTerm>& terms,
                                  int total_sites) {
  const std::size_t dim = std::size_t{1} << total_sites;
  Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(dim, dim);
  BiBaseConfig x;
  for (std::size_t col = 0; col < dim; ++col) {
    x.spins.resize(total_sites);
    std::size_t rem = col;
    for (int s = total_sites - 1; s >= 0; --s) {
      x.spins[s] = (rem & 1u) ? -1 : +1;
      rem >>= 1;
    }
    for_each_term_connection(
        terms, x, /*bra_side=*/false, /*emit_diagonal=*/true,
        [&](const int* flips, int n_flips, Complex amp) {
          std::size_t row = col;
          for (int f = 0; f < n_flips; ++f) {
            row ^= std::size_t{1} << (total_sites - 1 - flips[f]);
          }
          mat(row, col) += amp;
        });
  }
  return mat;
}

// Right-copy effective Hamiltonian as local terms on N sites.
std::vector<LocalTerm> h_half_terms(const LindbladModel& model, bool right) {
  const Complex unit = right ? Complex(0.0, -1.0) : Complex(0.0, +1.0);
  const double flip = 0.25 * (model.jx + model.jy);
  const double pair = 0.25 * (model.jx - model.jy);
  std::vector<LocalTerm> terms;
  for (const auto& [j, k] : model.lattice.bonds) {
    if (flip != 0.0) terms.push_back({unit * flip, TermKind::FlipFlop, j, k});
    if (pair != 0.0) {
      terms.push_back({unit * pair, TermKind::PairRaise, j, k});
      terms.push_back({unit * pair, TermKind::PairLower, j, k});
    }
    terms.push_back({unit * model.jz, TermKind::ZZ, j, k});
  }
  const double g = model.gamma;
  if (g != 0.0) {
    const int n = model.lattice.sites;
    for (int i = 0; i < n; ++i) {
      terms.push_back({Complex(-0.5 * g, 0.0), TermKind::Z, i, -1});
    }
    terms.push_back({Complex(-0.25 * g * n, 0.0), TermKind::Shift, 0, -1});
  }
  return terms;
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::Index imax = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best) {
      best = a;
      imax = i;
    }
  }
  if (best > 0.0) {
    v *= std::conj(v(imax)) / std::abs(v(imax));
    v.normalize();
  }
}

// Greedy nearest matching of two equally sized complex multisets; returns
// the largest matched distance. Quadratic, fine for dimension <= 4096.
double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  auto key = [](const Complex& x, const Complex& y) {
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() < y.imag();
  };
  std::sort(a.begin(), a.end(), key);
  std::sort(b.begin(), b.end(), key);
  double direct = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    direct = std::max(direct, std::abs(a[i] - b[i]));
  }
  if (direct <= kTol) return direct;
  // Sorting may swap near-degenerate pairs; fall back to greedy matching.
  double worst = 0.0;
  std::vector<bool> used(b.size(), false);
  for (const Complex& x : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(x - b[j]);
      if (d < best) {
        best = d;
        pick = j;
      }
    }
    used[pick] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

Eigen::MatrixXcd dense_liouvillian(const LindbladModel& model) {
  const int n = model.lattice.sites;
  if (n > 6) {
    throw OracleError("dense Liouvillian limited to N <= 6, got N = " +
                      std::to_string(n));
  }
  const VectorizedLiouvillian liouv = vectorize(model);
  return dense_from_terms(liouv.terms, 2 * n);
}

Eigen::MatrixXcd dense_h_half(const LindbladModel& model, bool right) {
  const int n = model.lattice.sites;
  if (n > 12) {
    throw OracleError("dense half Hamiltonian limited to N <= 12");
  }
  return dense_from_terms(h_half_terms(model, right), n);
}

SpectrumResult full_spectrum(const Eigen::MatrixXcd& matrix) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(matrix, true);
  if (solver.info() != Eigen::Success) {
    throw OracleError("dense eigensolver did not converge");
  }
  const Eigen::Index dim = matrix.rows();
  std::vector<int> order(dim);
  for (Eigen::Index i = 0; i < dim; ++i) order[i] = static_cast<int>(i);
  const auto& vals = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    if (vals(i).real() != vals(j).real())
      return vals(i).real() > vals(j).real();
    return vals(i).imag() < vals(j).imag();
  });

  SpectrumResult spec;
  spec.eigenvalues.resize(dim);
  spec.eigenvectors.resize(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    spec.eigenvalues(i) = vals(order[i]);
    spec.eigenvectors.col(i) = solver.eigenvectors().col(order[i]);
    fix_phase(spec.eigenvectors.col(i));
  }

  if (std::abs(spec.eigenvalues(0)) > kTol) {
    throw OracleError("no zero eigenvalue: steady state not found");
  }
  if (dim > 1 && spec.eigenvalues(1).real() > -kTol) {
    throw OracleError("steady state is not unique");
  }
  spec.steady_index = 0;
  spec.gap = -spec.eigenvalues(1).real();
  const double re1 = spec.eigenvalues(1).real();
  for (Eigen::Index i = 1; i < dim; ++i) {
    if (std::abs(spec.eigenvalues(i).real() - re1) < kTol) {
      spec.first_decay_indices.push_back(static_cast<int>(i));
    }
  }
  const int nfd = static_cast<int>(spec.first_decay_indices.size());
  spec.first_decay_overlap.resize(nfd, nfd);
  for (int i = 0; i < nfd; ++i) {
    for (int j = 0; j < nfd; ++j) {
      spec.first_decay_overlap(i, j) =
          spec.eigenvectors.col(spec.first_decay_indices[i])
              .dot(spec.eigenvectors.col(spec.first_decay_indices[j]));
    }
  }
  return spec;
}

DecayCase classify_decay_modes(const SpectrumResult& spec) {
  const int nfd = static_cast<int>(spec.first_decay_indices.size());
  if (nfd <= 1) return DecayCase::Single;

  // Group by eigenvalue; the eigensolver's basis inside one degenerate
  // eigenvalue is arbitrary, so only cross-eigenvalue geometry counts.
  std::vector<int> group(nfd, -1);
  std::vector<Complex> group_value;
  for (int i = 0; i < nfd; ++i) {
    const Complex ev = spec.eigenvalues(spec.first_decay_indices[i]);
    for (std::size_t g = 0; g < group_value.size(); ++g) {
      if (std::abs(ev - group_value[g]) < kTol) {
        group[i] = static_cast<int>(g);
        break;
      }
    }
    if (group[i] < 0) {
      group[i] = static_cast<int>(group_value.size());
      group_value.push_back(ev);
    }
  }
  const int ngroups = static_cast<int>(group_value.size());
  const Eigen::Index dim = spec.eigenvectors.rows();
  std::vector<Eigen::MatrixXcd> ortho(ngroups);
  for (int g = 0; g < ngroups; ++g) {
    std::vector<int> members;
    for (int i = 0; i < nfd; ++i) {
      if (group[i] == g) members.push_back(spec.first_decay_indices[i]);
    }
    Eigen::MatrixXcd cols(dim, members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
      cols.col(c) = spec.eigenvectors.col(members[c]);
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(cols);
    ortho[g] = qr.householderQ() *
               Eigen::MatrixXcd::Identity(dim, members.size());
  }
  for (int g1 = 0; g1 < ngroups; ++g1) {
    for (int g2 = g1 + 1; g2 < ngroups; ++g2) {
      const Eigen::MatrixXcd cross = ortho[g1].adjoint() * ortho[g2];
      if (cross.cwiseAbs().maxCoeff() >= kTol) {
        return DecayCase::DegenerateNonOrthogonal;
      }
    }
  }
  return DecayCase::DegenerateOrthogonal;
}

Eigen::VectorXcd densify(const TrialState& trial) {
  const int n = trial.rbm.n;
  if (n > 6) {
    throw OracleError("densify limited to N <= 6");
  }
  const std::size_t dim = std::size_t{1} << (2 * n);
  Eigen::VectorXcd v(dim);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    v(idx) = trial_amplitude(trial, BiBaseConfig::from_index(idx, n));
  }
  return v;
}

double fidelity(const TrialState& trial, const Eigen::VectorXcd& mode) {
  Eigen::VectorXcd v = densify(trial);
  const double nv = v.norm();
  const double nm = mode.norm();
  if (nv == 0.0 || nm == 0.0) {
    throw OracleError("fidelity of a zero-norm state");
  }
  return std::abs(v.dot(mode)) / (nv * nm);
}

CoincidenceReport coincidence_check(const LindbladModel& model) {
  if (!model.isotropic()) {
    throw OracleError(
        "spectral coincidence check applies to the isotropic model only");
  }
  const Eigen::MatrixXcd ltilde = dense_liouvillian(model);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> full(ltilde, false);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> right(
      dense_h_half(model, true), false);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> left(dense_h_half(model, false),
                                                   false);
  if (full.info() != Eigen::Success || right.info() != Eigen::Success ||
      left.info() != Eigen::Success) {
    throw OracleError("eigensolver did not converge");
  }
  std::vector<Complex> a(full.eigenvalues().data(),
                         full.eigenvalues().data() + ltilde.rows());
  std::vector<Complex> b;
  b.reserve(a.size());
  for (Eigen::Index i = 0; i < right.eigenvalues().size(); ++i) {
    for (Eigen::Index j = 0; j < left.eigenvalues().size(); ++j) {
      b.push_back(right.eigenvalues()(i) + left.eigenvalues()(j));
    }
  }
  CoincidenceReport report;
  report.count = static_cast<int>(a.size());
  report.max_deviation = multiset_distance(std::move(a), std::move(b));
  return report;
}

SectorSpectra sector_spectra(const LindbladModel& model) {
  if (!model.isotropic()) {
    throw OracleError("magnon sectors require the isotropic model");
  }
  const int n = model.lattice.sites;
  if (n > 12) {
    throw OracleError("sector spectra limited to N <= 12");
  }
  const std::vector<LocalTerm> terms = h_half_terms(model, /*right=*/true);
  const std::size_t dim = std::size_t{1} << n;

  SectorSpectra out;
  out.n_sites = n;
  out.sector_basis.assign(n + 1, {});
  for (std::size_t idx = 0; idx < dim; ++idx) {
    // basis bit 1 encodes spin down; magnon number = up spins
    const int ups = n - std::popcount(idx);
    out.sector_basis[ups].push_back(static_cast<int>(idx));
  }

  out.energies.resize(n + 1);
  out.right_vectors.resize(n + 1);
  out.left_vectors.resize(n + 1);
  std::vector<Eigen::VectorXi> pos(n + 1);
  for (int m = 0; m <= n; ++m) {
    pos[m] = Eigen::VectorXi::Constant(dim, -1);
    for (std::size_t i = 0; i < out.sector_basis[m].size(); ++i) {
      pos[m](out.sector_basis[m][i]) = static_cast<int>(i);
    }
  }

  for (int m = 0; m <= n; ++m) {
    const auto& basis = out.sector_basis[m];
    const int d = static_cast<int>(basis.size());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
    BiBaseConfig x;
    for (int col = 0; col < d; ++col) {
      std::size_t rem = basis[col];
      x.spins.resize(n);
      for (int s = n - 1; s >= 0; --s) {
        x.spins[s] = (rem & 1u) ? -1 : +1;
        rem >>= 1;
      }
      for_each_term_connection(
          terms, x, false, true,
          [&](const int* flips, int n_flips, Complex amp) {
            std::size_t row_idx = static_cast<std::size_t>(basis[col]);
            for (int f = 0; f < n_flips; ++f) {
              row_idx ^= std::size_t{1} << (n - 1 - flips[f]);
            }
            const int row = pos[m](row_idx);
            if (row < 0) {
              throw OracleError("magnon number not conserved");
            }
            h(row, col) += amp;
          });
    }
    if (d == 1) {
      out.energies[m] = Eigen::VectorXcd::Constant(1, h(0, 0));
      out.right_vectors[m] = Eigen::MatrixXcd::Identity(1, 1);
      out.left_vectors[m] = Eigen::MatrixXcd::Identity(1, 1);
    } else {
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h, true);
      if (solver.info() != Eigen::Success) {
        throw OracleError("sector eigensolver did not converge");
      }
      out.energies[m] = solver.eigenvalues();
      out.right_vectors[m] = solver.eigenvectors();
      Eigen::FullPivLU<Eigen::MatrixXcd> lu(out.right_vectors[m]);
      if (!lu.isInvertible()) {
        throw OracleError("defective sector Hamiltonian (exceptional point)");
      }
      out.left_vectors[m] = lu.inverse();
    }
  }

  // l^{(m)}_mu with L_mu = sqrt(gamma/2) S^-_mu, stored as
  // lower_coefs[m][mu](k, j) = <left m-1,k| L_mu |m,j>.
  const double jump = std::sqrt(0.5 * model.gamma);
  out.lower_coefs.resize(n + 1);
  for (int m = 1; m <= n; ++m) {
    const auto& src = out.sector_basis[m];
    const int d_src = static_cast<int>(src.size());
    const int d_dst = static_cast<int>(out.sector_basis[m - 1].size());
    out.lower_coefs[m].resize(n);
    for (int mu = 0; mu < n; ++mu) {
      Eigen::MatrixXcd map = Eigen::MatrixXcd::Zero(d_dst, d_src);
      for (int j = 0; j < d_src; ++j) {
        const std::size_t idx = static_cast<std::size_t>(src[j]);
        const std::size_t bit = std::size_t{1} << (n - 1 - mu);
        if (!(idx & bit)) {  // spin up at mu, lower it
          map(pos[m - 1](idx | bit), j) = jump;
        }
      }
      out.lower_coefs[m][mu] =
          out.left_vectors[m - 1] * map * out.right_vectors[m];
    }
  }
  return out;
}

Eigen::VectorXcd construct_eigenstate(const SectorSpectra& spectra, int m,
                                      int j, int n, int k) {
  const int sites = spectra.n_sites;
  if (m < 0 || n < 0 || m > sites || n > sites) {
    throw OracleError("sector index out of range");
  }
  const std::size_t half_dim = std::size_t{1} << sites;
  const Complex lambda =
      spectra.energies[m](j) + std::conj(spectra.energies[n](k));

  auto embed = [&](int sector, const Eigen::VectorXcd& coeffs) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(half_dim);
    const auto& basis = spectra.sector_basis[sector];
    for (std::size_t i = 0; i < basis.size(); ++i) {
      v(basis[i]) = coeffs(i);
    }
    return v;
  };

  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(half_dim * half_dim);
  auto accumulate = [&](int mr, int nr, const Eigen::MatrixXcd& coef) {
    for (int jp = 0; jp < coef.rows(); ++jp) {
      for (int kp = 0; kp < coef.cols(); ++kp) {
        if (coef(jp, kp) == Complex(0.0, 0.0)) continue;
        const Eigen::VectorXcd rv =
            embed(mr, spectra.right_vectors[mr].col(jp));
        // |n,k*> is the conjugated right eigenvector of the same copy.
        const Eigen::VectorXcd lvec =
            embed(nr, spectra.right_vectors[nr].col(kp)).conjugate();
        for (std::size_t r = 0; r < half_dim; ++r) {
          if (rv(r) == Complex(0.0, 0.0)) continue;
          full.segment(r * half_dim, half_dim) += coef(jp, kp) * rv(r) * lvec;
        }
      }
    }
  };

  Eigen::MatrixXcd c_prev = Eigen::MatrixXcd::Zero(
      spectra.energies[m].size(), spectra.energies[n].size());
  c_prev(j, k) = Complex(1.0, 0.0);
  accumulate(m, n, c_prev);

  const int depth = std::min(m, n);
  const double scale = std::abs(lambda) + 1.0;
  for (int r = 1; r <= depth; ++r) {
    const int mr = m - r;
    const int nr = n - r;
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(
        spectra.energies[mr].size(), spectra.energies[nr].size());
    for (int mu = 0; mu < sites; ++mu) {
      d += spectra.lower_coefs[m - r + 1][mu] * c_prev *
           spectra.lower_coefs[n - r + 1][mu].adjoint();
    }
    Eigen::MatrixXcd c_next(d.rows(), d.cols());
    for (int jp = 0; jp < d.rows(); ++jp) {
      for (int kp = 0; kp < d.cols(); ++kp) {
        const Complex denom = lambda - (spectra.energies[mr](jp) +
                                        std::conj(spectra.energies[nr](kp)));
        if (std::abs(denom) < 1e-12 * scale) {
          throw OracleError(
              "vanishing denominator in the eigenstate recursion "
              "(exceptional point)");
        }
        c_next(jp, kp) = 2.0 * d(jp, kp) / denom;
      }
    }
    accumulate(mr, nr, c_next);
    c_prev = std::move(c_next);
  }

  full.normalize();
  fix_phase(full);
  return full;
}

std::vector<std::tuple<double, double, int>> spectrum_export(
    const SpectrumResult& spec) {
  std::vector<Complex> vals(spec.eigenvalues.data(),
                            spec.eigenvalues.data() + spec.eigenvalues.size());
  std::sort(vals.begin(), vals.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() < b.imag();
  });
  std::vector<std::tuple<double, double, int>> out;
  for (const Complex& v : vals) {
    if (!out.empty()) {
      auto& [re, im, count] = out.back();
      if (std::abs(Complex(re, im) - v) < kTol) {
        ++count;
        continue;
      }
    }
    out.emplace_back(v.real(), v.imag(), 1);
  }
  return out;
}

}  // namespace lgap
