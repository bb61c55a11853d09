#pragma once

#include <Eigen/Dense>
#include <tuple>
#include <vector>

#include "lgap/model.hpp"
#include "lgap/rbm.hpp"

namespace lgap {

// Dense bi-base Liouvillian of dimension 4^N, assembled from the local
// terms; guarded at N <= 6.
Eigen::MatrixXcd dense_liouvillian(const LindbladModel& model);

// Effective non-Hermitian Hamiltonian of one copy on 2^N dimensions:
// right = -iH - (gamma/2) sum_i (S^z_i + 1/2), left = its conjugate.
Eigen::MatrixXcd dense_h_half(const LindbladModel& model, bool right);

struct SpectrumResult {
  Eigen::VectorXcd eigenvalues;   // sorted by decreasing real part
  Eigen::MatrixXcd eigenvectors;  // columns, unit norm, phase-fixed
  int steady_index = 0;
  double gap = 0.0;
  std::vector<int> first_decay_indices;
  Eigen::MatrixXcd first_decay_overlap;  // normalized pairwise overlaps
};

// Eigensolve + steady-state identification. Requires a unique zero mode.
SpectrumResult full_spectrum(const Eigen::MatrixXcd& matrix);

enum class DecayCase { Single, DegenerateOrthogonal, DegenerateNonOrthogonal };

// Orthogonality is judged between distinct degenerate eigenvalues; a
// multi-dimensional eigenspace can always be orthonormalized internally.
DecayCase classify_decay_modes(const SpectrumResult& spec);

// 4^N amplitude vector of the trial state (N <= 6).
Eigen::VectorXcd densify(const TrialState& trial);

// |<rho'|mode>| with both sides L2-normalized.
double fidelity(const TrialState& trial, const Eigen::VectorXcd& mode);

struct CoincidenceReport {
  double max_deviation = 0.0;
  int count = 0;
};

// Compares the eigenvalue multiset of the full bi-base operator with the
// Kronecker-sum spectrum of the two half Hamiltonians. Isotropic only.
CoincidenceReport coincidence_check(const LindbladModel& model);

// Magnon-sector eigendecomposition of the right-copy Hamiltonian plus the
// jump-lowering coefficients between adjacent sectors. Isotropic only.
struct SectorSpectra {
  int n_sites = 0;
  std::vector<std::vector<int>> sector_basis;     // per m: 2^N basis indices
  std::vector<Eigen::VectorXcd> energies;         // per m
  std::vector<Eigen::MatrixXcd> right_vectors;    // per m: d_m x d_m
  std::vector<Eigen::MatrixXcd> left_vectors;     // inverse of right_vectors
  // lower_coefs[m][mu]: (d_{m-1} x d_m), entry (k, j) = <left m-1,k| L_mu |m,j>
  std::vector<std::vector<Eigen::MatrixXcd>> lower_coefs;
};

SectorSpectra sector_spectra(const LindbladModel& model);

// Iterative construction of the bi-base eigenvector with eigenvalue
// E_{m,j} + conj(E_{n,k}); errors out at exceptional points.
Eigen::VectorXcd construct_eigenstate(const SectorSpectra& spectra, int m,
                                      int j, int n, int k);

// (Re, Im, degeneracy) records for plotting, eigenvalues grouped to 1e-8.
std::vector<std::tuple<double, double, int>> spectrum_export(
    const SpectrumResult& spec);

}  // namespace lgap
