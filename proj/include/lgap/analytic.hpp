#pragma once

#include <span>
#include <vector>

#include "lgap/common.hpp"

namespace lgap {

// Isotropic-model gap: half the dissipation rate, independent of the
// couplings, system size and geometry.
double xxz_gap(double gamma);

// Real part of the m-magnon band of the bi-base spectrum: -gamma*m/2 for
// 0 <= m <= 2N (right and left magnons combined).
double magnon_real_part(int m, double gamma, int n_sites);

// Sign of the imaginary part: Left carries +i, Right carries -i.
enum class BetheBranch { Left, Right };

// E({k}_m) = -(gamma/2) m -+ i sum_j (2 J cos k_j - J_z), no reference
// offset (the right/left reference energies cancel in the full operator).
//
// Convention: J is the magnon hopping amplitude of the half-copy chain
// (band 2 J cos k). One copy of the doubled-lattice operator built from
// couplings (Jx, Jy, Jz) hops with amplitude (Jx + Jy)/4, so to describe
// one copy of build_xyz_model(J, J, Jz, gamma) call these routines with
// J/2; with J as given they describe the sector spectra of the doubled
// exchange model (2J, 2J, Jz, gamma).
Complex bethe_energy(std::span<const Complex> roots, double j, double jz,
                     double gamma, BetheBranch branch);

// Same energy shifted by the reference-state eigenvalue E_g = -i J_z N / 4
// of the right-copy Hamiltonian, for sector-resolved comparisons.
Complex bethe_energy_h_right(std::span<const Complex> roots, int n, double j,
                             double jz, double gamma);

// Single-magnon quasi-momenta 2 pi n / N.
std::vector<double> solve_bethe_m1(int n);

struct BetheSolution {
  int magnons = 0;
  std::vector<Complex> roots;
  // bethe_energy at gamma = 0 (roots are gamma-independent); add
  // -gamma*m/2 for a dissipative model.
  Complex energy;
  // Worst |e^{i k N} - rhs| over the pair; for degenerate pairs (both
  // sides of the scattering ratio vanish) it is the pole-free residual.
  double residual = 0.0;
};

struct BetheM2Result {
  std::vector<BetheSolution> solutions;
  int expected = 0;  // C(N, 2)
  bool complete = false;
};

// Two-magnon roots by multi-start damped Newton iteration; deduplicated up
// to magnon exchange and 2 pi shifts.
BetheM2Result solve_bethe_m2(int n, double j, double jz);

enum class MeanFieldPhase { UniqueGapped, Degenerate };

struct MeanFieldResult {
  double sx = 0.0, sy = 0.0, sz = -0.5;
  MeanFieldPhase phase = MeanFieldPhase::UniqueGapped;
  double discriminant = 0.0;  // 4 (Jy-Jz)(Jz-Jx) - gamma^2
};

// Site-factorized steady state of the averaged adjoint equations. The
// degenerate phase needs gamma^2 < 4 (Jy-Jz)(Jz-Jx) strictly; otherwise
// the fully down-polarized solution is returned.
MeanFieldResult meanfield_steady_state(double jx, double jy, double jz,
                                       double gamma);

// Time derivatives of (<Sx>, <Sy>, <Sz>) under the averaged adjoint
// equations; the fixed-point residual check of the result.
void meanfield_flow(double jx, double jy, double jz, double gamma,
                    const MeanFieldResult& state, double out[3]);

}  // namespace lgap
