#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lgap/common.hpp"

namespace lgap {

enum class Geometry { Chain, Square };
enum class Boundary { Periodic, Open };

// Bonds are ordered pairs. On the periodic 2-site chain and on wrap
// directions of the 2x2 torus the same site pair appears twice (once per
// direction); the Hamiltonian sums over these ordered bonds as-is, so the
// doubled coupling is intentional and shared by every consumer.
struct Lattice {
  int sites = 0;
  std::vector<std::pair<int, int>> bonds;
  Geometry geometry = Geometry::Chain;
  Boundary boundary = Boundary::Periodic;
  int lx = 0, ly = 0;  // square extents
};

Lattice build_chain(int n, bool periodic);
Lattice build_square(int lx, int ly, bool periodic);

// Spin-1/2 XYZ model with a per-site lowering jump channel, rate gamma/2
// outside the dissipator bracket and a factor 2 on the jump term.
struct LindbladModel {
  Lattice lattice;
  double jx = 0.0, jy = 0.0, jz = 0.0;
  double gamma = 0.0;

  bool isotropic() const { return jx == jy; }
};

LindbladModel build_xyz_model(const Lattice& lattice, double jx, double jy,
                              double jz, double gamma);

// Classical configuration of the doubled lattice: 2N spins valued +-1,
// right (ket) half at sites [0, N), left (bra) half at [N, 2N).
struct BiBaseConfig {
  std::vector<std::int8_t> spins;

  int size() const { return static_cast<int>(spins.size()); }
  int half() const { return size() / 2; }
  bool is_diagonal() const;

  // Basis index with site 0 as the most significant bit; spin up maps to
  // bit 0 so the all-up configuration is index 0. Equals m*2^N + n for
  // right-half index m and left-half index n.
  std::size_t basis_index() const;
  static BiBaseConfig from_index(std::size_t index, int n_half);
  static BiBaseConfig all_down(int n_half);
  // Diagonal configuration (l, l) from a 2^N index l.
  static BiBaseConfig diagonal_from_index(std::size_t l, int n_half);

  bool operator==(const BiBaseConfig&) const = default;
};

enum class TermKind : std::uint8_t {
  Z,          // S^z on one site
  ZZ,         // S^z S^z on two sites
  FlipFlop,   // S^+S^- + S^-S^+
  PairRaise,  // S^+S^+
  PairLower,  // S^-S^-
  Shift,      // multiple of the identity
};

struct LocalTerm {
  Complex coeff;
  TermKind kind;
  int s0 = -1;
  int s1 = -1;
};

// The bi-base image of the Liouvillian: a sum of local terms on the
// 2N-site doubled lattice, dense-equivalent to
// -iH (x) I + iI (x) H^T + sum_mu (2 L_mu (x) L_mu^* - L_mu^+L_mu (x) I
//                                  - I (x) L_mu^T L_mu^*).
struct VectorizedLiouvillian {
  int half_sites = 0;
  std::vector<LocalTerm> terms;
  bool has_diagonal = false;  // any Z/ZZ/Shift term present
};

VectorizedLiouvillian vectorize(const LindbladModel& model);

struct Connection {
  BiBaseConfig config;
  Complex amplitude;
};

// Action on the ket: pairs (x', <x'|L|x>). The first entry is the
// diagonal one whenever the operator has any diagonal term.
std::vector<Connection> connections(const VectorizedLiouvillian& liouv,
                                    const BiBaseConfig& x);

// Row of the bra: pairs (x', <x|L|x'>), as required by the stochastic
// estimator sum_{x'} <x|L|x'> rho(x')/rho(x).
std::vector<Connection> bra_connections(const VectorizedLiouvillian& liouv,
                                        const BiBaseConfig& x);

// Zero-allocation enumeration of the matrix entries touching x. Calls
// fn(flips, n_flips, amplitude) for every connected configuration, where
// flips[0..n_flips) are the sites at which x' differs from x; the diagonal
// entry is reported with n_flips = 0 (only when emit_diagonal is set).
template <typename Fn>
void for_each_term_connection(const std::vector<LocalTerm>& terms,
                              const BiBaseConfig& x, bool bra_side,
                              bool emit_diagonal, Fn&& fn) {
  Complex diag(0.0, 0.0);
  int flips[2];
  for (const LocalTerm& t : terms) {
    switch (t.kind) {
      case TermKind::Z:
        diag += t.coeff * (0.5 * x.spins[t.s0]);
        break;
      case TermKind::ZZ:
        diag += t.coeff * (0.25 * x.spins[t.s0] * x.spins[t.s1]);
        break;
      case TermKind::Shift:
        diag += t.coeff;
        break;
      case TermKind::FlipFlop:
        if (x.spins[t.s0] != x.spins[t.s1]) {
          flips[0] = t.s0;
          flips[1] = t.s1;
          fn(flips, 2, t.coeff);
        }
        break;
      case TermKind::PairRaise: {
        // ket side: S+S+ demands both spins down in x; bra side: both up.
        const std::int8_t want = bra_side ? +1 : -1;
        if (x.spins[t.s0] == want && x.spins[t.s1] == want) {
          flips[0] = t.s0;
          flips[1] = t.s1;
          fn(flips, 2, t.coeff);
        }
        break;
      }
      case TermKind::PairLower: {
        const std::int8_t want = bra_side ? -1 : +1;
        if (x.spins[t.s0] == want && x.spins[t.s1] == want) {
          flips[0] = t.s0;
          flips[1] = t.s1;
          fn(flips, 2, t.coeff);
        }
        break;
      }
    }
  }
  if (emit_diagonal) {
    fn(flips, 0, diag);
  }
}

template <typename Fn>
void for_each_connection(const VectorizedLiouvillian& liouv,
                         const BiBaseConfig& x, bool bra_side, Fn&& fn) {
  for_each_term_connection(liouv.terms, x, bra_side, liouv.has_diagonal,
                           static_cast<Fn&&>(fn));
}

}  // namespace lgap
