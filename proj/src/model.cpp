#include "lgap/model.hpp"

#include <algorithm>

namespace lgap {

Lattice build_chain(int n, bool periodic) {
  if (n < 2) {
    throw ModelError("chain lattice needs at least 2 sites, got " +
                     std::to_string(n));
  }
  Lattice lat;
  lat.sites = n;
  lat.geometry = Geometry::Chain;
  lat.boundary = periodic ? Boundary::Periodic : Boundary::Open;
  for (int j = 0; j + 1 < n; ++j) {
    lat.bonds.emplace_back(j, j + 1);
  }
  if (periodic) {
    lat.bonds.emplace_back(n - 1, 0);
  }
  return lat;
}

Lattice build_square(int lx, int ly, bool periodic) {
  if (lx < 2 || ly < 2) {
    throw ModelError("square lattice extents must be >= 2, got " +
                     std::to_string(lx) + "x" + std::to_string(ly));
  }
  Lattice lat;
  lat.sites = lx * ly;
  lat.geometry = Geometry::Square;
  lat.boundary = periodic ? Boundary::Periodic : Boundary::Open;
  lat.lx = lx;
  lat.ly = ly;
  auto site = [lx](int x, int y) { return y * lx + x; };
  for (int y = 0; y < ly; ++y) {
    for (int x = 0; x < lx; ++x) {
      if (x + 1 < lx) {
        lat.bonds.emplace_back(site(x, y), site(x + 1, y));
      } else if (periodic) {
        lat.bonds.emplace_back(site(x, y), site(0, y));
      }
      if (y + 1 < ly) {
        lat.bonds.emplace_back(site(x, y), site(x, y + 1));
      } else if (periodic) {
        lat.bonds.emplace_back(site(x, y), site(x, 0));
      }
    }
  }
  return lat;
}

LindbladModel build_xyz_model(const Lattice& lattice, double jx, double jy,
                              double jz, double gamma) {
  if (gamma < 0.0) {
    throw ModelError("dissipation rate must be >= 0, got " +
                     std::to_string(gamma));
  }
  LindbladModel model;
  model.lattice = lattice;
  model.jx = jx;
  model.jy = jy;
  model.jz = jz;
  model.gamma = gamma;
  return model;
}

bool BiBaseConfig::is_diagonal() const {
  const int n = half();
  for (int j = 0; j < n; ++j) {
    if (spins[j] != spins[j + n]) return false;
  }
  return true;
}

std::size_t BiBaseConfig::basis_index() const {
  std::size_t idx = 0;
  for (std::int8_t s : spins) {
    idx = (idx << 1) | (s == +1 ? 0u : 1u);
  }
  return idx;
}

BiBaseConfig BiBaseConfig::from_index(std::size_t index, int n_half) {
  BiBaseConfig cfg;
  const int total = 2 * n_half;
  cfg.spins.resize(total);
  for (int s = total - 1; s >= 0; --s) {
    cfg.spins[s] = (index & 1u) ? -1 : +1;
    index >>= 1;
  }
  return cfg;
}

BiBaseConfig BiBaseConfig::all_down(int n_half) {
  BiBaseConfig cfg;
  cfg.spins.assign(2 * n_half, -1);
  return cfg;
}

BiBaseConfig BiBaseConfig::diagonal_from_index(std::size_t l, int n_half) {
  BiBaseConfig cfg;
  cfg.spins.resize(2 * n_half);
  for (int s = n_half - 1; s >= 0; --s) {
    cfg.spins[s] = (l & 1u) ? -1 : +1;
    l >>= 1;
  }
  for (int s = 0; s < n_half; ++s) {
    cfg.spins[s + n_half] = cfg.spins[s];
  }
  return cfg;
}

VectorizedLiouvillian vectorize(const LindbladModel& model) {
  const int n = model.lattice.sites;
  VectorizedLiouvillian liouv;
  liouv.half_sites = n;

  const Complex mi(0.0, -1.0);  // -i on the right-copy Hamiltonian
  const Complex pi_(0.0, +1.0);
  const double flip = 0.25 * (model.jx + model.jy);
  const double pair = 0.25 * (model.jx - model.jy);

  auto add = [&liouv](Complex c, TermKind k, int s0, int s1 = -1) {
    if (c == Complex(0.0, 0.0)) return;
    liouv.terms.push_back({c, k, s0, s1});
  };

  for (const auto& [j, k] : model.lattice.bonds) {
    add(mi * flip, TermKind::FlipFlop, j, k);
    add(mi * pair, TermKind::PairRaise, j, k);
    add(mi * pair, TermKind::PairLower, j, k);
    add(mi * model.jz, TermKind::ZZ, j, k);

    add(pi_ * flip, TermKind::FlipFlop, j + n, k + n);
    add(pi_ * pair, TermKind::PairRaise, j + n, k + n);
    add(pi_ * pair, TermKind::PairLower, j + n, k + n);
    add(pi_ * model.jz, TermKind::ZZ, j + n, k + n);
  }

  // gamma/2 * (2 S-_R S-_L - S^z_R - S^z_L - 1) per site.
  const double g = model.gamma;
  if (g != 0.0) {
    for (int i = 0; i < n; ++i) {
      add(Complex(g, 0.0), TermKind::PairLower, i, i + n);
      add(Complex(-0.5 * g, 0.0), TermKind::Z, i);
      add(Complex(-0.5 * g, 0.0), TermKind::Z, i + n);
    }
    add(Complex(-0.5 * g * n, 0.0), TermKind::Shift, 0);
  }

  liouv.has_diagonal = std::any_of(
      liouv.terms.begin(), liouv.terms.end(), [](const LocalTerm& t) {
        return t.kind == TermKind::Z || t.kind == TermKind::ZZ ||
               t.kind == TermKind::Shift;
      });
  return liouv;
}

namespace {

std::vector<Connection> collect_connections(const VectorizedLiouvillian& liouv,
                                            const BiBaseConfig& x,
                                            bool bra_side) {
  std::vector<Connection> out;
  for_each_connection(liouv, x, bra_side,
                      [&](const int* flips, int n_flips, Complex amp) {
                        BiBaseConfig cfg = x;
                        for (int f = 0; f < n_flips; ++f) {
                          cfg.spins[flips[f]] *= -1;
                        }
                        for (Connection& c : out) {
                          if (c.config == cfg) {
                            c.amplitude += amp;
                            return;
                          }
                        }
                        out.push_back({std::move(cfg), amp});
                      });
  // Diagonal entry first when present.
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].config == x) {
      std::swap(out[0], out[i]);
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<Connection> connections(const VectorizedLiouvillian& liouv,
                                    const BiBaseConfig& x) {
  return collect_connections(liouv, x, /*bra_side=*/false);
}

std::vector<Connection> bra_connections(const VectorizedLiouvillian& liouv,
                                        const BiBaseConfig& x) {
  return collect_connections(liouv, x, /*bra_side=*/true);
}

}  // namespace lgap
