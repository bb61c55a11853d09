#pragma once

#include <Eigen/Dense>
#include <span>

#include "lgap/common.hpp"
#include "lgap/model.hpp"
#include "lgap/rng.hpp"

namespace lgap {

// Complex weights of the bi-base amplitude
//   rho(x) = exp(sum_j a_j s_{j,R} + b_j s_{j,L}) * prod_k cosh(theta_k),
//   theta_k = c_k + sum_j wr_{k,j} s_{j,R} + sum_j wl_{k,j} s_{j,L}.
// The optimizer sees the parameters as a flat real vector: complex entry
// kappa occupies real slots 2*kappa (real part) and 2*kappa+1 (imaginary
// part), in the order a, b, c, wr (column-major), wl.
struct RbmParameters {
  int n = 0;  // visible half-size
  int m = 0;  // hidden count
  Eigen::VectorXcd a, b;      // n each
  Eigen::VectorXcd c;         // m
  Eigen::MatrixXcd wr, wl;    // m x n

  int complex_count() const { return 2 * n + m + 2 * m * n; }
  int real_count() const { return 2 * complex_count(); }

  Eigen::VectorXd flatten() const;
  static RbmParameters unflatten(int n, int m, const Eigen::VectorXd& flat);
  void add_flat(const Eigen::VectorXd& delta);
};

RbmParameters init_parameters(int n, int m, double scale, Rng& rng);

// Fixed nonzero-trace matrix subtracted from the RBM part to keep the
// trial state traceless.
struct AncillaryState {
  enum class Kind { Identity, ProductBiBase };
  Kind kind = Kind::Identity;
  BiBaseConfig config;  // ProductBiBase only

  static AncillaryState identity();
  static AncillaryState product(BiBaseConfig cfg);
  static AncillaryState all_down(int n_half);

  // 1 on the support of the matrix, 0 elsewhere.
  double amplitude(const BiBaseConfig& x) const;
  // 2^N for identity; 1 (diagonal config) or 0 otherwise for a product.
  double trace(int n_half) const;
};

struct TrialState {
  RbmParameters rbm;
  AncillaryState ancillary;
  Complex alpha{0.0, 0.0};
  Complex rbm_trace{0.0, 0.0};  // cached estimate behind alpha
};

// Branch-consistent sum log of the RBM amplitude.
Complex log_amplitude(const RbmParameters& rbm, const BiBaseConfig& x);

// Per-configuration cache of the hidden arguments theta_k plus the log
// amplitude of the tracked configuration.
class LookupTable {
 public:
  void rebuild(const RbmParameters& rbm, const BiBaseConfig& x);

  const Eigen::VectorXcd& theta() const { return theta_; }
  Complex log_amp() const { return log_amp_; }

  // log(rho(x')/rho(x)) for flipping `flips` (repeats cancel pairwise).
  Complex log_ratio(const RbmParameters& rbm, const BiBaseConfig& x,
                    std::span<const int> flips) const;

  // Commit flips: updates x, theta and the cached log amplitude.
  void apply_flips(const RbmParameters& rbm, BiBaseConfig& x,
                   std::span<const int> flips);

 private:
  Eigen::VectorXcd theta_;
  Complex log_amp_{0.0, 0.0};
  long updates_since_rebuild_ = 0;
};

// rho(x')/rho(x) in O(M * |flips|).
Complex amplitude_ratio(const RbmParameters& rbm, const LookupTable& table,
                        const BiBaseConfig& x, std::span<const int> flips);

// alpha * anc(x) + rho_rbm(x).
Complex trial_amplitude(const TrialState& trial, const BiBaseConfig& x);

enum class OkVariant {
  ChainRule,  // closed forms times rho_rbm/rho'
  Plain,      // closed forms as written
};

// Holomorphic derivatives d ln rho_rbm / d p_kappa over the complex
// parameter layout; out must have complex_count() entries. theta is the
// cached hidden-argument vector for x.
void rbm_log_derivatives(const RbmParameters& rbm, const BiBaseConfig& x,
                         const Eigen::VectorXcd& theta,
                         Eigen::VectorXcd& out);

// Full real-indexed O_k(x) = d_k ln <x|rho'> with alpha frozen; entry
// 2*kappa+1 equals i times entry 2*kappa times nothing else.
Eigen::VectorXcd log_derivatives(const TrialState& trial,
                                 const BiBaseConfig& x, OkVariant variant);

// alpha <- -trace_estimate / Tr(rho'_0).
void refresh_alpha(TrialState& trial, Complex trace_estimate);

}  // namespace lgap
