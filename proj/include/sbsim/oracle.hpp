#pragma once

// Brute-force reference implementations. Everything here works with explicit matrices and
// never calls the closed forms in dynamics.hpp / fidelity.hpp.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "sbsim/dynamics.hpp"
#include "sbsim/environment.hpp"
#include "sbsim/errors.hpp"
#include "sbsim/vector3.hpp"

namespace sbsim::oracle {

using Complex2x2 = Eigen::Matrix2cd;
using Matrix = Eigen::MatrixXcd;

inline constexpr std::size_t kMaxBathSpins = 8;

inline Complex2x2 pauli_x() { return (Complex2x2() << 0, 1, 1, 0).finished(); }
inline Complex2x2 pauli_y() {
  return (Complex2x2() << 0, Complex(0, -1), Complex(0, 1), 0).finished();
}
inline Complex2x2 pauli_z() { return (Complex2x2() << 1, 0, 0, -1).finished(); }

/// exp[-i t (axis . sigma) / 2] from the half-angle form.
inline Complex2x2 su2_exponential(const Vector3& axis, double t) {
  const double rate = norm(axis);
  const double half = 0.5 * rate * t;
  Complex2x2 u = std::cos(half) * Complex2x2::Identity();
  if (rate > 0.0) {
    const Vector3 n = axis * (1.0 / rate);
    const Complex2x2 n_sigma = n.x * pauli_x() + n.y * pauli_y() + n.z * pauli_z();
    u -= Complex(0.0, std::sin(half)) * n_sigma;
  }
  return u;
}

inline Complex2x2 bloch_density(const Vector3& b) {
  return 0.5 * (Complex2x2::Identity() + b.x * pauli_x() + b.y * pauli_y() + b.z * pauli_z());
}

inline Complex2x2 initial_density(const NuclearSpin& s) { return bloch_density({0.0, 0.0, s.p}); }

/// Conditional Hamiltonian axis for level m, built from the coupling components directly.
inline Vector3 conditional_axis(const NuclearSpin& s, int m) { return {m * s.a_x, m * s.a_y, s.omega + m * s.a_z}; }

inline Complex2x2 conditional_unitary(const NuclearSpin& s, int m, double t) {
  return su2_exponential(conditional_axis(s, m), t);
}

/// Tr(U_m rho U_m'^dagger) with explicit 2x2 matrices.
inline Complex gamma_oracle(const NuclearSpin& s, QubitPair pair, double t) {
  const Complex2x2 um = conditional_unitary(s, pair.m, t);
  const Complex2x2 ump = conditional_unitary(s, pair.m_prime, t);
  return (um * initial_density(s) * ump.adjoint()).trace();
}

inline Complex2x2 conditional_density(const NuclearSpin& s, int m, double t) {
  const Complex2x2 u = conditional_unitary(s, m, t);
  return u * initial_density(s) * u.adjoint();
}

/// Square root of a Hermitian PSD matrix via eigen-decomposition; negative round-off clipped.
inline Matrix psd_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {

/// Eigenvalues of a 2x2 Hermitian matrix from the quadratic formula.
inline std::pair<double, double> hermitian_eigenvalues_2x2(const Complex2x2& a) {
  const double tr = 0.5 * (a(0, 0).real() + a(1, 1).real());
  const double diff = 0.5 * (a(0, 0).real() - a(1, 1).real());
  const double off = std::abs(0.5 * (a(0, 1) + std::conj(a(1, 0))));
  const double r = std::hypot(diff, off);
  return {tr - r, tr + r};
}

inline Complex2x2 psd_sqrt_2x2(const Complex2x2& a) {
  const auto [lo, hi] = hermitian_eigenvalues_2x2(a);
  const double s_lo = std::sqrt(std::max(lo, 0.0));
  const double s_hi = std::sqrt(std::max(hi, 0.0));
  if (hi - lo < 1e-300) return s_hi * Complex2x2::Identity();
  // spectral projector onto the larger eigenvalue
  const Complex2x2 p_hi = (a - lo * Complex2x2::Identity()) / (hi - lo);
  return s_lo * Complex2x2::Identity() + (s_hi - s_lo) * p_hi;
}

}  // namespace detail

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 for 2x2 states, analytic eigen-decomposition.
/// Evaluated as (s1 + s2)^2 with s_i the singular values of sqrt(rho) sqrt(sigma), using
/// s1^2 + s2^2 = |M|_F^2 and s1 s2 = |det M|; this avoids square roots of tiny eigenvalues.
inline double uhlmann_fidelity(const Complex2x2& rho, const Complex2x2& sigma) {
  const Complex2x2 m = detail::psd_sqrt_2x2(rho) * detail::psd_sqrt_2x2(sigma);
  return m.squaredNorm() + 2.0 * std::abs(m.determinant());
}

/// Uhlmann fidelity for arbitrary dimension.
inline double uhlmann_fidelity(const Matrix& rho, const Matrix& sigma) {
  const Matrix sr = psd_sqrt(rho);
  const Matrix inner = sr * sigma * sr;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (inner + inner.adjoint()), Eigen::EigenvaluesOnly);
  const double root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return root * root;
}

/// Partial trace of a 2^n x 2^n operator keeping the listed qubits (bit i <-> spin i).
inline Matrix partial_trace_keep(const Matrix& op, std::size_t n, std::span<const std::size_t> keep) {
  const std::size_t kept = keep.size();
  std::vector<std::size_t> traced;
  for (std::size_t i = 0; i < n; ++i)
    if (std::find(keep.begin(), keep.end(), i) == keep.end()) traced.push_back(i);
  const auto compose = [&](std::size_t kept_bits, std::size_t traced_bits) {
    std::size_t full = 0;
    for (std::size_t j = 0; j < kept; ++j)
      if ((kept_bits >> j) & 1U) full |= std::size_t{1} << keep[j];
    for (std::size_t j = 0; j < traced.size(); ++j)
      if ((traced_bits >> j) & 1U) full |= std::size_t{1} << traced[j];
    return full;
  };
  const std::size_t dk = std::size_t{1} << kept;
  const std::size_t dt = std::size_t{1} << traced.size();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t a = 0; a < dk; ++a)
    for (std::size_t b = 0; b < dk; ++b) {
      Complex acc{0.0, 0.0};
      for (std::size_t e = 0; e < dt; ++e)
        acc += op(static_cast<Eigen::Index>(compose(a, e)), static_cast<Eigen::Index>(compose(b, e)));
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = acc;
    }
  return out;
}

/// Qubit (levels m, m') times n bath spins. Row/column index = branch * 2^n + bath index;
/// bit k of the bath index is spin k, 0 = up.
struct JointState {
  std::size_t bath_spins{0};
  Matrix rho;

  [[nodiscard]] Eigen::Index bath_dim() const { return Eigen::Index{1} << bath_spins; }

  [[nodiscard]] Matrix block(int row_branch, int col_branch) const {
    const Eigen::Index d = bath_dim();
    return rho.block(row_branch * d, col_branch * d, d, d);
  }
};

/// Many-body conditional Hamiltonian sum_k omega_k I_z^k + m a_k . I^k on 2^n states.
inline Matrix bath_hamiltonian(std::span<const NuclearSpin> spins, int m) {
  const std::size_t n = spins.size();
  const Eigen::Index d = Eigen::Index{1} << n;
  Matrix h = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector3 axis = conditional_axis(spins[k], m);
    const std::size_t bit = std::size_t{1} << k;
    for (Eigen::Index s = 0; s < d; ++s) {
      const bool down = (static_cast<std::size_t>(s) & bit) != 0;
      h(s, s) += 0.5 * axis.z * (down ? -1.0 : 1.0);
      const Eigen::Index flipped = static_cast<Eigen::Index>(static_cast<std::size_t>(s) ^ bit);
      // <up|ax I_x + ay I_y|down> = (ax - i ay)/2, <down|...|up> = (ax + i ay)/2
      h(flipped, s) += down ? 0.5 * Complex(axis.x, -axis.y) : 0.5 * Complex(axis.x, axis.y);
    }
  }
  return h;
}

/// exp(-i H t) of a Hermitian matrix via its eigen-decomposition.
class HermitianPropagator {
 public:
  explicit HermitianPropagator(const Matrix& h)
      : es_(0.5 * (h + h.adjoint())), diagonal_(h.isDiagonal(0.0)), diag_(h.diagonal().real()) {}

  [[nodiscard]] Eigen::VectorXcd phases(double t) const {
    return (es_.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
  }

  [[nodiscard]] Matrix at(double t) const {
    if (diagonal_) {
      // exp of a diagonal matrix; skips the dense products
      const Eigen::VectorXcd ph = (diag_.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
      return ph.asDiagonal();
    }
    return es_.eigenvectors() * phases(t).asDiagonal() * es_.eigenvectors().adjoint();
  }

  [[nodiscard]] const Matrix& eigenvectors() const { return es_.eigenvectors(); }

 private:
  Eigen::SelfAdjointEigenSolver<Matrix> es_;
  bool diagonal_;
  Eigen::VectorXd diag_;
};

/// Initial product state of the bath, prod_k (1 + p_k sigma_z^k) / 2 (diagonal).
inline Eigen::VectorXd initial_bath_populations(std::span<const NuclearSpin> spins) {
  const Eigen::Index d = Eigen::Index{1} << spins.size();
  Eigen::VectorXd pop(d);
  for (Eigen::Index s = 0; s < d; ++s) {
    double w = 1.0;
    for (std::size_t k = 0; k < spins.size(); ++k) {
      const bool down = ((static_cast<std::size_t>(s) >> k) & 1U) != 0;
      w *= 0.5 * (1.0 + (down ? -spins[k].p : spins[k].p));
    }
    pop(s) = w;
  }
  return pop;
}

/// Exact joint qubit-bath evolution for n <= 8 spins.
class MultiSpinBruteForce {
 public:
  MultiSpinBruteForce(std::span<const NuclearSpin> spins, Complex c0, Complex c1, QubitPair pair)
      : spins_(spins.begin(), spins.end()), c0_(c0), c1_(c1), pair_(pair) {
    if (spins_.size() > kMaxBathSpins)
      throw SizeError("brute-force oracle supports at most 8 bath spins, got " + std::to_string(spins_.size()));
    population_ = initial_bath_populations(spins_);
    if (!spins_.empty()) {
      prop_m_.emplace_back(bath_hamiltonian(spins_, pair.m));
      prop_m_.emplace_back(bath_hamiltonian(spins_, pair.m_prime));
      const Matrix& v0 = prop_m_[0].eigenvectors();
      const Matrix& v1 = prop_m_[1].eigenvectors();
      cross_ = v0.adjoint() * population_.cast<Complex>().asDiagonal() * v1;
      overlap_ = v1.adjoint() * v0;
    }
  }

  /// Bath propagator of qubit branch 0 (level m) or 1 (level m').
  [[nodiscard]] Matrix propagator(int branch, double t) const {
    const Eigen::Index d = Eigen::Index{1} << spins_.size();
    if (spins_.empty()) return Matrix::Identity(d, d);
    return prop_m_[static_cast<std::size_t>(branch)].at(t);
  }

  /// Tr(U_m rho_E U_m'^dagger) evaluated in the branch eigenbases, without forming the joint state.
  /// Equal to decoherence_factor(evolve(t)); cheap enough for many time points at n = 8.
  [[nodiscard]] Complex decoherence_factor_at(double t) const {
    if (spins_.empty()) return {1.0, 0.0};
    const Eigen::VectorXcd p0 = prop_m_[0].phases(t);
    const Eigen::VectorXcd p1 = prop_m_[1].phases(t).conjugate();
    Complex acc{0.0, 0.0};
    for (Eigen::Index a = 0; a < cross_.rows(); ++a)
      for (Eigen::Index b = 0; b < cross_.cols(); ++b) acc += p0(a) * cross_(a, b) * p1(b) * overlap_(b, a);
    return acc;
  }

  /// Reduced bath state of one branch, Tr_rest(U rho_E U^dagger), from the columns of U.
  [[nodiscard]] Matrix conditional_state_at(int branch, double t, std::span<const std::size_t> keep) const {
    const std::size_t n = spins_.size();
    const Matrix u = propagator(branch, t);
    std::vector<std::size_t> traced;
    for (std::size_t i = 0; i < n; ++i)
      if (std::find(keep.begin(), keep.end(), i) == keep.end()) traced.push_back(i);
    const Eigen::Index dk = Eigen::Index{1} << keep.size();
    const Eigen::Index dt = Eigen::Index{1} << traced.size();
    const Eigen::Index d = u.rows();
    // x(a, e * d + s) = sqrt(p_s) <a e|U|s>, so that rho_keep = x x^dagger
    Matrix x(dk, dt * d);
    for (Eigen::Index a = 0; a < dk; ++a)
      for (Eigen::Index e = 0; e < dt; ++e) {
        std::size_t full = 0;
        for (std::size_t j = 0; j < keep.size(); ++j)
          if ((static_cast<std::size_t>(a) >> j) & 1U) full |= std::size_t{1} << keep[j];
        for (std::size_t j = 0; j < traced.size(); ++j)
          if ((static_cast<std::size_t>(e) >> j) & 1U) full |= std::size_t{1} << traced[j];
        for (Eigen::Index s = 0; s < d; ++s)
          x(a, e * d + s) = std::sqrt(population_(s)) * u(static_cast<Eigen::Index>(full), s);
      }
    return x * x.adjoint();
  }

  [[nodiscard]] std::size_t size() const { return spins_.size(); }

  [[nodiscard]] JointState evolve(double t) const {
    const Eigen::Index d = Eigen::Index{1} << spins_.size();
    const Matrix u0 = propagator(0, t);
    const Matrix u1 = propagator(1, t);
    const Matrix u0_rho = u0 * population_.cast<Complex>().asDiagonal();
    const Matrix u1_rho = u1 * population_.cast<Complex>().asDiagonal();
    JointState js;
    js.bath_spins = spins_.size();
    js.rho.resize(2 * d, 2 * d);
    js.rho.block(0, 0, d, d) = std::norm(c0_) * (u0_rho * u0.adjoint());
    js.rho.block(0, d, d, d) = (c0_ * std::conj(c1_)) * (u0_rho * u1.adjoint());
    js.rho.block(d, 0, d, d) = (c1_ * std::conj(c0_)) * (u1_rho * u0.adjoint());
    js.rho.block(d, d, d, d) = std::norm(c1_) * (u1_rho * u1.adjoint());
    return js;
  }

  /// Off-diagonal qubit element of the bath-traced state, normalized by c0 c1^*.
  [[nodiscard]] Complex decoherence_factor(const JointState& js) const {
    const Complex norm_amp = c0_ * std::conj(c1_);
    if (norm_amp == Complex{0.0, 0.0}) return {0.0, 0.0};
    return js.block(0, 1).trace() / norm_amp;
  }

  /// Bath state conditioned on qubit branch (0 -> level m, 1 -> level m'), reduced to `keep`.
  [[nodiscard]] Matrix conditional_state(const JointState& js, int branch, std::span<const std::size_t> keep) const {
    const double weight = branch == 0 ? std::norm(c0_) : std::norm(c1_);
    if (weight == 0.0) throw UndefinedQuantity("qubit branch carries no population");
    return partial_trace_keep(js.block(branch, branch) / weight, spins_.size(), keep);
  }

 private:
  std::vector<NuclearSpin> spins_;
  Complex c0_;
  Complex c1_;
  QubitPair pair_;
  Eigen::VectorXd population_;
  std::vector<HermitianPropagator> prop_m_;
  Matrix cross_;    // V_m^dagger rho_E V_m'
  Matrix overlap_;  // V_m'^dagger V_m
};

struct SbsToyResult {
  Complex gamma;                         // decoherence factor of the unobserved spins
  std::vector<double> fidelities;        // one per macrofraction, conditional states m vs m'
  double sbs_distance{1.0};              // max(|gamma|, max fidelity)
};

/// Joint-state SBS diagnostic at one time: the unobserved spins are traced from their own
/// exact evolution, each macrofraction state is obtained by partial trace of the observed block.
inline SbsToyResult sbs_brute_force(std::span<const NuclearSpin> spins, std::span<const std::size_t> unobserved,
                                    const std::vector<std::vector<std::size_t>>& macrofractions, Complex c0,
                                    Complex c1, QubitPair pair, double t) {
  std::vector<NuclearSpin> unobs;
  for (auto i : unobserved) unobs.push_back(spins[i]);
  std::vector<NuclearSpin> obs;
  std::vector<std::vector<std::size_t>> local(macrofractions.size());
  for (std::size_t j = 0; j < macrofractions.size(); ++j)
    for (auto i : macrofractions[j]) {
      local[j].push_back(obs.size());
      obs.push_back(spins[i]);
    }
  if (unobs.size() + obs.size() > kMaxBathSpins) throw SizeError("brute-force oracle supports at most 8 bath spins");

  SbsToyResult out;
  const MultiSpinBruteForce unobserved_sim(unobs, c0, c1, pair);
  out.gamma = unobserved_sim.decoherence_factor(unobserved_sim.evolve(t));
  const MultiSpinBruteForce observed_sim(obs, c0, c1, pair);
  const JointState js = observed_sim.evolve(t);
  double worst = std::abs(out.gamma);
  for (const auto& mf : local) {
    const Matrix r0 = observed_sim.conditional_state(js, 0, mf);
    const Matrix r1 = observed_sim.conditional_state(js, 1, mf);
    out.fidelities.push_back(uhlmann_fidelity(r0, r1));
    worst = std::max(worst, out.fidelities.back());
  }
  out.sbs_distance = worst;
  return out;
}

}  // namespace sbsim::oracle
