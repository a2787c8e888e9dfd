#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "sbsim/dynamics.hpp"
#include "sbsim/environment.hpp"
#include "sbsim/errors.hpp"
#include "sbsim/vector3.hpp"

namespace sbsim {

/// Single spin-1/2 density matrix rho = (1 + b . sigma) / 2.
struct BlochState {
  Vector3 bloch;

  [[nodiscard]] double purity() const { return 0.5 * (1.0 + norm_sq(bloch)); }
  [[nodiscard]] bool valid(double tol = 1e-12) const { return is_finite(bloch) && norm(bloch) <= 1.0 + tol; }

  static BlochState polarized(double p) { return {{0.0, 0.0, p}}; }
};

/// Fidelity of conditional macrofraction states for one qubit pair, sampled on a time grid.
struct FidelityCurve {
  std::size_t macrofraction{0};
  QubitPair pair;
  std::vector<double> values;
};

/// rho_m(t) = U_m rho(0) U_m^dagger: the initial Bloch vector (0,0,p) precessing about the
/// conditional axis by angle rate * t (Rodrigues form, written to stay finite as rate -> 0).
inline BlochState conditional_state(const NuclearSpin& s, int m, double t) {
  const auto prec = ConditionalPrecession::of(s, m);
  const Vector3 b{0.0, 0.0, s.p};
  const double c = std::cos(0.5 * prec.rate * t);
  const double sr = detail::half_sin_over_rate(prec.rate, t);
  // cos(theta) b + sin(theta)/rate (h x b) + (1 - cos(theta))/rate^2 h (h . b)
  const double cos_theta = 1.0 - 2.0 * (prec.rate * sr) * (prec.rate * sr);
  const Vector3 out = cos_theta * b + (2.0 * sr * c) * cross(prec.axis, b) + (2.0 * sr * sr * dot(prec.axis, b)) * prec.axis;
  return {out};
}

/// Tr(rho sigma) + 2 sqrt(det rho det sigma) in Bloch form.
inline double fidelity_2x2(const BlochState& rho, const BlochState& sigma) {
  const double mixed = (1.0 - norm_sq(rho.bloch)) * (1.0 - norm_sq(sigma.bloch));
  const double f = 0.5 * (1.0 + dot(rho.bloch, sigma.bloch)) + 0.5 * std::sqrt(std::max(0.0, mixed));
  return std::clamp(f, 0.0, 1.0);
}

/// Conditional-state fidelity of one nucleus. For the (0,1) qubit (either order) this is
/// 1 - (a_perp / rate)^2 p^2 sin^2(rate t / 2); otherwise the two precessed Bloch vectors are compared.
inline double fidelity_single_closed(const NuclearSpin& s, QubitPair pair, double t) {
  const bool zero_one = (pair.m == 0 && pair.m_prime == 1) || (pair.m == 1 && pair.m_prime == 0);
  if (zero_one) {
    const double rate = std::hypot(s.a_perp, s.omega + s.a_z);
    const double sr = detail::half_sin_over_rate(rate, t);
    const double x = s.a_perp * sr;  // (a_perp / rate) sin(rate t / 2)
    return std::clamp(1.0 - s.p * s.p * x * x, 0.0, 1.0);
  }
  return fidelity_2x2(conditional_state(s, pair.m, t), conditional_state(s, pair.m_prime, t));
}

/// Expanded closed form for a general (m, m') qubit exactly as it is usually printed.
/// Diagnostic only: it is not symmetric under m <-> m' and matches fidelity_single_closed
/// only when m == 0.
inline double fidelity_expanded_form(const NuclearSpin& s, QubitPair pair, double t) {
  const double m = pair.m;
  const double mp = pair.m_prime;
  const double ap2 = s.a_perp * s.a_perp;
  const double lz_m = m * s.a_z + s.omega;
  const double lz_mp = mp * s.a_z + s.omega;
  const double w_m = std::hypot(m * s.a_perp, lz_m);
  const double w_mp = std::hypot(mp * s.a_perp, lz_mp);
  const double sr_m = detail::half_sin_over_rate(w_m, t);    // sin(w_m t/2)/w_m
  const double sr_mp = detail::half_sin_over_rate(w_mp, t);
  const double c_m = std::cos(0.5 * w_m * t);
  const double c_mp = std::cos(0.5 * w_mp * t);
  const double first = ap2 * (m * m * sr_m * sr_m - mp * mp * sr_mp * sr_mp);
  // sin(w t) / w = 2 sr c
  const double second = 2.0 * m * mp *
                        (ap2 * lz_m * lz_mp * sr_m * sr_mp / (w_m * w_mp == 0.0 ? 1.0 : w_m * w_mp) +
                         ap2 * (2.0 * sr_m * c_m) * (2.0 * sr_mp * c_mp));
  const double third = 2.0 * m * m * mp * mp * ap2 * ap2 * sr_m * sr_m * sr_mp * sr_mp;
  return 1.0 + s.p * s.p * (first + second + third);
}

namespace detail {

/// Product of real factors in [0, 1]; log space beyond 64 factors.
inline double real_product(std::span<const double> factors) {
  if (factors.size() <= kLogProductThreshold) {
    double prod = 1.0;
    for (double f : factors) prod *= f;
    return prod;
  }
  double log_sum = 0.0;
  for (double f : factors) {
    if (f <= 0.0) return 0.0;
    log_sum += std::log(f);
  }
  return std::exp(log_sum);
}

inline void require_nonempty(std::span<const NuclearSpin> spins) {
  if (spins.empty()) throw InvalidArgument("macrofraction is empty");
}

}  // namespace detail

/// Fidelity between the m and m' conditional states of a product of spins.
inline double fidelity_macrofraction(std::span<const NuclearSpin> spins, QubitPair pair, double t) {
  detail::require_nonempty(spins);
  std::vector<double> factors;
  factors.reserve(spins.size());
  for (const auto& s : spins) factors.push_back(fidelity_single_closed(s, pair, t));
  return detail::real_product(factors);
}

inline FidelityCurve fidelity_macrofraction(const EnvironmentRealization& env, std::size_t macrofraction,
                                            QubitPair pair, const TimeGrid& grid) {
  const auto spins = env.macrofraction_spins(macrofraction);
  FidelityCurve curve{macrofraction, pair, {}};
  curve.values.reserve(grid.size());
  for (double t : grid.t) curve.values.push_back(fidelity_macrofraction(spins, pair, t));
  return curve;
}

/// tau_mu with tau_mu^-2 = (1/4) sum_k p_k^2 a_perp,k^2; infinite when nothing couples.
inline double tau_mu(std::span<const NuclearSpin> spins) {
  detail::require_nonempty(spins);
  double sum = 0.0;
  for (const auto& s : spins) sum += s.p * s.p * s.a_perp * s.a_perp;
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(0.25 * sum);
}

inline double tau_mu(const EnvironmentRealization& env, std::size_t macrofraction) {
  const auto spins = env.macrofraction_spins(macrofraction);
  return tau_mu(std::span<const NuclearSpin>(spins));
}

/// exp[-(t / tau_mu)^2]; meaningful while rate_k t << 1 for every member.
inline double fidelity_short_time(std::span<const NuclearSpin> spins, double t) {
  const double tau = tau_mu(spins);
  if (std::isinf(tau)) return 1.0;
  const double x = t / tau;
  return std::exp(-x * x);
}

inline double fidelity_short_time(const EnvironmentRealization& env, std::size_t macrofraction, double t) {
  const auto spins = env.macrofraction_spins(macrofraction);
  return fidelity_short_time(std::span<const NuclearSpin>(spins), t);
}

/// exp[-sum_k (a_perp/rate)^2 p^2 sin^2(rate t/2)] for the (0,1) qubit. Accurate only when
/// every term is small (weak coupling, low polarization or short times).
inline double fidelity_exponential_approx(std::span<const NuclearSpin> spins, double t) {
  detail::require_nonempty(spins);
  double sum = 0.0;
  for (const auto& s : spins) {
    const double rate = std::hypot(s.a_perp, s.omega + s.a_z);
    const double x = s.a_perp * detail::half_sin_over_rate(rate, t);
    sum += s.p * s.p * x * x;
  }
  return std::exp(-sum);
}

inline double fidelity_exponential_approx(const EnvironmentRealization& env, std::size_t macrofraction, double t) {
  const auto spins = env.macrofraction_spins(macrofraction);
  return fidelity_exponential_approx(std::span<const NuclearSpin>(spins), t);
}

struct LongTimePlateau {
  double plateau{1.0};                 // exp[-sum a_perp^2 p^2 / (2 omega^2)]
  double minimal_polarization{0.0};    // sum p^2 a_perp^2 / omega^2; SBS needs this >> 1
  double coupling_spread{0.0};         // sample standard deviation of a_perp
  double onset_time{0.0};              // 2 omega / spread^2, us
};

/// Long-time fidelity level for weakly coupled spins in a uniform Zeeman field `omega`.
inline LongTimePlateau fidelity_long_time_plateau(std::span<const NuclearSpin> spins, double omega) {
  detail::require_nonempty(spins);
  if (!(omega > 0.0)) throw InvalidArgument("long-time plateau needs a positive Zeeman splitting");
  LongTimePlateau out;
  double sum = 0.0;
  for (const auto& s : spins) sum += s.a_perp * s.a_perp * s.p * s.p;
  out.minimal_polarization = sum / (omega * omega);
  out.plateau = std::exp(-0.5 * out.minimal_polarization);

  if (spins.size() > 1) {
    double mean = 0.0;
    for (const auto& s : spins) mean += s.a_perp;
    mean /= static_cast<double>(spins.size());
    double var = 0.0;
    for (const auto& s : spins) var += (s.a_perp - mean) * (s.a_perp - mean);
    var /= static_cast<double>(spins.size() - 1);
    out.coupling_spread = std::sqrt(var);
  }
  out.onset_time = out.coupling_spread > 0.0 ? 2.0 * omega / (out.coupling_spread * out.coupling_spread)
                                             : std::numeric_limits<double>::infinity();
  return out;
}

inline LongTimePlateau fidelity_long_time_plateau(const EnvironmentRealization& env, std::size_t macrofraction,
                                                  double omega) {
  const auto spins = env.macrofraction_spins(macrofraction);
  return fidelity_long_time_plateau(std::span<const NuclearSpin>(spins), omega);
}

/// Strong-coupling limit (a_z >> omega, short times):
/// prod[1 - p^2 (a_perp^2/|A|^2)(1 - 2 omega a_z/|A|^2) sin^2(t |A| / 2)].
inline double fidelity_strong_coupling(std::span<const NuclearSpin> spins, double t) {
  detail::require_nonempty(spins);
  std::vector<double> factors;
  factors.reserve(spins.size());
  for (const auto& s : spins) {
    const double a2 = s.a_perp * s.a_perp + s.a_z * s.a_z;
    if (a2 == 0.0) {
      factors.push_back(1.0);
      continue;
    }
    const double sn = std::sin(0.5 * t * std::sqrt(a2));
    factors.push_back(1.0 - s.p * s.p * (s.a_perp * s.a_perp / a2) * (1.0 - 2.0 * s.omega * s.a_z / a2) * sn * sn);
  }
  return detail::real_product(factors);
}

inline double fidelity_strong_coupling(const EnvironmentRealization& env, std::size_t macrofraction, double t) {
  const auto spins = env.macrofraction_spins(macrofraction);
  return fidelity_strong_coupling(std::span<const NuclearSpin>(spins), t);
}

/// (T2* / tau_mu)^2 = (mu / (1 - f)) * 2 <p^2 a_perp^2>_mu / <a_z^2 + a_perp^2>_(1-f),
/// evaluated from the ensemble averages of each set.
inline double timescale_ratio(std::span<const NuclearSpin> macrofraction, std::span<const NuclearSpin> unobserved,
                              std::size_t bath_size) {
  if (macrofraction.empty() || unobserved.empty())
    throw UndefinedQuantity("timescale ratio needs a nonempty macrofraction and unobserved set");
  const double n_mu = static_cast<double>(macrofraction.size());
  const double n_un = static_cast<double>(unobserved.size());
  const double n = static_cast<double>(bath_size);
  double avg_mu = 0.0;
  for (const auto& s : macrofraction) avg_mu += s.p * s.p * s.a_perp * s.a_perp;
  avg_mu /= n_mu;
  double avg_un = 0.0;
  for (const auto& s : unobserved) avg_un += s.a_z * s.a_z + s.a_perp * s.a_perp;
  avg_un /= n_un;
  if (avg_un == 0.0) throw UndefinedQuantity("unobserved set has no coupling");
  const double mu = n_mu / n;
  const double unobserved_fraction = n_un / n;
  return (mu / unobserved_fraction) * 2.0 * avg_mu / avg_un;
}

inline double timescale_ratio(const EnvironmentRealization& env, std::size_t macrofraction = 0) {
  const auto mf = env.macrofraction_spins(macrofraction);
  const auto un = env.unobserved_spins();
  return timescale_ratio(std::span<const NuclearSpin>(mf), std::span<const NuclearSpin>(un), env.size());
}

}  // namespace sbsim
