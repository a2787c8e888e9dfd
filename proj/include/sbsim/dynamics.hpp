#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sbsim/environment.hpp"
#include "sbsim/errors.hpp"
#include "sbsim/vector3.hpp"

namespace sbsim {

using Complex = std::complex<double>;

/// Qubit built from NV levels m and m_prime of S_z in {-1, 0, +1}.
struct QubitPair {
  int m{0};
  int m_prime{1};

  constexpr QubitPair() = default;
  constexpr QubitPair(int first, int second) : m(first), m_prime(second) {
    if (!valid_level(first) || !valid_level(second) || first == second)
      throw InvalidArgument("qubit levels must be distinct values in {-1, 0, 1}");
  }

  [[nodiscard]] constexpr QubitPair swapped() const { return {m_prime, m}; }
  static constexpr bool valid_level(int level) { return level >= -1 && level <= 1; }
  friend constexpr bool operator==(const QubitPair&, const QubitPair&) = default;
};

/// Precession vector of a nuclear spin while the NV sits in level m:
/// H_m = omega I_z + m (a . I) = axis . I.
struct ConditionalPrecession {
  Vector3 axis;  // rad/us
  double rate;   // |axis|

  static ConditionalPrecession of(const NuclearSpin& s, int m) {
    const Vector3 axis{m * s.a_x, m * s.a_y, s.omega + m * s.a_z};
    return {axis, std::hypot(m * s.a_perp, s.omega + m * s.a_z)};
  }
};

namespace detail {

inline constexpr double kSeriesThreshold = 1e-6;

/// sin(rate t / 2) / rate, continuous through rate -> 0.
inline double half_sin_over_rate(double rate, double t) {
  const double x = rate * t;
  if (std::abs(x) < kSeriesThreshold) return 0.5 * t * (1.0 - x * x / 24.0);
  return std::sin(0.5 * x) / rate;
}

}  // namespace detail

struct TimeGrid {
  std::vector<double> t;  // us, strictly increasing, t[0] >= 0

  /// 0, step, 2 step, ... up to t_max (inclusive within rounding). Points are i * step.
  static TimeGrid uniform(double t_max, double step) {
    if (!(step > 0.0) || !(t_max >= 0.0)) throw InvalidArgument("time grid needs step > 0 and t_max >= 0");
    const auto count = static_cast<std::size_t>(std::floor(t_max / step + 1e-9)) + 1;
    TimeGrid g;
    g.t.reserve(count);
    for (std::size_t i = 0; i < count; ++i) g.t.push_back(static_cast<double>(i) * step);
    return g;
  }

  static TimeGrid from(std::vector<double> values) {
    TimeGrid g{std::move(values)};
    g.validate();
    return g;
  }

  void validate() const {
    if (!t.empty() && !(t.front() >= 0.0)) throw InvalidArgument("time grid must start at t >= 0");
    for (std::size_t i = 1; i < t.size(); ++i)
      if (!(t[i] > t[i - 1])) throw InvalidArgument("time grid must be strictly increasing");
  }

  [[nodiscard]] std::size_t size() const { return t.size(); }
};

/// Largest grid step resolving every conditional precession of `spins`: pi / (4 max rate), capped at 0.1 us.
inline double max_time_step(std::span<const NuclearSpin> spins, QubitPair pair = {}) {
  double fastest = 0.0;
  for (const auto& s : spins) {
    fastest = std::max(fastest, ConditionalPrecession::of(s, pair.m).rate);
    fastest = std::max(fastest, ConditionalPrecession::of(s, pair.m_prime).rate);
  }
  const double cap = 0.1;
  return fastest > 0.0 ? std::min(cap, std::numbers::pi / (4.0 * fastest)) : cap;
}

/// Single-nucleus decoherence factor Tr(U_m rho U_m'^dagger) in closed form.
inline Complex gamma_single(const NuclearSpin& s, QubitPair pair, double t) {
  const int m = pair.m;
  const int mp = pair.m_prime;
  const double lz_m = s.omega + m * s.a_z;
  const double lz_mp = s.omega + mp * s.a_z;
  const double rate_m = std::hypot(m * s.a_perp, lz_m);
  const double rate_mp = std::hypot(mp * s.a_perp, lz_mp);
  const double c_m = std::cos(0.5 * rate_m * t);
  const double c_mp = std::cos(0.5 * rate_mp * t);
  const double sr_m = detail::half_sin_over_rate(rate_m, t);
  const double sr_mp = detail::half_sin_over_rate(rate_mp, t);

  const double overlap = m * mp * s.a_perp * s.a_perp + lz_m * lz_mp;
  const double re = c_m * c_mp + overlap * sr_m * sr_mp;
  const double im = s.p * (lz_mp * c_m * sr_mp - lz_m * c_mp * sr_m);
  return {re, im};
}

/// |gamma_k(t)|^2 for the (0, 1) qubit from its three-term closed form.
inline double gamma_modulus_sq(const NuclearSpin& s, double t) {
  const double lz = s.a_z + s.omega;
  const double rate = std::hypot(s.a_perp, lz);
  const double mix = 1.0 - s.p * s.p;
  const double sw = std::sin(0.5 * s.omega * t);
  const double cw = std::cos(0.5 * s.omega * t);
  const double cr = std::cos(0.5 * rate * t);
  const double sr = detail::half_sin_over_rate(rate, t);  // sin(rate t/2) / rate
  const double term1 = (1.0 - mix * sw * sw) * cr * cr;
  const double term2 = lz * lz * (1.0 - mix * cw * cw) * sr * sr;
  // (lz / 2 rate) sin(omega t) sin(rate t), with sin(rate t)/rate = 2 sr cr
  const double term3 = lz * mix * std::sin(s.omega * t) * sr * cr;
  return term1 + term2 + term3;
}

namespace detail {

inline constexpr std::size_t kLogProductThreshold = 64;

/// Product of complex factors; switches to log-magnitude plus phase beyond 64 factors.
class ComplexProduct {
 public:
  explicit ComplexProduct(std::size_t count) : log_space_(count > kLogProductThreshold) {}

  void multiply(Complex z) {
    if (!log_space_) {
      direct_ *= z;
      return;
    }
    const double mag2 = std::norm(z);
    if (mag2 == 0.0) {
      zero_ = true;
      return;
    }
    log_mag_ += 0.5 * std::log(mag2);
    phase_ += std::arg(z);
  }

  [[nodiscard]] Complex value() const {
    if (!log_space_) return direct_;
    if (zero_) return {0.0, 0.0};
    return std::polar(std::exp(log_mag_), phase_);
  }

 private:
  bool log_space_;
  bool zero_{false};
  Complex direct_{1.0, 0.0};
  double log_mag_{0.0};
  double phase_{0.0};
};

}  // namespace detail

/// Total decoherence factor of a set of spins at one time.
inline Complex gamma_product(std::span<const NuclearSpin> spins, QubitPair pair, double t) {
  detail::ComplexProduct prod(spins.size());
  for (const auto& s : spins) prod.multiply(gamma_single(s, pair, t));
  return prod.value();
}

inline std::vector<Complex> gamma_product(std::span<const NuclearSpin> spins, QubitPair pair, const TimeGrid& grid) {
  std::vector<Complex> out;
  out.reserve(grid.size());
  for (double t : grid.t) out.push_back(gamma_product(spins, pair, t));
  return out;
}

/// Decoherence factor due to the unobserved (traced) part of the bath.
inline std::vector<Complex> gamma_product(const EnvironmentRealization& env, QubitPair pair, const TimeGrid& grid) {
  const auto spins = env.unobserved_spins();
  return gamma_product(std::span<const NuclearSpin>(spins), pair, grid);
}

inline double t2_star(std::span<const NuclearSpin> spins) {
  if (spins.empty()) throw UndefinedQuantity("T2* undefined for an empty unobserved set");
  double sum = 0.0;
  for (const auto& s : spins) sum += s.a_z * s.a_z + s.a_perp * s.a_perp;
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(8.0 / sum);
}

inline double t2_star(const EnvironmentRealization& env) {
  const auto spins = env.unobserved_spins();
  return t2_star(std::span<const NuclearSpin>(spins));
}

/// Deterministic phase (t/2) sum_k p_k a_z,k of the unobserved spins.
inline double phase_shift(std::span<const NuclearSpin> spins, double t) {
  if (spins.empty()) throw UndefinedQuantity("phase shift undefined for an empty unobserved set");
  double sum = 0.0;
  for (const auto& s : spins) sum += s.p * s.a_z;
  return 0.5 * t * sum;
}

inline double phase_shift(const EnvironmentRealization& env, double t) {
  const auto spins = env.unobserved_spins();
  return phase_shift(std::span<const NuclearSpin>(spins), t);
}

/// Gaussian short-time form exp[-(t/T2*)^2 + i phi(t)]; valid while every rate * t << 1.
/// The phase sign follows the Tr(U_0 rho U_1^dagger) convention of gamma_single.
inline Complex gamma_short_time(std::span<const NuclearSpin> spins, double t) {
  const double t2 = t2_star(spins);
  const double x = std::isinf(t2) ? 0.0 : t / t2;
  return std::polar(std::exp(-x * x), phase_shift(spins, t));
}

inline Complex gamma_short_time(const EnvironmentRealization& env, double t) {
  const auto spins = env.unobserved_spins();
  return gamma_short_time(std::span<const NuclearSpin>(spins), t);
}

/// Least-squares fit of -ln|gamma(t)| = (t / T)^2 through the origin; returns T.
inline double fit_gaussian_decay_time(std::span<const double> t, std::span<const Complex> gamma) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double mag = std::abs(gamma[i]);
    if (mag <= 0.0) continue;
    const double t2 = t[i] * t[i];
    num += -std::log(mag) * t2;
    den += t2 * t2;
  }
  if (den == 0.0 || num <= 0.0) throw UndefinedQuantity("no Gaussian decay to fit");
  return 1.0 / std::sqrt(num / den);
}

}  // namespace sbsim
