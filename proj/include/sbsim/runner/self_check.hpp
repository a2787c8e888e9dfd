#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "sbsim/dynamics.hpp"
#include "sbsim/fidelity.hpp"
#include "sbsim/oracle.hpp"
#include "sbsim/rng.hpp"

namespace sbsim::runner {

struct CheckLine {
  std::string name;
  std::size_t samples{0};
  double max_deviation{0.0};
  double tolerance{0.0};
  bool informational{false};  // reported, never fails the run

  [[nodiscard]] bool passed() const { return informational || max_deviation <= tolerance; }
};

struct SelfCheckReport {
  std::vector<CheckLine> lines;

  [[nodiscard]] bool passed() const {
    return std::all_of(lines.begin(), lines.end(), [](const CheckLine& l) { return l.passed(); });
  }

  void print(std::ostream& os) const {
    for (const auto& l : lines) {
      os << (l.informational ? "[INFO]" : l.passed() ? "[ OK ]" : "[FAIL]") << ' ' << l.name << "  samples=" << l.samples
         << "  max_dev=" << l.max_deviation;
      if (!l.informational) os << "  tol=" << l.tolerance;
      os << '\n';
    }
  }
};

inline constexpr std::array<QubitPair, 6> kAllPairs{QubitPair(0, 1), QubitPair(1, 0),  QubitPair(0, -1),
                                                    QubitPair(-1, 0), QubitPair(1, -1), QubitPair(-1, 1)};

/// Random nucleus with couplings and Zeeman term of order 1 rad/us, any polarization.
inline NuclearSpin random_spin(Rng& rng, double scale = 2.0) {
  const double ax = rng.uniform(-scale, scale);
  const double ay = rng.uniform(-scale, scale);
  const double az = rng.uniform(-scale, scale);
  const double omega = rng.uniform(0.0, 0.5 * scale);
  const double p = rng.uniform(-1.0, 1.0);
  return NuclearSpin::from_couplings(ax, ay, az, omega, p);
}

inline QubitPair random_pair(Rng& rng) {
  return kAllPairs[static_cast<std::size_t>(rng.next_u64() % kAllPairs.size())];
}

inline CheckLine check_gamma_single(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  CheckLine line{"gamma_single vs oracle", samples, 0.0, 1e-12};
  for (std::size_t i = 0; i < samples; ++i) {
    const auto s = random_spin(rng);
    const auto pair = random_pair(rng);
    const double t = rng.uniform(0.0, 50.0);
    line.max_deviation = std::max(line.max_deviation, std::abs(gamma_single(s, pair, t) - oracle::gamma_oracle(s, pair, t)));
  }
  return line;
}

inline CheckLine check_fidelity_single(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  CheckLine line{"fidelity_single_closed vs Uhlmann", samples, 0.0, 1e-12};
  for (std::size_t i = 0; i < samples; ++i) {
    const auto s = random_spin(rng);
    const auto pair = random_pair(rng);
    const double t = rng.uniform(0.0, 50.0);
    const double ref = oracle::uhlmann_fidelity(oracle::conditional_density(s, pair.m, t),
                                                oracle::conditional_density(s, pair.m_prime, t));
    line.max_deviation = std::max(line.max_deviation, std::abs(fidelity_single_closed(s, pair, t) - ref));
  }
  return line;
}

inline Vector3 random_bloch(Rng& rng) {
  while (true) {
    const Vector3 b{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    if (norm_sq(b) <= 1.0) return b;
  }
}

inline CheckLine check_bloch_fidelity(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  CheckLine line{"fidelity_2x2 vs Uhlmann (mixed pairs)", samples, 0.0, 1e-12};
  for (std::size_t i = 0; i < samples; ++i) {
    const Vector3 b = random_bloch(rng);
    const Vector3 c = random_bloch(rng);
    const double ref = oracle::uhlmann_fidelity(oracle::bloch_density(b), oracle::bloch_density(c));
    line.max_deviation = std::max(line.max_deviation, std::abs(fidelity_2x2({b}, {c}) - ref));
  }
  return line;
}

inline CheckLine check_unitarity(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  CheckLine line{"su2_exponential unitarity", samples, 0.0, 1e-14};
  for (std::size_t i = 0; i < samples; ++i) {
    const Vector3 axis{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const auto u = oracle::su2_exponential(axis, rng.uniform(0.0, 20.0));
    line.max_deviation =
        std::max(line.max_deviation, (u * u.adjoint() - oracle::Complex2x2::Identity()).cwiseAbs().maxCoeff());
  }
  return line;
}

/// 1 - F(p) = p^2 (1 - F(1)) for the (0,1) qubit, checked per nucleus.
inline CheckLine check_polarization_scaling(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  constexpr std::array<double, 5> kPolarizations{0.1, 0.3, 0.5, 0.9, 1.0};
  CheckLine line{"1 - F scales as p^2, pair (0,1)", samples * kPolarizations.size(), 0.0, 1e-12};
  for (std::size_t i = 0; i < samples; ++i) {
    auto s = random_spin(rng);
    const double t = rng.uniform(0.0, 50.0);
    s.p = 1.0;
    const double full = 1.0 - fidelity_single_closed(s, {0, 1}, t);
    for (double p : kPolarizations) {
      s.p = p;
      const double dev = std::abs((1.0 - fidelity_single_closed(s, {0, 1}, t)) - p * p * full);
      line.max_deviation = std::max(line.max_deviation, dev);
    }
  }
  return line;
}

struct FactorizationLines {
  CheckLine gamma;
  CheckLine fidelity;
};

/// Random environments of n = 2..8 nuclei: product formulas against the exact joint evolution.
/// The macrofraction is a random subset of at most 4 nuclei, traced out of the full bath state.
inline FactorizationLines check_factorization(std::size_t environments, std::size_t time_points,
                                              std::uint64_t seed) {
  Rng rng(seed);
  FactorizationLines out{{"gamma_product vs joint state", 0, 0.0, 1e-10},
                         {"fidelity_macrofraction vs joint state", 0, 0.0, 1e-10}};
  for (std::size_t e = 0; e < environments; ++e) {
    const std::size_t n = 2 + e % 7;
    std::vector<NuclearSpin> spins;
    for (std::size_t k = 0; k < n; ++k) spins.push_back(random_spin(rng, 1.0));
    const auto pair = random_pair(rng);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t k = n - 1; k > 0; --k) std::swap(order[k], order[rng.next_u64() % (k + 1)]);
    const std::size_t mf_size = 1 + rng.next_u64() % std::min<std::size_t>(4, n);
    std::vector<std::size_t> keep(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(mf_size));
    std::sort(keep.begin(), keep.end());
    std::vector<NuclearSpin> mf;
    for (auto k : keep) mf.push_back(spins[k]);

    const oracle::MultiSpinBruteForce sim(spins, Complex(std::sqrt(0.5), 0.0), Complex(std::sqrt(0.5), 0.0), pair);
    for (std::size_t j = 0; j < time_points; ++j) {
      const double t = 0.4 * static_cast<double>(j) + rng.uniform(0.0, 0.4);
      const Complex g = gamma_product(std::span<const NuclearSpin>(spins), pair, t);
      out.gamma.max_deviation = std::max(out.gamma.max_deviation, std::abs(g - sim.decoherence_factor_at(t)));
      const double f = fidelity_macrofraction(std::span<const NuclearSpin>(mf), pair, t);
      const double ref = oracle::uhlmann_fidelity(sim.conditional_state_at(0, t, keep), sim.conditional_state_at(1, t, keep));
      out.fidelity.max_deviation = std::max(out.fidelity.max_deviation, std::abs(f - ref));
      ++out.gamma.samples;
      ++out.fidelity.samples;
    }
  }
  return out;
}

/// Printed expanded closed form against the Bloch computation, pairs with m != 0 only.
inline CheckLine check_expanded_form(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  CheckLine line{"expanded closed form vs Bloch, m != 0", samples, 0.0, 0.0, true};
  for (std::size_t i = 0; i < samples; ++i) {
    const auto s = random_spin(rng);
    const QubitPair pair = rng.uniform() < 0.5 ? QubitPair(1, -1) : QubitPair(-1, 1);
    const double t = rng.uniform(0.0, 50.0);
    line.max_deviation =
        std::max(line.max_deviation, std::abs(fidelity_expanded_form(s, pair, t) - fidelity_single_closed(s, pair, t)));
  }
  return line;
}

/// Full oracle-versus-closed-form suite.
inline SelfCheckReport self_check(std::size_t samples, std::uint64_t seed) {
  const auto seeds = expand_seeds(seed, 8);
  SelfCheckReport report;
  report.lines.push_back(check_gamma_single(samples, seeds[0]));
  report.lines.push_back(check_fidelity_single(samples, seeds[1]));
  report.lines.push_back(check_bloch_fidelity(samples, seeds[2]));
  report.lines.push_back(check_unitarity(samples, seeds[3]));
  report.lines.push_back(check_polarization_scaling(samples, seeds[4]));
  auto fact = check_factorization(200, 50, seeds[5]);
  report.lines.push_back(fact.gamma);
  report.lines.push_back(fact.fidelity);
  report.lines.push_back(check_expanded_form(samples, seeds[6]));
  return report;
}

}  // namespace sbsim::runner
