#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace sbsim;
using test::spin;

namespace {

const NuclearSpin kRef = spin(0.31, -0.47, 0.83, 0.0673, 0.6);

std::vector<NuclearSpin> four_spin_macrofraction() {
  return {spin(0.42, 0.10, -0.35, 0.0673, 1.0), spin(-0.20, 0.55, 0.12, 0.0673, 1.0),
          spin(0.05, -0.30, 0.60, 0.0673, 1.0), spin(0.33, 0.33, -0.10, 0.0673, 1.0)};
}

Vector3 oracle_bloch(const oracle::Complex2x2& rho) {
  return {2.0 * rho(1, 0).real(), 2.0 * rho(1, 0).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

}  // namespace

TEST(BlochStateType, PurityAndValidity) {
  const auto s = BlochState::polarized(0.6);
  EXPECT_DOUBLE_EQ(s.purity(), 0.5 * (1.0 + 0.36));
  EXPECT_TRUE(s.valid());
  EXPECT_FALSE((BlochState{{1.0, 1.0, 0.0}}.valid()));
}

TEST(ConditionalState, StartsAtInitialVector) {
  for (int m : {-1, 0, 1}) {
    const auto b = conditional_state(kRef, m, 0.0).bloch;
    EXPECT_DOUBLE_EQ(b.x, 0.0);
    EXPECT_DOUBLE_EQ(b.y, 0.0);
    EXPECT_DOUBLE_EQ(b.z, kRef.p);
  }
}

TEST(ConditionalState, LevelZeroIsStationary) {
  for (double t : {0.5, 7.0, 90.0}) {
    const auto b = conditional_state(kRef, 0, t).bloch;
    EXPECT_NEAR(b.x, 0.0, 1e-15);
    EXPECT_NEAR(b.y, 0.0, 1e-15);
    EXPECT_NEAR(b.z, kRef.p, 1e-15);
  }
}

TEST(ConditionalState, MatchesOracleComponentwise) {
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const auto s = runner::random_spin(rng);
    const int m = static_cast<int>(rng.next_u64() % 3) - 1;
    const double t = rng.uniform(0, 60);
    const auto b = conditional_state(s, m, t).bloch;
    const auto r = oracle_bloch(oracle::conditional_density(s, m, t));
    EXPECT_NEAR(b.x, r.x, 1e-12);
    EXPECT_NEAR(b.y, r.y, 1e-12);
    EXPECT_NEAR(b.z, r.z, 1e-12);
    EXPECT_NEAR(norm(b), std::abs(s.p), 1e-12);
  }
}

TEST(Fidelity2x2, Landmarks) {
  const BlochState a{{0.3, -0.2, 0.5}};
  EXPECT_NEAR(fidelity_2x2(a, a), 1.0, 1e-15);
  const Vector3 u = normalized(Vector3{0.3, -0.2, 0.5});
  EXPECT_NEAR(fidelity_2x2({u}, {-1.0 * u}), 0.0, 1e-15);
  const BlochState b{{-0.6, 0.1, 0.4}};
  EXPECT_DOUBLE_EQ(fidelity_2x2(a, b), fidelity_2x2(b, a));
}

TEST(Fidelity2x2, MixedPairReference) {
  // scipy sqrtm Uhlmann fidelity, see tests/oracle/derive_values.py
  EXPECT_NEAR(fidelity_2x2({{0.2, -0.3, 0.5}}, {{-0.6, 0.1, 0.4}}), 0.79490739152531531, 1e-12);
}

TEST(Fidelity2x2, PureStatesGiveOverlap) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const auto s = [&] {
      auto x = runner::random_spin(rng);
      x.p = 1.0;
      return x;
    }();
    const double t = rng.uniform(0, 30);
    const auto u0 = oracle::conditional_unitary(s, 0, t);
    const auto u1 = oracle::conditional_unitary(s, 1, t);
    const Eigen::Vector2cd up(1.0, 0.0);
    const Complex overlap = (u0 * up).dot(u1 * up);
    EXPECT_NEAR(fidelity_single_closed(s, {0, 1}, t), std::norm(overlap), 1e-12);
  }
}

TEST(FidelitySingle, ReferenceValue) {
  EXPECT_NEAR(fidelity_single_closed(kRef, {0, 1}, 7.3), 0.95528804771831533, 1e-12);
}

TEST(FidelitySingle, NoTransverseCouplingKeepsStatesIdentical) {
  const auto s = spin(0.0, 0.0, 0.7, 0.0673, 1.0);
  for (double t : {0.1, 3.0, 50.0}) {
    EXPECT_DOUBLE_EQ(fidelity_single_closed(s, {0, 1}, t), 1.0);
    EXPECT_NEAR(fidelity_single_closed(s, {1, -1}, t), 1.0, 1e-12);
  }
}

TEST(FidelitySingle, ResonantFullPolarization) {
  // a_z + omega = 0: rate = a_perp, fidelity 1 - sin^2(rate t / 2)
  const auto s = spin(0.8, 0.0, -0.0673, 0.0673, 1.0);
  const double t = std::numbers::pi / 0.8;
  EXPECT_NEAR(fidelity_single_closed(s, {0, 1}, t), 0.0, 1e-15);
  EXPECT_NEAR(fidelity_single_closed(s, {0, 1}, 1.0), 1.0 - std::pow(std::sin(0.4), 2), 1e-15);
}

TEST(FidelitySingle, ClosedFormEqualsBlochPath) {
  Rng rng(14);
  for (int i = 0; i < 2000; ++i) {
    const auto s = runner::random_spin(rng);
    const double t = rng.uniform(0, 60);
    EXPECT_NEAR(fidelity_single_closed(s, {0, 1}, t),
                fidelity_2x2(conditional_state(s, 0, t), conditional_state(s, 1, t)), 1e-12);
  }
}

TEST(FidelitySingle, SymmetricInPair) {
  Rng rng(15);
  for (int i = 0; i < 1000; ++i) {
    const auto s = runner::random_spin(rng);
    const auto pair = runner::random_pair(rng);
    const double t = rng.uniform(0, 60);
    EXPECT_NEAR(fidelity_single_closed(s, pair, t), fidelity_single_closed(s, pair.swapped(), t), 1e-14);
  }
}

TEST(FidelitySingle, BoundedAndStartsAtOne) {
  Rng rng(16);
  for (int i = 0; i < 2000; ++i) {
    const auto s = runner::random_spin(rng, 4.0);
    const auto pair = runner::random_pair(rng);
    const double f = fidelity_single_closed(s, pair, rng.uniform(0, 100));
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
    EXPECT_DOUBLE_EQ(fidelity_single_closed(s, pair, 0.0), 1.0);
  }
}

TEST(FidelitySingle, PolarizationSquaredScaling) {
  Rng rng(17);
  for (int i = 0; i < 500; ++i) {
    auto s = runner::random_spin(rng);
    const double t = rng.uniform(0, 60);
    s.p = 1.0;
    const double full = 1.0 - fidelity_single_closed(s, {0, 1}, t);
    for (double p : {0.1, 0.3, 0.5, 0.9, 1.0}) {
      s.p = p;
      EXPECT_NEAR(fidelity_single_closed(s, {0, 1}, t), 1.0 - p * p * full, 1e-12);
    }
  }
}

TEST(ExpandedForm, AgreesWhenLevelZeroInvolved) {
  Rng rng(18);
  for (int i = 0; i < 500; ++i) {
    const auto s = runner::random_spin(rng);
    const double t = rng.uniform(0, 60);
    for (QubitPair pair : {QubitPair(0, 1), QubitPair(0, -1)})
      EXPECT_NEAR(fidelity_expanded_form(s, pair, t), fidelity_single_closed(s, pair, t), 1e-12);
  }
}

TEST(ExpandedForm, NotSymmetricForPlusMinusQubit) {
  // the printed form differs under m <-> m'; the Bloch path stays the reference
  const double a = fidelity_expanded_form(kRef, {1, -1}, 7.3);
  const double b = fidelity_expanded_form(kRef, {-1, 1}, 7.3);
  EXPECT_GT(std::abs(a - b), 1e-3);
}

TEST(Macrofraction, FourSpinReference) {
  const auto mf = four_spin_macrofraction();
  EXPECT_NEAR(fidelity_macrofraction(std::span<const NuclearSpin>(mf), {0, 1}, 4.2), 0.018986070477416333, 1e-10);
}

TEST(Macrofraction, MatchesJointConditionalStates) {
  const auto mf = four_spin_macrofraction();
  const oracle::MultiSpinBruteForce sim(mf, Complex(std::sqrt(0.5), 0.0), Complex(std::sqrt(0.5), 0.0), QubitPair{});
  const std::vector<std::size_t> all{0, 1, 2, 3};
  for (double t : {0.5, 2.0, 4.2, 13.0}) {
    const auto js = sim.evolve(t);
    const double ref = oracle::uhlmann_fidelity(sim.conditional_state(js, 0, all), sim.conditional_state(js, 1, all));
    EXPECT_NEAR(fidelity_macrofraction(std::span<const NuclearSpin>(mf), {0, 1}, t), ref, 1e-10);
  }
}

TEST(Macrofraction, EmptyIsInvalid) {
  const std::vector<NuclearSpin> none;
  EXPECT_THROW(fidelity_macrofraction(std::span<const NuclearSpin>(none), {0, 1}, 1.0), InvalidArgument);
}

TEST(Macrofraction, CurveOnGrid) {
  const auto env = partition(sample_realization(LatticeSpec{}, 1e-3, 4), 20, 1, 1.0);
  const auto grid = TimeGrid::uniform(10.0, 0.5);
  const auto curve = fidelity_macrofraction(env, 0, QubitPair{}, grid);
  ASSERT_EQ(curve.values.size(), grid.size());
  EXPECT_DOUBLE_EQ(curve.values.front(), 1.0);
  EXPECT_EQ(curve.macrofraction, 0u);
  for (double v : curve.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Macrofraction, LogProductMatchesDirect) {
  std::vector<NuclearSpin> many(80, spin(0.2, 0.1, 0.05, 0.0673, 0.8));
  const double single = fidelity_single_closed(many.front(), {0, 1}, 3.0);
  EXPECT_NEAR(fidelity_macrofraction(std::span<const NuclearSpin>(many), {0, 1}, 3.0), std::pow(single, 80), 1e-13);
}

TEST(Macrofraction, DefiniteDecayForTwentyPolarizedSpins) {
  // muN = 20, p = 1, B = 10 G: below 0.1 and suppressed after about 20 us, for most realizations
  const RealizationSampler sampler(LatticeSpec{});
  const auto grid = TimeGrid::uniform(100.0, 0.05);
  int suppressed = 0;
  const auto seeds = expand_seeds(303, 10);
  for (auto seed : seeds) {
    const auto env = partition(sampler.sample(1e-3, seed), 20, 1, 1.0);
    const auto curve = fidelity_macrofraction(env, 0, QubitPair{}, grid);
    double late_max = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (grid.t[i] >= 20.0) late_max = std::max(late_max, curve.values[i]);
    suppressed += late_max < 0.1 ? 1 : 0;
  }
  EXPECT_GE(suppressed, 7);
}

TEST(Macrofraction, LowPolarizationStaysFar) {
  const RealizationSampler sampler(LatticeSpec{});
  const auto grid = TimeGrid::uniform(300.0, 0.1);
  for (auto seed : expand_seeds(404, 5)) {
    const auto env = partition(sampler.sample(1e-3, seed), 20, 1, 0.1);
    const auto curve = fidelity_macrofraction(env, 0, QubitPair{}, grid);
    EXPECT_GT(*std::min_element(curve.values.begin(), curve.values.end()), 0.8);
  }
}

TEST(TauMu, Landmarks) {
  const std::vector<NuclearSpin> one{spin(2.0, 0.0, 0.3, 0.07, 1.0)};
  EXPECT_DOUBLE_EQ(tau_mu(std::span<const NuclearSpin>(one)), 1.0);
  const std::vector<NuclearSpin> cold{spin(2.0, 0.0, 0.3, 0.07, 0.0)};
  EXPECT_TRUE(std::isinf(tau_mu(std::span<const NuclearSpin>(cold))));
  EXPECT_DOUBLE_EQ(fidelity_short_time(std::span<const NuclearSpin>(cold), 5.0), 1.0);
}

TEST(ShortTime, TracksProduct) {
  const auto env = partition(sample_realization(LatticeSpec{}, 1e-3, 21), 20, 1, 1.0);
  const auto mf = env.macrofraction_spins(0);
  const std::span<const NuclearSpin> s(mf);
  double fastest = 0.0;
  for (const auto& sp : mf) fastest = std::max(fastest, ConditionalPrecession::of(sp, 1).rate);
  for (int i = 1; i <= 20; ++i) {
    const double t = 0.2 / fastest * i / 20.0;
    const double exact = fidelity_macrofraction(s, {0, 1}, t);
    EXPECT_LE(std::abs(fidelity_short_time(s, t) - exact) / exact, 0.02);
  }
}

TEST(ExponentialApprox, WeakTermsMatchProduct) {
  Rng rng(19);
  std::vector<NuclearSpin> mf;
  while (mf.size() < 15) {
    auto s = runner::random_spin(rng, 0.3);
    s.omega = 1.0;
    s.p = 0.5;
    if (std::pow(s.a_perp / std::hypot(s.a_perp, s.omega + s.a_z), 2) * s.p * s.p <= 0.05) mf.push_back(s);
  }
  const std::span<const NuclearSpin> s(mf);
  EXPECT_DOUBLE_EQ(fidelity_exponential_approx(s, 0.0), 1.0);
  for (double t = 0.0; t < 60.0; t += 0.37)
    EXPECT_NEAR(fidelity_exponential_approx(s, t), fidelity_macrofraction(s, {0, 1}, t), 0.01);
}

TEST(ExponentialApprox, DivergesForStrongCoupling) {
  const std::vector<NuclearSpin> mf(3, spin(1.5, 0.0, 0.0, 0.0673, 1.0));
  const std::span<const NuclearSpin> s(mf);
  double worst = 0.0;
  for (double t = 0.0; t < 10.0; t += 0.05)
    worst = std::max(worst, std::abs(fidelity_exponential_approx(s, t) - fidelity_macrofraction(s, {0, 1}, t)));
  EXPECT_GT(worst, 0.1);
}

TEST(Plateau, Landmarks) {
  const std::vector<NuclearSpin> cold{spin(0.1, 0.0, 0.05, 2.0, 0.0), spin(0.05, 0.02, 0.0, 2.0, 0.0)};
  EXPECT_DOUBLE_EQ(fidelity_long_time_plateau(std::span<const NuclearSpin>(cold), 2.0).plateau, 1.0);
  const std::vector<NuclearSpin> one{spin(0.1, 0.0, 0.02, 2.0, 0.8)};
  const auto p = fidelity_long_time_plateau(std::span<const NuclearSpin>(one), 2.0);
  EXPECT_NEAR(p.plateau, std::exp(-0.01 * 0.64 / 8.0), 1e-15);
  EXPECT_NEAR(p.minimal_polarization, 0.01 * 0.64 / 4.0, 1e-15);
  EXPECT_TRUE(std::isinf(p.onset_time));
  EXPECT_THROW(fidelity_long_time_plateau(std::span<const NuclearSpin>(one), 0.0), InvalidArgument);
}

TEST(Plateau, MatchesLongRunAverageForWeakCoupling) {
  const auto real = sample_realization(LatticeSpec{}, 1e-3, 55);
  auto env = partition(real, 20, 1, 1.0);
  double amax = 0.0;
  for (auto i : env.macrofractions[0]) amax = std::max(amax, env.spins[i].a_perp);
  const double omega = 10.0 * amax;
  for (auto& s : env.spins) s.omega = omega;
  const auto mf = env.macrofraction_spins(0);
  const auto plateau = fidelity_long_time_plateau(std::span<const NuclearSpin>(mf), omega);
  const double t0 = 5.0 * plateau.onset_time;
  const double t1 = 10.0 * plateau.onset_time;
  const std::size_t n = 20000;
  double avg = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    avg += fidelity_macrofraction(std::span<const NuclearSpin>(mf), {0, 1}, t0 + (t1 - t0) * (i + 0.5) / n);
  avg /= static_cast<double>(n);
  EXPECT_NEAR(plateau.plateau / avg, 1.0, 0.2);
}

TEST(StrongCoupling, ZeroFieldReducesToSingleSpinForm) {
  Rng rng(20);
  for (int i = 0; i < 200; ++i) {
    auto s = runner::random_spin(rng);
    s.omega = 0.0;
    const std::vector<NuclearSpin> one{s};
    const double t = rng.uniform(0, 30);
    EXPECT_NEAR(fidelity_strong_coupling(std::span<const NuclearSpin>(one), t), fidelity_single_closed(s, {0, 1}, t),
                1e-12);
  }
}

TEST(StrongCoupling, UnpolarizedIsOne) {
  const std::vector<NuclearSpin> one{spin(1.0, 0.5, 2.0, 0.0673, 0.0)};
  EXPECT_DOUBLE_EQ(fidelity_strong_coupling(std::span<const NuclearSpin>(one), 3.0), 1.0);
}

TEST(StrongCoupling, CloseToExactForNearestSpins) {
  // B = 1 G so that the nearest shells satisfy a_z >> omega
  int checked = 0;
  for (auto s : sample_realization(LatticeSpec{}, 1e-4, 61).spins) {
    if (std::abs(s.a_z) < 10.0 * s.omega) continue;
    s.p = 1.0;
    const std::vector<NuclearSpin> one{s};
    for (double t = 0.0; t <= 10.0; t += 0.1) {
      const double exact = fidelity_single_closed(s, {0, 1}, t);
      EXPECT_NEAR(fidelity_strong_coupling(std::span<const NuclearSpin>(one), t), exact, 0.05);
    }
    ++checked;
  }
  EXPECT_GT(checked, 0);
}

TEST(TimescaleRatio, Landmarks) {
  const std::vector<NuclearSpin> mf(5, spin(0.3, 0.0, 0.0, 0.07, 1.0));
  const std::vector<NuclearSpin> un(5, spin(0.3, 0.0, 0.0, 0.07, 0.0));
  EXPECT_NEAR(timescale_ratio(std::span<const NuclearSpin>(mf), std::span<const NuclearSpin>(un), 10), 2.0, 1e-15);
  const std::vector<NuclearSpin> none;
  EXPECT_THROW(timescale_ratio(std::span<const NuclearSpin>(none), std::span<const NuclearSpin>(un), 10),
               UndefinedQuantity);
  const std::vector<NuclearSpin> cold(5, spin(0.3, 0.0, 0.0, 0.07, 0.0));
  EXPECT_EQ(timescale_ratio(std::span<const NuclearSpin>(cold), std::span<const NuclearSpin>(un), 10), 0.0);
}

TEST(TimescaleRatio, EqualsSquaredTimeRatio) {
  const RealizationSampler sampler(LatticeSpec{});
  for (auto seed : expand_seeds(91, 5)) {
    const auto env = partition(sampler.sample(1e-3, seed), 40, 2, 0.7);
    const double t2 = t2_star(env);
    const double tau = tau_mu(env, 1);
    EXPECT_NEAR(timescale_ratio(env, 1), (t2 / tau) * (t2 / tau), 1e-12 * (t2 / tau) * (t2 / tau));
  }
}
