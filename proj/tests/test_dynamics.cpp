#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace sbsim;
using test::spin;

namespace {

const NuclearSpin kRef = spin(0.31, -0.47, 0.83, 0.0673, 0.6);

}  // namespace

TEST(QubitPairType, DefaultsAndValidation) {
  const QubitPair q;
  EXPECT_EQ(q.m, 0);
  EXPECT_EQ(q.m_prime, 1);
  EXPECT_THROW(QubitPair(1, 1), InvalidArgument);
  EXPECT_THROW(QubitPair(0, 2), InvalidArgument);
  EXPECT_EQ(QubitPair(1, -1).swapped(), QubitPair(-1, 1));
}

TEST(Precession, RatesFollowLevel) {
  const auto p0 = ConditionalPrecession::of(kRef, 0);
  EXPECT_DOUBLE_EQ(p0.rate, kRef.omega);
  const auto p1 = ConditionalPrecession::of(kRef, 1);
  EXPECT_NEAR(p1.rate, std::hypot(kRef.a_perp, kRef.omega + kRef.a_z), 1e-15);
  const auto pm = ConditionalPrecession::of(kRef, -1);
  EXPECT_NEAR(pm.rate, std::hypot(kRef.a_perp, kRef.omega - kRef.a_z), 1e-15);
}

TEST(GammaSingle, StartsAtOne) {
  for (const auto& pair : runner::kAllPairs) EXPECT_EQ(gamma_single(kRef, pair, 0.0), Complex(1.0, 0.0));
}

TEST(GammaSingle, ReferenceValues) {
  // dense 2x2 exponentials, see tests/oracle/derive_values.py
  const auto g01 = gamma_single(kRef, {0, 1}, 7.3);
  EXPECT_NEAR(g01.real(), -0.86267488477121645, 1e-12);
  EXPECT_NEAR(g01.imag(), -0.21765381518572968, 1e-12);
  const auto g1m = gamma_single(kRef, {1, -1}, 7.3);
  EXPECT_NEAR(g1m.real(), 0.503767876065218, 1e-12);
  EXPECT_NEAR(g1m.imag(), -0.43322503593893624, 1e-12);
  const auto gm0 = gamma_single(kRef, {-1, 0}, 7.3);
  EXPECT_NEAR(gm0.real(), -0.85987160136727758, 1e-12);
  EXPECT_NEAR(gm0.imag(), -0.28524152687804738, 1e-12);
}

TEST(GammaSingle, UnpolarizedIsReal) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto s = runner::random_spin(rng);
    s.p = 0.0;
    EXPECT_EQ(gamma_single(s, {0, 1}, rng.uniform(0, 40)).imag(), 0.0);
  }
}

TEST(GammaSingle, MatchesOracle) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const auto s = runner::random_spin(rng);
    const auto pair = runner::random_pair(rng);
    const double t = rng.uniform(0, 60);
    EXPECT_LE(std::abs(gamma_single(s, pair, t) - oracle::gamma_oracle(s, pair, t)), 1e-12);
  }
}

TEST(GammaSingle, Contractive) {
  Rng rng(6);
  for (int i = 0; i < 2000; ++i) {
    const auto s = runner::random_spin(rng, 5.0);
    EXPECT_LE(std::abs(gamma_single(s, runner::random_pair(rng), rng.uniform(0, 100))), 1.0 + 1e-12);
  }
}

TEST(GammaSingle, PairSymmetryIsConjugation) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto s = runner::random_spin(rng);
    const auto pair = runner::random_pair(rng);
    const double t = rng.uniform(0, 60);
    EXPECT_LE(std::abs(gamma_single(s, pair.swapped(), t) - std::conj(gamma_single(s, pair, t))), 1e-13);
  }
}

TEST(GammaSingle, NoTransverseCoupling) {
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto s = spin(0.0, 0.0, rng.uniform(-2, 2), rng.uniform(0, 1), rng.uniform(-1, 1));
    const double t = rng.uniform(0, 60);
    const double w = s.omega;
    const double big = s.omega + s.a_z;
    // a_perp = 0: both branches rotate about z only
    const double expected = std::abs(Complex(std::cos(w * t / 2) * std::cos(big * t / 2) + std::sin(w * t / 2) * std::sin(big * t / 2),
                                             s.p * (std::cos(w * t / 2) * std::sin(big * t / 2) - std::sin(w * t / 2) * std::cos(big * t / 2))));
    EXPECT_NEAR(std::abs(gamma_single(s, {0, 1}, t)), expected, 1e-12);
    EXPECT_NEAR(std::abs(oracle::gamma_oracle(s, {0, 1}, t)), expected, 1e-12);
  }
}

TEST(GammaSingle, CommensuratePeriod) {
  // rates 0.1 and 0.5 rad/us: both unitaries return to the identity at t = 4 pi / 0.1
  const auto s = spin(0.4, 0.0, 0.2, 0.1, 0.7);
  ASSERT_NEAR(ConditionalPrecession::of(s, 1).rate, 0.5, 1e-15);
  const double period = 4.0 * std::numbers::pi / 0.1;
  EXPECT_NEAR(std::abs(gamma_single(s, {0, 1}, period) - Complex(1.0, 0.0)), 0.0, 1e-12);
  const double t = 3.7;
  EXPECT_NEAR(std::abs(gamma_single(s, {0, 1}, t + period) - gamma_single(s, {0, 1}, t)), 0.0, 1e-12);
}

TEST(GammaSingle, DegenerateRate) {
  // omega + a_z = 0 and a_perp = 0: the m = 1 branch does not precess
  const auto s = spin(0.0, 0.0, -0.3, 0.3, 0.5);
  for (double t : {0.0, 1e-9, 0.5, 17.0}) {
    const auto g = gamma_single(s, {0, 1}, t);
    EXPECT_TRUE(std::isfinite(g.real()) && std::isfinite(g.imag()));
    EXPECT_LE(std::abs(g - oracle::gamma_oracle(s, {0, 1}, t)), 1e-12);
  }
}

TEST(GammaModulus, MatchesSingle) {
  Rng rng(10);
  for (int i = 0; i < 1000; ++i) {
    const auto s = runner::random_spin(rng);
    const double t = rng.uniform(0, 60);
    EXPECT_NEAR(gamma_modulus_sq(s, t), std::norm(gamma_single(s, {0, 1}, t)), 1e-12);
  }
  EXPECT_DOUBLE_EQ(gamma_modulus_sq(kRef, 0.0), 1.0);
}

TEST(GammaModulus, FullPolarization) {
  auto s = kRef;
  s.p = 1.0;
  const double big = std::hypot(s.a_perp, s.a_z + s.omega);
  for (double t : {0.3, 2.0, 11.0}) {
    const double c = std::cos(big * t / 2);
    const double sn = std::sin(big * t / 2);
    const double r = (s.a_z + s.omega) / big;
    EXPECT_NEAR(gamma_modulus_sq(s, t), c * c + r * r * sn * sn, 1e-13);
  }
}

TEST(GammaProduct, EmptyIsOne) {
  const std::vector<NuclearSpin> none;
  EXPECT_EQ(gamma_product(std::span<const NuclearSpin>(none), QubitPair{}, 3.0), Complex(1.0, 0.0));
}

TEST(GammaProduct, SixSpinToyReference) {
  const std::vector<NuclearSpin> unobs{spin(0.9, 0.4, -1.1, 0.0673, 0.0), spin(-0.7, 0.8, 0.5, 0.0673, 0.0),
                                       spin(1.2, -0.3, 0.9, 0.0673, 0.0)};
  EXPECT_NEAR(std::abs(gamma_product(std::span<const NuclearSpin>(unobs), QubitPair{}, 2.0)),
              0.0015375680615193447, 1e-12);
}

TEST(GammaProduct, LogSpaceAgreesWithDirect) {
  std::vector<NuclearSpin> many(100, spin(0.05, 0.02, -0.04, 0.0673, 0.3));
  const Complex single = gamma_single(many.front(), QubitPair{}, 5.0);
  const Complex prod = gamma_product(std::span<const NuclearSpin>(many), QubitPair{}, 5.0);
  EXPECT_NEAR(std::abs(prod - std::pow(single, 100)), 0.0, 1e-12);
  // below the threshold the direct product is used; the two paths agree
  std::vector<NuclearSpin> few(64, many.front());
  const Complex direct = gamma_product(std::span<const NuclearSpin>(few), QubitPair{}, 5.0);
  EXPECT_NEAR(std::abs(direct - std::pow(single, 64)), 0.0, 1e-12);
}

TEST(GammaProduct, TinyValuesStayFinite) {
  std::vector<NuclearSpin> many(5000, spin(1.5, 0.0, 0.0, 0.0673, 0.0));
  const Complex g = gamma_product(std::span<const NuclearSpin>(many), QubitPair{}, 1.0);
  EXPECT_TRUE(std::isfinite(g.real()) && std::isfinite(g.imag()));
  EXPECT_LE(std::abs(g), 1e-100);
}

TEST(T2Star, SingleSpin) {
  const std::vector<NuclearSpin> one{spin(1.0, 0.0, 1.0, 0.1, 0.0)};
  EXPECT_DOUBLE_EQ(t2_star(std::span<const NuclearSpin>(one)), 2.0);
}

TEST(T2Star, EmptyIsUndefined) {
  const std::vector<NuclearSpin> none;
  EXPECT_THROW(t2_star(std::span<const NuclearSpin>(none)), UndefinedQuantity);
  EXPECT_THROW(phase_shift(std::span<const NuclearSpin>(none), 1.0), UndefinedQuantity);
}

TEST(PhaseShift, UnpolarizedIsZero) {
  const std::vector<NuclearSpin> bath{spin(0.1, 0.2, 0.3, 0.07, 0.0), spin(0.4, 0.1, -0.2, 0.07, 0.0)};
  for (double t : {0.0, 1.0, 100.0}) EXPECT_EQ(phase_shift(std::span<const NuclearSpin>(bath), t), 0.0);
  const std::vector<NuclearSpin> pol{spin(0.1, 0.2, 0.3, 0.07, 0.5), spin(0.4, 0.1, -0.2, 0.07, 1.0)};
  EXPECT_NEAR(phase_shift(std::span<const NuclearSpin>(pol), 2.0), 0.5 * 0.3 - 0.2, 1e-15);
}

TEST(GammaShortTime, Landmarks) {
  const std::vector<NuclearSpin> bath{spin(0.1, 0.2, 0.3, 0.07, 0.0), spin(0.4, 0.1, -0.2, 0.07, 0.0)};
  const std::span<const NuclearSpin> s(bath);
  EXPECT_EQ(gamma_short_time(s, 0.0), Complex(1.0, 0.0));
  EXPECT_NEAR(std::abs(gamma_short_time(s, t2_star(s))), std::exp(-1.0), 1e-15);
}

TEST(GammaShortTime, PhaseSignFollowsProduct) {
  const std::vector<NuclearSpin> bath{spin(0.1, 0.05, 0.3, 0.07, 0.8), spin(0.05, -0.1, 0.4, 0.07, 1.0),
                                      spin(0.02, 0.1, -0.1, 0.07, 0.5)};
  const std::span<const NuclearSpin> s(bath);
  for (double t : {0.1, 0.2, 0.3}) {
    const Complex exact = gamma_product(s, QubitPair{}, t);
    ASSERT_GT(phase_shift(s, t), 0.01);
    EXPECT_GT(exact.imag(), 0.0);
    EXPECT_LE(std::abs(gamma_short_time(s, t) - exact) / std::abs(exact), 0.02);
  }
}

TEST(GammaShortTime, TracksProductAtShortTimes) {
  const auto real = sample_realization(LatticeSpec{}, 1e-3, 17);
  const auto env = partition(real, 20, 1, 1.0);
  const auto unobs = env.unobserved_spins();
  const std::span<const NuclearSpin> s(unobs);
  const double horizon = 0.2 / [&] {
    double m = 0.0;
    for (const auto& sp : unobs) m = std::max(m, ConditionalPrecession::of(sp, 1).rate);
    return m;
  }();
  for (int i = 1; i <= 20; ++i) {
    const double t = horizon * i / 20.0;
    const Complex exact = gamma_product(s, QubitPair{}, t);
    EXPECT_LE(std::abs(gamma_short_time(s, t) - exact) / std::abs(exact), 0.02);
  }
}

TEST(GammaProduct, ReachesOnePercentBetweenFiveAndThirtyMicroseconds) {
  // fN = 40, B = 10 G, observed set fully polarized
  const RealizationSampler sampler(LatticeSpec{});
  const auto grid = TimeGrid::uniform(30.0, 0.05);
  for (auto seed : expand_seeds(2024, 5)) {
    const auto env = partition(sampler.sample(1e-3, seed), 40, 1, 1.0);
    const auto g = gamma_product(env, QubitPair{}, grid);
    double crossing = -1.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (std::norm(g[i]) < 0.01) {
        crossing = grid.t[i];
        break;
      }
    EXPECT_GE(crossing, 5.0) << "seed " << seed;
    EXPECT_LE(crossing, 30.0) << "seed " << seed;
    // smooth: no revival above 0.05 once below 0.01
    for (std::size_t i = 0; i < g.size(); ++i)
      if (grid.t[i] > crossing) {
        EXPECT_LT(std::norm(g[i]), 0.05);
      }
  }
}

TEST(GammaProduct, LargerObservedFractionDecaysSlower) {
  const RealizationSampler sampler(LatticeSpec{});
  for (auto seed : expand_seeds(77, 5)) {
    const auto real = sampler.sample(1e-3, seed);
    double previous = 0.0;
    for (std::size_t fn : {10u, 20u, 30u, 40u}) {
      const double t2 = t2_star(partition(real, fn, 1, 1.0));
      EXPECT_GT(t2, previous);
      previous = t2;
    }
  }
}

TEST(GaussianFit, RecoversT2Star) {
  const auto env = partition(sample_realization(LatticeSpec{}, 1e-3, 31), 20, 1, 1.0);
  const auto unobs = env.unobserved_spins();
  const std::span<const NuclearSpin> s(unobs);
  const double t2 = t2_star(s);
  std::vector<double> t;
  std::vector<Complex> g;
  for (int i = 1; i <= 100; ++i) {
    t.push_back(t2 / 3.0 * i / 100.0);
    g.push_back(gamma_product(s, QubitPair{}, t.back()));
  }
  EXPECT_NEAR(fit_gaussian_decay_time(t, g) / t2, 1.0, 0.05);
}

TEST(GaussianFit, NoDecayThrows) {
  const std::vector<double> t{1.0, 2.0};
  const std::vector<Complex> g{1.0, 1.0};
  EXPECT_THROW(fit_gaussian_decay_time(t, g), UndefinedQuantity);
}

TEST(TimeGridType, UniformPoints) {
  const auto g = TimeGrid::uniform(1.0, 0.1);
  ASSERT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.t[3], 0.30000000000000004);
  EXPECT_DOUBLE_EQ(g.t.back(), 1.0);
  EXPECT_THROW(TimeGrid::uniform(1.0, 0.0), InvalidArgument);
  EXPECT_THROW(TimeGrid::from({0.0, 1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(TimeGrid::from({-1.0, 1.0}), InvalidArgument);
}

TEST(TimeGridType, StepResolvesFastestPrecession) {
  const std::vector<NuclearSpin> bath{spin(30.0, 0.0, 40.0, 0.0, 0.0)};  // rate 50 in the m = 1 branch
  EXPECT_NEAR(max_time_step(std::span<const NuclearSpin>(bath)), std::numbers::pi / 200.0, 1e-15);
  const std::vector<NuclearSpin> slow{spin(0.01, 0.0, 0.0, 0.01, 0.0)};
  EXPECT_DOUBLE_EQ(max_time_step(std::span<const NuclearSpin>(slow)), 0.1);
}
