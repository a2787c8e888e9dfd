#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sbsim/constants.hpp"
#include "sbsim/errors.hpp"
#include "sbsim/rng.hpp"
#include "sbsim/vector3.hpp"

namespace sbsim {

struct LatticeSpec {
  double lattice_constant{0.357};  // conventional cubic cell edge, nm
  double concentration{0.011};
  double exclusion_radius{0.5};    // nm
  std::size_t target_count{400};
  Vector3 nv_axis{normalized(Vector3{1.0, 1.0, 1.0})};
  double generation_radius{0.0};   // nm; 0 selects auto_generation_radius()

  /// Ball radius whose expected 13C count is twice target_count.
  [[nodiscard]] double auto_generation_radius() const {
    const double site_density = 8.0 / std::pow(lattice_constant, 3);
    const double volume = 2.0 * static_cast<double>(target_count) / (concentration * site_density);
    return std::cbrt(3.0 * volume / (4.0 * std::numbers::pi));
  }

  [[nodiscard]] double effective_generation_radius() const {
    return generation_radius > 0.0 ? generation_radius : auto_generation_radius();
  }

  void validate() const {
    if (!(lattice_constant > 0.0)) throw InvalidArgument("lattice_constant must be positive");
    if (!(concentration > 0.0 && concentration <= 1.0))
      throw InvalidArgument("concentration must lie in (0, 1]");
    if (!(exclusion_radius >= 0.0)) throw InvalidArgument("exclusion_radius must be non-negative");
    if (target_count < 1) throw InvalidArgument("target_count must be at least 1");
    if (!is_finite(nv_axis) || norm(nv_axis) == 0.0) throw InvalidArgument("nv_axis must be a nonzero vector");
    if (!(effective_generation_radius() > exclusion_radius))
      throw InvalidArgument("generation radius must exceed exclusion_radius");
  }
};

/// Orthonormal NV frame: z along the NV axis, x the normalized projection of (1,-1,0).
struct NvFrame {
  Vector3 x;
  Vector3 y;
  Vector3 z;

  static NvFrame from_axis(const Vector3& axis) {
    if (!is_finite(axis) || norm(axis) == 0.0) throw InvalidArgument("nv_axis must be a nonzero vector");
    const Vector3 z = normalized(axis);
    Vector3 x = Vector3{1.0, -1.0, 0.0};
    x -= z * dot(z, x);
    if (norm(x) < 1e-12) {
      x = Vector3{1.0, 0.0, 0.0};
      x -= z * dot(z, x);
    }
    x = normalized(x);
    return {x, cross(z, x), z};
  }
};

/// Diamond site in units of a/4. All-even or all-odd coordinates with the FCC parity rule.
struct LatticeSite {
  std::array<int, 3> index;
  std::int64_t norm_sq_quarter;  // |index|^2, exact

  [[nodiscard]] Vector3 position(double lattice_constant) const {
    const double s = lattice_constant / 4.0;
    return {s * index[0], s * index[1], s * index[2]};
  }
};

namespace detail {

inline bool is_diamond_site(int i, int j, int k) {
  const auto mod4 = [](int v) { return ((v % 4) + 4) % 4; };
  const int pi = mod4(i);
  const int pj = mod4(j);
  const int pk = mod4(k);
  const bool all_even = pi % 2 == 0 && pj % 2 == 0 && pk % 2 == 0;
  const bool all_odd = pi % 2 == 1 && pj % 2 == 1 && pk % 2 == 1;
  if (all_even) return mod4(i + j + k) == 0;
  if (all_odd) return mod4(i + j + k - 3) == 0;
  return false;
}

}  // namespace detail

/// All diamond sites with 0 < |r| <= radius, ordered by distance, ties broken by index.
inline std::vector<LatticeSite> enumerate_sites(double lattice_constant, double radius) {
  if (!(lattice_constant > 0.0)) throw InvalidArgument("lattice_constant must be positive");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw InvalidArgument("radius must be finite and non-negative");
  std::vector<LatticeSite> sites;
  if (radius == 0.0) return sites;
  const double r_quarter = radius / (lattice_constant / 4.0);
  // small slack so sites exactly on the sphere survive the floating comparison
  const double limit = r_quarter * r_quarter * (1.0 + 1e-12);
  const int n = static_cast<int>(std::ceil(r_quarter));
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      for (int k = -n; k <= n; ++k) {
        const std::int64_t r2 = std::int64_t{i} * i + std::int64_t{j} * j + std::int64_t{k} * k;
        if (r2 == 0 || static_cast<double>(r2) > limit) continue;
        if (!detail::is_diamond_site(i, j, k)) continue;
        sites.push_back({{i, j, k}, r2});
      }
    }
  }
  std::sort(sites.begin(), sites.end(), [](const LatticeSite& a, const LatticeSite& b) {
    if (a.norm_sq_quarter != b.norm_sq_quarter) return a.norm_sq_quarter < b.norm_sq_quarter;
    return a.index < b.index;
  });
  return sites;
}

/// Carbon sites of the diamond lattice (NV at the origin, origin excluded) within `radius`.
inline std::vector<Vector3> generate_lattice_sites(const LatticeSpec& spec, double radius) {
  if (radius < 0.0 || !std::isfinite(radius)) throw InvalidArgument("radius must be finite and non-negative");
  const auto sites = enumerate_sites(spec.lattice_constant, radius);
  std::vector<Vector3> out;
  out.reserve(sites.size());
  for (const auto& s : sites) out.push_back(s.position(spec.lattice_constant));
  return out;
}

/// Dipolar tensor element prefactor * [ (u.v)/r^3 - 3 (u.r)(v.r)/r^5 ].
inline double dipolar_component(const Vector3& r, const Vector3& u, const Vector3& v, double prefactor) {
  const double r2 = norm_sq(r);
  if (r2 == 0.0) throw InvalidArgument("dipolar coupling undefined at zero separation");
  const double r1 = std::sqrt(r2);
  const double r3 = r2 * r1;
  const double r5 = r3 * r2;
  return prefactor * (dot(u, v) / r3 - 3.0 * dot(u, r) * dot(v, r) / r5);
}

struct HyperfineCoupling {
  double a_x{0.0};  // rad/us
  double a_y{0.0};
  double a_z{0.0};
};

inline HyperfineCoupling hyperfine_coupling(const Vector3& r, const PhysicalConstants& constants,
                                            const NvFrame& frame) {
  if (norm_sq(r) == 0.0) throw InvalidArgument("hyperfine coupling requires a nonzero displacement");
  const double pref = constants.dipolar_prefactor();
  return {dipolar_component(r, frame.z, frame.x, pref), dipolar_component(r, frame.z, frame.y, pref),
          dipolar_component(r, frame.z, frame.z, pref)};
}

inline HyperfineCoupling hyperfine_coupling(const Vector3& r, const PhysicalConstants& constants,
                                            const Vector3& nv_axis) {
  return hyperfine_coupling(r, constants, NvFrame::from_axis(nv_axis));
}

struct NuclearSpin {
  Vector3 position;  // nm
  double a_x{0.0};   // rad/us
  double a_y{0.0};
  double a_z{0.0};
  double a_perp{0.0};
  double omega{0.0};  // nuclear Zeeman splitting, rad/us
  double p{0.0};      // polarization in [-1, 1]

  static NuclearSpin from_couplings(double a_x, double a_y, double a_z, double omega, double p,
                                    Vector3 position = {}) {
    return {position, a_x, a_y, a_z, std::hypot(a_x, a_y), omega, p};
  }

  [[nodiscard]] double distance() const { return norm(position); }
};

struct EnvironmentRealization {
  std::uint64_t seed{0};
  std::vector<NuclearSpin> spins;                   // ascending distance from the NV
  std::vector<std::vector<std::size_t>> macrofractions;
  std::vector<std::size_t> unobserved;
  double field_tesla{0.0};
  std::size_t rejected_draws{0};

  [[nodiscard]] std::size_t size() const { return spins.size(); }

  [[nodiscard]] std::vector<NuclearSpin> select(std::span<const std::size_t> indices) const {
    std::vector<NuclearSpin> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(spins.at(i));
    return out;
  }

  [[nodiscard]] std::vector<NuclearSpin> unobserved_spins() const { return select(unobserved); }

  [[nodiscard]] std::vector<NuclearSpin> macrofraction_spins(std::size_t index) const {
    if (index >= macrofractions.size())
      throw InvalidArgument("macrofraction index " + std::to_string(index) + " out of range");
    if (macrofractions[index].empty()) throw InvalidArgument("macrofraction is empty");
    return select(macrofractions[index]);
  }

  [[nodiscard]] std::size_t observed_count() const {
    std::size_t n = 0;
    for (const auto& m : macrofractions) n += m.size();
    return n;
  }
};

/// Draws disorder realizations from one cached, distance-sorted lattice ball.
class RealizationSampler {
 public:
  static constexpr std::size_t kMaxAttempts = 100000;

  explicit RealizationSampler(LatticeSpec spec, PhysicalConstants constants = {})
      : spec_(spec), constants_(constants), frame_(NvFrame::from_axis(spec.nv_axis)) {
    spec_.validate();
    sites_ = enumerate_sites(spec_.lattice_constant, spec_.effective_generation_radius());
    const double excl_quarter = spec_.exclusion_radius / (spec_.lattice_constant / 4.0);
    const double limit = excl_quarter * excl_quarter * (1.0 + 1e-12);
    excluded_ = static_cast<std::size_t>(
        std::count_if(sites_.begin(), sites_.end(),
                      [&](const LatticeSite& s) { return static_cast<double>(s.norm_sq_quarter) <= limit; }));
  }

  [[nodiscard]] const LatticeSpec& spec() const { return spec_; }
  [[nodiscard]] const PhysicalConstants& constants() const { return constants_; }
  [[nodiscard]] const NvFrame& frame() const { return frame_; }
  [[nodiscard]] std::size_t site_count() const { return sites_.size(); }
  [[nodiscard]] std::size_t excluded_site_count() const { return excluded_; }

  /// Same seed -> bit-identical realization. Realizations with a 13C inside the exclusion
  /// ball are discarded and redrawn from the continuing generator stream.
  [[nodiscard]] EnvironmentRealization sample(double field_tesla, std::uint64_t seed) const {
    if (excluded_ > 0 && spec_.concentration >= 1.0)
      throw InvalidArgument("exclusion ball contains lattice sites but every site is occupied");
    Rng rng(seed);
    std::size_t rejected = 0;
    std::vector<std::size_t> occupied;
    for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
      occupied.clear();
      bool rejected_now = false;
      for (std::size_t i = 0; i < sites_.size(); ++i) {
        if (rng.uniform() >= spec_.concentration) continue;
        if (i < excluded_) {
          rejected_now = true;
          break;
        }
        occupied.push_back(i);
        if (occupied.size() == spec_.target_count) break;
      }
      if (rejected_now) {
        ++rejected;
        continue;
      }
      if (occupied.size() < spec_.target_count)
        throw InsufficientSites("only " + std::to_string(occupied.size()) + " occupied sites within " +
                                std::to_string(spec_.effective_generation_radius()) + " nm; need " +
                                std::to_string(spec_.target_count));
      return build(occupied, field_tesla, seed, rejected);
    }
    throw InvalidArgument("exclusion post-selection did not accept a realization within the attempt limit");
  }

 private:
  EnvironmentRealization build(const std::vector<std::size_t>& occupied, double field_tesla, std::uint64_t seed,
                               std::size_t rejected) const {
    EnvironmentRealization real;
    real.seed = seed;
    real.field_tesla = field_tesla;
    real.rejected_draws = rejected;
    const double omega = constants_.nuclear_zeeman(field_tesla);
    real.spins.reserve(occupied.size());
    for (auto i : occupied) {
      const Vector3 r = sites_[i].position(spec_.lattice_constant);
      const auto a = hyperfine_coupling(r, constants_, frame_);
      real.spins.push_back(NuclearSpin::from_couplings(a.a_x, a.a_y, a.a_z, omega, 0.0, r));
    }
    real.unobserved.resize(real.spins.size());
    std::iota(real.unobserved.begin(), real.unobserved.end(), std::size_t{0});
    return real;
  }

  LatticeSpec spec_;
  PhysicalConstants constants_;
  NvFrame frame_;
  std::vector<LatticeSite> sites_;
  std::size_t excluded_{0};
};

inline EnvironmentRealization sample_realization(const LatticeSpec& spec, double field_tesla, std::uint64_t seed,
                                                 const PhysicalConstants& constants = {}) {
  return RealizationSampler(spec, constants).sample(field_tesla, seed);
}

/// The `observed_count` spins nearest the NV get polarization `p` and are dealt round-robin,
/// by descending a_perp, into `macrofraction_count` equal groups; the rest are unpolarized.
inline EnvironmentRealization partition(const EnvironmentRealization& real, std::size_t observed_count,
                                        std::size_t macrofraction_count, double p) {
  if (observed_count > real.size())
    throw InvalidArgument("observed count " + std::to_string(observed_count) + " exceeds bath size " +
                          std::to_string(real.size()));
  if (!(std::abs(p) <= 1.0)) throw InvalidArgument("polarization must lie in [-1, 1]");
  if (observed_count > 0 && (macrofraction_count == 0 || observed_count % macrofraction_count != 0))
    throw InvalidArgument("macrofraction count must divide the observed count");

  EnvironmentRealization out = real;
  out.macrofractions.clear();
  out.unobserved.clear();
  for (std::size_t i = 0; i < out.spins.size(); ++i) out.spins[i].p = i < observed_count ? p : 0.0;
  if (observed_count > 0) {
    std::vector<std::size_t> order(observed_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.spins[a].a_perp > out.spins[b].a_perp; });
    out.macrofractions.resize(macrofraction_count);
    for (std::size_t i = 0; i < order.size(); ++i) out.macrofractions[i % macrofraction_count].push_back(order[i]);
  }
  for (std::size_t i = observed_count; i < out.spins.size(); ++i) out.unobserved.push_back(i);
  return out;
}

}  // namespace sbsim
