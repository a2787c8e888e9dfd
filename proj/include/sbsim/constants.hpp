#pragma once

#include <numbers>

namespace sbsim {

// Internal units: angular frequency in rad/us, time in us, length in nm, field in tesla.
namespace units {
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kGaussPerTesla = 1.0e4;

constexpr double gauss_to_tesla(double gauss) { return gauss / kGaussPerTesla; }
constexpr double tesla_to_gauss(double tesla) { return tesla * kGaussPerTesla; }
}  // namespace units

namespace codata {
inline constexpr double kMu0 = 1.25663706212e-6;        // N A^-2
inline constexpr double kHbar = 1.054571817e-34;        // J s
}  // namespace codata

/// Gyromagnetic ratios are linear frequencies per tesla; they are converted to angular
/// frequencies (x 2 pi) wherever an energy scale is formed.
struct PhysicalConstants {
  double gamma_e_ghz_per_t{28.07};
  double gamma_c13_mhz_per_t{10.71};
  double delta0_ghz{2.87};

  /// mu0 hbar gamma_e gamma_C / (4 pi) in rad/us * nm^3.
  [[nodiscard]] constexpr double dipolar_prefactor() const {
    const double gamma_e = units::kTwoPi * gamma_e_ghz_per_t * 1.0e9;       // rad s^-1 T^-1
    const double gamma_c = units::kTwoPi * gamma_c13_mhz_per_t * 1.0e6;     // rad s^-1 T^-1
    const double si = codata::kMu0 / (4.0 * std::numbers::pi) * codata::kHbar * gamma_e * gamma_c;  // rad s^-1 m^3
    return si * 1.0e27 * 1.0e-6;
  }

  /// Nuclear Zeeman splitting omega = 2 pi gamma_C B in rad/us.
  [[nodiscard]] constexpr double nuclear_zeeman(double field_tesla) const {
    return units::kTwoPi * gamma_c13_mhz_per_t * field_tesla;
  }

  /// Field (tesla) that produces a given nuclear Zeeman splitting.
  [[nodiscard]] constexpr double field_for_zeeman(double omega) const {
    return omega / (units::kTwoPi * gamma_c13_mhz_per_t);
  }
};

}  // namespace sbsim
