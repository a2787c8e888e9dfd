#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbsim/constants.hpp"
#include "sbsim/dynamics.hpp"
#include "sbsim/environment.hpp"
#include "sbsim/errors.hpp"
#include "sbsim/rng.hpp"

namespace sbsim::runner {

struct ScenarioConfig {
  // bath
  double concentration{0.011};
  std::size_t bath_size{400};
  double lattice_constant{0.357};
  double exclusion_radius{0.5};
  double generation_radius{0.0};

  // field and qubit
  double field_gauss{10.0};
  std::vector<double> field_sweep_gauss{10.0, 20.0, 50.0, 100.0};
  QubitPair pair{};

  // decoherence scan
  std::vector<std::size_t> observed_counts{10, 20, 30, 40};
  double decoherence_polarization{1.0};

  // fidelity scan
  std::vector<std::size_t> macrofraction_sizes{5, 10, 20};
  std::vector<double> polarizations{0.1, 0.5, 1.0};

  // sbs diagnostic
  std::size_t sbs_macrofraction_size{20};
  std::size_t macrofraction_count{2};
  double polarization{0.9};
  double sbs_threshold{0.1};
  double sbs_min_window_us{10.0};
  double sbs_horizon_us{100.0};

  // field sweep
  std::size_t field_sweep_macrofraction_size{20};
  double field_sweep_polarization{1.0};
  double long_time_start_us{150.0};

  // time grid
  double t_max_us{300.0};
  double step_us{0.05};

  // ensemble
  std::uint64_t master_seed{20201};
  std::size_t ensemble_size{100};
  std::vector<std::uint64_t> seeds;  // explicit list overrides master_seed expansion
  std::size_t per_realization_series{2};

  std::size_t self_check_samples{10000};
  std::size_t threads{0};  // 0: hardware concurrency
  std::string output_dir{"out"};

  [[nodiscard]] LatticeSpec lattice() const {
    LatticeSpec spec;
    spec.lattice_constant = lattice_constant;
    spec.concentration = concentration;
    spec.exclusion_radius = exclusion_radius;
    spec.target_count = bath_size;
    spec.generation_radius = generation_radius;
    return spec;
  }

  /// Explicit seeds if given, otherwise `ensemble_size` seeds expanded from `master_seed`.
  [[nodiscard]] std::vector<std::uint64_t> realization_seeds() const {
    if (!seeds.empty()) return seeds;
    return expand_seeds(master_seed, ensemble_size);
  }

  [[nodiscard]] TimeGrid grid() const { return TimeGrid::uniform(t_max_us, step_us); }

  void validate() const {
    lattice().validate();
    if (!(field_gauss >= 0.0)) throw InvalidArgument("field_gauss must be non-negative");
    for (double b : field_sweep_gauss)
      if (!(b >= 0.0)) throw InvalidArgument("field_sweep_gauss entries must be non-negative");
    for (auto f : observed_counts)
      if (f > bath_size) throw InvalidArgument("observed count exceeds bath_size");
    for (auto mu : macrofraction_sizes)
      if (mu == 0 || mu > bath_size) throw InvalidArgument("macrofraction sizes must lie in [1, bath_size]");
    for (double p : polarizations)
      if (!(std::abs(p) <= 1.0)) throw InvalidArgument("polarizations must lie in [-1, 1]");
    if (!(std::abs(polarization) <= 1.0) || !(std::abs(field_sweep_polarization) <= 1.0) ||
        !(std::abs(decoherence_polarization) <= 1.0))
      throw InvalidArgument("polarization must lie in [-1, 1]");
    if (sbs_macrofraction_size == 0 || macrofraction_count == 0 ||
        sbs_macrofraction_size * macrofraction_count > bath_size)
      throw InvalidArgument("sbs macrofractions must be nonempty and fit in the bath");
    if (field_sweep_macrofraction_size == 0 || field_sweep_macrofraction_size > bath_size)
      throw InvalidArgument("field sweep macrofraction size must lie in [1, bath_size]");
    if (!(sbs_threshold > 0.0)) throw InvalidArgument("sbs_threshold must be positive");
    if (!(t_max_us > 0.0) || !(step_us > 0.0)) throw InvalidArgument("time grid needs t_max_us > 0 and step_us > 0");
    if (seeds.empty() && ensemble_size == 0) throw InvalidArgument("ensemble_size must be at least 1");
  }
};

inline void to_json(nlohmann::json& j, const ScenarioConfig& c) {
  j = nlohmann::json{
      {"concentration", c.concentration},
      {"bath_size", c.bath_size},
      {"lattice_constant_nm", c.lattice_constant},
      {"exclusion_radius_nm", c.exclusion_radius},
      {"generation_radius_nm", c.generation_radius},
      {"field_gauss", c.field_gauss},
      {"field_sweep_gauss", c.field_sweep_gauss},
      {"qubit_pair", {c.pair.m, c.pair.m_prime}},
      {"observed_counts", c.observed_counts},
      {"decoherence_polarization", c.decoherence_polarization},
      {"macrofraction_sizes", c.macrofraction_sizes},
      {"polarizations", c.polarizations},
      {"sbs_macrofraction_size", c.sbs_macrofraction_size},
      {"macrofraction_count", c.macrofraction_count},
      {"polarization", c.polarization},
      {"sbs_threshold", c.sbs_threshold},
      {"sbs_min_window_us", c.sbs_min_window_us},
      {"sbs_horizon_us", c.sbs_horizon_us},
      {"field_sweep_macrofraction_size", c.field_sweep_macrofraction_size},
      {"field_sweep_polarization", c.field_sweep_polarization},
      {"long_time_start_us", c.long_time_start_us},
      {"t_max_us", c.t_max_us},
      {"step_us", c.step_us},
      {"master_seed", c.master_seed},
      {"ensemble_size", c.ensemble_size},
      {"seeds", c.seeds},
      {"per_realization_series", c.per_realization_series},
      {"self_check_samples", c.self_check_samples},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
  };
}

inline void from_json(const nlohmann::json& j, ScenarioConfig& c) {
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("concentration", c.concentration);
  get("bath_size", c.bath_size);
  get("lattice_constant_nm", c.lattice_constant);
  get("exclusion_radius_nm", c.exclusion_radius);
  get("generation_radius_nm", c.generation_radius);
  get("field_gauss", c.field_gauss);
  get("field_sweep_gauss", c.field_sweep_gauss);
  if (j.contains("qubit_pair")) {
    const auto levels = j.at("qubit_pair").get<std::vector<int>>();
    if (levels.size() != 2) throw InvalidArgument("qubit_pair must hold two levels");
    c.pair = QubitPair(levels[0], levels[1]);
  }
  get("observed_counts", c.observed_counts);
  get("decoherence_polarization", c.decoherence_polarization);
  get("macrofraction_sizes", c.macrofraction_sizes);
  get("polarizations", c.polarizations);
  get("sbs_macrofraction_size", c.sbs_macrofraction_size);
  get("macrofraction_count", c.macrofraction_count);
  get("polarization", c.polarization);
  get("sbs_threshold", c.sbs_threshold);
  get("sbs_min_window_us", c.sbs_min_window_us);
  get("sbs_horizon_us", c.sbs_horizon_us);
  get("field_sweep_macrofraction_size", c.field_sweep_macrofraction_size);
  get("field_sweep_polarization", c.field_sweep_polarization);
  get("long_time_start_us", c.long_time_start_us);
  get("t_max_us", c.t_max_us);
  get("step_us", c.step_us);
  get("master_seed", c.master_seed);
  get("ensemble_size", c.ensemble_size);
  get("seeds", c.seeds);
  get("per_realization_series", c.per_realization_series);
  get("self_check_samples", c.self_check_samples);
  get("threads", c.threads);
  get("output_dir", c.output_dir);
}

/// Reads a config document; a run manifest is accepted too (its "config" member is used).
inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path);
  const auto doc = nlohmann::json::parse(in);
  ScenarioConfig cfg;
  if (doc.contains("config") && doc.at("config").is_object())
    doc.at("config").get_to(cfg);
  else
    doc.get_to(cfg);
  return cfg;
}

}  // namespace sbsim::runner
