#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sbsim/dynamics.hpp"
#include "sbsim/environment.hpp"
#include "sbsim/fidelity.hpp"
#include "sbsim/rng.hpp"
#include "sbsim/runner/config.hpp"
#include "sbsim/runner/csv.hpp"
#include "sbsim/version.hpp"

namespace sbsim::runner {

/// Evaluates fn(0..count-1) on a small worker pool; results keep index order.
template <typename Fn>
auto parallel_map(std::size_t count, std::size_t threads, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using Result = decltype(fn(std::size_t{}));
  std::vector<Result> results(count);
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < count; i = next++) results[i] = fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

/// Realizations for every configured seed at one field.
inline std::vector<EnvironmentRealization> sample_ensemble(const ScenarioConfig& cfg, double field_gauss) {
  const RealizationSampler sampler(cfg.lattice());
  const auto seeds = cfg.realization_seeds();
  const double field = units::gauss_to_tesla(field_gauss);
  return parallel_map(seeds.size(), cfg.threads, [&](std::size_t i) { return sampler.sample(field, seeds[i]); });
}

/// Config grid, refined if any realization precesses too fast for the requested step.
inline TimeGrid effective_grid(const ScenarioConfig& cfg, const std::vector<EnvironmentRealization>& ensemble) {
  double step = cfg.step_us;
  for (const auto& env : ensemble) step = std::min(step, max_time_step(env.spins, cfg.pair));
  return TimeGrid::uniform(cfg.t_max_us, step);
}

inline std::string series_label(std::size_t realization) { return "r" + std::to_string(realization); }

inline double mean_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += v[i];
  return end > begin ? s / static_cast<double>(end - begin) : 0.0;
}

inline double stddev_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  const double m = mean_of(v, begin, end);
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += (v[i] - m) * (v[i] - m);
  return end > begin ? std::sqrt(s / static_cast<double>(end - begin)) : 0.0;
}

/// Elementwise mean of curves, summed in realization order.
inline std::vector<double> ensemble_mean(const std::vector<std::vector<double>>& curves) {
  if (curves.empty()) return {};
  std::vector<double> mean(curves.front().size(), 0.0);
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.size(); ++i) mean[i] += c[i];
  for (auto& m : mean) m /= static_cast<double>(curves.size());
  return mean;
}

inline void write_manifest(const ScenarioConfig& cfg, const std::string& scenario) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream stamp;
  stamp << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  nlohmann::json manifest{
      {"tool", "sbsim"},
      {"version", std::string(kVersion)},
      {"scenario", scenario},
      {"rng", std::string(kRngAlgorithm)},
      {"seeds", cfg.realization_seeds()},
      {"created_utc", stamp.str()},
      {"config", cfg},
  };
  std::ofstream out(std::filesystem::path(cfg.output_dir) / "manifest.json");
  out << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------------------------------
// decoherence
// ---------------------------------------------------------------------------------------

struct DecoherenceSummary {
  double t2_star{0.0};        // closed form, us
  double t2_fit{0.0};         // Gaussian fit of -ln|gamma| on [0, T2*/3], us
  double t_below_001{-1.0};   // first grid time with |gamma|^2 < 0.01, -1 if never
};

struct DecoherenceSeries {
  std::size_t observed_count{0};
  std::vector<double> mean_abs2;
  std::vector<std::vector<Complex>> realizations;  // first per_realization_series realizations
  std::vector<DecoherenceSummary> summaries;       // every realization
};

struct DecoherenceResult {
  TimeGrid grid;
  std::vector<DecoherenceSeries> series;
};

inline DecoherenceSummary summarize_decoherence(std::span<const NuclearSpin> unobserved, QubitPair pair,
                                                const TimeGrid& grid, const std::vector<double>& abs2) {
  DecoherenceSummary s;
  s.t2_star = t2_star(unobserved);
  const std::size_t fit_points = 200;
  std::vector<double> t(fit_points);
  std::vector<Complex> g(fit_points);
  for (std::size_t i = 0; i < fit_points; ++i) {
    t[i] = s.t2_star / 3.0 * static_cast<double>(i + 1) / static_cast<double>(fit_points);
    g[i] = gamma_product(unobserved, pair, t[i]);
  }
  s.t2_fit = fit_gaussian_decay_time(t, g);
  for (std::size_t i = 0; i < abs2.size(); ++i)
    if (abs2[i] < 0.01) {
      s.t_below_001 = grid.t[i];
      break;
    }
  return s;
}

inline DecoherenceResult compute_decoherence(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto ensemble = sample_ensemble(cfg, cfg.field_gauss);
  DecoherenceResult result;
  result.grid = effective_grid(cfg, ensemble);
  for (auto fn : cfg.observed_counts) {
    struct PerRealization {
      std::vector<Complex> gamma;
      std::vector<double> abs2;
      DecoherenceSummary summary;
    };
    auto per = parallel_map(ensemble.size(), cfg.threads, [&](std::size_t r) {
      const auto env = partition(ensemble[r], fn, fn > 0 ? 1 : 0, cfg.decoherence_polarization);
      const auto unobserved = env.unobserved_spins();
      PerRealization out;
      out.gamma = gamma_product(std::span<const NuclearSpin>(unobserved), cfg.pair, result.grid);
      out.abs2.reserve(out.gamma.size());
      for (auto g : out.gamma) out.abs2.push_back(std::norm(g));
      if (!unobserved.empty()) out.summary = summarize_decoherence(unobserved, cfg.pair, result.grid, out.abs2);
      return out;
    });
    DecoherenceSeries series;
    series.observed_count = fn;
    std::vector<std::vector<double>> abs2;
    for (std::size_t r = 0; r < per.size(); ++r) {
      abs2.push_back(std::move(per[r].abs2));
      series.summaries.push_back(per[r].summary);
      if (r < cfg.per_realization_series) series.realizations.push_back(std::move(per[r].gamma));
    }
    series.mean_abs2 = ensemble_mean(abs2);
    result.series.push_back(std::move(series));
  }
  return result;
}

inline DecoherenceResult run_decoherence_scan(const ScenarioConfig& cfg) {
  auto result = compute_decoherence(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  {
    CsvWriter csv(dir / "decoherence.csv", {"t_us", "fN", "series", "gamma_abs2"});
    for (const auto& s : result.series) {
      for (std::size_t r = 0; r < s.realizations.size(); ++r)
        for (std::size_t i = 0; i < result.grid.size(); ++i)
          csv.row(result.grid.t[i], s.observed_count, series_label(r), std::norm(s.realizations[r][i]));
      for (std::size_t i = 0; i < result.grid.size(); ++i)
        csv.row(result.grid.t[i], s.observed_count, std::string("mean"), s.mean_abs2[i]);
    }
  }
  {
    CsvWriter csv(dir / "decoherence_factor.csv", {"t_us", "fN", "series", "re", "im", "abs2"});
    for (const auto& s : result.series)
      for (std::size_t r = 0; r < s.realizations.size(); ++r)
        for (std::size_t i = 0; i < result.grid.size(); ++i) {
          const Complex g = s.realizations[r][i];
          csv.row(result.grid.t[i], s.observed_count, series_label(r), g.real(), g.imag(), std::norm(g));
        }
  }
  {
    CsvWriter csv(dir / "decoherence_summary.csv", {"fN", "series", "seed", "t2_star_us", "t2_fit_us", "t_abs2_below_0.01_us"});
    const auto seeds = cfg.realization_seeds();
    for (const auto& s : result.series)
      for (std::size_t r = 0; r < s.summaries.size(); ++r)
        csv.row(s.observed_count, series_label(r), seeds[r], s.summaries[r].t2_star, s.summaries[r].t2_fit,
                s.summaries[r].t_below_001);
  }
  write_manifest(cfg, "decoherence");
  return result;
}

// ---------------------------------------------------------------------------------------
// fidelity
// ---------------------------------------------------------------------------------------

struct FidelitySeries {
  std::size_t macrofraction_size{0};
  double polarization{0.0};
  std::vector<double> mean;
  std::vector<std::vector<double>> realizations;  // every realization
};

struct FidelityResult {
  TimeGrid grid;
  std::vector<FidelitySeries> series;
};

inline FidelityResult compute_fidelity(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto ensemble = sample_ensemble(cfg, cfg.field_gauss);
  FidelityResult result;
  result.grid = effective_grid(cfg, ensemble);
  for (auto mu : cfg.macrofraction_sizes) {
    for (double p : cfg.polarizations) {
      FidelitySeries series;
      series.macrofraction_size = mu;
      series.polarization = p;
      series.realizations = parallel_map(ensemble.size(), cfg.threads, [&](std::size_t r) {
        const auto env = partition(ensemble[r], mu, 1, p);
        return fidelity_macrofraction(env, 0, cfg.pair, result.grid).values;
      });
      series.mean = ensemble_mean(series.realizations);
      result.series.push_back(std::move(series));
    }
  }
  return result;
}

inline FidelityResult run_fidelity_scan(const ScenarioConfig& cfg) {
  auto result = compute_fidelity(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  CsvWriter csv(dir / "fidelity.csv", {"t_us", "macrofraction_size", "polarization", "series", "fidelity"});
  for (const auto& s : result.series) {
    const std::size_t shown = std::min(cfg.per_realization_series, s.realizations.size());
    for (std::size_t r = 0; r < shown; ++r)
      for (std::size_t i = 0; i < result.grid.size(); ++i)
        csv.row(result.grid.t[i], s.macrofraction_size, s.polarization, series_label(r), s.realizations[r][i]);
    for (std::size_t i = 0; i < result.grid.size(); ++i)
      csv.row(result.grid.t[i], s.macrofraction_size, s.polarization, std::string("mean"), s.mean[i]);
  }
  write_manifest(cfg, "fidelity");
  return result;
}

// ---------------------------------------------------------------------------------------
// sbs
// ---------------------------------------------------------------------------------------

struct SbsWindow {
  double first_start{-1.0};   // first run of D < threshold lasting min_window (-1: none)
  double first_end{-1.0};
  double longest{0.0};        // longest run of D < threshold inside the horizon, us
  bool sustained{false};
};

/// Scans D(t) up to `horizon` for contiguous runs below `threshold`.
inline SbsWindow find_sbs_window(const TimeGrid& grid, const std::vector<double>& distance, double threshold,
                                 double min_window, double horizon) {
  SbsWindow w;
  std::size_t i = 0;
  const std::size_t n = std::min(grid.size(), distance.size());
  while (i < n && grid.t[i] <= horizon) {
    if (!(distance[i] < threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && grid.t[j + 1] <= horizon && distance[j + 1] < threshold) ++j;
    const double length = grid.t[j] - grid.t[i];
    w.longest = std::max(w.longest, length);
    if (!w.sustained && length >= min_window) {
      w.sustained = true;
      w.first_start = grid.t[i];
      w.first_end = grid.t[j];
    }
    i = j + 1;
  }
  return w;
}

struct SbsRealization {
  std::vector<double> gamma_abs;
  std::vector<std::vector<double>> fidelity;  // per macrofraction
  std::vector<double> distance;               // max(|gamma|, max fidelity)
  SbsWindow window;
};

struct SbsResult {
  TimeGrid grid;
  std::vector<SbsRealization> realizations;
  std::vector<double> mean_distance;

  [[nodiscard]] double sustained_fraction() const {
    if (realizations.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& r : realizations) n += r.window.sustained ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(realizations.size());
  }
};

inline SbsRealization evaluate_sbs(const EnvironmentRealization& env, QubitPair pair, const TimeGrid& grid,
                                   double threshold, double min_window, double horizon) {
  SbsRealization out;
  const auto gamma = gamma_product(env, pair, grid);
  out.gamma_abs.reserve(gamma.size());
  for (auto g : gamma) out.gamma_abs.push_back(std::abs(g));
  out.distance = out.gamma_abs;
  for (std::size_t mf = 0; mf < env.macrofractions.size(); ++mf) {
    out.fidelity.push_back(fidelity_macrofraction(env, mf, pair, grid).values);
    for (std::size_t i = 0; i < grid.size(); ++i) out.distance[i] = std::max(out.distance[i], out.fidelity.back()[i]);
  }
  out.window = find_sbs_window(grid, out.distance, threshold, min_window, horizon);
  return out;
}

inline SbsResult compute_sbs(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto ensemble = sample_ensemble(cfg, cfg.field_gauss);
  SbsResult result;
  result.grid = effective_grid(cfg, ensemble);
  const std::size_t observed = cfg.sbs_macrofraction_size * cfg.macrofraction_count;
  result.realizations = parallel_map(ensemble.size(), cfg.threads, [&](std::size_t r) {
    const auto env = partition(ensemble[r], observed, cfg.macrofraction_count, cfg.polarization);
    return evaluate_sbs(env, cfg.pair, result.grid, cfg.sbs_threshold, cfg.sbs_min_window_us, cfg.sbs_horizon_us);
  });
  std::vector<std::vector<double>> distances;
  for (const auto& r : result.realizations) distances.push_back(r.distance);
  result.mean_distance = ensemble_mean(distances);
  return result;
}

inline SbsResult run_sbs_diagnostic(const ScenarioConfig& cfg) {
  auto result = compute_sbs(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  const std::size_t shown = std::min(cfg.per_realization_series, result.realizations.size());
  {
    CsvWriter csv(dir / "sbs_gamma.csv", {"t_us", "series", "gamma_abs2"});
    for (std::size_t r = 0; r < shown; ++r)
      for (std::size_t i = 0; i < result.grid.size(); ++i) {
        const double a = result.realizations[r].gamma_abs[i];
        csv.row(result.grid.t[i], series_label(r), a * a);
      }
  }
  {
    CsvWriter csv(dir / "sbs_fidelity.csv", {"t_us", "series", "macrofraction", "m", "m_prime", "fidelity"});
    for (std::size_t r = 0; r < shown; ++r)
      for (std::size_t mf = 0; mf < result.realizations[r].fidelity.size(); ++mf)
        for (std::size_t i = 0; i < result.grid.size(); ++i)
          csv.row(result.grid.t[i], series_label(r), mf, cfg.pair.m, cfg.pair.m_prime,
                  result.realizations[r].fidelity[mf][i]);
  }
  {
    CsvWriter csv(dir / "sbs_distance.csv", {"t_us", "series", "distance"});
    for (std::size_t r = 0; r < shown; ++r)
      for (std::size_t i = 0; i < result.grid.size(); ++i)
        csv.row(result.grid.t[i], series_label(r), result.realizations[r].distance[i]);
    for (std::size_t i = 0; i < result.grid.size(); ++i)
      csv.row(result.grid.t[i], std::string("mean"), result.mean_distance[i]);
  }
  {
    CsvWriter csv(dir / "sbs_windows.csv",
                  {"series", "seed", "window_start_us", "window_end_us", "longest_run_us", "sustained"});
    const auto seeds = cfg.realization_seeds();
    for (std::size_t r = 0; r < result.realizations.size(); ++r) {
      const auto& w = result.realizations[r].window;
      csv.row(series_label(r), seeds[r], w.first_start, w.first_end, w.longest, w.sustained ? 1 : 0);
    }
  }
  write_manifest(cfg, "sbs");
  return result;
}

// ---------------------------------------------------------------------------------------
// field sweep
// ---------------------------------------------------------------------------------------

struct FieldSweepSeries {
  double field_gauss{0.0};
  std::vector<std::vector<double>> realizations;
  std::vector<double> mean;
  double long_time_mean{0.0};   // time average of the ensemble-mean curve on [long_time_start, t_max]
  double long_time_std{0.0};    // ensemble average of each realization's temporal std on that window
};

struct FieldSweepResult {
  TimeGrid grid;
  std::vector<FieldSweepSeries> series;
};

inline FieldSweepResult compute_field_sweep(const ScenarioConfig& cfg) {
  cfg.validate();
  FieldSweepResult result;
  std::vector<std::vector<EnvironmentRealization>> ensembles;
  for (double b : cfg.field_sweep_gauss) ensembles.push_back(sample_ensemble(cfg, b));
  double step = cfg.step_us;
  for (const auto& e : ensembles)
    for (const auto& env : e) step = std::min(step, max_time_step(env.spins, cfg.pair));
  result.grid = TimeGrid::uniform(cfg.t_max_us, step);
  const auto start = static_cast<std::size_t>(
      std::lower_bound(result.grid.t.begin(), result.grid.t.end(), cfg.long_time_start_us) - result.grid.t.begin());
  for (std::size_t b = 0; b < cfg.field_sweep_gauss.size(); ++b) {
    FieldSweepSeries series;
    series.field_gauss = cfg.field_sweep_gauss[b];
    series.realizations = parallel_map(ensembles[b].size(), cfg.threads, [&](std::size_t r) {
      const auto env = partition(ensembles[b][r], cfg.field_sweep_macrofraction_size, 1, cfg.field_sweep_polarization);
      return fidelity_macrofraction(env, 0, cfg.pair, result.grid).values;
    });
    series.mean = ensemble_mean(series.realizations);
    const std::size_t end = result.grid.size();
    series.long_time_mean = mean_of(series.mean, start, end);
    double std_sum = 0.0;
    for (const auto& c : series.realizations) std_sum += stddev_of(c, start, end);
    series.long_time_std = std_sum / static_cast<double>(series.realizations.size());
    result.series.push_back(std::move(series));
  }
  return result;
}

inline FieldSweepResult run_field_sweep(const ScenarioConfig& cfg) {
  auto result = compute_field_sweep(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  {
    CsvWriter csv(dir / "field_sweep.csv", {"t_us", "b_gauss", "series", "fidelity"});
    for (const auto& s : result.series) {
      const std::size_t shown = std::min(cfg.per_realization_series, s.realizations.size());
      for (std::size_t r = 0; r < shown; ++r)
        for (std::size_t i = 0; i < result.grid.size(); ++i)
          csv.row(result.grid.t[i], s.field_gauss, series_label(r), s.realizations[r][i]);
      for (std::size_t i = 0; i < result.grid.size(); ++i)
        csv.row(result.grid.t[i], s.field_gauss, std::string("mean"), s.mean[i]);
    }
  }
  {
    CsvWriter csv(dir / "field_sweep_summary.csv", {"b_gauss", "long_time_mean", "long_time_std"});
    for (const auto& s : result.series) csv.row(s.field_gauss, s.long_time_mean, s.long_time_std);
  }
  write_manifest(cfg, "field-sweep");
  return result;
}

// ---------------------------------------------------------------------------------------
// coupling statistics
// ---------------------------------------------------------------------------------------

struct CouplingCounts {
  std::size_t perp_above{0};      // a_perp > omega
  std::size_t parallel_above{0};  // |a_z| > omega
  std::size_t both_above{0};      // both of the above
};

inline CouplingCounts count_strong_couplings(std::span<const NuclearSpin> spins) {
  CouplingCounts c;
  for (const auto& s : spins) {
    const bool perp = s.a_perp > s.omega;
    const bool par = std::abs(s.a_z) > s.omega;
    c.perp_above += perp ? 1 : 0;
    c.parallel_above += par ? 1 : 0;
    c.both_above += (perp && par) ? 1 : 0;
  }
  return c;
}

struct CouplingStatsResult {
  double field_gauss{0.0};
  std::vector<CouplingCounts> counts;

  [[nodiscard]] double mean_perp() const {
    double s = 0.0;
    for (const auto& c : counts) s += static_cast<double>(c.perp_above);
    return counts.empty() ? 0.0 : s / static_cast<double>(counts.size());
  }
  [[nodiscard]] double mean_parallel() const {
    double s = 0.0;
    for (const auto& c : counts) s += static_cast<double>(c.parallel_above);
    return counts.empty() ? 0.0 : s / static_cast<double>(counts.size());
  }
  [[nodiscard]] double mean_both() const {
    double s = 0.0;
    for (const auto& c : counts) s += static_cast<double>(c.both_above);
    return counts.empty() ? 0.0 : s / static_cast<double>(counts.size());
  }
};

inline CouplingStatsResult compute_coupling_statistics(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto ensemble = sample_ensemble(cfg, cfg.field_gauss);
  CouplingStatsResult result;
  result.field_gauss = cfg.field_gauss;
  for (const auto& env : ensemble) result.counts.push_back(count_strong_couplings(env.spins));
  return result;
}

inline CouplingStatsResult run_coupling_statistics(const ScenarioConfig& cfg) {
  auto result = compute_coupling_statistics(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  const auto seeds = cfg.realization_seeds();
  {
    CsvWriter csv(dir / "coupling_stats.csv",
                  {"series", "seed", "b_gauss", "perp_above_zeeman", "parallel_above_zeeman", "both_above_zeeman"});
    for (std::size_t r = 0; r < result.counts.size(); ++r) {
      const auto& c = result.counts[r];
      csv.row(series_label(r), seeds[r], result.field_gauss, c.perp_above, c.parallel_above, c.both_above);
    }
  }
  {
    CsvWriter csv(dir / "coupling_histogram.csv", {"b_gauss", "kind", "count", "realizations"});
    const auto emit = [&](const char* kind, auto member) {
      std::map<std::size_t, std::size_t> hist;
      for (const auto& c : result.counts) ++hist[c.*member];
      for (const auto& [count, n] : hist) csv.row(result.field_gauss, std::string(kind), count, n);
    };
    emit("perp", &CouplingCounts::perp_above);
    emit("parallel", &CouplingCounts::parallel_above);
    emit("both", &CouplingCounts::both_above);
  }
  write_manifest(cfg, "stats");
  return result;
}

}  // namespace sbsim::runner
