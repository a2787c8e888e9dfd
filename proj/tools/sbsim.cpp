// sbsim: command-line front end for the scenario runners.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sbsim/sbsim.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<double> b_gauss;
  std::vector<double> polarization;
  std::vector<std::size_t> macrofraction_size;
  std::optional<std::size_t> ensemble;
  std::optional<std::size_t> threads;
};

void add_common_options(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_path, "JSON config (a run manifest also works)")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed; per-realization seeds are expanded from it");
  app.add_option("--out-dir", o.out_dir, "output directory");
  app.add_option("--b-gauss", o.b_gauss, "field in Gauss (field-sweep accepts several)");
  app.add_option("--polarization", o.polarization, "observed-spin polarization (fidelity accepts several)");
  app.add_option("--macrofraction-size", o.macrofraction_size, "spins per macrofraction (fidelity accepts several)");
  app.add_option("--ensemble", o.ensemble, "number of disorder realizations");
  app.add_option("--threads", o.threads, "worker threads, 0 = all cores");
}

sbsim::runner::ScenarioConfig resolve(const Overrides& o) {
  auto cfg = o.config_path.empty() ? sbsim::runner::ScenarioConfig{} : sbsim::runner::load_config(o.config_path);
  if (o.seed) {
    cfg.master_seed = *o.seed;
    cfg.seeds.clear();
  }
  if (o.ensemble) {
    cfg.ensemble_size = *o.ensemble;
    cfg.seeds.clear();
  }
  if (o.out_dir) cfg.output_dir = *o.out_dir;
  if (!o.b_gauss.empty()) {
    cfg.field_gauss = o.b_gauss.front();
    cfg.field_sweep_gauss = o.b_gauss;
  }
  if (!o.polarization.empty()) {
    cfg.polarization = o.polarization.front();
    cfg.field_sweep_polarization = o.polarization.front();
    cfg.decoherence_polarization = o.polarization.front();
    cfg.polarizations = o.polarization;
  }
  if (!o.macrofraction_size.empty()) {
    cfg.sbs_macrofraction_size = o.macrofraction_size.front();
    cfg.field_sweep_macrofraction_size = o.macrofraction_size.front();
    cfg.macrofraction_sizes = o.macrofraction_size;
  }
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

int run_self_check(const sbsim::runner::ScenarioConfig& cfg) {
  const auto report = sbsim::runner::self_check(cfg.self_check_samples, cfg.master_seed);
  report.print(std::cout);
  std::filesystem::create_directories(cfg.output_dir);
  {
    sbsim::runner::CsvWriter csv(std::filesystem::path(cfg.output_dir) / "self_check.csv",
                                 {"check", "samples", "max_deviation", "tolerance", "status"});
    for (const auto& l : report.lines)
      csv.row(l.name, l.samples, l.max_deviation, l.tolerance,
              std::string(l.informational ? "info" : l.passed() ? "ok" : "fail"));
  }
  sbsim::runner::write_manifest(cfg, "self-check");
  std::cout << (report.passed() ? "self-check passed\n" : "self-check FAILED\n");
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV-center spectrum broadcast structure simulator"};
  app.set_version_flag("--version", std::string(sbsim::kVersion));
  app.require_subcommand(1);
  Overrides o;
  add_common_options(app, o);

  std::string chosen;
  const auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    s->callback([&chosen, name] { chosen = name; });
    return s;
  };
  sub("decoherence", "|gamma(t)|^2 for each observed-fraction size");
  sub("fidelity", "macrofraction fidelity over sizes and polarizations");
  sub("sbs", "SBS distance and windows for M macrofractions");
  sub("field-sweep", "fidelity for several magnetic fields");
  sub("stats", "counts of strongly coupled nuclei");
  sub("self-check", "closed forms against the brute-force oracle");

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = resolve(o);
    const auto start = std::chrono::steady_clock::now();
    if (chosen == "self-check") return run_self_check(cfg);
    if (chosen == "decoherence") {
      const auto r = sbsim::runner::run_decoherence_scan(cfg);
      for (const auto& s : r.series) {
        double t2 = 0.0;
        for (const auto& x : s.summaries) t2 += x.t2_star;
        std::cout << "fN=" << s.observed_count << "  mean T2*=" << t2 / static_cast<double>(s.summaries.size())
                  << " us\n";
      }
    } else if (chosen == "fidelity") {
      const auto r = sbsim::runner::run_fidelity_scan(cfg);
      for (const auto& s : r.series)
        std::cout << "muN=" << s.macrofraction_size << " p=" << s.polarization << "  mean F(t_max)=" << s.mean.back()
                  << '\n';
    } else if (chosen == "sbs") {
      const auto r = sbsim::runner::run_sbs_diagnostic(cfg);
      std::cout << "sustained window below eps=" << cfg.sbs_threshold << " for " << r.sustained_fraction() * 100.0
                << "% of realizations\n";
    } else if (chosen == "field-sweep") {
      const auto r = sbsim::runner::run_field_sweep(cfg);
      for (const auto& s : r.series)
        std::cout << "B=" << s.field_gauss << " G  long-time mean=" << s.long_time_mean << "  std=" << s.long_time_std
                  << '\n';
    } else if (chosen == "stats") {
      const auto r = sbsim::runner::run_coupling_statistics(cfg);
      std::cout << "B=" << r.field_gauss << " G  mean #(a_perp > w)=" << r.mean_perp()
                << "  mean #(|a_z| > w)=" << r.mean_parallel() << "  mean #(both)=" << r.mean_both() << '\n';
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "wrote " << cfg.output_dir << " in " << secs << " s\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
