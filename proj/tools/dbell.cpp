// Command-line front end: hom, chsh, sweep, speckle and tm subcommands.
//
// Every output lands in <out>/run_<seed>/ and is a pure function of the
// configuration, so re-running with the same inputs rewrites identical files.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "dbell/experiment.hpp"

namespace fs = std::filesystem;
using namespace dbell;

namespace {

struct HomOptions {
  double hwp_deg = 22.5;
  double qwp_deg = 0.0;
  int detector = 1;
  std::size_t position = 0;
  std::size_t points = 101;
};

struct SpeckleOptions {
  double theta = 0.0;
  double phi = 0.0;
};

void add_config_options(CLI::App& app, ExperimentConfig& cfg, std::string& out) {
  app.set_config("--config", "", "flat key=value configuration file ('#' comments)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_option("--seed", cfg.seed, "master seed")->capture_default_str();
  app.add_option("--out", out, "output directory (a run_<seed>/ subdirectory is created)")
      ->capture_default_str();
  app.add_flag("--noiseless", cfg.noiseless, "exact rates instead of Poisson counts")
      ->capture_default_str();
  app.add_option("--nu,--visibility", cfg.visibility, "source visibility in [0, 1]")
      ->capture_default_str();
  app.add_option("--m_spatial", cfg.m_spatial, "spatial modes of the fiber")->capture_default_str();
  app.add_option("--n_positions", cfg.n_positions, "output positions scanned by Bob")
      ->capture_default_str();
  app.add_option("--coherence_length", cfg.coherence_length, "photon coherence length (mm)")
      ->capture_default_str();
  app.add_option("--pair_rate", cfg.acquisition.pair_rate, "pairs per second entering the analysis")
      ->capture_default_str();
  app.add_option("--integration_time", cfg.acquisition.integration_time,
                 "seconds per joint setting")
      ->capture_default_str();
  app.add_option("--efficiency", cfg.acquisition.efficiency, "detection efficiency per arm")
      ->capture_default_str();
  app.add_option("--background_rate", cfg.acquisition.background_rate,
                 "accidental counts per second per cell")
      ->capture_default_str();
  app.add_option("--alice_draws", cfg.alice_draws, "random Alice basis pairs")->capture_default_str();
  app.add_option("--input_mode", cfg.input_mode, "fiber input spatial mode b")->capture_default_str();
  app.add_option("--workers", cfg.workers, "enumeration threads (0 = auto)")->capture_default_str();
  app.add_option("--bin_width", cfg.bin_width, "histogram bin width")->capture_default_str();
  app.add_option("--hist_lo", cfg.hist_lo, "histogram lower edge")->capture_default_str();
  app.add_option("--hist_hi", cfg.hist_hi, "histogram upper edge")->capture_default_str();
}

void cmd_tm(const ExperimentConfig& cfg, const fs::path& dir) {
  const auto tm = random_tm(cfg.m_spatial, cfg.seed);
  write_file(dir / "tm.txt", [&](std::ostream& os) { write_tm(os, tm); });
  std::cout << "tm: M=" << tm.m_spatial() << " unitarity_residual="
            << format_sig(tm.unitarity_residual(), 3) << " -> " << (dir / "tm.txt").string() << '\n';
}

void cmd_speckle(const ExperimentConfig& cfg, const fs::path& dir, const SpeckleOptions& opt) {
  const auto tm = random_tm(cfg.m_spatial, cfg.seed);
  const auto pattern = speckle_intensity(tm, amplitude_vector(PoincareState{opt.theta, opt.phi}),
                                         cfg.input_mode);
  write_file(dir / "speckle.csv", [&](std::ostream& os) { write_speckle_csv(os, pattern); });
  std::cout << "speckle: total=" << format_sig(pattern.total(), 15) << " -> "
            << (dir / "speckle.csv").string() << '\n';
}

void cmd_hom(const ExperimentConfig& cfg, const fs::path& dir, const HomOptions& opt) {
  if (opt.detector != 1 && opt.detector != 2)
    throw ConfigError("invalid option: --detector must be 1 or 2");
  const Setup setup = make_setup(cfg);
  if (opt.position >= setup.bob.size())
    throw ConfigError("invalid option: --position must be < " + std::to_string(setup.bob.size()));
  const auto setting = WaveplateSetting::from_degrees(opt.hwp_deg, opt.qwp_deg);
  const PoincareState alice =
      waveplate_projection(setting, opt.detector == 1 ? Detector::first : Detector::second);
  const HomResult hom = run_hom(cfg, setup, alice, opt.position, opt.points);
  const auto hom_path = dir / ("hom_" + std::to_string(hom.k) + ".csv");
  write_file(hom_path, [&](std::ostream& os) { write_hom_csv(os, hom.curve); });
  const auto table = contrast_table(cfg, setup, setting);
  write_file(dir / "contrast_table.csv", [&](std::ostream& os) { write_contrast_csv(os, table); });
  std::cout << "hom: k=" << hom.k << " contrast="
            << (hom.curve.contrast ? csv_number(*hom.curve.contrast) : std::string("undefined"))
            << " -> " << hom_path.string() << '\n';
}

void cmd_chsh(const ExperimentConfig& cfg, const fs::path& dir) {
  const Setup setup = make_setup(cfg);
  std::cout << "chsh: " << setup.bob.size() << " projectors, "
            << basis_members(setup.bob.size()).size() << " bases\n";
  const ChshResult res = run_chsh(cfg, setup);
  write_file(dir / "s_records.csv",
             [&](std::ostream& os) { write_srecords_csv(os, res.enumeration.records); });
  write_file(dir / "histogram.csv", [&](std::ostream& os) { write_histogram_csv(os, res.histogram); });
  write_file(dir / "report.json",
             [&](std::ostream& os) { os << to_json(res.report).dump(2) << '\n'; });
  std::cout << "chsh: total=" << res.report.total << " above_2=" << res.report.above_2
            << " above_2_by_5sigma=" << res.report.above_2_by_5sigma
            << " max_s=" << csv_number(res.report.max_s) << " skipped=" << res.report.skipped
            << " -> " << dir.string() << '\n';
}

void cmd_sweep(const ExperimentConfig& cfg, const fs::path& dir, const std::vector<double>& nus) {
  const SweepResult sweep = run_sweep(cfg, nus, cfg.alice_draws);
  write_file(dir / "sweep.csv", [&](std::ostream& os) { write_sweep_csv(os, sweep); });
  write_file(dir / "sweep_summary.csv", [&](std::ostream& os) { write_sweep_summary_csv(os, sweep); });
  for (const auto& e : sweep.entries)
    std::cout << "sweep: nu=" << csv_number(e.nu) << " mean_fraction_above_2="
              << csv_number(e.mean_fraction_above_2) << " max_s=" << csv_number(e.max_s) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bell tests with random polarization projections from a multimode fiber"};
  app.fallthrough();
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string out = ".";
  add_config_options(app, cfg, out);

  auto* tm = app.add_subcommand("tm", "dump the transmission matrix (text format TM v1)");
  SpeckleOptions speckle_opt;
  auto* speckle = app.add_subcommand("speckle", "dump output intensities for a polarized input");
  speckle->add_option("--input-theta", speckle_opt.theta, "input polarization theta (rad)")
      ->capture_default_str();
  speckle->add_option("--input-phi", speckle_opt.phi, "input polarization phi (rad)")
      ->capture_default_str();

  HomOptions hom_opt;
  auto* hom = app.add_subcommand("hom", "HOM-like delay scan and contrast table");
  hom->add_option("--hwp", hom_opt.hwp_deg, "Alice HWP angle (deg)")->capture_default_str();
  hom->add_option("--qwp", hom_opt.qwp_deg, "Alice QWP angle (deg)")->capture_default_str();
  hom->add_option("--detector", hom_opt.detector, "Alice detector (1 or 2)")->capture_default_str();
  hom->add_option("--position", hom_opt.position, "Bob projector index k (2 per position)")
      ->capture_default_str();
  hom->add_option("--points", hom_opt.points, "delay samples over [-5 l_c, 5 l_c]")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));

  auto* chsh = app.add_subcommand("chsh", "enumerate S values, histogram and certify");

  std::vector<double> nu_list{0.0, 0.93, 1.0};
  auto* sweep = app.add_subcommand("sweep", "noiseless S distributions over several visibilities");
  sweep->add_option("--nu-list", nu_list, "comma separated visibilities")
      ->delimiter(',')
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    cfg.validate();
    const fs::path dir = run_directory(out, cfg.seed);
    if (*tm) cmd_tm(cfg, dir);
    if (*speckle) cmd_speckle(cfg, dir, speckle_opt);
    if (*hom) cmd_hom(cfg, dir, hom_opt);
    if (*chsh) cmd_chsh(cfg, dir);
    if (*sweep) cmd_sweep(cfg, dir, nu_list);
  } catch (const ConfigError& e) {
    std::cerr << "dbell: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dbell: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
