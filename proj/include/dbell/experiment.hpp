#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbell/chsh.hpp"
#include "dbell/format.hpp"
#include "dbell/medium.hpp"
#include "dbell/pairsource.hpp"
#include "dbell/polarization.hpp"
#include "dbell/random.hpp"
#include "dbell/stats.hpp"

namespace dbell {

/// Invalid configuration; the message always names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::size_t m_spatial = 200;
  std::size_t n_positions = 15;
  double visibility = default_visibility;
  double coherence_length = default_coherence_length_mm;
  AcquisitionConfig acquisition{};
  bool noiseless = false;
  std::uint64_t seed = 1;
  std::size_t alice_draws = 1;
  std::size_t input_mode = 0;
  unsigned workers = 0;  ///< 0 = hardware concurrency (capped at 8)
  double bin_width = 0.05;
  double hist_lo = 0.0;
  double hist_hi = 3.0;

  void validate() const {
    auto require = [](bool ok, const char* key, const std::string& what) {
      if (!ok) throw ConfigError(std::string("invalid config: ") + key + " " + what);
    };
    require(m_spatial >= 1, "m_spatial", "must be >= 1");
    require(n_positions >= 1, "n_positions", "must be >= 1");
    require(n_positions <= m_spatial, "n_positions", "must not exceed m_spatial");
    require(visibility >= 0.0 && visibility <= 1.0, "visibility", "must lie in [0, 1]");
    require(coherence_length > 0.0, "coherence_length", "must be > 0");
    require(acquisition.pair_rate > 0.0, "pair_rate", "must be > 0");
    require(acquisition.integration_time > 0.0, "integration_time", "must be > 0");
    require(acquisition.efficiency > 0.0 && acquisition.efficiency <= 1.0, "efficiency",
            "must lie in (0, 1]");
    require(acquisition.background_rate >= 0.0, "background_rate", "must be >= 0");
    require(alice_draws >= 1, "alice_draws", "must be >= 1");
    require(input_mode < m_spatial, "input_mode", "must be < m_spatial");
    require(bin_width > 0.0, "bin_width", "must be > 0");
    require(hist_lo < hist_hi, "hist_lo", "must be < hist_hi");
  }
};

/// The fiber realisation and Bob's projectors for one seed.
struct Setup {
  TransmissionMatrix tm;
  std::vector<std::size_t> positions;
  std::vector<Projector> bob;
};

/// Positions are output modes 0 .. n_positions-1; under a Haar channel every
/// choice of distinct modes is statistically equivalent.
inline Setup make_setup(const ExperimentConfig& cfg) {
  cfg.validate();
  TransmissionMatrix tm = random_tm(cfg.m_spatial, cfg.seed);
  std::vector<std::size_t> positions(cfg.n_positions);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  auto bob = bob_projector_set(tm, positions, cfg.input_mode);
  return {std::move(tm), std::move(positions), std::move(bob)};
}

/// Alice's draw d: bases labelled 2d (A) and 2d + 1 (A').
inline AlicePair alice_draw(std::uint64_t seed, std::size_t draw) {
  Rng gen = make_stream(seed, StreamDomain::alice, draw);
  const auto a = random_alice_basis(gen);
  const auto ap = random_alice_basis(gen);
  return {alice_basis(a, 2 * draw), alice_basis(ap, 2 * draw + 1)};
}

// ---------------------------------------------------------------- hom

struct HomResult {
  std::size_t k = 0;
  HomCurve curve;
};

/// HOM-like curve between Alice's state and Bob's projector k, where k indexes
/// the position-major projector list (2 per position).
inline HomResult run_hom(const ExperimentConfig& cfg, const Setup& setup, const PoincareState& alice,
                         std::size_t k, std::size_t points = 101) {
  if (k >= setup.bob.size())
    throw std::out_of_range("hom: position " + std::to_string(k) + " out of range [0, " +
                            std::to_string(setup.bob.size()) + ")");
  return {k, hom_curve(alice, setup.bob[k], DelayModel{cfg.coherence_length}, cfg.visibility, points)};
}

struct ContrastRow {
  std::size_t k = 0;
  std::optional<double> first;   ///< Alice detector 1
  std::optional<double> second;  ///< Alice detector 2
};

inline std::vector<ContrastRow> contrast_table(const ExperimentConfig& cfg, const Setup& setup,
                                               const WaveplateSetting& setting) {
  const PoincareState d1 = waveplate_projection(setting, Detector::first);
  const PoincareState d2 = waveplate_projection(setting, Detector::second);
  std::vector<ContrastRow> rows;
  for (std::size_t k = 0; k < setup.bob.size(); ++k)
    rows.push_back({k, contrast(d1, setup.bob[k], cfg.visibility),
                    contrast(d2, setup.bob[k], cfg.visibility)});
  return rows;
}

inline void write_contrast_csv(std::ostream& os, const std::vector<ContrastRow>& rows) {
  auto cell = [](const std::optional<double>& c) { return c ? csv_number(*c) : std::string("nan"); };
  os << "k,contrast_detector1,contrast_detector2\n";
  for (const auto& r : rows) os << r.k << ',' << cell(r.first) << ',' << cell(r.second) << '\n';
}

// ---------------------------------------------------------------- chsh

struct ChshResult {
  Enumeration enumeration;
  std::vector<HistogramBin> histogram;
  CertificationReport report;
};

/// One Alice draw against one fiber realisation.
inline Enumeration enumerate_draw(const ExperimentConfig& cfg, const Setup& setup, std::size_t draw,
                                  double nu, bool noiseless) {
  const AlicePair alice = alice_draw(cfg.seed, draw);
  if (noiseless) return enumerate_s(alice, setup.bob, nu, cfg.workers);
  AcquisitionConfig acq = cfg.acquisition;
  acq.seed = derive_seed(cfg.seed, StreamDomain::counts, draw);
  return enumerate_s_noisy(alice, setup.bob, nu, acq, cfg.workers);
}

inline ChshResult run_chsh(const ExperimentConfig& cfg, const Setup& setup) {
  cfg.validate();
  ChshResult result;
  for (std::size_t d = 0; d < cfg.alice_draws; ++d) {
    Enumeration e = enumerate_draw(cfg, setup, d, cfg.visibility, cfg.noiseless);
    auto& all = result.enumeration;
    all.records.insert(all.records.end(), e.records.begin(), e.records.end());
    all.skipped += e.skipped;
  }
  const auto values = s_values(result.enumeration.records);
  result.histogram = histogram(values, cfg.bin_width, cfg.hist_lo, cfg.hist_hi);
  result.report = certify(result.enumeration.records, result.enumeration.skipped);
  return result;
}

inline ChshResult run_chsh(const ExperimentConfig& cfg) { return run_chsh(cfg, make_setup(cfg)); }

// ---------------------------------------------------------------- sweep

struct SweepEntry {
  double nu = 0.0;
  std::size_t draws = 0;
  /// Histogram counts averaged over Alice draws.
  std::vector<double> mean_counts;
  /// Mean over draws of the fraction of S values above 2.
  double mean_fraction_above_2 = 0.0;
  double max_s = 0.0;
};

struct SweepResult {
  std::vector<HistogramBin> bins;  ///< edges only; counts live in entries
  std::vector<SweepEntry> entries;
};

/// Noiseless S distributions per visibility, averaged over `draws` Alice
/// draws. The fiber and the Alice draws are shared by every visibility.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const std::vector<double>& nu_list,
                             std::size_t draws) {
  cfg.validate();
  if (nu_list.empty()) throw ConfigError("invalid config: nu_list must not be empty");
  if (draws == 0) throw ConfigError("invalid config: alice_draws must be >= 1");
  for (double nu : nu_list)
    if (!(nu >= 0.0 && nu <= 1.0)) throw ConfigError("invalid config: nu_list entries must lie in [0, 1]");
  const Setup setup = make_setup(cfg);
  SweepResult out;
  out.bins = histogram(std::span<const double>{}, cfg.bin_width, cfg.hist_lo, cfg.hist_hi);
  for (double nu : nu_list) {
    SweepEntry entry;
    entry.nu = nu;
    entry.draws = draws;
    entry.mean_counts.assign(out.bins.size(), 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
      const Enumeration e = enumerate_draw(cfg, setup, d, nu, true);
      const auto values = s_values(e.records);
      const auto h = histogram(values, cfg.bin_width, cfg.hist_lo, cfg.hist_hi);
      for (std::size_t i = 0; i < h.size(); ++i) entry.mean_counts[i] += static_cast<double>(h[i].count);
      const CertificationReport rep = certify(e.records, e.skipped);
      if (rep.total > 0)
        entry.mean_fraction_above_2 += static_cast<double>(rep.above_2) / static_cast<double>(rep.total);
      entry.max_s = std::max(entry.max_s, rep.max_s);
    }
    for (auto& c : entry.mean_counts) c /= static_cast<double>(draws);
    entry.mean_fraction_above_2 /= static_cast<double>(draws);
    out.entries.push_back(std::move(entry));
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "nu,bin_lo,bin_hi,mean_count\n";
  for (const auto& e : sweep.entries)
    for (std::size_t i = 0; i < sweep.bins.size(); ++i)
      os << csv_number(e.nu) << ',' << csv_number(sweep.bins[i].lo) << ','
         << csv_number(sweep.bins[i].hi) << ',' << csv_number(e.mean_counts[i]) << '\n';
}

inline void write_sweep_summary_csv(std::ostream& os, const SweepResult& sweep) {
  os << "nu,draws,mean_fraction_above_2,max_s\n";
  for (const auto& e : sweep.entries)
    os << csv_number(e.nu) << ',' << e.draws << ',' << csv_number(e.mean_fraction_above_2) << ','
       << csv_number(e.max_s) << '\n';
}

// ---------------------------------------------------------------- files

/// `<out>/run_<seed>/`, created if missing.
inline std::filesystem::path run_directory(const std::filesystem::path& out, std::uint64_t seed) {
  auto dir = out / ("run_" + std::to_string(seed));
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

/// Runs `fill` on a freshly opened file and reports I/O failures with the path.
template <class Fill>
void write_file(const std::filesystem::path& path, Fill&& fill) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  fill(os);
  os.flush();
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace dbell
