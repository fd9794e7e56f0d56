/**
 * @file stats.hpp
 * @brief Poisson counting statistics, first-order uncertainty propagation to
 *        E and S, certification summaries and histograms.
 *
 * Count uncertainties follow the sqrt(n) rule, so an empty cell carries zero
 * uncertainty. The four correlations inside one S value are combined as if
 * independent.
 */

#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "dbell/chsh.hpp"
#include "dbell/format.hpp"
#include "dbell/random.hpp"

namespace dbell {

struct AcquisitionConfig {
  double pair_rate = 500.0;         ///< pairs per second entering the analysis
  double integration_time = 240.0;  ///< seconds per joint setting
  double efficiency = 1.0;          ///< per detector arm, in (0, 1]
  double background_rate = 0.0;     ///< accidental counts per second per cell
  std::uint64_t seed = 0;

  void validate() const {
    if (!(pair_rate > 0.0)) throw std::invalid_argument("pair_rate must be > 0");
    if (!(integration_time > 0.0)) throw std::invalid_argument("integration_time must be > 0");
    if (!(efficiency > 0.0 && efficiency <= 1.0))
      throw std::invalid_argument("efficiency must lie in (0, 1]");
    if (!(background_rate >= 0.0)) throw std::invalid_argument("background_rate must be >= 0");
  }

  /// Expected counts for a joint detection probability `rate`.
  double mean_count(double rate) const {
    return (rate * pair_rate * efficiency * efficiency + background_rate) * integration_time;
  }
};

struct CountRecord {
  /// n_{A1B1}, n_{A1B2}, n_{A2B1}, n_{A2B2}
  std::array<std::uint64_t, 4> n{};

  std::uint64_t total() const { return n[0] + n[1] + n[2] + n[3]; }
};

template <class Generator>
std::uint64_t sample_count(double rate, const AcquisitionConfig& cfg, Generator& stream) {
  if (!(rate >= 0.0)) throw std::invalid_argument("sample_count: negative rate");
  const double mean = cfg.mean_count(rate);
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> poisson(mean);
  return poisson(stream);
}

template <class Generator>
CountRecord sample_counts(const std::array<double, 4>& expected_rates, const AcquisitionConfig& cfg,
                          Generator& stream) {
  for (double r : expected_rates)
    if (!(r >= 0.0)) throw std::invalid_argument("sample_counts: negative rate");
  CountRecord rec;
  for (std::size_t i = 0; i < 4; ++i) rec.n[i] = sample_count(expected_rates[i], cfg, stream);
  return rec;
}

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

/// E from raw counts, sigma from dE/dn_i = (s_i - E) / total with var(n_i) = n_i.
inline Estimate e_with_sigma(const CountRecord& counts) {
  const double total = static_cast<double>(counts.total());
  if (!(total > 0.0)) throw UndefinedCorrelation("e_with_sigma: all counts are zero");
  constexpr std::array<double, 4> sign{1.0, -1.0, -1.0, 1.0};
  double num = 0.0;
  for (std::size_t i = 0; i < 4; ++i) num += sign[i] * static_cast<double>(counts.n[i]);
  const double e = num / total;
  double var = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double d = (sign[i] - e) / total;
    var += d * d * static_cast<double>(counts.n[i]);
  }
  return {e, std::sqrt(var)};
}

/// Records ordered (A,B_K), (A',B_K), (A,B_K'), (A',B_K').
inline SRecord s_with_sigma(const std::array<CountRecord, 4>& records) {
  std::array<Estimate, 4> e;
  for (std::size_t i = 0; i < 4; ++i) e[i] = e_with_sigma(records[i]);
  SRecord rec;
  rec.s = chsh_combination(e[0].value, e[1].value, e[2].value, e[3].value);
  double var = 0.0;
  for (const auto& x : e) var += x.sigma * x.sigma;
  rec.sigma = std::sqrt(var);
  return rec;
}

/// Counts for every (Alice projector, Bob projector) cell. Alice projectors
/// are indexed A1, A2, A'1, A'2; cell (i, k) draws from its own stream
/// derived from (cfg.seed, i * n_bob + k).
struct CountTable {
  std::size_t n_bob = 0;
  std::vector<std::uint64_t> cells;

  std::uint64_t at(std::size_t alice_projector, std::size_t bob_projector) const {
    return cells[alice_projector * n_bob + bob_projector];
  }
};

inline CountTable sample_count_table(const AlicePair& alice, std::span<const Projector> bob,
                                     double nu, const AcquisitionConfig& cfg) {
  cfg.validate();
  check_visibility(nu);
  const std::array<const Projector*, 4> ap{&alice.first.first, &alice.first.second,
                                           &alice.second.first, &alice.second.second};
  CountTable table;
  table.n_bob = bob.size();
  table.cells.resize(4 * bob.size());
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < bob.size(); ++k) {
      const double rate = ap[i]->weight() * joint_probability(ap[i]->state, bob[k], nu);
      Rng stream = make_stream(cfg.seed, StreamDomain::counts, i * bob.size() + k);
      table.cells[i * bob.size() + k] = sample_count(rate, cfg, stream);
    }
  return table;
}

/// Count record of Alice basis `which` (0 = A, 1 = A') against Bob basis (i, j).
inline CountRecord basis_counts(const CountTable& table, std::size_t which, std::size_t i,
                                std::size_t j) {
  const std::size_t a1 = 2 * which;
  const std::size_t a2 = a1 + 1;
  return {{table.at(a1, i), table.at(a1, j), table.at(a2, i), table.at(a2, j)}};
}

inline CorrelationRow noisy_row(const CountTable& table, std::size_t which) {
  const auto members = basis_members(table.n_bob);
  CorrelationRow row;
  row.e.assign(members.size(), 0.0);
  row.variance.assign(members.size(), 0.0);
  row.defined.assign(members.size(), 0);
  for (std::size_t K = 0; K < members.size(); ++K) {
    const CountRecord c = basis_counts(table, which, members[K].first, members[K].second);
    if (c.total() == 0) continue;
    const Estimate est = e_with_sigma(c);
    row.e[K] = est.value;
    row.variance[K] = est.sigma * est.sigma;
    row.defined[K] = 1;
  }
  return row;
}

/// Poisson-noisy counterpart of enumerate_s: every S value is computed from one
/// shared table of sampled counts, as in a scan over fixed detector settings.
inline Enumeration enumerate_s_noisy(const AlicePair& alice, std::span<const Projector> bob,
                                     double nu, const AcquisitionConfig& cfg,
                                     unsigned workers = 0) {
  if (bob.size() < 2) throw std::invalid_argument("enumerate_s_noisy needs at least 2 Bob projectors");
  const CountTable table = sample_count_table(alice, bob, nu, cfg);
  return detail::assemble(noisy_row(table, 0), noisy_row(table, 1), alice.first.label,
                          alice.second.label, workers);
}

struct CertificationReport {
  std::size_t total = 0;
  std::size_t above_2 = 0;
  std::size_t above_2_by_5sigma = 0;
  double max_s = 0.0;
  double max_s_sigma = 0.0;
  std::size_t skipped = 0;
};

inline CertificationReport certify(std::span<const SRecord> records, std::size_t skipped = 0) {
  CertificationReport rep;
  rep.total = records.size();
  rep.skipped = skipped;
  bool first = true;
  for (const auto& r : records) {
    if (r.s > 2.0) {
      ++rep.above_2;
      if (r.sigma > 0.0 && (r.s - 2.0) / r.sigma > 5.0) ++rep.above_2_by_5sigma;
    }
    if (first || r.s > rep.max_s) {
      rep.max_s = r.s;
      rep.max_s_sigma = r.sigma;
      first = false;
    }
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const CertificationReport& rep) {
  nlohmann::ordered_json j;
  j["total"] = rep.total;
  j["above_2"] = rep.above_2;
  j["above_2_by_5sigma"] = rep.above_2_by_5sigma;
  j["max_s"] = rep.max_s;
  j["max_s_sigma"] = rep.max_s_sigma;
  j["skipped"] = rep.skipped;
  return j;
}

inline CertificationReport report_from_json(const nlohmann::json& j) {
  CertificationReport rep;
  rep.total = j.at("total").get<std::size_t>();
  rep.above_2 = j.at("above_2").get<std::size_t>();
  rep.above_2_by_5sigma = j.at("above_2_by_5sigma").get<std::size_t>();
  rep.max_s = j.at("max_s").get<double>();
  rep.max_s_sigma = j.at("max_s_sigma").get<double>();
  rep.skipped = j.at("skipped").get<std::size_t>();
  return rep;
}

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Left-closed, right-open bins of width `bin_width` over [lo, hi), preceded
/// by an underflow bin (-inf, lo) and followed by an overflow bin [hi, inf).
/// NaN values land in the overflow bin.
inline std::vector<HistogramBin> histogram(std::span<const double> values, double bin_width,
                                           double lo, double hi) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("histogram: bin_width must be > 0");
  if (!(lo < hi)) throw std::invalid_argument("histogram: need lo < hi");
  const double span = (hi - lo) / bin_width;
  auto nbins = static_cast<std::size_t>(std::llround(span));
  if (std::abs(span - static_cast<double>(nbins)) > 1e-9 * std::max(1.0, span))
    nbins = static_cast<std::size_t>(std::ceil(span));
  nbins = std::max<std::size_t>(nbins, 1);

  auto edge = [&](std::size_t i) {
    return i == nbins ? hi : lo + static_cast<double>(i) * bin_width;
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<HistogramBin> bins(nbins + 2);
  bins.front() = {-inf, lo, 0};
  for (std::size_t i = 0; i < nbins; ++i) bins[i + 1] = {edge(i), edge(i + 1), 0};
  bins.back() = {hi, inf, 0};

  for (double x : values) {
    if (x < lo) {
      ++bins.front().count;
      continue;
    }
    if (!(x < hi)) {
      ++bins.back().count;
      continue;
    }
    auto i = static_cast<std::size_t>(std::floor((x - lo) / bin_width));
    if (i >= nbins) i = nbins - 1;
    // Align with the reported edges, which may differ from the quotient by an ulp.
    while (i > 0 && x < edge(i)) --i;
    while (i + 1 < nbins && x >= edge(i + 1)) ++i;
    ++bins[i + 1].count;
  }
  return bins;
}

inline void write_histogram_csv(std::ostream& os, std::span<const HistogramBin> bins) {
  os << "bin_lo,bin_hi,count\n";
  for (const auto& b : bins) os << csv_number(b.lo) << ',' << csv_number(b.hi) << ',' << b.count << '\n';
}

inline std::vector<double> s_values(std::span<const SRecord> records) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.s);
  return out;
}

}  // namespace dbell
