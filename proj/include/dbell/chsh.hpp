#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "dbell/format.hpp"
#include "dbell/pairsource.hpp"
#include "dbell/polarization.hpp"
#include "dbell/random.hpp"

namespace dbell {

/// A pair of detection channels read out together. Bob's pairs are generally
/// not orthogonal; Alice's are an analyzer's two ports.
struct MeasurementBasis {
  Projector first;
  Projector second;
  std::size_t label = 0;
};

inline MeasurementBasis alice_basis(const PoincareState& s, std::size_t label = 0) {
  return {unit_projector(s), unit_projector(orthogonal_complement(s)), label};
}

inline MeasurementBasis alice_basis(const std::pair<PoincareState, PoincareState>& ports,
                                    std::size_t label = 0) {
  return {unit_projector(ports.first), unit_projector(ports.second), label};
}

using AlicePair = std::pair<MeasurementBasis, MeasurementBasis>;

class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct CorrelationValue {
  double e = 0.0;
  /// R_{A1B1}, R_{A1B2}, R_{A2B1}, R_{A2B2}
  std::array<double, 4> rates{};
};

inline double correlation_from_rates(const std::array<double, 4>& r) {
  const double den = r[0] + r[1] + r[2] + r[3];
  if (!(den > 1e-300)) throw UndefinedCorrelation("correlation: all joint rates vanish");
  return (r[0] - r[1] - r[2] + r[3]) / den;
}

inline CorrelationValue correlation(const MeasurementBasis& a, const MeasurementBasis& b, double nu) {
  auto rate = [nu](const Projector& pa, const Projector& pb) {
    return pa.weight() * joint_probability(pa.state, pb, nu);
  };
  CorrelationValue out;
  out.rates = {rate(a.first, b.first), rate(a.first, b.second), rate(a.second, b.first),
               rate(a.second, b.second)};
  out.e = correlation_from_rates(out.rates);
  return out;
}

struct SRecord {
  double s = 0.0;
  double sigma = 0.0;
  std::size_t alice_a = 0;
  std::size_t alice_aprime = 0;
  std::size_t k = 0;
  std::size_t kprime = 0;
};

/// Tsirelson bound 2 sqrt 2.
inline const double tsirelson_bound = 2.0 * std::sqrt(2.0);

/// |E(A,B_K) + E(A',B_K) + E(A,B_K') - E(A',B_K')|
inline double chsh_combination(double e_a_k, double e_ap_k, double e_a_kp, double e_ap_kp) {
  return std::abs(e_a_k + e_ap_k + e_a_kp - e_ap_kp);
}

inline SRecord s_value(const MeasurementBasis& a, const MeasurementBasis& a_prime,
                       const MeasurementBasis& b_k, const MeasurementBasis& b_kprime, double nu) {
  SRecord rec;
  rec.s = chsh_combination(correlation(a, b_k, nu).e, correlation(a_prime, b_k, nu).e,
                           correlation(a, b_kprime, nu).e, correlation(a_prime, b_kprime, nu).e);
  rec.alice_a = a.label;
  rec.alice_aprime = a_prime.label;
  rec.k = b_k.label;
  rec.kprime = b_kprime.label;
  return rec;
}

/// Member projector indices of Bob's basis K: all i < j in lexicographic order.
inline std::vector<std::pair<std::size_t, std::size_t>> basis_members(std::size_t n_projectors) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n_projectors >= 2) out.reserve(n_projectors * (n_projectors - 1) / 2);
  for (std::size_t i = 0; i < n_projectors; ++i)
    for (std::size_t j = i + 1; j < n_projectors; ++j) out.emplace_back(i, j);
  return out;
}

inline std::vector<MeasurementBasis> pair_bases(std::span<const Projector> projectors) {
  const auto members = basis_members(projectors.size());
  std::vector<MeasurementBasis> out;
  out.reserve(members.size());
  for (std::size_t K = 0; K < members.size(); ++K)
    out.push_back({projectors[members[K].first], projectors[members[K].second], K});
  return out;
}

struct Enumeration {
  std::vector<SRecord> records;
  /// Records dropped because a correlation was undefined (dark projectors).
  std::size_t skipped = 0;
};

/// Correlation of one Alice basis against every Bob basis, with its variance.
struct CorrelationRow {
  std::vector<double> e;
  std::vector<double> variance;
  std::vector<char> defined;
};

namespace detail {

inline unsigned resolve_workers(unsigned workers) {
  if (workers != 0) return workers;
  return std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
}

/// Records for every ordered (K, K') basis pair, K-major. Each worker fills a
/// contiguous block of K rows; blocks are concatenated in order, so the output
/// does not depend on the worker count.
inline Enumeration assemble(const CorrelationRow& a, const CorrelationRow& a_prime,
                            std::size_t label_a, std::size_t label_aprime, unsigned workers) {
  const std::size_t n = a.e.size();
  const unsigned w = std::max(1u, std::min<unsigned>(resolve_workers(workers),
                                                     static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<Enumeration> parts(w);
  auto work = [&](unsigned part) {
    const std::size_t lo = n * part / w;
    const std::size_t hi = n * (part + 1) / w;
    Enumeration& out = parts[part];
    out.records.reserve((hi - lo) * n);
    for (std::size_t K = lo; K < hi; ++K)
      for (std::size_t Kp = 0; Kp < n; ++Kp) {
        if (!(a.defined[K] && a_prime.defined[K] && a.defined[Kp] && a_prime.defined[Kp])) {
          ++out.skipped;
          continue;
        }
        SRecord rec;
        rec.s = chsh_combination(a.e[K], a_prime.e[K], a.e[Kp], a_prime.e[Kp]);
        rec.sigma = std::sqrt(a.variance[K] + a_prime.variance[K] + a.variance[Kp] +
                              a_prime.variance[Kp]);
        rec.alice_a = label_a;
        rec.alice_aprime = label_aprime;
        rec.k = K;
        rec.kprime = Kp;
        out.records.push_back(rec);
      }
  };
  if (w == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (unsigned part = 0; part < w; ++part) pool.emplace_back(work, part);
  }
  Enumeration all;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.records.size();
  all.records.reserve(total);
  for (auto& p : parts) {
    all.records.insert(all.records.end(), p.records.begin(), p.records.end());
    all.skipped += p.skipped;
  }
  return all;
}

}  // namespace detail

inline CorrelationRow noiseless_row(const MeasurementBasis& a, std::span<const MeasurementBasis> bases,
                                    double nu) {
  CorrelationRow row;
  row.e.assign(bases.size(), 0.0);
  row.variance.assign(bases.size(), 0.0);
  row.defined.assign(bases.size(), 0);
  for (std::size_t K = 0; K < bases.size(); ++K) {
    try {
      row.e[K] = correlation(a, bases[K], nu).e;
      row.defined[K] = 1;
    } catch (const UndefinedCorrelation&) {
    }
  }
  return row;
}

/// All (N(N-1)/2)^2 S values for one Alice pair against N Bob projectors.
inline Enumeration enumerate_s(const AlicePair& alice, std::span<const Projector> bob, double nu,
                               unsigned workers = 0) {
  check_visibility(nu);
  if (bob.size() < 2) throw std::invalid_argument("enumerate_s needs at least 2 Bob projectors");
  const auto bases = pair_bases(bob);
  return detail::assemble(noiseless_row(alice.first, bases, nu),
                          noiseless_row(alice.second, bases, nu), alice.first.label,
                          alice.second.label, workers);
}

/// Best S among `trials` random setting quadruples. Alice's two bases come
/// from random waveplate settings; each of Bob's two bases is a sphere-uniform
/// state and its orthogonal partner, with unit amplitude. The returned record
/// carries the winning trial index in k and kprime.
inline SRecord max_violation_search(double nu, std::size_t trials, std::uint64_t seed) {
  check_visibility(nu);
  if (trials == 0) throw std::invalid_argument("max_violation_search needs trials >= 1");
  Rng gen = make_stream(seed, StreamDomain::search);
  SRecord best;
  best.s = -1.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const MeasurementBasis a = alice_basis(random_alice_basis(gen), 0);
    const MeasurementBasis ap = alice_basis(random_alice_basis(gen), 1);
    const MeasurementBasis b = alice_basis(random_uniform_state(gen), t);
    const MeasurementBasis bp = alice_basis(random_uniform_state(gen), t);
    const SRecord rec = s_value(a, ap, b, bp, nu);
    if (rec.s > best.s) best = rec;
  }
  return best;
}

inline void write_srecords_csv(std::ostream& os, std::span<const SRecord> records) {
  os << "k,kprime,aliceA,aliceAprime,s,sigma\n";
  for (const auto& r : records)
    os << r.k << ',' << r.kprime << ',' << r.alice_a << ',' << r.alice_aprime << ','
       << csv_number(r.s) << ',' << csv_number(r.sigma) << '\n';
}

}  // namespace dbell
