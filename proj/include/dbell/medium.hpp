#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbell/format.hpp"
#include "dbell/polarization.hpp"
#include "dbell/random.hpp"

namespace dbell {

enum class Pol : int { H = 0, V = 1 };

/// Lossless multimode channel over (spatial mode x polarization).
///
/// Row index 2k + p' is output mode k with polarization p'; column index
/// 2j + p is input mode j with polarization p.
class TransmissionMatrix {
 public:
  using Matrix = Eigen::MatrixXcd;

  TransmissionMatrix(std::size_t m_spatial, Matrix entries, std::uint64_t seed = 0)
      : m_spatial_(m_spatial), entries_(std::move(entries)), seed_(seed) {
    if (m_spatial_ == 0) throw std::invalid_argument("transmission matrix needs m_spatial >= 1");
    const auto n = static_cast<Eigen::Index>(2 * m_spatial_);
    if (entries_.rows() != n || entries_.cols() != n)
      throw std::invalid_argument("transmission matrix must be (2M)x(2M)");
  }

  static TransmissionMatrix identity(std::size_t m_spatial) {
    const auto n = static_cast<Eigen::Index>(2 * m_spatial);
    return {m_spatial, Matrix::Identity(n, n)};
  }

  static Eigen::Index index(std::size_t mode, Pol p) {
    return static_cast<Eigen::Index>(2 * mode + static_cast<std::size_t>(p));
  }

  std::size_t m_spatial() const { return m_spatial_; }
  std::size_t dim() const { return 2 * m_spatial_; }
  std::uint64_t seed() const { return seed_; }
  const Matrix& entries() const { return entries_; }

  /// t^{p' p}_{k j}
  cplx coefficient(std::size_t k, Pol out, std::size_t j, Pol in) const {
    return entries_(index(k, out), index(j, in));
  }

  /// max |(T^dag T - I)_{ij}| and |(T T^dag - I)_{ij}| over all entries.
  double unitarity_residual() const {
    const auto n = entries_.rows();
    const Matrix id = Matrix::Identity(n, n);
    const double left = (entries_.adjoint() * entries_ - id).cwiseAbs().maxCoeff();
    const double right = (entries_ * entries_.adjoint() - id).cwiseAbs().maxCoeff();
    return std::max(left, right);
  }

 private:
  std::size_t m_spatial_;
  Matrix entries_;
  std::uint64_t seed_;
};

/// Haar-distributed unitary: QR of an i.i.d. complex Gaussian matrix with the
/// phases of diag(R) moved into Q.
inline TransmissionMatrix random_tm(std::size_t m_spatial, std::uint64_t seed) {
  if (m_spatial == 0) throw std::invalid_argument("random_tm: m_spatial must be >= 1");
  const auto n = static_cast<Eigen::Index>(2 * m_spatial);
  Rng gen = make_stream(seed, StreamDomain::transmission_matrix);
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  TransmissionMatrix::Matrix z(n, n);
  for (Eigen::Index col = 0; col < n; ++col)
    for (Eigen::Index row = 0; row < n; ++row) {
      const double re = gauss(gen);
      const double im = gauss(gen);
      z(row, col) = cplx{re, im};
    }
  Eigen::HouseholderQR<TransmissionMatrix::Matrix> qr(z);
  TransmissionMatrix::Matrix q = qr.householderQ();
  const TransmissionMatrix::Matrix& r = qr.matrixQR();
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx d = r(i, i);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(i) *= d / mag;
  }
  return {m_spatial, std::move(q), seed};
}

/// Projector realised at output mode k behind the `detector_pol` port, for
/// light entering at input mode b.
///
/// |c| = sqrt(|t^{p'V}|^2 + |t^{p'H}|^2), arg c = arg t^{p'H},
/// theta = 2 atan(|t^{p'V} / t^{p'H}|), phi = arg t^{p'V} - arg t^{p'H}.
inline Projector projector_from_tm(const TransmissionMatrix& tm, std::size_t k, Pol detector_pol,
                                   std::size_t b) {
  if (k >= tm.m_spatial() || b >= tm.m_spatial())
    throw std::out_of_range("projector_from_tm: mode index out of range");
  const cplx t_h = tm.coefficient(k, detector_pol, b, Pol::H);
  const cplx t_v = tm.coefficient(k, detector_pol, b, Pol::V);
  const double mh = std::abs(t_h);
  const double mv = std::abs(t_v);
  constexpr double tiny = 1e-300;
  if (mh < tiny && mv < tiny) return {cplx{0.0, 0.0}, PoincareState{}, true};
  const double magnitude = std::hypot(mh, mv);
  if (mh < tiny) return {std::polar(magnitude, std::arg(t_v)), PoincareState{pi, 0.0}, false};
  return {std::polar(magnitude, std::arg(t_h)),
          PoincareState{2.0 * std::atan(mv / mh), std::arg(t_v) - std::arg(t_h)}, false};
}

/// Two projectors per position (H port, then V port), position-major.
inline std::vector<Projector> bob_projector_set(const TransmissionMatrix& tm,
                                                std::span<const std::size_t> positions,
                                                std::size_t b) {
  if (positions.empty()) throw std::invalid_argument("bob_projector_set: no positions");
  std::set<std::size_t> seen;
  for (auto k : positions)
    if (!seen.insert(k).second)
      throw std::invalid_argument("bob_projector_set: duplicate position " + std::to_string(k));
  std::vector<Projector> out;
  out.reserve(2 * positions.size());
  for (auto k : positions) {
    out.push_back(projector_from_tm(tm, k, Pol::H, b));
    out.push_back(projector_from_tm(tm, k, Pol::V, b));
  }
  return out;
}

struct SpeckleMode {
  double intensity_h = 0.0;
  double intensity_v = 0.0;
};

struct SpecklePattern {
  std::vector<SpeckleMode> modes;

  double total() const {
    double sum = 0.0;
    for (const auto& m : modes) sum += m.intensity_h + m.intensity_v;
    return sum;
  }
};

/// Output intensities for a polarized field injected into input mode b.
inline SpecklePattern speckle_intensity(const TransmissionMatrix& tm, const AmplitudeVector& input,
                                        std::size_t b) {
  if (b >= tm.m_spatial()) throw std::out_of_range("speckle_intensity: input mode out of range");
  SpecklePattern pattern;
  pattern.modes.resize(tm.m_spatial());
  for (std::size_t k = 0; k < tm.m_spatial(); ++k) {
    auto field = [&](Pol out) {
      return tm.coefficient(k, out, b, Pol::H) * input.h + tm.coefficient(k, out, b, Pol::V) * input.v;
    };
    pattern.modes[k] = {std::norm(field(Pol::H)), std::norm(field(Pol::V))};
  }
  return pattern;
}

inline void write_speckle_csv(std::ostream& os, const SpecklePattern& pattern) {
  os << "k,intensity_h,intensity_v\n";
  for (std::size_t k = 0; k < pattern.modes.size(); ++k)
    os << k << ',' << csv_number(pattern.modes[k].intensity_h) << ','
       << csv_number(pattern.modes[k].intensity_v) << '\n';
}

// Text format:
//   TM v1 M=<int> seed=<uint64>
//   k p' j p re im          (one line per entry, p as 0 = H / 1 = V, 17 significant digits)
// Entries are written row-major.

inline void write_tm(std::ostream& os, const TransmissionMatrix& tm) {
  os << "TM v1 M=" << tm.m_spatial() << " seed=" << tm.seed() << '\n';
  for (std::size_t k = 0; k < tm.m_spatial(); ++k)
    for (int po = 0; po < 2; ++po)
      for (std::size_t j = 0; j < tm.m_spatial(); ++j)
        for (int pin = 0; pin < 2; ++pin) {
          const cplx t = tm.coefficient(k, static_cast<Pol>(po), j, static_cast<Pol>(pin));
          os << k << ' ' << po << ' ' << j << ' ' << pin << ' ' << format_sig(t.real(), 17) << ' '
             << format_sig(t.imag(), 17) << '\n';
        }
}

inline TransmissionMatrix read_tm(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("TM: missing header");
  std::size_t m = 0;
  unsigned long long seed = 0;
  if (std::sscanf(line.c_str(), "TM v1 M=%zu seed=%llu", &m, &seed) != 2 || m == 0)
    throw std::runtime_error("TM: malformed header '" + line + "'");
  const auto n = static_cast<Eigen::Index>(2 * m);
  TransmissionMatrix::Matrix entries = TransmissionMatrix::Matrix::Zero(n, n);
  const std::size_t expected = 4 * m * m;
  std::size_t seen = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t k, j;
    int po, pin;
    std::string re, im;
    if (!(fields >> k >> po >> j >> pin >> re >> im) || k >= m || j >= m || po < 0 || po > 1 ||
        pin < 0 || pin > 1)
      throw std::runtime_error("TM: malformed entry '" + line + "'");
    entries(TransmissionMatrix::index(k, static_cast<Pol>(po)),
            TransmissionMatrix::index(j, static_cast<Pol>(pin))) =
        cplx{std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr)};
    ++seen;
  }
  if (seen != expected)
    throw std::runtime_error("TM: expected " + std::to_string(expected) + " entries, read " +
                             std::to_string(seen));
  return {m, std::move(entries), seed};
}

}  // namespace dbell
