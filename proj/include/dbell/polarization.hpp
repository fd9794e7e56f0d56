/**
 * @file polarization.hpp
 * @brief Pure polarization states on the Poincare sphere, Jones-matrix
 *        waveplates and the projectors realised by a polarization analyzer.
 *
 * Conventions used throughout the library:
 *  - A state (theta, phi) has amplitudes cos(theta/2)|H> + e^{i phi} sin(theta/2)|V>,
 *    with theta in [0, pi] and phi in [0, 2 pi).
 *  - Global phase is dropped: the H amplitude is real and non-negative, and the
 *    V amplitude is real positive when the H amplitude vanishes.
 *  - phi is 0 at the poles (theta == 0 or theta == pi).
 *  - Waveplate fast axes are measured from H. A retarder with retardance G is
 *    R(a) diag(1, e^{-iG}) R(-a); the half-wave plate has G = pi and the
 *    quarter-wave plate G = pi/2. Global phases are dropped.
 *  - The analyzer is HWP(alpha) -> QWP(beta) -> polarizing splitter, with the
 *    quarter-wave plate next to the splitter. Detector 1 sits on the H port,
 *    detector 2 on the V port. With this order alpha = 22.5 deg, beta = 0
 *    projects onto |D> and |A>, and alpha = beta = 0 onto |H> and |V>.
 */

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "dbell/random.hpp"

namespace dbell {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2 pi).
inline double wrap_two_pi(double angle) {
  double r = std::fmod(angle, two_pi);
  if (r < 0.0) r += two_pi;
  if (r >= two_pi) r = 0.0;
  return r;
}

inline double degrees(double deg) { return deg * pi / 180.0; }

/// H and V components of a Jones vector.
struct AmplitudeVector {
  cplx h{1.0, 0.0};
  cplx v{0.0, 0.0};

  double norm_squared() const { return std::norm(h) + std::norm(v); }
};

/// <a|b>
inline cplx inner(const AmplitudeVector& a, const AmplitudeVector& b) {
  return std::conj(a.h) * b.h + std::conj(a.v) * b.v;
}

class PoincareState {
 public:
  /// |H>
  PoincareState() = default;

  /// Any (theta, phi) is accepted and folded onto the canonical chart.
  PoincareState(double theta, double phi) {
    double t = wrap_two_pi(theta);
    double p = phi;
    if (t > pi) {
      // cos((2pi - t)/2) = -cos(t/2): same ray up to a sign on H, i.e. phi + pi.
      t = two_pi - t;
      p += pi;
    }
    theta_ = t;
    phi_ = (t == 0.0 || t == pi) ? 0.0 : wrap_two_pi(p);
  }

  /// State of the ray spanned by a (not necessarily normalized) nonzero vector.
  static PoincareState from_amplitudes(const AmplitudeVector& amp) {
    const double mh = std::abs(amp.h);
    const double mv = std::abs(amp.v);
    if (mv == 0.0) return {0.0, 0.0};
    if (mh == 0.0) return {pi, 0.0};
    return {2.0 * std::atan2(mv, mh), std::arg(amp.v) - std::arg(amp.h)};
  }

  static PoincareState horizontal() { return {0.0, 0.0}; }
  static PoincareState vertical() { return {pi, 0.0}; }
  static PoincareState diagonal() { return {pi / 2, 0.0}; }
  static PoincareState antidiagonal() { return {pi / 2, pi}; }
  static PoincareState right_circular() { return {pi / 2, pi / 2}; }
  static PoincareState left_circular() { return {pi / 2, 3 * pi / 2}; }

  double theta() const { return theta_; }
  double phi() const { return phi_; }

  friend bool operator==(const PoincareState&, const PoincareState&) = default;

 private:
  double theta_ = 0.0;
  double phi_ = 0.0;
};

struct HalfAngle {
  double c;  ///< cos(theta / 2)
  double s;  ///< sin(theta / 2)
};

/// Exact at both poles, so H and V carry no spurious O(eps) admixture.
inline HalfAngle half_angle(const PoincareState& st) {
  if (st.theta() == pi) return {0.0, 1.0};
  return {std::cos(st.theta() / 2), std::sin(st.theta() / 2)};
}

inline AmplitudeVector amplitude_vector(const PoincareState& s) {
  const HalfAngle h = half_angle(s);
  return {cplx{h.c, 0.0}, std::polar(h.s, s.phi())};
}

/// |<a|b>|^2 for two pure states.
inline double fidelity(const PoincareState& a, const PoincareState& b) {
  return std::norm(inner(amplitude_vector(a), amplitude_vector(b)));
}

/// The exactly orthogonal state, (pi - theta, phi + pi).
inline PoincareState orthogonal_complement(const PoincareState& s) {
  return {pi - s.theta(), s.phi() + pi};
}

/// A detection channel: transmission amplitude c times a polarization state.
struct Projector {
  cplx amplitude{1.0, 0.0};
  PoincareState state{};
  /// Set when both coefficients feeding this channel vanish (c == 0).
  bool dark = false;

  double weight() const { return std::norm(amplitude); }
};

inline Projector unit_projector(const PoincareState& s) { return {cplx{1.0, 0.0}, s, false}; }

struct WaveplateSetting {
  double hwp_angle = 0.0;  ///< half-wave plate fast axis, radians
  double qwp_angle = 0.0;  ///< quarter-wave plate fast axis, radians

  WaveplateSetting() = default;
  WaveplateSetting(double hwp, double qwp)
      : hwp_angle(wrap_two_pi(hwp)), qwp_angle(wrap_two_pi(qwp)) {}

  static WaveplateSetting from_degrees(double hwp_deg, double qwp_deg) {
    return {degrees(hwp_deg), degrees(qwp_deg)};
  }
};

/// Output port of Alice's polarizing splitter.
enum class Detector { first = 1, second = 2 };

/// 2x2 complex matrix acting on (h, v).
struct JonesMatrix {
  cplx hh, hv, vh, vv;

  AmplitudeVector operator*(const AmplitudeVector& x) const {
    return {hh * x.h + hv * x.v, vh * x.h + vv * x.v};
  }
  JonesMatrix operator*(const JonesMatrix& o) const {
    return {hh * o.hh + hv * o.vh, hh * o.hv + hv * o.vv,
            vh * o.hh + vv * o.vh, vh * o.hv + vv * o.vv};
  }
  JonesMatrix adjoint() const {
    return {std::conj(hh), std::conj(vh), std::conj(hv), std::conj(vv)};
  }
};

/// Linear retarder with fast axis at `axis` from H and retardance `retardance`.
inline JonesMatrix retarder(double axis, double retardance) {
  const double c = std::cos(axis);
  const double s = std::sin(axis);
  const cplx slow = std::polar(1.0, -retardance);
  return {c * c + s * s * slow, c * s * (1.0 - slow),
          c * s * (1.0 - slow), s * s + c * c * slow};
}

inline JonesMatrix half_wave_plate(double axis) { return retarder(axis, pi); }
inline JonesMatrix quarter_wave_plate(double axis) { return retarder(axis, pi / 2); }

/// State projected onto by one detector of the HWP -> QWP -> splitter analyzer.
inline PoincareState waveplate_projection(const WaveplateSetting& setting, Detector detector) {
  const JonesMatrix analyzer =
      quarter_wave_plate(setting.qwp_angle) * half_wave_plate(setting.hwp_angle);
  const AmplitudeVector port = detector == Detector::first
                                   ? AmplitudeVector{cplx{1.0, 0.0}, cplx{0.0, 0.0}}
                                   : AmplitudeVector{cplx{0.0, 0.0}, cplx{1.0, 0.0}};
  // Detection probability |<port|M|psi>|^2 = |<M^dag port|psi>|^2.
  return PoincareState::from_amplitudes(analyzer.adjoint() * port);
}

/// A random analyzer setting, uniform in both waveplate angles.
template <class Generator>
WaveplateSetting random_waveplate_setting(Generator& gen) {
  const double hwp = uniform_angle(gen);
  const double qwp = uniform_angle(gen);
  return {hwp, qwp};
}

/// One random two-outcome basis of Alice, as (detector 1 state, detector 2 state).
template <class Generator>
std::pair<PoincareState, PoincareState> random_alice_basis(Generator& gen) {
  const WaveplateSetting setting = random_waveplate_setting(gen);
  return {waveplate_projection(setting, Detector::first),
          waveplate_projection(setting, Detector::second)};
}

/// Sphere-uniform (Haar) random pure state.
template <class Generator>
PoincareState random_uniform_state(Generator& gen) {
  const double z = 1.0 - 2.0 * uniform01(gen);
  const double phi = uniform_angle(gen);
  return {std::acos(z), phi};
}

}  // namespace dbell
