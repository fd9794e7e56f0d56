/**
 * @file pairsource.hpp
 * @brief Joint detection probabilities for the post-selected photon pair.
 *
 * The source emits rho_nu = nu |Psi><Psi| + (1 - nu) rho_sep, where
 * |Psi> = (|H>_a|V>_b - |V>_a|H>_b)/sqrt(2) and rho_sep is the incoherent
 * mixture of |H>_a|V>_b and |V>_a|H>_b.
 *
 * Two engines compute the same numbers:
 *  - joint_probability(): closed form in the Poincare angles of Alice's state
 *    (theta, phi) and Bob's projector (c_k, theta_k, phi_k),
 *      (1/2)|c_k|^2 [ cos^2(theta/2)cos^2(theta_k/2) + sin^2(theta/2)sin^2(theta_k/2)
 *                     - 2 nu |cos cos sin sin| cos(phi_k - phi) ].
 *    This is the canonical engine for every reported quantity.
 *  - oracle_joint_probability(): an explicit 4x4 density matrix and Born rule.
 *
 * The closed form pairs cos(theta/2) with cos(theta_k/2), while the Born rule
 * on the anticorrelated |Psi> pairs cos with sin. The two agree once Bob's
 * angle is relabelled theta_k -> pi - theta_k (phi_k unchanged), which is what
 * the oracle does. The absolute-value bars are inert for theta, theta_k in
 * [0, pi] and are kept only to mirror the closed form.
 */

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dbell/format.hpp"
#include "dbell/polarization.hpp"

namespace dbell {

/// Source visibility used by default (maximum HOM-dip visibility of the source).
inline constexpr double default_visibility = 0.93;

/// Photon coherence length in millimetres.
inline constexpr double default_coherence_length_mm = 0.1;

inline void check_visibility(double nu) {
  if (!(nu >= 0.0 && nu <= 1.0))
    throw std::invalid_argument("visibility must lie in [0, 1], got " + format_sig(nu, 17));
}

struct PairStateModel {
  double visibility = default_visibility;

  explicit PairStateModel(double nu = default_visibility) : visibility(nu) { check_visibility(nu); }
};

/// Gaussian coherence envelope: nu(delta) = nu0 exp(-(delta / l_c)^2).
struct DelayModel {
  double coherence_length = default_coherence_length_mm;

  explicit DelayModel(double lc = default_coherence_length_mm) : coherence_length(lc) {
    if (!(lc > 0.0)) throw std::invalid_argument("coherence length must be > 0");
  }

  double effective_visibility(double delta, double nu0) const {
    const double x = delta / coherence_length;
    return nu0 * std::exp(-x * x);
  }
};

namespace detail {

struct JointTerms {
  double direct;  ///< |cos cos|^2 + |sin sin|^2
  double cross;   ///< 2 |cos cos sin sin| cos(phi_k - phi)
};

inline JointTerms joint_terms(const PoincareState& alice, const PoincareState& bob) {
  const HalfAngle a = half_angle(alice), b = half_angle(bob);
  const double cc = a.c * b.c;
  const double ss = a.s * b.s;
  return {cc * cc + ss * ss, 2.0 * std::abs(cc * ss) * std::cos(bob.phi() - alice.phi())};
}

}  // namespace detail

inline double joint_probability(const PoincareState& alice, const Projector& bob, double nu) {
  check_visibility(nu);
  const auto t = detail::joint_terms(alice, bob.state);
  // Clamp the O(eps) negative excursions at exact destructive interference.
  return std::max(0.0, 0.5 * bob.weight() * (t.direct - nu * t.cross));
}

/// Born-rule value Tr[rho_nu (P_alice x P_bob)] with explicit 4x4 matrices.
/// Basis order |p_a p_b> -> 2 p_a + p_b with H = 0, V = 1.
inline double oracle_joint_probability(const PoincareState& alice, const Projector& bob, double nu) {
  check_visibility(nu);
  using Vec2 = Eigen::Vector2cd;
  using Vec4 = Eigen::Vector4cd;
  using Mat4 = Eigen::Matrix4cd;

  const double r = 1.0 / std::sqrt(2.0);
  Vec4 singlet = Vec4::Zero();
  singlet(1) = r;   // |H V>
  singlet(2) = -r;  // |V H>
  Mat4 separable = Mat4::Zero();
  separable(1, 1) = 0.5;
  separable(2, 2) = 0.5;
  const Mat4 rho = nu * (singlet * singlet.adjoint()) + (1.0 - nu) * separable;

  const AmplitudeVector a = amplitude_vector(alice);
  const AmplitudeVector b = amplitude_vector(PoincareState{pi - bob.state.theta(), bob.state.phi()});
  const Vec2 va(a.h, a.v);
  const Vec2 vb = bob.amplitude * Vec2(b.h, b.v);
  const Eigen::Matrix2cd pa = va * va.adjoint();
  const Eigen::Matrix2cd pb = vb * vb.adjoint();
  Mat4 joint;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) joint.block<2, 2>(2 * i, 2 * j) = pa(i, j) * pb;
  return (rho * joint).trace().real();
}

inline double hom_rate(const PoincareState& alice, const Projector& bob, double delta,
                       const DelayModel& model, double nu0) {
  check_visibility(nu0);
  return joint_probability(alice, bob, model.effective_visibility(delta, nu0));
}

/// Closed-form HOM contrast (R_0 - R_inf) / R_inf scaled by nu0; empty when
/// the separable rate vanishes (Alice and Bob on opposite poles).
inline std::optional<double> contrast(const PoincareState& alice, const Projector& bob, double nu0) {
  check_visibility(nu0);
  const auto t = detail::joint_terms(alice, bob.state);
  if (!(t.direct > 1e-300)) return std::nullopt;
  return -nu0 * t.cross / t.direct;
}

struct HomCurve {
  std::vector<double> delays;
  std::vector<double> rates;
  std::optional<double> contrast;
};

/// Samples the HOM-like curve on `points` equally spaced delays in
/// [-span * l_c, span * l_c].
inline HomCurve hom_curve(const PoincareState& alice, const Projector& bob, const DelayModel& model,
                          double nu0, std::size_t points = 101, double span = 5.0) {
  if (points < 2) throw std::invalid_argument("hom_curve needs at least 2 points");
  HomCurve curve;
  curve.delays.reserve(points);
  curve.rates.reserve(points);
  const double half = span * model.coherence_length;
  for (std::size_t i = 0; i < points; ++i) {
    const double delta =
        -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(points - 1);
    curve.delays.push_back(delta);
    curve.rates.push_back(hom_rate(alice, bob, delta, model, nu0));
  }
  curve.contrast = contrast(alice, bob, nu0);
  return curve;
}

inline void write_hom_csv(std::ostream& os, const HomCurve& curve) {
  os << "delta,rate\n";
  for (std::size_t i = 0; i < curve.delays.size(); ++i)
    os << csv_number(curve.delays[i]) << ',' << csv_number(curve.rates[i]) << '\n';
}

}  // namespace dbell
