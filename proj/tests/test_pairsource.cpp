#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dbell/medium.hpp"
#include "dbell/pairsource.hpp"

using namespace dbell;

namespace {

Projector bob(double theta, double phi, double c = 1.0) {
  return {cplx{c, 0.0}, PoincareState{theta, phi}, false};
}

const PoincareState D = PoincareState::diagonal();
const PoincareState A = PoincareState::antidiagonal();
const PoincareState H = PoincareState::horizontal();

struct Tuple {
  PoincareState alice;
  Projector bob;
  double nu;
};

Tuple random_tuple(Rng& gen) {
  const PoincareState a = random_uniform_state(gen);
  const double c = uniform01(gen);
  const Projector b{std::polar(c, uniform_angle(gen)), random_uniform_state(gen), false};
  return {a, b, uniform01(gen)};
}

}  // namespace

TEST(JointProbability, Examples) {
  EXPECT_NEAR(joint_probability(D, bob(pi / 2, 0), 1.0), 0.0, 1e-15);
  EXPECT_NEAR(joint_probability(D, bob(pi / 2, pi), 1.0), 0.5, 1e-15);
  EXPECT_NEAR(joint_probability(D, bob(pi / 2, 0), 0.0), 0.25, 1e-15);
  for (double nu : {0.0, 0.3, 0.93, 1.0}) EXPECT_NEAR(joint_probability(H, bob(0, 0), nu), 0.5, 1e-15);
}

TEST(JointProbability, RejectsVisibilityOutOfRange) {
  EXPECT_THROW(joint_probability(D, bob(0, 0), -0.01), std::invalid_argument);
  EXPECT_THROW(joint_probability(D, bob(0, 0), 1.01), std::invalid_argument);
  EXPECT_THROW(joint_probability(D, bob(0, 0), std::nan("")), std::invalid_argument);
  EXPECT_THROW(PairStateModel{2.0}, std::invalid_argument);
}

TEST(JointProbability, BoundedByHalfWeight) {
  Rng gen(1);
  for (int i = 0; i < 10000; ++i) {
    const auto t = random_tuple(gen);
    const double p = joint_probability(t.alice, t.bob, t.nu);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 0.5 * t.bob.weight() + 1e-15);
  }
}

TEST(JointProbability, AffineInVisibility) {
  Rng gen(2);
  for (int i = 0; i < 10000; ++i) {
    const auto t = random_tuple(gen);
    const double lhs = joint_probability(t.alice, t.bob, t.nu);
    const double rhs = t.nu * joint_probability(t.alice, t.bob, 1.0) +
                       (1.0 - t.nu) * joint_probability(t.alice, t.bob, 0.0);
    EXPECT_NEAR(lhs, rhs, 1e-15);
  }
}

TEST(JointProbability, TwoOutcomeCompleteness) {
  // Summing Alice's two outcomes and Bob's two ports at one output mode gives
  // half the energy routed to that mode, for every visibility.
  const auto tm = random_tm(20, 6);
  Rng gen(6);
  for (std::size_t k = 0; k < 20; ++k) {
    const PoincareState a = random_uniform_state(gen);
    const Projector ph = projector_from_tm(tm, k, Pol::H, 0);
    const Projector pv = projector_from_tm(tm, k, Pol::V, 0);
    double routed = 0.0;
    for (Pol out : {Pol::H, Pol::V})
      for (Pol in : {Pol::H, Pol::V}) routed += std::norm(tm.coefficient(k, out, 0, in));
    for (double nu : {0.0, 0.5, 0.93, 1.0}) {
      double sum = 0.0;
      for (const auto& s : {a, orthogonal_complement(a)})
        for (const auto& p : {ph, pv}) sum += joint_probability(s, p, nu);
      EXPECT_NEAR(sum, 0.5 * routed, 1e-10);
    }
  }
}

TEST(OracleJointProbability, Examples) {
  // Bob's theta_k = 0 labels the physical V analyzer after relabeling.
  EXPECT_NEAR(oracle_joint_probability(H, bob(0, 0), 1.0), 0.5, 1e-15);
  EXPECT_NEAR(oracle_joint_probability(H, bob(pi, 0), 1.0), 0.0, 1e-15);
  EXPECT_NEAR(oracle_joint_probability(D, bob(pi / 2, pi), 1.0), 0.5, 1e-15);
  EXPECT_THROW(oracle_joint_probability(H, bob(0, 0), 1.5), std::invalid_argument);
}

TEST(OracleJointProbability, MatchesClosedFormUnderRelabeling) {
  Rng gen(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = random_tuple(gen);
    worst = std::max(worst, std::abs(joint_probability(t.alice, t.bob, t.nu) -
                                     oracle_joint_probability(t.alice, t.bob, t.nu)));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(OracleJointProbability, BornRuleNormalization) {
  // A complete product measurement on rho_nu sums to one.
  Rng gen(4);
  for (int i = 0; i < 100; ++i) {
    const PoincareState a = random_uniform_state(gen);
    const PoincareState b = random_uniform_state(gen);
    const double nu = uniform01(gen);
    double sum = 0.0;
    for (const auto& s : {a, orthogonal_complement(a)})
      for (const auto& t : {b, orthogonal_complement(b)}) sum += oracle_joint_probability(s, unit_projector(t), nu);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(HomRate, Endpoints) {
  const DelayModel model{0.1};
  EXPECT_NEAR(hom_rate(D, bob(pi / 2, pi), 0.0, model, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(hom_rate(D, bob(pi / 2, pi), 1.0, model, 1.0), 0.25, 1e-10);
  EXPECT_DOUBLE_EQ(model.effective_visibility(0.0, 0.93), 0.93);
  EXPECT_THROW(DelayModel{0.0}, std::invalid_argument);
}

TEST(HomRate, EvenInDelay) {
  Rng gen(5);
  const DelayModel model{0.1};
  for (int i = 0; i < 100; ++i) {
    const auto t = random_tuple(gen);
    const double delta = 0.5 * uniform01(gen);
    EXPECT_EQ(hom_rate(t.alice, t.bob, delta, model, t.nu), hom_rate(t.alice, t.bob, -delta, model, t.nu));
  }
}

TEST(Contrast, Examples) {
  EXPECT_NEAR(*contrast(D, bob(pi / 2, pi), 1.0), 1.0, 1e-15);
  EXPECT_NEAR(*contrast(A, bob(pi / 2, pi), 1.0), -1.0, 1e-15);
  Rng gen(7);
  for (int i = 0; i < 100; ++i) {
    const auto c = contrast(random_uniform_state(gen), bob(0.0, uniform_angle(gen)), 0.93);
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(*c, 0.0);
  }
}

TEST(Contrast, UndefinedAtOppositePoles) {
  EXPECT_FALSE(contrast(H, bob(pi, 0), 1.0).has_value());
  EXPECT_FALSE(contrast(PoincareState::vertical(), bob(0, 0), 0.5).has_value());
}

TEST(Contrast, ClosedFormEqualsEndpointRatio) {
  Rng gen(8);
  const DelayModel model{0.1};
  for (int i = 0; i < 1000; ++i) {
    const auto t = random_tuple(gen);
    const auto c = contrast(t.alice, t.bob, t.nu);
    ASSERT_TRUE(c.has_value());
    const double r0 = hom_rate(t.alice, t.bob, 0.0, model, t.nu);
    const double rinf = hom_rate(t.alice, t.bob, 100.0, model, t.nu);
    EXPECT_NEAR(*c, (r0 - rinf) / rinf, 1e-12);
    EXPECT_LE(std::abs(*c), t.nu + 1e-15);
  }
}

TEST(Contrast, SimulatedFourPositionScan) {
  // Eight Haar-random Bob modes (4 positions x 2 ports), Alice on D and A.
  const auto tm = random_tm(200, 31);
  const std::vector<std::size_t> positions{11, 57, 120, 180};
  const auto modes = bob_projector_set(tm, positions, 0);
  ASSERT_EQ(modes.size(), 8u);
  for (const auto& m : modes) {
    const double cd = *contrast(D, m, 0.93);
    const double ca = *contrast(A, m, 0.93);
    EXPECT_LE(std::abs(cd), 0.93);
    EXPECT_NEAR(cd, -ca, 1e-15);
    // On the equator the contrast is -nu0 sin(theta_k) cos(phi_k - phi).
    EXPECT_NEAR(cd, -0.93 * std::sin(m.state.theta()) * std::cos(m.state.phi()), 1e-12);
  }
}

TEST(HomCurve, SamplingAndCsv) {
  const DelayModel model{0.1};
  const auto curve = hom_curve(D, bob(pi / 2, pi), model, 1.0);
  ASSERT_EQ(curve.delays.size(), 101u);
  EXPECT_NEAR(curve.delays.front(), -0.5, 1e-15);
  EXPECT_NEAR(curve.delays.back(), 0.5, 1e-15);
  EXPECT_EQ(curve.delays[50], 0.0);
  EXPECT_NEAR(curve.rates[50], 0.5, 1e-15);
  EXPECT_NEAR(curve.rates.front(), 0.25, 1e-10);
  for (double r : curve.rates) EXPECT_GE(r, 0.0);
  std::ostringstream os;
  write_hom_csv(os, curve);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "delta,rate");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 102);
  EXPECT_THROW(hom_curve(D, bob(0, 0), model, 1.0, 1), std::invalid_argument);
}
