#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ghzqkd/protocol.hpp"
#include "ghzqkd/random.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace ghzqkd;
using testutil::expect_code;
using testutil::planar;

namespace {

int direct_sign(Variant v, int k) { return oracle::sign(v == Variant::Plus ? 1 : -1, k); }

std::vector<double> random_table(int n, RandomStream& rng) {
  std::vector<double> t(std::size_t{1} << n);
  for (auto& x : t) x = rng.uniform() * 2 - 1;
  return t;
}

}  // namespace

TEST(Protocol, CoefficientTables) {
  // k mod 4 = 0,1,2,3
  const int plus[] = {1, -1, -1, 1};
  const int minus[] = {1, 1, -1, -1};
  for (int k = 0; k < 16; ++k) {
    EXPECT_EQ(svetlichny_coefficient_for_count(Variant::Plus, k), plus[k % 4]);
    EXPECT_EQ(svetlichny_coefficient_for_count(Variant::Minus, k), minus[k % 4]);
  }
}

TEST(Protocol, CoefficientsMatchClosedForm) {
  for (int n = 1; n <= 8; ++n) {
    for (std::uint32_t x = 0; x < (1u << n); ++x) {
      const int k = std::popcount(x);
      EXPECT_EQ(svetlichny_coefficient(Variant::Plus, x), direct_sign(Variant::Plus, k));
      EXPECT_EQ(svetlichny_coefficient(Variant::Minus, x), direct_sign(Variant::Minus, k));
    }
  }
}

TEST(Protocol, Bounds) {
  EXPECT_EQ(classical_bound(3), 4.0);
  EXPECT_EQ(classical_bound(4), 8.0);
  EXPECT_NEAR(quantum_max(3), 4 * std::numbers::sqrt2, 1e-15);
  expect_code(ErrorCode::InvalidPartyCount, [] { classical_bound(1); });
}

TEST(Protocol, SvetlichnyValueMatchesOracle) {
  RandomStream rng(17);
  for (int n = 2; n <= 6; ++n) {
    const auto t = random_table(n, rng);
    EXPECT_NEAR(svetlichny_value(t, Variant::Plus), oracle::svetlichny(t, 1, n), 1e-12);
    EXPECT_NEAR(svetlichny_value(t, Variant::Minus), oracle::svetlichny(t, -1, n), 1e-12);
  }
}

TEST(Protocol, SvetlichnyValueRejectsIncompleteTables) {
  std::vector<double> t(8, 1.0);
  t[3] = std::nan("");
  expect_code(ErrorCode::IncompleteCorrelators, [&] { svetlichny_value(t, Variant::Minus); });
  expect_code(ErrorCode::IncompleteCorrelators, [] { svetlichny_value(std::vector<double>(6, 0.0), Variant::Minus); });
}

TEST(Protocol, RecursionOverLastParty) {
  // S±_N = S±_{N-1}·A_0 ∓ S∓_{N-1}·A_1, with the last party's bit least
  // significant in the tuple.
  RandomStream rng(23);
  for (int n : {4, 5}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto t = random_table(n, rng);
      std::vector<double> e0, e1;
      for (std::size_t x = 0; x < t.size(); x += 2) {
        e0.push_back(t[x]);
        e1.push_back(t[x + 1]);
      }
      const double plus = svetlichny_value(e0, Variant::Plus) - svetlichny_value(e1, Variant::Minus);
      const double minus = svetlichny_value(e0, Variant::Minus) + svetlichny_value(e1, Variant::Plus);
      EXPECT_NEAR(svetlichny_value(t, Variant::Plus), plus, 1e-12);
      EXPECT_NEAR(svetlichny_value(t, Variant::Minus), minus, 1e-12);
    }
  }
}

TEST(Protocol, GhzReachesQuantumMaximum) {
  for (int n = 3; n <= 7; ++n) {
    const auto profile = standard_profile(n);
    const auto table = correlator_table(ghz_state(n), profile);
    EXPECT_NEAR(svetlichny_value(table, profile.variant()), quantum_max(n), 1e-9) << n;
  }
}

TEST(Protocol, ThreePartyLayoutIsMinusVariant) {
  const auto profile = standard_profile(3);
  EXPECT_EQ(profile.variant(), Variant::Minus);
  EXPECT_NEAR(profile.options(0)[0].radians(), -std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(profile.options(0)[1].radians(), std::numbers::pi / 4, 1e-15);
  // The other sign layout sees no violation at these angles.
  const auto table = correlator_table(ghz_state(3), profile);
  EXPECT_NEAR(svetlichny_value(table, Variant::Plus), 0.0, 1e-12);
}

TEST(Protocol, NPartyLayoutIsPlusVariant) {
  for (int n = 4; n <= 6; ++n) EXPECT_EQ(standard_profile(n).variant(), Variant::Plus);
  const auto alt = standard_profile(3, AngleConvention::NParty);
  EXPECT_EQ(alt.variant(), Variant::Plus);
  EXPECT_NEAR(svetlichny_value(correlator_table(ghz_state(3), alt), Variant::Plus), quantum_max(3), 1e-9);
}

TEST(Protocol, ConstantAssignmentGivesCoefficientSum) {
  // Σ_x v-_k(x) over the 8 three-party tuples: 1 + 3 - 3 - 1.
  EXPECT_EQ(svetlichny_value(std::vector<double>(8, 1.0), Variant::Minus), 0.0);
}

TEST(Protocol, ProfileValidation) {
  expect_code(ErrorCode::UnsupportedPartyCount, [] { standard_profile(2); });
  using V = std::vector<std::vector<PlanarAngle>>;
  const double pi = std::numbers::pi;
  V bad_key = {planar({0.1, 0.2, 0.0, pi / 2}), planar({0.0, pi / 2}), planar({0.0, 1.0})};
  expect_code(ErrorCode::InvalidSetting, [&] { SettingProfile{bad_key}; });
  V short_first = {planar({0.1, 0.0, pi / 2}), planar({0.0, pi / 2}), planar({0.0, pi / 2})};
  expect_code(ErrorCode::InvalidSetting, [&] { SettingProfile{short_first}; });
  const auto profile = standard_profile(3);
  expect_code(ErrorCode::InvalidSetting, [&] { profile.check_indices(std::vector<int>{4, 0, 0}); });
  expect_code(ErrorCode::InvalidSetting, [&] { profile.check_indices(std::vector<int>{0, 0}); });
}

TEST(Protocol, JointIndexRoundTrip) {
  const auto profile = standard_profile(4);
  EXPECT_EQ(profile.joint_setting_count(), 32u);
  for (std::size_t j = 0; j < profile.joint_setting_count(); ++j) {
    EXPECT_EQ(profile.joint_index(profile.indices_at(j)), j);
  }
}

TEST(Protocol, RoundCensus) {
  for (int n = 3; n <= 6; ++n) {
    const auto profile = standard_profile(n);
    std::size_t key = 0, si = 0, discard = 0;
    for (std::size_t j = 0; j < profile.joint_setting_count(); ++j) {
      switch (classify_round(profile, profile.indices_at(j)).kind) {
        case RoundClass::Kind::Key: ++key; break;
        case RoundClass::Kind::SITest: ++si; break;
        case RoundClass::Kind::Discard: ++discard; break;
      }
    }
    EXPECT_EQ(key, std::size_t{1} << (n - 1));
    EXPECT_EQ(si, std::size_t{1} << n);
    EXPECT_EQ(discard, std::size_t{1} << (n - 1));
  }
}

TEST(Protocol, ClassificationExamples) {
  const auto profile = standard_profile(3);
  const auto all_x = classify_round(profile, std::vector<int>{2, 0, 0});
  EXPECT_EQ(all_x.kind, RoundClass::Kind::Key);
  EXPECT_EQ(all_x.key_sign, 1);
  const auto two_y = classify_round(profile, std::vector<int>{3, 1, 0});
  EXPECT_EQ(two_y.kind, RoundClass::Kind::Key);
  EXPECT_EQ(two_y.key_sign, -1);
  EXPECT_EQ(classify_round(profile, std::vector<int>{3, 0, 0}).kind, RoundClass::Kind::Discard);
  const auto si = classify_round(profile, std::vector<int>{1, 0, 1});
  EXPECT_EQ(si.kind, RoundClass::Kind::SITest);
  EXPECT_EQ(si.si_tuple, 0b101u);
  const auto four_y = classify_round(standard_profile(4), std::vector<int>{3, 1, 1, 1});
  EXPECT_EQ(four_y.key_sign, 1);
}

TEST(Protocol, KeySignMatchesGhzStabilizer) {
  // Every key setting is a GHZ stabilizer; its correlator is the key sign.
  for (int n = 3; n <= 6; ++n) {
    const auto profile = standard_profile(n);
    const auto psi = ghz_state(n);
    for (std::size_t j = 0; j < profile.joint_setting_count(); ++j) {
      const auto idx = profile.indices_at(j);
      const auto cls = classify_round(profile, idx);
      if (cls.kind != RoundClass::Kind::Key) continue;
      const auto angles = profile.angles(idx);
      EXPECT_EQ(key_sign(angles), cls.key_sign);
      EXPECT_NEAR(expectation(psi, angles), cls.key_sign, 1e-12);
    }
  }
}

TEST(Protocol, KeySignRejectsNonKeyRounds) {
  const double pi = std::numbers::pi;
  expect_code(ErrorCode::InvalidRound, [&] { key_sign(planar({pi / 2, 0.0, 0.0})); });
  expect_code(ErrorCode::InvalidRound, [&] { key_sign(planar({pi / 4, 0.0, 0.0})); });
}
