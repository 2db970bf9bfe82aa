#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ghzqkd/quantum_core.hpp"
#include "ghzqkd/random.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace ghzqkd;

using testutil::expect_code;
using testutil::planar;

TEST(QuantumCore, GhzAmplitudes) {
  const auto psi = ghz_state(3);
  EXPECT_EQ(psi.dimension(), 8u);
  EXPECT_NEAR(psi[0].real(), std::numbers::sqrt2 / 2, 1e-15);
  EXPECT_NEAR(psi[7].real(), std::numbers::sqrt2 / 2, 1e-15);
  for (std::size_t i = 1; i < 7; ++i) EXPECT_EQ(std::abs(psi[i]), 0.0);
}

TEST(QuantumCore, GhzPartyRange) {
  expect_code(ErrorCode::InvalidPartyCount, [] { ghz_state(1); });
  expect_code(ErrorCode::InvalidPartyCount, [] { ghz_state(kMaxParties + 1); });
  EXPECT_NO_THROW(ghz_state(kMaxParties));
}

TEST(QuantumCore, WernerEntries) {
  // v/2 + (1-v)/8 at v = 0.5 on the corners, (1-v)/8 elsewhere.
  const auto rho = werner_density(3, 0.5);
  EXPECT_NEAR(rho(0, 0).real(), 0.3125, 1e-15);
  EXPECT_NEAR(rho(1, 1).real(), 0.0625, 1e-15);
  EXPECT_NEAR(rho(0, 7).real(), 0.25, 1e-15);
  EXPECT_TRUE(rho.is_positive_semidefinite());
  EXPECT_NEAR(werner_density(3, 0.0)(5, 5).real(), 0.125, 1e-15);
}

TEST(QuantumCore, WernerRejectsBadVisibility) {
  expect_code(ErrorCode::InvalidVisibility, [] { werner_density(3, 1.5); });
  expect_code(ErrorCode::InvalidVisibility, [] { werner_density(3, -0.1); });
  expect_code(ErrorCode::InvalidVisibility, [] { werner_density(3, std::nan("")); });
}

TEST(QuantumCore, DensityMatrixValidation) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(4, 4) / 4.0;
  EXPECT_NO_THROW(DensityMatrix(2, m));
  Eigen::MatrixXcd skew = m;
  skew(0, 1) = Complex(0.1, 0.0);
  expect_code(ErrorCode::InvalidState, [&] { DensityMatrix(2, skew); });
  expect_code(ErrorCode::InvalidState, [&] { DensityMatrix(2, Eigen::MatrixXcd(m * 2.0)); });
  expect_code(ErrorCode::ShapeError, [&] { DensityMatrix(3, m); });
}

TEST(QuantumCore, StateVectorValidation) {
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(4);
  a(0) = 1.0;
  EXPECT_NO_THROW(StateVector(2, a));
  a(1) = 1.0;
  expect_code(ErrorCode::InvalidState, [&] { StateVector(2, a); });
  expect_code(ErrorCode::ShapeError, [&] { StateVector(3, Eigen::VectorXcd::Zero(4)); });
}

TEST(QuantumCore, PlanarAngleRejectsNonFinite) {
  expect_code(ErrorCode::DomainError, [] { PlanarAngle(std::nan("")); });
  expect_code(ErrorCode::DomainError, [] { (void)PlanarAngle(INFINITY); });
}

TEST(QuantumCore, ObservableSquaresToIdentity) {
  for (double a : {0.0, 0.3, std::numbers::pi / 2, -2.0}) {
    const auto op = planar_observable(PlanarAngle(a));
    EXPECT_LT((op * op - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff(), 1e-15);
    const auto plus = eigenprojector(PlanarAngle(a), +1);
    const auto minus = eigenprojector(PlanarAngle(a), -1);
    EXPECT_LT((plus + minus - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff(), 1e-15);
    const auto e = planar_eigenvector(PlanarAngle(a), -1);
    EXPECT_LT((op * e + e).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(QuantumCore, GhzAllXDistribution) {
  // Uniform over the four even-parity tuples.
  const auto dist = joint_distribution(ghz_state(3), planar({0.0, 0.0, 0.0}));
  EXPECT_NEAR(dist.probability(std::vector<int>{1, 1, 1}), 0.25, 1e-12);
  EXPECT_NEAR(dist.probability(std::vector<int>{1, -1, -1}), 0.25, 1e-12);
  EXPECT_NEAR(dist.probability(std::vector<int>{1, 1, -1}), 0.0, 1e-12);
  EXPECT_NEAR(dist.correlator(), 1.0, 1e-12);
  for (int p = 0; p < 3; ++p) EXPECT_NEAR(dist.marginal(p, 1), 0.5, 1e-12);
}

TEST(QuantumCore, GhzPlanarCorrelatorIsCosineOfSum) {
  RandomStream rng(11);
  for (int n = 2; n <= 6; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> a(static_cast<std::size_t>(n));
      double sum = 0.0;
      for (auto& x : a) {
        x = (rng.uniform() * 2 - 1) * std::numbers::pi;
        sum += x;
      }
      EXPECT_NEAR(expectation(ghz_state(n), planar(a)), std::cos(sum), 1e-12);
    }
  }
}

TEST(QuantumCore, ExpectationMatchesKroneckerTrace) {
  RandomStream rng(5);
  for (int n : {2, 3, 4}) {
    for (int trial = 0; trial < 15; ++trial) {
      const double v = rng.uniform();
      std::vector<double> a(static_cast<std::size_t>(n));
      for (auto& x : a) x = (rng.uniform() * 2 - 1) * std::numbers::pi;
      EXPECT_NEAR(expectation(werner_density(n, v), planar(a)), oracle::werner_correlator(n, v, a), 1e-12)
          << "n=" << n << " v=" << v;
    }
  }
}

TEST(QuantumCore, WernerCorrelatorFixedPoint) {
  // 0.5·cos(0.3 + 1.1 - 0.4) from the Kronecker trace.
  EXPECT_NEAR(expectation(werner_density(3, 0.5), planar({0.3, 1.1, -0.4})), 0.27015115293406977, 1e-12);
}

TEST(QuantumCore, DistributionsAreNormalized) {
  RandomStream rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> a(4);
    for (auto& x : a) x = rng.uniform() * 6.0;
    const auto dist = joint_distribution(werner_density(4, rng.uniform()), planar(a));
    double total = 0.0;
    for (double p : dist.probabilities()) {
      EXPECT_GE(p, 0.0);
      total += p;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(QuantumCore, PureAndMixedPathsAgree) {
  const auto psi = ghz_state(4);
  const auto rho = DensityMatrix::from_pure(psi);
  const auto a = planar({0.2, -1.0, 2.5, 0.7});
  const auto p1 = joint_distribution(psi, a).probabilities();
  const auto p2 = joint_distribution(rho, a).probabilities();
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_NEAR(p1[i], p2[i], 1e-12);
}

TEST(QuantumCore, ProductStateCorrelatorFactorizes) {
  const auto dirs = planar({0.4, -0.9, 2.0});
  const auto angles = planar({1.0, 0.1, -0.5});
  const auto rho = product_state(dirs);
  double expected = 1.0;
  for (std::size_t i = 0; i < 3; ++i) expected *= std::cos(angles[i].radians() - dirs[i].radians());
  EXPECT_NEAR(expectation(rho, angles), expected, 1e-12);
  EXPECT_NEAR(planar_mean(dirs[0], angles[0]), std::cos(0.6), 1e-15);
}

TEST(QuantumCore, AngleCountMustMatch) {
  expect_code(ErrorCode::ShapeError, [] { joint_distribution(ghz_state(3), planar({0.0, 0.0})); });
}

TEST(QuantumCore, OutcomeIndexRoundTrip) {
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(outcome_index(outcomes_at(i, 4)), i);
  EXPECT_EQ(outcome_index(std::vector<int>{1, 1, 1}), 0u);
  EXPECT_EQ(outcome_index(std::vector<int>{-1, 1, 1}), 4u);
  EXPECT_EQ(outcome_product(std::vector<int>{-1, 1, -1}), 1);
}

TEST(QuantumCore, SamplingMatchesDistribution) {
  const auto dist = joint_distribution(werner_density(3, 0.6), planar({0.0, 0.0, std::numbers::pi / 2}));
  RandomStream rng(99);
  std::vector<int> counts(8, 0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) ++counts[outcome_index(sample_outcomes(dist, rng))];
  for (std::size_t i = 0; i < 8; ++i) {
    const double p = dist.probability(i);
    const double se = std::sqrt(p * (1 - p) / draws);
    EXPECT_NEAR(counts[i] / static_cast<double>(draws), p, 4 * se + 1e-12) << i;
  }
}

TEST(QuantumCore, SamplingNeverHitsZeroProbability) {
  const auto dist = OutcomeDistribution::point(std::vector<int>{-1, 1, -1});
  RandomStream rng(1);
  for (int i = 0; i < 1000; ++i) EXPECT_EQ(sample_outcomes(dist, rng), (Outcomes{-1, 1, -1}));
}

TEST(Random, StreamsAreReproducible) {
  RandomStream a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  auto d1 = RandomStream::derive(7, 1);
  auto d2 = RandomStream::derive(7, 2);
  EXPECT_NE(d1.next(), d2.next());
}

TEST(Random, IndexAndUniformRanges) {
  RandomStream rng(8);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) {
    const auto k = rng.index(4);
    ASSERT_LT(k, 4u);
    ++counts[k];
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 4 * std::sqrt(40000 * 0.25 * 0.75));
}
