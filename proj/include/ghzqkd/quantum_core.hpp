#pragma once

// Dense N-qubit simulation restricted to what the protocol needs: GHZ and
// Werner states, planar spin measurements, Born-rule outcome distributions.
//
// Conventions used throughout the library:
//   * party 1 is the most significant bit of a basis index;
//   * outcome +1 is bit 0, outcome -1 is bit 1, so outcome tuples index
//     distributions the same way basis states index amplitudes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ghzqkd/error.hpp"
#include "ghzqkd/random.hpp"

namespace ghzqkd {

using Complex = std::complex<double>;

/// ±1 outcome per party, party 1 first.
using Outcomes = std::vector<int>;

inline constexpr int kMaxParties = 10;
inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-12;
inline constexpr double kEigenTolerance = 1e-10;
inline constexpr double kProbabilityTolerance = 1e-12;

/// Azimuthal angle of a spin measurement (or of a spin direction) in the
/// x-y plane. Values are taken modulo 2π by every consumer.
class PlanarAngle {
 public:
  constexpr PlanarAngle() = default;
  explicit PlanarAngle(double radians) : radians_(radians) {
    if (!std::isfinite(radians)) {
      throw Error(ErrorCode::DomainError, "planar angle must be finite");
    }
  }

  constexpr double radians() const noexcept { return radians_; }

  friend constexpr bool operator==(PlanarAngle, PlanarAngle) = default;

 private:
  double radians_ = 0.0;
};

inline std::size_t dimension_for(int parties) { return std::size_t{1} << parties; }

inline void check_party_count(int parties, int minimum = 1) {
  if (parties < minimum || parties > kMaxParties) {
    throw Error(ErrorCode::InvalidPartyCount,
                "party count " + std::to_string(parties) + " outside [" +
                    std::to_string(minimum) + ", " + std::to_string(kMaxParties) + "]");
  }
}

/// Product of a tuple of ±1 outcomes.
inline int outcome_product(std::span<const int> outcomes) {
  int product = 1;
  for (int o : outcomes) product *= o;
  return product;
}

/// Index of an outcome tuple within an OutcomeDistribution.
inline std::size_t outcome_index(std::span<const int> outcomes) {
  std::size_t index = 0;
  for (int o : outcomes) index = (index << 1) | (o < 0 ? 1u : 0u);
  return index;
}

inline Outcomes outcomes_at(std::size_t index, int parties) {
  Outcomes out(static_cast<std::size_t>(parties));
  for (int p = 0; p < parties; ++p) {
    const auto bit = (index >> (parties - 1 - p)) & 1u;
    out[static_cast<std::size_t>(p)] = bit != 0 ? -1 : 1;
  }
  return out;
}

class StateVector {
 public:
  StateVector(int parties, Eigen::VectorXcd amplitudes)
      : parties_(parties), amplitudes_(std::move(amplitudes)) {
    check_party_count(parties_);
    if (static_cast<std::size_t>(amplitudes_.size()) != dimension_for(parties_)) {
      throw Error(ErrorCode::ShapeError, "amplitude count must be 2^n");
    }
    if (std::abs(amplitudes_.squaredNorm() - 1.0) > kNormTolerance) {
      throw Error(ErrorCode::InvalidState, "state vector is not normalized");
    }
  }

  int parties() const noexcept { return parties_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(amplitudes_.size()); }
  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
  Complex operator[](std::size_t i) const { return amplitudes_(static_cast<Eigen::Index>(i)); }

 private:
  int parties_;
  Eigen::VectorXcd amplitudes_;
};

class DensityMatrix {
 public:
  DensityMatrix(int parties, Eigen::MatrixXcd entries)
      : parties_(parties), entries_(std::move(entries)) {
    check_party_count(parties_);
    const auto dim = static_cast<Eigen::Index>(dimension_for(parties_));
    if (entries_.rows() != dim || entries_.cols() != dim) {
      throw Error(ErrorCode::ShapeError, "density matrix must be 2^n x 2^n");
    }
    if ((entries_ - entries_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance) {
      throw Error(ErrorCode::InvalidState, "density matrix is not Hermitian");
    }
    if (std::abs(entries_.trace() - Complex(1.0, 0.0)) > kTraceTolerance) {
      throw Error(ErrorCode::InvalidState, "density matrix trace is not 1");
    }
  }

  static DensityMatrix from_pure(const StateVector& psi) {
    const auto& a = psi.amplitudes();
    return DensityMatrix(psi.parties(), a * a.adjoint());
  }

  int parties() const noexcept { return parties_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Eigen::MatrixXcd& entries() const noexcept { return entries_; }
  Complex operator()(std::size_t row, std::size_t col) const {
    return entries_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(entries_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }

  /// Positivity is checked on demand only; construction does not diagonalize.
  bool is_positive_semidefinite() const { return min_eigenvalue() >= -kEigenTolerance; }

 private:
  int parties_;
  Eigen::MatrixXcd entries_;
};

class OutcomeDistribution {
 public:
  OutcomeDistribution(int parties, std::vector<double> probs)
      : parties_(parties), probs_(std::move(probs)) {
    check_party_count(parties_);
    if (probs_.size() != dimension_for(parties_)) {
      throw Error(ErrorCode::ShapeError, "distribution must cover 2^n outcome tuples");
    }
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::InvalidState, "probability outside [0, 1]");
      }
      total += p;
    }
    if (std::abs(total - 1.0) > kProbabilityTolerance) {
      throw Error(ErrorCode::InvalidState, "probabilities do not sum to 1");
    }
  }

  /// Point mass on one outcome tuple.
  static OutcomeDistribution point(std::span<const int> outcomes) {
    const int n = static_cast<int>(outcomes.size());
    std::vector<double> probs(dimension_for(n), 0.0);
    probs[outcome_index(outcomes)] = 1.0;
    return OutcomeDistribution(n, std::move(probs));
  }

  int parties() const noexcept { return parties_; }
  std::size_t size() const noexcept { return probs_.size(); }
  const std::vector<double>& probabilities() const noexcept { return probs_; }
  double probability(std::size_t index) const { return probs_.at(index); }
  double probability(std::span<const int> outcomes) const {
    if (static_cast<int>(outcomes.size()) != parties_) {
      throw Error(ErrorCode::ShapeError, "outcome tuple length mismatch");
    }
    return probs_[outcome_index(outcomes)];
  }

  /// Probability that a single party observes `outcome`.
  double marginal(int party, int outcome) const {
    double total = 0.0;
    const auto shift = static_cast<unsigned>(parties_ - 1 - party);
    const std::size_t want = outcome < 0 ? 1u : 0u;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      if (((i >> shift) & 1u) == want) total += probs_[i];
    }
    return total;
  }

  /// Mean of the product of all outcomes.
  double correlator() const {
    double total = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      total += (std::popcount(i) % 2 == 0 ? 1.0 : -1.0) * probs_[i];
    }
    return total;
  }

 private:
  int parties_;
  std::vector<double> probs_;
};

/// (|0...0> + |1...1>)/√2 on n qubits.
inline StateVector ghz_state(int parties) {
  if (parties < 2 || parties > kMaxParties) {
    throw Error(ErrorCode::InvalidPartyCount,
                "GHZ state needs 2.." + std::to_string(kMaxParties) + " parties, got " +
                    std::to_string(parties));
  }
  Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dimension_for(parties)));
  amps(0) = std::numbers::sqrt2 / 2.0;
  amps(amps.size() - 1) = std::numbers::sqrt2 / 2.0;
  return StateVector(parties, std::move(amps));
}

/// v·|GHZ><GHZ| + (1-v)·I/2^n.
inline DensityMatrix werner_density(int parties, double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw Error(ErrorCode::InvalidVisibility, "visibility must lie in [0, 1]");
  }
  const auto ghz = ghz_state(parties);
  const auto dim = static_cast<Eigen::Index>(ghz.dimension());
  Eigen::MatrixXcd rho = visibility * (ghz.amplitudes() * ghz.amplitudes().adjoint());
  rho.diagonal().array() += (1.0 - visibility) / static_cast<double>(dim);
  return DensityMatrix(parties, std::move(rho));
}

/// cos(angle)·σx + sin(angle)·σy.
inline Eigen::Matrix2cd planar_observable(PlanarAngle angle) {
  const Complex phase = std::polar(1.0, angle.radians());
  Eigen::Matrix2cd op;
  op << Complex(0.0, 0.0), std::conj(phase), phase, Complex(0.0, 0.0);
  return op;
}

/// ½(I ± observable), the projector onto the ±1 eigenspace.
inline Eigen::Matrix2cd eigenprojector(PlanarAngle angle, int outcome) {
  const double s = outcome < 0 ? -1.0 : 1.0;
  return 0.5 * (Eigen::Matrix2cd::Identity() + s * planar_observable(angle));
}

/// +1 eigenvector of the planar observable: (1, e^{iα})/√2.
inline Eigen::Vector2cd planar_eigenvector(PlanarAngle angle, int outcome) {
  const double s = outcome < 0 ? -1.0 : 1.0;
  Eigen::Vector2cd v;
  v << Complex(1.0, 0.0), s * std::polar(1.0, angle.radians());
  return v / std::numbers::sqrt2;
}

namespace detail {

// Rows of the change of basis into a party's measurement eigenbasis: row 0
// is <e+|, row 1 is <e-|.
inline Eigen::Matrix2cd measurement_basis(PlanarAngle angle) {
  Eigen::Matrix2cd basis;
  basis.row(0) = planar_eigenvector(angle, +1).adjoint();
  basis.row(1) = planar_eigenvector(angle, -1).adjoint();
  return basis;
}

// M <- (I ⊗ op ⊗ I) M, op acting on `party`.
inline void apply_left(Eigen::MatrixXcd& m, int parties, int party, const Eigen::Matrix2cd& op) {
  const std::size_t stride = std::size_t{1} << (parties - 1 - party);
  const std::size_t dim = static_cast<std::size_t>(m.rows());
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t off = 0; off < stride; ++off) {
      const auto r0 = static_cast<Eigen::Index>(base + off);
      const auto r1 = static_cast<Eigen::Index>(base + off + stride);
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const Complex a = m(r0, c);
        const Complex b = m(r1, c);
        m(r0, c) = op(0, 0) * a + op(0, 1) * b;
        m(r1, c) = op(1, 0) * a + op(1, 1) * b;
      }
    }
  }
}

// M <- M (I ⊗ op ⊗ I), op acting on `party`.
inline void apply_right(Eigen::MatrixXcd& m, int parties, int party, const Eigen::Matrix2cd& op) {
  const std::size_t stride = std::size_t{1} << (parties - 1 - party);
  const std::size_t dim = static_cast<std::size_t>(m.cols());
  for (std::size_t base = 0; base < dim; base += 2 * stride) {
    for (std::size_t off = 0; off < stride; ++off) {
      const auto c0 = static_cast<Eigen::Index>(base + off);
      const auto c1 = static_cast<Eigen::Index>(base + off + stride);
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const Complex a = m(r, c0);
        const Complex b = m(r, c1);
        m(r, c0) = a * op(0, 0) + b * op(1, 0);
        m(r, c1) = a * op(0, 1) + b * op(1, 1);
      }
    }
  }
}

inline OutcomeDistribution normalized_distribution(int parties, std::vector<double> probs) {
  double total = 0.0;
  for (double& p : probs) {
    p = std::clamp(p, 0.0, 1.0);
    total += p;
  }
  for (double& p : probs) p /= total;
  return OutcomeDistribution(parties, std::move(probs));
}

inline void check_angles(int parties, std::span<const PlanarAngle> angles) {
  if (static_cast<int>(angles.size()) != parties) {
    throw Error(ErrorCode::ShapeError, "expected " + std::to_string(parties) +
                                           " measurement angles, got " +
                                           std::to_string(angles.size()));
  }
}

}  // namespace detail

/// Born-rule distribution of joint planar measurement outcomes.
/// P(o) = Tr[ρ · ⊗_i ½(I + o_i A_i)], evaluated by rotating every party into
/// its measurement eigenbasis and reading the diagonal.
inline OutcomeDistribution joint_distribution(const DensityMatrix& state,
                                              std::span<const PlanarAngle> angles) {
  const int n = state.parties();
  detail::check_angles(n, angles);
  Eigen::MatrixXcd rotated = state.entries();
  for (int p = 0; p < n; ++p) {
    const auto basis = detail::measurement_basis(angles[static_cast<std::size_t>(p)]);
    detail::apply_left(rotated, n, p, basis);
    detail::apply_right(rotated, n, p, basis.adjoint());
  }
  std::vector<double> probs(state.dimension());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = rotated(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return detail::normalized_distribution(n, std::move(probs));
}

/// Pure-state path: rotate the amplitudes and take squared magnitudes.
inline OutcomeDistribution joint_distribution(const StateVector& state,
                                              std::span<const PlanarAngle> angles) {
  const int n = state.parties();
  detail::check_angles(n, angles);
  Eigen::MatrixXcd rotated = state.amplitudes();
  for (int p = 0; p < n; ++p) {
    detail::apply_left(rotated, n, p, detail::measurement_basis(angles[static_cast<std::size_t>(p)]));
  }
  std::vector<double> probs(state.dimension());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::norm(rotated(static_cast<Eigen::Index>(i), 0));
  }
  return detail::normalized_distribution(n, std::move(probs));
}

/// <A_1 ⊗ ... ⊗ A_n>, the mean product of outcomes.
inline double expectation(const DensityMatrix& state, std::span<const PlanarAngle> angles) {
  return joint_distribution(state, angles).correlator();
}

inline double expectation(const StateVector& state, std::span<const PlanarAngle> angles) {
  return joint_distribution(state, angles).correlator();
}

/// ⊗_i |+θ_i><+θ_i|, each factor the +1 eigenstate of the planar observable
/// at direction θ_i.
inline DensityMatrix product_state(std::span<const PlanarAngle> directions) {
  const int n = static_cast<int>(directions.size());
  check_party_count(n);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Ones(1);
  for (const auto& d : directions) {
    const Eigen::Vector2cd e = planar_eigenvector(d, +1);
    Eigen::VectorXcd next(psi.size() * 2);
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      next(2 * i) = psi(i) * e(0);
      next(2 * i + 1) = psi(i) * e(1);
    }
    psi = std::move(next);
  }
  psi.normalize();
  return DensityMatrix::from_pure(StateVector(n, std::move(psi)));
}

/// Mean outcome of a planar measurement at `angle` on the +1 eigenstate at
/// `direction`: cos(angle - direction).
inline double planar_mean(PlanarAngle direction, PlanarAngle angle) {
  return std::cos(angle.radians() - direction.radians());
}

/// Draws one outcome tuple by inverse-CDF over the fixed index order.
inline Outcomes sample_outcomes(const OutcomeDistribution& dist, RandomStream& stream) {
  const double u = stream.uniform();
  const auto& probs = dist.probabilities();
  double cumulative = 0.0;
  std::size_t last_supported = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_supported = i;
    cumulative += probs[i];
    if (u < cumulative) return outcomes_at(i, dist.parties());
  }
  return outcomes_at(last_supported, dist.parties());
}

}  // namespace ghzqkd
