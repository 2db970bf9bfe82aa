#pragma once

// Measurement settings, round classification and the Svetlichny expression.
//
// Party 1 owns four options: two Svetlichny-test angles followed by the key
// angles 0 and π/2. Every other party owns (0, π/2). A Svetlichny setting
// tuple x ∈ {0,1}^n is encoded as an integer with party 1 in the most
// significant bit, so correlator tables are dense arrays of length 2^n.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ghzqkd/error.hpp"
#include "ghzqkd/quantum_core.hpp"

namespace ghzqkd {

enum class Variant { Plus, Minus };

constexpr std::string_view to_string(Variant v) noexcept { return v == Variant::Plus ? "+" : "-"; }

/// Which party-1 Svetlichny angles a standard profile uses.
///   ThreeParty: (-π/4, π/4), paired with the S- sign layout.
///   NParty:     (π/4, 3π/4), paired with the S+ sign layout.
enum class AngleConvention { ThreeParty, NParty };

constexpr std::string_view to_string(AngleConvention c) noexcept {
  return c == AngleConvention::ThreeParty ? "three-party" : "n-party";
}

/// Dense correlator table indexed by Svetlichny setting tuple. NaN marks a
/// missing entry.
using CorrelatorTable = std::vector<double>;

inline constexpr double kAngleTolerance = 1e-12;

/// (-1)^{k(k±1)/2}; depends only on k mod 4.
constexpr int svetlichny_coefficient_for_count(Variant variant, int ones) noexcept {
  const int m = ones % 4;
  if (variant == Variant::Plus) return (m == 0 || m == 3) ? 1 : -1;
  return (m == 0 || m == 1) ? 1 : -1;
}

/// Sign of the term A^(1)_{x1}...A^(n)_{xn} in S±_n.
constexpr int svetlichny_coefficient(Variant variant, std::uint32_t tuple) noexcept {
  return svetlichny_coefficient_for_count(variant, std::popcount(tuple));
}

inline double classical_bound(int parties) {
  if (parties < 2) throw Error(ErrorCode::InvalidPartyCount, "bound needs n >= 2");
  return std::ldexp(1.0, parties - 1);
}

inline double quantum_max(int parties) { return classical_bound(parties) * std::numbers::sqrt2; }

/// Σ_x v±(x) E(x) over a complete table of 2^n correlators.
inline double svetlichny_value(std::span<const double> correlators, Variant variant) {
  if (correlators.size() < 4 || !std::has_single_bit(correlators.size())) {
    throw Error(ErrorCode::IncompleteCorrelators,
                "correlator table needs 2^n entries, got " + std::to_string(correlators.size()));
  }
  double total = 0.0;
  for (std::uint32_t x = 0; x < correlators.size(); ++x) {
    const double e = correlators[x];
    if (std::isnan(e)) {
      throw Error(ErrorCode::IncompleteCorrelators, "missing correlator for tuple " + std::to_string(x));
    }
    total += svetlichny_coefficient(variant, x) * e;
  }
  return total;
}

struct RoundClass {
  enum class Kind { Key, SITest, Discard };

  Kind kind = Kind::Discard;
  int key_sign = 0;           // ±1 for Key rounds
  std::uint32_t si_tuple = 0; // setting tuple for SITest rounds

  friend bool operator==(const RoundClass&, const RoundClass&) = default;
};

constexpr std::string_view to_string(RoundClass::Kind k) noexcept {
  switch (k) {
    case RoundClass::Kind::Key: return "key";
    case RoundClass::Kind::SITest: return "si";
    case RoundClass::Kind::Discard: return "discard";
  }
  return "discard";
}

inline bool near_angle(double angle, double target) {
  const double diff = std::remainder(angle - target, 2.0 * std::numbers::pi);
  return std::abs(diff) <= kAngleTolerance;
}

class SettingProfile {
 public:
  /// options[0] must hold 4 angles, every other entry 2. The key angles
  /// (party 1 options 2 and 3, other parties' options 0 and 1) must be 0 and
  /// π/2. The sign variant is chosen as the one under which the GHZ state
  /// reaches the larger Svetlichny value at these angles.
  explicit SettingProfile(std::vector<std::vector<PlanarAngle>> options)
      : options_(std::move(options)) {
    const int n = parties();
    if (n < 3 || n > kMaxParties) {
      throw Error(ErrorCode::UnsupportedPartyCount,
                  "profiles need 3.." + std::to_string(kMaxParties) + " parties");
    }
    if (options_[0].size() != 4) throw Error(ErrorCode::InvalidSetting, "party 1 needs 4 options");
    check_key_pair(options_[0][2], options_[0][3], 1);
    for (int p = 1; p < n; ++p) {
      const auto& opts = options_[static_cast<std::size_t>(p)];
      if (opts.size() != 2) {
        throw Error(ErrorCode::InvalidSetting, "party " + std::to_string(p + 1) + " needs 2 options");
      }
      check_key_pair(opts[0], opts[1], p + 1);
    }
    variant_ = select_variant();
  }

  int parties() const noexcept { return static_cast<int>(options_.size()); }
  Variant variant() const noexcept { return variant_; }
  const std::vector<PlanarAngle>& options(int party) const { return options_.at(static_cast<std::size_t>(party)); }
  int option_count(int party) const { return static_cast<int>(options(party).size()); }

  /// 4·2^{n-1}.
  std::size_t joint_setting_count() const { return std::size_t{4} << (parties() - 1); }

  std::size_t si_tuple_count() const { return std::size_t{1} << parties(); }

  void check_indices(std::span<const int> indices) const {
    if (static_cast<int>(indices.size()) != parties()) {
      throw Error(ErrorCode::InvalidSetting, "setting tuple length mismatch");
    }
    for (int p = 0; p < parties(); ++p) {
      const int i = indices[static_cast<std::size_t>(p)];
      if (i < 0 || i >= option_count(p)) {
        throw Error(ErrorCode::InvalidSetting, "option index " + std::to_string(i) +
                                                   " out of range for party " + std::to_string(p + 1));
      }
    }
  }

  /// Joint setting as a mixed-radix integer: party 1's option is the most
  /// significant digit (base 4), the rest are bits.
  std::size_t joint_index(std::span<const int> indices) const {
    check_indices(indices);
    std::size_t index = static_cast<std::size_t>(indices[0]);
    for (std::size_t p = 1; p < indices.size(); ++p) index = (index << 1) | static_cast<std::size_t>(indices[p]);
    return index;
  }

  std::vector<int> indices_at(std::size_t joint) const {
    const int n = parties();
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int p = n - 1; p >= 1; --p) {
      idx[static_cast<std::size_t>(p)] = static_cast<int>(joint & 1u);
      joint >>= 1;
    }
    idx[0] = static_cast<int>(joint);
    return idx;
  }

  std::vector<PlanarAngle> angles(std::span<const int> indices) const {
    check_indices(indices);
    std::vector<PlanarAngle> out;
    out.reserve(indices.size());
    for (std::size_t p = 0; p < indices.size(); ++p) out.push_back(options_[p][static_cast<std::size_t>(indices[p])]);
    return out;
  }

  /// Measurement angles of Svetlichny tuple x.
  std::vector<PlanarAngle> si_angles(std::uint32_t tuple) const {
    const int n = parties();
    std::vector<PlanarAngle> out(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
      const auto bit = (tuple >> (n - 1 - p)) & 1u;
      out[static_cast<std::size_t>(p)] = options_[static_cast<std::size_t>(p)][bit];
    }
    return out;
  }

 private:
  static void check_key_pair(PlanarAngle zero, PlanarAngle half_pi, int party) {
    if (!near_angle(zero.radians(), 0.0) || !near_angle(half_pi.radians(), std::numbers::pi / 2)) {
      throw Error(ErrorCode::InvalidSetting,
                  "party " + std::to_string(party) + " key options must be (0, pi/2)");
    }
  }

  Variant select_variant() const {
    const auto ghz = ghz_state(parties());
    CorrelatorTable table(si_tuple_count());
    for (std::uint32_t x = 0; x < table.size(); ++x) {
      const auto a = si_angles(x);
      table[x] = expectation(ghz, a);
    }
    return svetlichny_value(table, Variant::Plus) >= svetlichny_value(table, Variant::Minus)
               ? Variant::Plus
               : Variant::Minus;
  }

  std::vector<std::vector<PlanarAngle>> options_;
  Variant variant_ = Variant::Minus;
};

inline SettingProfile standard_profile(int parties, AngleConvention convention) {
  if (parties < 3) {
    throw Error(ErrorCode::UnsupportedPartyCount, "the scheme needs at least 3 parties");
  }
  constexpr double pi = std::numbers::pi;
  const double first = convention == AngleConvention::ThreeParty ? -pi / 4 : pi / 4;
  const double second = convention == AngleConvention::ThreeParty ? pi / 4 : 3 * pi / 4;
  std::vector<std::vector<PlanarAngle>> options;
  options.push_back({PlanarAngle(first), PlanarAngle(second), PlanarAngle(0.0), PlanarAngle(pi / 2)});
  for (int p = 1; p < parties; ++p) options.push_back({PlanarAngle(0.0), PlanarAngle(pi / 2)});
  return SettingProfile(std::move(options));
}

/// Three parties use (-π/4, π/4) for party 1; four or more use (π/4, 3π/4).
inline SettingProfile standard_profile(int parties) {
  return standard_profile(parties, parties == 3 ? AngleConvention::ThreeParty : AngleConvention::NParty);
}

/// Total classification of a joint setting. Party 1 choosing a Svetlichny
/// angle makes an SI-test round; otherwise every party measures along x or
/// y, and an even number of y choices makes a key round.
inline RoundClass classify_round(const SettingProfile& profile, std::span<const int> indices) {
  profile.check_indices(indices);
  if (indices[0] < 2) {
    std::uint32_t tuple = 0;
    for (int i : indices) tuple = (tuple << 1) | static_cast<std::uint32_t>(i);
    return {RoundClass::Kind::SITest, 0, tuple};
  }
  int y_count = indices[0] == 3 ? 1 : 0;
  for (std::size_t p = 1; p < indices.size(); ++p) y_count += indices[p];
  if (y_count % 2 != 0) return {RoundClass::Kind::Discard, 0, 0};
  return {RoundClass::Kind::Key, y_count % 4 == 0 ? 1 : -1, 0};
}

/// Expected outcome product of a key round: +1 when the number of π/2
/// angles is a multiple of 4, -1 when it is 2 mod 4.
inline int key_sign(std::span<const PlanarAngle> angles) {
  int y_count = 0;
  for (const auto& a : angles) {
    if (near_angle(a.radians(), std::numbers::pi / 2)) {
      ++y_count;
    } else if (!near_angle(a.radians(), 0.0)) {
      throw Error(ErrorCode::InvalidRound, "key rounds measure only along x or y");
    }
  }
  if (y_count % 2 != 0) throw Error(ErrorCode::InvalidRound, "odd number of y measurements");
  return y_count % 4 == 0 ? 1 : -1;
}

/// Exact correlators of `state` at every Svetlichny tuple of `profile`.
inline CorrelatorTable correlator_table(const DensityMatrix& state, const SettingProfile& profile) {
  if (state.parties() != profile.parties()) throw Error(ErrorCode::ShapeError, "party count mismatch");
  CorrelatorTable table(profile.si_tuple_count());
  for (std::uint32_t x = 0; x < table.size(); ++x) {
    const auto a = profile.si_angles(x);
    table[x] = expectation(state, a);
  }
  return table;
}

inline CorrelatorTable correlator_table(const StateVector& state, const SettingProfile& profile) {
  if (state.parties() != profile.parties()) throw Error(ErrorCode::ShapeError, "party count mismatch");
  CorrelatorTable table(profile.si_tuple_count());
  for (std::uint32_t x = 0; x < table.size(); ++x) {
    const auto a = profile.si_angles(x);
    table[x] = expectation(state, a);
  }
  return table;
}

}  // namespace ghzqkd
