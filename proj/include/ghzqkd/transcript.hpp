#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ghzqkd/protocol.hpp"

namespace ghzqkd {

struct RoundRecord {
  std::uint64_t index = 0;
  std::vector<int> settings;       // per-party option index
  Outcomes outcomes;               // empty when redacted
  RoundClass classification;
  std::optional<int> eve_guess;    // only under the convex-combination attack

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct CorrelatorEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // NaN when count < 2
  std::uint64_t count = 0;

  friend bool operator==(const CorrelatorEstimate& a, const CorrelatorEstimate& b) {
    auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
    return same(a.mean, b.mean) && same(a.std_error, b.std_error) && a.count == b.count;
  }
};

struct SIEstimate {
  Variant variant = Variant::Minus;
  double value = 0.0;
  double std_error = 0.0;
  std::vector<CorrelatorEstimate> correlators;  // indexed by setting tuple
  double classical_bound = 0.0;
  double abort_sigma = 0.0;
  /// |value| - abort_sigma·std_error - classical_bound; positive means a
  /// significant violation.
  double margin = 0.0;

  friend bool operator==(const SIEstimate&, const SIEstimate&) = default;
};

struct Verdict {
  enum class Status { Accepted, Aborted };

  Status status = Status::Aborted;
  std::string reason;  // empty when accepted

  bool accepted() const noexcept { return status == Status::Accepted; }
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline constexpr const char* kReasonNoViolation = "no-violation";
inline constexpr const char* kReasonInsufficientStatistics = "insufficient-statistics";

struct Transcript {
  int parties = 0;
  std::uint64_t seed = 0;
  double abort_sigma = 3.0;
  std::string source;  // label of the source model
  std::vector<std::vector<double>> profile;  // option angles in radians, per party
  std::vector<RoundRecord> rounds;
  Verdict verdict;
  std::optional<SIEstimate> estimate;  // the estimate the verdict rests on
  bool redacted = false;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

inline std::vector<std::vector<double>> profile_angles(const SettingProfile& profile) {
  std::vector<std::vector<double>> out;
  for (int p = 0; p < profile.parties(); ++p) {
    std::vector<double> row;
    for (const auto& a : profile.options(p)) row.push_back(a.radians());
    out.push_back(std::move(row));
  }
  return out;
}

inline SettingProfile profile_from_angles(const std::vector<std::vector<double>>& angles) {
  std::vector<std::vector<PlanarAngle>> options;
  for (const auto& row : angles) {
    std::vector<PlanarAngle> opts;
    for (double a : row) opts.emplace_back(a);
    options.push_back(std::move(opts));
  }
  return SettingProfile(std::move(options));
}

/// Raw key material left after sifting. Bits map +1 → 0 and -1 → 1; rounds
/// whose expected product is -1 keep their bits as measured and carry the
/// sign alongside.
struct KeyMaterial {
  std::vector<std::uint64_t> rounds;
  std::vector<std::size_t> settings;             // joint setting index per round
  std::vector<int> expected_sign;
  std::vector<std::vector<std::uint8_t>> bits;   // bits[party][i]
};

struct SiftResult {
  KeyMaterial key;
  /// Positions (into the transcript's rounds) of SI-test rounds, grouped by
  /// setting tuple.
  std::vector<std::vector<std::size_t>> si_rounds;
  std::uint64_t discards = 0;
};

inline SiftResult sift(const Transcript& transcript) {
  SiftResult out;
  const int n = transcript.parties;
  if (n > 0) {
    out.si_rounds.resize(std::size_t{1} << n);
    out.key.bits.resize(static_cast<std::size_t>(n));
  }
  for (std::size_t i = 0; i < transcript.rounds.size(); ++i) {
    const auto& r = transcript.rounds[i];
    switch (r.classification.kind) {
      case RoundClass::Kind::Key: {
        if (r.outcomes.size() != static_cast<std::size_t>(n)) {
          throw Error(ErrorCode::InvalidRound, "key round " + std::to_string(r.index) + " has no outcomes");
        }
        std::size_t joint = static_cast<std::size_t>(r.settings[0]);
        for (std::size_t p = 1; p < r.settings.size(); ++p) joint = (joint << 1) | static_cast<std::size_t>(r.settings[p]);
        out.key.rounds.push_back(r.index);
        out.key.settings.push_back(joint);
        out.key.expected_sign.push_back(r.classification.key_sign);
        for (int p = 0; p < n; ++p) {
          out.key.bits[static_cast<std::size_t>(p)].push_back(r.outcomes[static_cast<std::size_t>(p)] < 0 ? 1 : 0);
        }
        break;
      }
      case RoundClass::Kind::SITest:
        out.si_rounds.at(r.classification.si_tuple).push_back(i);
        break;
      case RoundClass::Kind::Discard:
        ++out.discards;
        break;
    }
  }
  return out;
}

}  // namespace ghzqkd
