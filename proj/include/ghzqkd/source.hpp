#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ghzqkd/protocol.hpp"
#include "ghzqkd/quantum_core.hpp"
#include "ghzqkd/random.hpp"

namespace ghzqkd {

/// What the source committed to for one round, fixed before any party
/// picks a setting.
struct Emission {
  std::size_t component = 0;  // mixture atom / branch selected for this round
  bool local = false;         // convex-combination attack: local branch
};

struct Detection {
  Outcomes outcomes;
  std::optional<int> eve_guess;
};

/// Per-round emission rule. A source is bound to one session at a time and
/// owns no randomness: the session passes its source stream in.
class SourceModel {
 public:
  virtual ~SourceModel() = default;

  virtual std::string label() const = 0;
  virtual int parties() const = 0;

  virtual Emission emit(RandomStream& stream) = 0;

  /// Outcomes for the emitted round once settings are fixed.
  virtual Detection detect(const Emission& emission, const SettingProfile& profile,
                           std::span<const int> settings, RandomStream& stream) = 0;
};

/// Born-rule outcome sampler for a fixed state with distributions cached
/// per measurement-angle tuple.
class MeasuredState {
 public:
  explicit MeasuredState(DensityMatrix state) : state_(std::move(state)) {}

  const DensityMatrix& state() const noexcept { return state_; }

  const OutcomeDistribution& distribution(std::span<const PlanarAngle> angles) {
    std::vector<double> key;
    key.reserve(angles.size());
    for (const auto& a : angles) key.push_back(a.radians());
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(std::move(key), joint_distribution(state_, angles)).first;
    return it->second;
  }

  Outcomes measure(std::span<const PlanarAngle> angles, RandomStream& stream) {
    return sample_outcomes(distribution(angles), stream);
  }

 private:
  DensityMatrix state_;
  std::map<std::vector<double>, OutcomeDistribution> cache_;
};

/// Honest source: Werner state at visibility v (v = 1 is the pure GHZ state).
class HonestSource final : public SourceModel {
 public:
  HonestSource(int parties, double visibility)
      : visibility_(visibility), state_(werner_density(parties, visibility)) {}

  std::string label() const override { return "honest(v=" + std::to_string(visibility_) + ")"; }
  int parties() const override { return state_.state().parties(); }
  double visibility() const noexcept { return visibility_; }

  Emission emit(RandomStream&) override { return {}; }

  Detection detect(const Emission&, const SettingProfile& profile, std::span<const int> settings,
                   RandomStream& stream) override {
    const auto angles = profile.angles(settings);
    return {state_.measure(angles, stream), std::nullopt};
  }

 private:
  double visibility_;
  MeasuredState state_;
};

}  // namespace ghzqkd
