#pragma once

// Eavesdropper models as source plug-ins, plus the searches that bound what
// each model can achieve on the Svetlichny test.
//
//   ProductState      Eve measures in transit; parties receive product states
//                     drawn from a finite mixture over planar directions.
//   OutcomeControl    Eve holds the devices of n-1 parties and fixes their
//                     outcomes as a function of their joint setting; the
//                     remaining party answers uniformly or by a fixed
//                     response table.
//   ConvexCombination Eve mixes a local branch (she learns party 1's outcome)
//                     with a maximally nonlocal branch, reproducing Werner
//                     statistics at visibility v.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ghzqkd/analysis.hpp"
#include "ghzqkd/error.hpp"
#include "ghzqkd/protocol.hpp"
#include "ghzqkd/quantum_core.hpp"
#include "ghzqkd/source.hpp"

namespace ghzqkd {

inline constexpr std::size_t kMaxProductAtoms = 64;

struct ProductAtom {
  double weight = 1.0;
  std::vector<PlanarAngle> directions;
};

struct ProductStrategy {
  std::vector<ProductAtom> atoms;
};

struct OutcomeControlSpec {
  int parties = 0;
  std::vector<int> controlled;  // 0-based party indices, n-1 of them
  // assignment[j][c] = outcome (±1) of controlled[c] when the controlled
  // parties' joint setting index is j. The index is mixed radix over their
  // option counts, in `controlled` order, first entry most significant.
  std::vector<std::vector<int>> assignment;
  std::optional<std::vector<int>> free_response;  // ±1 per option of the free party; uniform if absent
};

struct ConvexCombinationSpec {
  int parties = 3;
  double visibility = 1.0;
};

using AttackSpec = std::variant<ProductStrategy, OutcomeControlSpec, ConvexCombinationSpec>;

// ---------------------------------------------------------------------------
// Product-state attack

class ProductStateSource final : public SourceModel {
 public:
  explicit ProductStateSource(ProductStrategy strategy) : strategy_(std::move(strategy)) {
    if (strategy_.atoms.empty()) throw Error(ErrorCode::InvalidStrategy, "strategy has no atoms");
    if (strategy_.atoms.size() > kMaxProductAtoms) {
      throw Error(ErrorCode::InvalidStrategy, "strategy has more than 64 atoms");
    }
    const std::size_t n = strategy_.atoms.front().directions.size();
    double total = 0.0;
    for (const auto& atom : strategy_.atoms) {
      if (atom.directions.size() != n || n < 2) {
        throw Error(ErrorCode::InvalidStrategy, "every atom needs one direction per party");
      }
      if (!(atom.weight >= 0.0)) throw Error(ErrorCode::InvalidStrategy, "negative atom weight");
      total += atom.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidStrategy, "atom weights must sum to 1");
    for (const auto& atom : strategy_.atoms) states_.emplace_back(product_state(atom.directions));
  }

  std::string label() const override {
    return "product-state(atoms=" + std::to_string(strategy_.atoms.size()) + ")";
  }
  int parties() const override { return static_cast<int>(strategy_.atoms.front().directions.size()); }
  const ProductStrategy& strategy() const noexcept { return strategy_; }

  Emission emit(RandomStream& stream) override {
    if (strategy_.atoms.size() == 1) return {};
    const double u = stream.uniform();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < strategy_.atoms.size(); ++i) {
      cumulative += strategy_.atoms[i].weight;
      if (u < cumulative) return {i, false};
    }
    return {strategy_.atoms.size() - 1, false};
  }

  Detection detect(const Emission& emission, const SettingProfile& profile, std::span<const int> settings,
                   RandomStream& stream) override {
    const auto angles = profile.angles(settings);
    return {states_.at(emission.component).measure(angles, stream), std::nullopt};
  }

 private:
  ProductStrategy strategy_;
  std::vector<MeasuredState> states_;
};

inline std::unique_ptr<SourceModel> product_state_source(ProductStrategy strategy) {
  return std::make_unique<ProductStateSource>(std::move(strategy));
}

struct ProductAttackOptions {
  /// Let Eve's directions leave the x-y plane (polar angle free). The
  /// optimizer reports what it finds; it does not assume planar is optimal.
  bool non_planar = false;
};

struct ProductAttackResult {
  ProductStrategy best;            // single atom at the best direction tuple
  double value = 0.0;              // |S| achieved, exact
  std::vector<double> polar;       // polar angle per party (π/2 = in plane)
  std::uint64_t restarts = 0;
};

namespace detail {

// Exact Svetlichny value of a product state: every party contributes the
// pair of single-party means at its two SI settings.
inline double product_si_value(const SettingProfile& profile, std::span<const double> azimuth,
                               std::span<const double> polar) {
  const int n = profile.parties();
  const std::uint32_t tuples = 1u << n;
  std::vector<std::array<double, 2>> means(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    const auto pp = static_cast<std::size_t>(p);
    const double scale = std::sin(polar[pp]);
    for (int b = 0; b < 2; ++b) {
      means[pp][static_cast<std::size_t>(b)] =
          scale * planar_mean(PlanarAngle(azimuth[pp]), profile.options(p)[static_cast<std::size_t>(b)]);
    }
  }
  double total = 0.0;
  for (std::uint32_t x = 0; x < tuples; ++x) {
    double product = 1.0;
    for (int p = 0; p < n; ++p) product *= means[static_cast<std::size_t>(p)][(x >> (n - 1 - p)) & 1u];
    total += svetlichny_coefficient(profile.variant(), x) * product;
  }
  return total;
}

}  // namespace detail

/// Random restarts followed by exact coordinate ascent. The SI value is
/// linear in each party's unit vector, so along one azimuth it has the form
/// A·cosθ + B·sinθ and the coordinate optimum is atan2(B, A). Both signs of
/// the expression are ascended from every restart.
inline ProductAttackResult optimize_product_attack(int parties, std::uint64_t iterations, RandomStream& stream,
                                                   ProductAttackOptions options = {}) {
  if (iterations < 1) throw Error(ErrorCode::InvalidSpec, "iterations must be >= 1");
  const auto profile = standard_profile(parties);
  const auto n = static_cast<std::size_t>(parties);
  constexpr double half_pi = std::numbers::pi / 2;
  ProductAttackResult result;
  result.restarts = iterations;
  std::vector<double> best_azimuth(n, 0.0);
  std::vector<double> best_polar(n, half_pi);
  double best = -1.0;

  for (std::uint64_t it = 0; it < iterations; ++it) {
    std::vector<double> start_azimuth(n);
    std::vector<double> start_polar(n, half_pi);
    for (std::size_t p = 0; p < n; ++p) {
      start_azimuth[p] = 2.0 * std::numbers::pi * stream.uniform();
      if (options.non_planar) start_polar[p] = std::acos(1.0 - 2.0 * stream.uniform());
    }
    for (const double sign : {1.0, -1.0}) {
      auto azimuth = start_azimuth;
      auto polar = start_polar;
      double current = sign * detail::product_si_value(profile, azimuth, polar);
      for (int sweep = 0; sweep < 500; ++sweep) {
        const double before = current;
        for (std::size_t p = 0; p < n; ++p) {
          azimuth[p] = 0.0;
          const double a = detail::product_si_value(profile, azimuth, polar);
          azimuth[p] = half_pi;
          const double b = detail::product_si_value(profile, azimuth, polar);
          azimuth[p] = std::atan2(sign * b, sign * a);
          if (options.non_planar) {
            // linear in sin(polar): push to the equator on whichever side helps
            polar[p] = half_pi;
            const double c = sign * detail::product_si_value(profile, azimuth, polar);
            polar[p] = c >= 0.0 ? half_pi : -half_pi;
          }
        }
        current = sign * detail::product_si_value(profile, azimuth, polar);
        if (current - before <= 1e-14) break;
      }
      if (std::abs(current) > best) {
        best = std::abs(current);
        best_azimuth = azimuth;
        best_polar = polar;
      }
    }
  }

  ProductAtom atom;
  for (double a : best_azimuth) atom.directions.emplace_back(a);
  result.best.atoms.push_back(std::move(atom));
  result.value = best;
  result.polar = best_polar;
  return result;
}

// ---------------------------------------------------------------------------
// Outcome-control attack

inline std::size_t controlled_setting_count(const OutcomeControlSpec& spec, const SettingProfile& profile) {
  std::size_t count = 1;
  for (int p : spec.controlled) count *= static_cast<std::size_t>(profile.option_count(p));
  return count;
}

inline std::size_t controlled_setting_index(const OutcomeControlSpec& spec, const SettingProfile& profile,
                                            std::span<const int> settings) {
  std::size_t index = 0;
  for (int p : spec.controlled) {
    index = index * static_cast<std::size_t>(profile.option_count(p)) +
            static_cast<std::size_t>(settings[static_cast<std::size_t>(p)]);
  }
  return index;
}

inline int free_party_of(const OutcomeControlSpec& spec) {
  std::vector<bool> seen(static_cast<std::size_t>(spec.parties), false);
  for (int p : spec.controlled) seen[static_cast<std::size_t>(p)] = true;
  return static_cast<int>(std::find(seen.begin(), seen.end(), false) - seen.begin());
}

inline void validate(const OutcomeControlSpec& spec, const SettingProfile& profile) {
  const int n = spec.parties;
  if (n != profile.parties()) throw Error(ErrorCode::InvalidSpec, "party count mismatch");
  if (static_cast<int>(spec.controlled.size()) != n - 1) {
    throw Error(ErrorCode::InvalidSpec, "outcome control must cover exactly n-1 parties");
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int p : spec.controlled) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) {
      throw Error(ErrorCode::InvalidSpec, "controlled parties must be distinct and in range");
    }
    seen[static_cast<std::size_t>(p)] = true;
  }
  if (spec.assignment.size() != controlled_setting_count(spec, profile)) {
    throw Error(ErrorCode::InvalidSpec, "assignment must cover every joint setting of the controlled parties");
  }
  for (const auto& row : spec.assignment) {
    if (row.size() != spec.controlled.size()) {
      throw Error(ErrorCode::InvalidSpec, "assignment rows need one outcome per controlled party");
    }
    for (int o : row) {
      if (o != 1 && o != -1) throw Error(ErrorCode::InvalidSpec, "outcomes must be +1 or -1");
    }
  }
  if (spec.free_response) {
    const int free = free_party_of(spec);
    if (static_cast<int>(spec.free_response->size()) != profile.option_count(free)) {
      throw Error(ErrorCode::InvalidSpec, "free response must give one outcome per option");
    }
    for (int o : *spec.free_response) {
      if (o != 1 && o != -1) throw Error(ErrorCode::InvalidSpec, "outcomes must be +1 or -1");
    }
  }
}

class OutcomeControlSource final : public SourceModel {
 public:
  OutcomeControlSource(OutcomeControlSpec spec, const SettingProfile& profile)
      : spec_(std::move(spec)), profile_(profile) {
    validate(spec_, profile_);
    free_party_ = free_party_of(spec_);
  }

  std::string label() const override {
    return std::string("outcome-control(free=") + std::to_string(free_party_ + 1) +
           (spec_.free_response ? ",deterministic)" : ",uniform)");
  }
  int parties() const override { return spec_.parties; }
  int free_party() const noexcept { return free_party_; }

  Emission emit(RandomStream&) override { return {}; }

  // Controlled outcomes depend on the controlled parties' settings only; the
  // free party's outcome depends on its own setting only.
  Detection detect(const Emission&, const SettingProfile&, std::span<const int> settings,
                   RandomStream& stream) override {
    Outcomes out(static_cast<std::size_t>(spec_.parties));
    const auto& row = spec_.assignment[controlled_setting_index(spec_, profile_, settings)];
    for (std::size_t c = 0; c < spec_.controlled.size(); ++c) {
      out[static_cast<std::size_t>(spec_.controlled[c])] = row[c];
    }
    const auto fp = static_cast<std::size_t>(free_party_);
    out[fp] = spec_.free_response ? (*spec_.free_response)[static_cast<std::size_t>(settings[fp])] : stream.sign();
    return {std::move(out), std::nullopt};
  }

 private:
  OutcomeControlSpec spec_;
  SettingProfile profile_;
  int free_party_ = 0;
};

inline std::unique_ptr<SourceModel> outcome_control_source(OutcomeControlSpec spec, const SettingProfile& profile) {
  return std::make_unique<OutcomeControlSource>(std::move(spec), profile);
}

struct OutcomeControlResult {
  double value = 0.0;       // max |S| over the searched strategies
  OutcomeControlSpec best;  // maximizing strategy, free party deterministic
  bool exhaustive = true;
};

inline constexpr int kMaxExhaustiveOutcomeControl = 5;
inline constexpr int kMaxHeuristicOutcomeControl = 8;

namespace detail {

// Only the product of the controlled outcomes enters S. `bits` holds that
// product's sign for every Svetlichny setting of the controlled parties
// (bit y set means product -1, y = their setting bits in party order). S
// then splits into the two terms multiplying the free party's outcome at
// setting 0 and 1.
inline std::array<long, 2> free_party_terms(int parties, int free_party, std::uint64_t bits, Variant variant) {
  std::array<long, 2> terms{0, 0};
  const std::uint32_t tuples = 1u << parties;
  for (std::uint32_t x = 0; x < tuples; ++x) {
    std::uint32_t y = 0;
    for (int p = 0; p < parties; ++p) {
      if (p == free_party) continue;
      y = (y << 1) | ((x >> (parties - 1 - p)) & 1u);
    }
    const int product = ((bits >> y) & 1u) ? -1 : 1;
    const auto free_setting = (x >> (parties - 1 - free_party)) & 1u;
    terms[free_setting] += svetlichny_coefficient(variant, x) * product;
  }
  return terms;
}

// Realizes a product-sign table: the first controlled party carries the
// sign, the others answer +1. Key options of party 1 answer +1 throughout.
inline OutcomeControlSpec spec_from_bits(const SettingProfile& profile, int free_party, std::uint64_t bits,
                                         std::array<long, 2> terms) {
  const int parties = profile.parties();
  OutcomeControlSpec spec;
  spec.parties = parties;
  for (int p = 0; p < parties; ++p) {
    if (p != free_party) spec.controlled.push_back(p);
  }
  const std::size_t rows = controlled_setting_count(spec, profile);
  spec.assignment.assign(rows, std::vector<int>(spec.controlled.size(), 1));
  std::vector<int> settings(static_cast<std::size_t>(parties), 0);
  for (std::size_t j = 0; j < rows; ++j) {
    std::size_t rest = j;
    std::uint32_t y = 0;
    bool si_setting = true;
    for (std::size_t c = spec.controlled.size(); c-- > 0;) {
      const auto options = static_cast<std::size_t>(profile.option_count(spec.controlled[c]));
      settings[static_cast<std::size_t>(spec.controlled[c])] = static_cast<int>(rest % options);
      rest /= options;
    }
    for (int p : spec.controlled) {
      const int s = settings[static_cast<std::size_t>(p)];
      if (s > 1) si_setting = false;
      y = (y << 1) | static_cast<std::uint32_t>(s & 1);
    }
    if (si_setting && ((bits >> y) & 1u)) spec.assignment[j][0] = -1;
  }
  std::vector<int> response(static_cast<std::size_t>(profile.option_count(free_party)), 1);
  for (int b = 0; b < 2; ++b) response[static_cast<std::size_t>(b)] = terms[static_cast<std::size_t>(b)] < 0 ? -1 : 1;
  spec.free_response = std::move(response);
  return spec;
}

}  // namespace detail

/// Largest |S| Eve reaches when she controls n-1 parties. For each choice
/// of free party and each sign table for the controlled parties' outcome
/// product, S = F_0·C_0 + F_1·C_1 in the free party's outcomes C_b, so the
/// free party's best response is worth |F_0| + |F_1| (a uniform free party
/// gets 0). Exhaustive for n <= 5; with `heuristic` set, n <= 8 is searched
/// by greedy bit flips from random starts.
inline OutcomeControlResult max_outcome_control_value(int parties, bool heuristic = false,
                                                      std::uint64_t seed = 1) {
  if (parties < 3) throw Error(ErrorCode::UnsupportedPartyCount, "outcome control needs n >= 3");
  const bool exhaustive = parties <= kMaxExhaustiveOutcomeControl;
  if (!exhaustive && (!heuristic || parties > kMaxHeuristicOutcomeControl)) {
    throw Error(ErrorCode::SizeLimit, "outcome-control search is exhaustive only for n <= 5");
  }
  const SettingProfile profile = standard_profile(parties);
  const Variant variant = profile.variant();
  const int table_bits = 1 << (parties - 1);
  const std::uint64_t mask = table_bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << table_bits) - 1;
  OutcomeControlResult result;
  result.exhaustive = exhaustive;
  double best = -1.0;
  std::uint64_t best_bits = 0;
  int best_free = 0;

  auto consider = [&](int free_party, std::uint64_t bits) {
    const auto terms = detail::free_party_terms(parties, free_party, bits, variant);
    const double value = static_cast<double>(std::labs(terms[0]) + std::labs(terms[1]));
    if (value > best) {
      best = value;
      best_bits = bits;
      best_free = free_party;
    }
    return value;
  };

  for (int free_party = 0; free_party < parties; ++free_party) {
    if (exhaustive) {
      for (std::uint64_t bits = 0; bits <= mask; ++bits) consider(free_party, bits);
      continue;
    }
    RandomStream stream = RandomStream::derive(seed, static_cast<std::uint64_t>(free_party));
    for (int restart = 0; restart < 64; ++restart) {
      std::uint64_t bits = stream.next() & mask;
      double current = consider(free_party, bits);
      bool improved = true;
      while (improved) {
        improved = false;
        for (int b = 0; b < table_bits; ++b) {
          const std::uint64_t trial = bits ^ (std::uint64_t{1} << b);
          const double v = consider(free_party, trial);
          if (v > current) {
            current = v;
            bits = trial;
            improved = true;
          }
        }
      }
    }
  }
  result.value = best;
  result.best = detail::spec_from_bits(profile, best_free, best_bits,
                                       detail::free_party_terms(parties, best_free, best_bits, variant));
  return result;
}

// ---------------------------------------------------------------------------
// Convex-combination attack

class ConvexCombinationSource final : public SourceModel {
 public:
  ConvexCombinationSource(int parties, double visibility)
      : parties_(parties),
        visibility_(visibility),
        local_(werner_density(parties, kLocalVisibility)),
        nonlocal_(DensityMatrix::from_pure(ghz_state(parties))) {
    if (!(visibility <= 1.0) || visibility < kLocalVisibility - 1e-15) {
      throw Error(ErrorCode::AttackUndefined,
                  "convex-combination attack needs 1/sqrt(2) <= v <= 1 (local weight would exceed 1)");
    }
    local_weight_ = local_weight(visibility);
  }

  std::string label() const override { return "convex-combination(v=" + std::to_string(visibility_) + ")"; }
  int parties() const override { return parties_; }
  double local_weight_value() const noexcept { return local_weight_; }

  Emission emit(RandomStream& stream) override { return {0, stream.uniform() < local_weight_}; }

  Detection detect(const Emission& emission, const SettingProfile& profile, std::span<const int> settings,
                   RandomStream& stream) override {
    const auto angles = profile.angles(settings);
    if (emission.local) {
      auto outcomes = local_.measure(angles, stream);
      const int guess = outcomes[0];
      return {std::move(outcomes), guess};
    }
    auto outcomes = nonlocal_.measure(angles, stream);
    return {std::move(outcomes), stream.sign()};
  }

 private:
  int parties_;
  double visibility_;
  double local_weight_ = 0.0;
  MeasuredState local_;
  MeasuredState nonlocal_;
};

inline std::unique_ptr<SourceModel> cc_attack_source(int parties, double visibility) {
  return std::make_unique<ConvexCombinationSource>(parties, visibility);
}

inline std::unique_ptr<SourceModel> make_attack_source(const AttackSpec& spec, const SettingProfile& profile) {
  return std::visit(
      [&](const auto& s) -> std::unique_ptr<SourceModel> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ProductStrategy>) {
          return product_state_source(s);
        } else if constexpr (std::is_same_v<T, OutcomeControlSpec>) {
          return outcome_control_source(s, profile);
        } else {
          return cc_attack_source(s.parties, s.visibility);
        }
      },
      spec);
}

}  // namespace ghzqkd
