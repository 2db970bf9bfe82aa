#pragma once

// Statistics over transcripts, the Devetak-Winter rate under the
// convex-combination attack, and brute-force bounds on the Svetlichny
// expression for local and bipartite hybrid models.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <vector>

#include "ghzqkd/error.hpp"
#include "ghzqkd/protocol.hpp"
#include "ghzqkd/transcript.hpp"

namespace ghzqkd {

/// Visibility at which the Werner state stops violating the Svetlichny
/// inequality: 1/√2.
inline constexpr double kLocalVisibility = 1.0 / std::numbers::sqrt2;

/// 1/(2 - v_L), the smallest visibility with a positive key rate.
inline constexpr double kKeyRateThreshold = 1.0 / (2.0 - kLocalVisibility);

/// Weight of the local part in the optimal convex decomposition of a
/// Werner state at visibility v, clamped to [0, 1].
inline double local_weight(double visibility) {
  return std::clamp((1.0 - visibility) / (1.0 - kLocalVisibility), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Estimation

/// Per-tuple sample mean of outcome products over SI-test rounds. Throws
/// insufficient-statistics for an empty bucket; a bucket of one gets a NaN
/// standard error, which is an error only when `strict` is set.
inline std::vector<CorrelatorEstimate> estimate_correlators(const Transcript& transcript,
                                                            bool strict = false) {
  if (transcript.parties < 2) throw Error(ErrorCode::InvalidPartyCount, "transcript has no parties");
  const std::size_t tuples = std::size_t{1} << transcript.parties;
  std::vector<double> sum(tuples, 0.0);
  std::vector<std::uint64_t> count(tuples, 0);
  for (const auto& r : transcript.rounds) {
    if (r.classification.kind != RoundClass::Kind::SITest || r.outcomes.empty()) continue;
    const auto x = r.classification.si_tuple;
    sum[x] += outcome_product(r.outcomes);
    ++count[x];
  }
  std::vector<CorrelatorEstimate> out(tuples);
  for (std::size_t x = 0; x < tuples; ++x) {
    if (count[x] == 0) {
      throw Error(ErrorCode::InsufficientStatistics, "no rounds for setting tuple " + std::to_string(x));
    }
    const double c = static_cast<double>(count[x]);
    const double mean = sum[x] / c;
    double se = std::numeric_limits<double>::quiet_NaN();
    if (count[x] > 1) {
      // products are ±1, so the sample variance has a closed form
      const double variance = std::max(0.0, (1.0 - mean * mean) * c / (c - 1.0));
      se = std::sqrt(variance / c);
    } else if (strict) {
      throw Error(ErrorCode::InsufficientStatistics,
                  "one round for setting tuple " + std::to_string(x) + ", no standard error");
    }
    out[x] = {mean, se, count[x]};
  }
  return out;
}

inline SIEstimate estimate_si(const Transcript& transcript, Variant variant, double abort_sigma = 3.0,
                              bool strict = false) {
  SIEstimate est;
  est.variant = variant;
  est.correlators = estimate_correlators(transcript, strict);
  CorrelatorTable means(est.correlators.size());
  double variance = 0.0;
  for (std::size_t x = 0; x < means.size(); ++x) {
    means[x] = est.correlators[x].mean;
    variance += est.correlators[x].std_error * est.correlators[x].std_error;
  }
  est.value = svetlichny_value(means, variant);
  est.std_error = std::sqrt(variance);
  est.classical_bound = classical_bound(transcript.parties);
  est.abort_sigma = abort_sigma;
  est.margin = std::abs(est.value) - abort_sigma * est.std_error - est.classical_bound;
  return est;
}

struct SettingMismatch {
  std::size_t setting = 0;  // joint setting index
  std::uint64_t mismatches = 0;
  std::uint64_t count = 0;
  double rate = 0.0;
};

struct MismatchReport {
  std::vector<SettingMismatch> per_setting;  // ascending joint index
  std::uint64_t mismatches = 0;
  std::uint64_t count = 0;
  double rate = 0.0;
};

/// Fraction of key rounds whose outcome product differs from the expected
/// key sign, per key setting and pooled.
inline MismatchReport mismatch_rate(const Transcript& transcript) {
  std::map<std::size_t, SettingMismatch> buckets;
  MismatchReport report;
  for (const auto& r : transcript.rounds) {
    if (r.classification.kind != RoundClass::Kind::Key || r.outcomes.empty()) continue;
    std::size_t joint = static_cast<std::size_t>(r.settings[0]);
    for (std::size_t p = 1; p < r.settings.size(); ++p) joint = (joint << 1) | static_cast<std::size_t>(r.settings[p]);
    auto& b = buckets[joint];
    b.setting = joint;
    ++b.count;
    ++report.count;
    if (outcome_product(r.outcomes) != r.classification.key_sign) {
      ++b.mismatches;
      ++report.mismatches;
    }
  }
  if (report.count == 0) throw Error(ErrorCode::InsufficientStatistics, "transcript has no key rounds");
  for (auto& [joint, b] : buckets) {
    b.rate = static_cast<double>(b.mismatches) / static_cast<double>(b.count);
    report.per_setting.push_back(b);
  }
  report.rate = static_cast<double>(report.mismatches) / static_cast<double>(report.count);
  return report;
}

// ---------------------------------------------------------------------------
// Key rate

/// -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
inline double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::DomainError, "binary entropy needs p in [0, 1]");
  auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
  return term(p) + term(1.0 - p);
}

struct KeyRateReport {
  double visibility = 0.0;
  double local_visibility = kLocalVisibility;
  double local_weight = 0.0;
  bool clamped = false;       // v < v_L forced local_weight to 1
  double h_eve = 0.0;         // H(A|E) = h((1+q_L)/2)
  double h_abc = 0.0;         // H(A|B,C) = h((1+v)/2)
  double bound = 0.0;         // h_eve - h_abc, may be negative
  double r_dw = 0.0;          // max(0, bound)
  double threshold = kKeyRateThreshold;

  friend bool operator==(const KeyRateReport&, const KeyRateReport&) = default;
};

inline KeyRateReport dw_rate(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw Error(ErrorCode::InvalidVisibility, "visibility must lie in [0, 1]");
  }
  KeyRateReport r;
  r.visibility = visibility;
  r.clamped = visibility < kLocalVisibility;
  r.local_weight = local_weight(visibility);
  r.h_eve = binary_entropy((1.0 + r.local_weight) / 2.0);
  r.h_abc = binary_entropy((1.0 + visibility) / 2.0);
  r.bound = r.h_eve - r.h_abc;
  r.r_dw = std::max(0.0, r.bound);
  return r;
}

inline std::vector<KeyRateReport> rate_curve(std::span<const double> grid) {
  std::vector<KeyRateReport> rows;
  rows.reserve(grid.size());
  for (double v : grid) rows.push_back(dw_rate(v));
  return rows;
}

struct EmpiricalRate {
  double h_eve = 0.0;          // plug-in H(A_1 | E, setting)
  double h_abc = 0.0;          // plug-in H(A_1 | other outcomes, setting)
  double rate = 0.0;           // h_eve - h_abc
  double eve_agreement = 0.0;  // P(E = A_1)
  std::uint64_t key_rounds = 0;
  std::vector<double> per_setting_rate;  // same quantity per key setting, ascending index
};

namespace detail {

// Plug-in conditional entropy H(target | context) from joint counts.
inline double conditional_entropy(const std::map<std::pair<std::uint64_t, int>, std::uint64_t>& joint) {
  std::map<std::uint64_t, std::uint64_t> marginal;
  std::uint64_t total = 0;
  for (const auto& [key, c] : joint) {
    marginal[key.first] += c;
    total += c;
  }
  double h = 0.0;
  for (const auto& [key, c] : joint) {
    const double p_joint = static_cast<double>(c) / static_cast<double>(total);
    const double p_cond = static_cast<double>(c) / static_cast<double>(marginal[key.first]);
    h -= p_joint * std::log2(p_cond);
  }
  return h + 0.0;
}

}  // namespace detail

/// Empirical Devetak-Winter quantity from the key rounds of a
/// convex-combination attack transcript. Party 1's outcome is the key bit;
/// the conditioning always includes the key setting.
inline EmpiricalRate empirical_rate(const Transcript& transcript) {
  using Counts = std::map<std::pair<std::uint64_t, int>, std::uint64_t>;
  Counts eve_joint;
  Counts abc_joint;
  std::map<std::size_t, std::pair<Counts, Counts>> per_setting;
  EmpiricalRate out;
  std::uint64_t agree = 0;
  for (const auto& r : transcript.rounds) {
    if (r.classification.kind != RoundClass::Kind::Key || r.outcomes.empty()) continue;
    if (!r.eve_guess) {
      throw Error(ErrorCode::NotACcTranscript, "key round " + std::to_string(r.index) + " has no eve guess");
    }
    std::size_t joint = static_cast<std::size_t>(r.settings[0]);
    for (std::size_t p = 1; p < r.settings.size(); ++p) joint = (joint << 1) | static_cast<std::size_t>(r.settings[p]);
    const int a = r.outcomes[0];
    std::uint64_t rest = 0;
    for (std::size_t p = 1; p < r.outcomes.size(); ++p) rest = (rest << 1) | (r.outcomes[p] < 0 ? 1u : 0u);
    const std::uint64_t eve_ctx = (static_cast<std::uint64_t>(joint) << 1) | (*r.eve_guess < 0 ? 1u : 0u);
    const std::uint64_t abc_ctx = (static_cast<std::uint64_t>(joint) << 32) | rest;
    ++eve_joint[{eve_ctx, a}];
    ++abc_joint[{abc_ctx, a}];
    ++per_setting[joint].first[{eve_ctx, a}];
    ++per_setting[joint].second[{abc_ctx, a}];
    if (*r.eve_guess == a) ++agree;
    ++out.key_rounds;
  }
  if (out.key_rounds == 0) throw Error(ErrorCode::InsufficientStatistics, "transcript has no key rounds");
  out.h_eve = detail::conditional_entropy(eve_joint);
  out.h_abc = detail::conditional_entropy(abc_joint);
  out.rate = out.h_eve - out.h_abc;
  out.eve_agreement = static_cast<double>(agree) / static_cast<double>(out.key_rounds);
  for (const auto& [joint, counts] : per_setting) {
    out.per_setting_rate.push_back(detail::conditional_entropy(counts.first) -
                                   detail::conditional_entropy(counts.second));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force bounds

inline constexpr int kMaxLocalEnumerationParties = 5;
inline constexpr int kMaxBipartitionParties = 4;

/// Maximum of |S±_n| over all deterministic local strategies, each party
/// mapping its two settings to ±1 independently: 2^{2n} strategies.
inline double brute_force_local_max(int parties, Variant variant) {
  if (parties < 2) throw Error(ErrorCode::InvalidPartyCount, "local bound needs n >= 2");
  if (parties > kMaxLocalEnumerationParties) {
    throw Error(ErrorCode::SizeLimit, "local enumeration is limited to n <= 5");
  }
  const std::uint32_t tuples = 1u << parties;
  const std::uint64_t strategies = std::uint64_t{1} << (2 * parties);
  double best = 0.0;
  for (std::uint64_t s = 0; s < strategies; ++s) {
    long total = 0;
    for (std::uint32_t x = 0; x < tuples; ++x) {
      int product = 1;
      for (int p = 0; p < parties; ++p) {
        const auto setting = (x >> (parties - 1 - p)) & 1u;
        if ((s >> (2 * p + setting)) & 1u) product = -product;
      }
      total += svetlichny_coefficient(variant, x) * product;
    }
    best = std::max(best, std::abs(static_cast<double>(total)));
  }
  return best;
}

struct BipartitionValue {
  std::uint32_t block = 0;  // party mask of the block containing party 1 (bit p = party p+1)
  double value = 0.0;
};

/// Maximum of |S±_n| when the parties split into two blocks, each block
/// answering every joint block setting with an arbitrary ±1 product. One
/// entry per bipartition.
inline std::vector<BipartitionValue> bipartition_values(int parties, Variant variant) {
  if (parties < 2) throw Error(ErrorCode::InvalidPartyCount, "bipartition bound needs n >= 2");
  if (parties > kMaxBipartitionParties) {
    throw Error(ErrorCode::SizeLimit, "bipartition enumeration is limited to n <= 4");
  }
  const std::uint32_t all = (1u << parties) - 1;
  const std::uint32_t tuples = 1u << parties;
  std::vector<BipartitionValue> out;
  for (std::uint32_t block = 1; block < all; ++block) {
    if ((block & 1u) == 0) continue;  // count each split once: party 1 in `block`
    const std::uint32_t other = all & ~block;
    const int size_a = std::popcount(block);
    const int size_b = parties - size_a;
    // Projects a setting tuple onto the block's own setting bits.
    auto project = [&](std::uint32_t x, std::uint32_t mask) {
      std::uint32_t local = 0;
      for (int p = 0; p < parties; ++p) {
        if ((mask >> p) & 1u) local = (local << 1) | ((x >> (parties - 1 - p)) & 1u);
      }
      return local;
    };
    const std::uint64_t fa_count = std::uint64_t{1} << (1u << size_a);
    const std::uint64_t fb_count = std::uint64_t{1} << (1u << size_b);
    double best = 0.0;
    for (std::uint64_t fa = 0; fa < fa_count; ++fa) {
      for (std::uint64_t fb = 0; fb < fb_count; ++fb) {
        long total = 0;
        for (std::uint32_t x = 0; x < tuples; ++x) {
          const int a = ((fa >> project(x, block)) & 1u) ? -1 : 1;
          const int b = ((fb >> project(x, other)) & 1u) ? -1 : 1;
          total += svetlichny_coefficient(variant, x) * a * b;
        }
        best = std::max(best, std::abs(static_cast<double>(total)));
      }
    }
    out.push_back({block, best});
  }
  return out;
}

inline double brute_force_bipartition_max(int parties, Variant variant) {
  double best = 0.0;
  for (const auto& b : bipartition_values(parties, variant)) best = std::max(best, b.value);
  return best;
}

}  // namespace ghzqkd
