#pragma once

// One protocol run as per-party state machines around a round barrier.
//
// Each round: the source emits, every party receives its particle, picks a
// setting from its own substream, is measured, and holds the outcome.
// Settings are announced only after the last round; then rounds are
// classified and the Svetlichny test decides the verdict.

#include <barrier>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ghzqkd/analysis.hpp"
#include "ghzqkd/error.hpp"
#include "ghzqkd/protocol.hpp"
#include "ghzqkd/random.hpp"
#include "ghzqkd/source.hpp"
#include "ghzqkd/transcript.hpp"

namespace ghzqkd {

/// Substream ids derived from the master seed. Party p (1-based) uses id p.
inline constexpr std::uint64_t kSourceStreamId = 0;

struct SessionConfig {
  SettingProfile profile;
  std::uint64_t rounds = 1;
  std::uint64_t seed = 0;
  double abort_sigma = 3.0;
  /// Run each party on its own thread. Output is identical either way.
  bool concurrent_parties = false;
};

inline void validate(const SessionConfig& config) {
  if (config.rounds < 1) throw Error(ErrorCode::InvalidConfig, "rounds must be >= 1");
  if (!(config.abort_sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "abort_sigma must be > 0");
}

class PartyStateMachine {
 public:
  enum class Phase { Idle, Received, Chosen, Holding, Announced };

  PartyStateMachine(int party, const SettingProfile& profile, RandomStream substream, std::uint64_t rounds)
      : party_(party), options_(profile.option_count(party)), stream_(std::move(substream)), rounds_(rounds) {
    choices_.reserve(rounds);
    outcomes_.reserve(rounds);
  }

  int party() const noexcept { return party_; }
  Phase phase() const noexcept { return phase_; }

  void receive(std::uint64_t round) {
    if ((phase_ != Phase::Idle && phase_ != Phase::Holding) || round != choices_.size() || round >= rounds_) {
      violation("receive for round " + std::to_string(round));
    }
    phase_ = Phase::Received;
  }

  int choose() {
    if (phase_ != Phase::Received) violation("choose before receive");
    const int choice = static_cast<int>(stream_.index(static_cast<std::uint64_t>(options_)));
    choices_.push_back(choice);
    phase_ = Phase::Chosen;
    return choice;
  }

  void record(int outcome) {
    if (phase_ != Phase::Chosen) violation("measurement recorded before a choice");
    outcomes_.push_back(outcome);
    phase_ = Phase::Holding;
  }

  /// Public announcement of every setting choice; allowed once, after the
  /// final round has been measured.
  const std::vector<int>& announce() {
    if (phase_ != Phase::Holding || choices_.size() != rounds_) violation("announcement before the final round");
    phase_ = Phase::Announced;
    return choices_;
  }

  const std::vector<int>& outcomes() const noexcept { return outcomes_; }

 private:
  [[noreturn]] void violation(const std::string& what) const {
    throw Error(ErrorCode::ProtocolOrderViolation, "party " + std::to_string(party_ + 1) + ": " + what);
  }

  int party_;
  int options_;
  RandomStream stream_;
  std::uint64_t rounds_;
  Phase phase_ = Phase::Idle;
  std::vector<int> choices_;
  std::vector<int> outcomes_;
};

namespace detail {

struct RoundLog {
  std::vector<std::vector<int>> outcomes;  // per round, per party
  std::vector<std::optional<int>> eve_guess;
};

inline std::vector<PartyStateMachine> make_parties(const SessionConfig& config) {
  std::vector<PartyStateMachine> parties;
  for (int p = 0; p < config.profile.parties(); ++p) {
    parties.emplace_back(p, config.profile,
                         RandomStream::derive(config.seed, static_cast<std::uint64_t>(p) + 1), config.rounds);
  }
  return parties;
}

inline RoundLog run_rounds_serial(const SessionConfig& config, SourceModel& source,
                                  std::vector<PartyStateMachine>& parties, RandomStream& source_stream) {
  const auto n = parties.size();
  RoundLog log;
  log.eve_guess.reserve(config.rounds);
  std::vector<int> settings(n);
  for (std::uint64_t r = 0; r < config.rounds; ++r) {
    const Emission emission = source.emit(source_stream);
    for (std::size_t p = 0; p < n; ++p) {
      parties[p].receive(r);
      settings[p] = parties[p].choose();
    }
    Detection d = source.detect(emission, config.profile, settings, source_stream);
    for (std::size_t p = 0; p < n; ++p) parties[p].record(d.outcomes[p]);
    log.eve_guess.push_back(d.eve_guess);
  }
  return log;
}

// Same call sequence on the source stream as the serial engine; parties
// only touch their own state and substreams between barriers.
inline RoundLog run_rounds_concurrent(const SessionConfig& config, SourceModel& source,
                                      std::vector<PartyStateMachine>& parties, RandomStream& source_stream) {
  const auto n = parties.size();
  RoundLog log;
  log.eve_guess.reserve(config.rounds);
  std::vector<int> settings(n);
  Outcomes current;
  std::uint64_t round = 0;
  auto measure = [&]() noexcept {
    const Emission emission = source.emit(source_stream);
    Detection d = source.detect(emission, config.profile, settings, source_stream);
    current = std::move(d.outcomes);
    log.eve_guess.push_back(d.eve_guess);
  };
  auto advance = [&]() noexcept { ++round; };
  std::barrier measured(static_cast<std::ptrdiff_t>(n), measure);
  std::barrier held(static_cast<std::ptrdiff_t>(n), advance);
  std::vector<std::jthread> workers;
  for (std::size_t p = 0; p < n; ++p) {
    workers.emplace_back([&, p] {
      for (std::uint64_t r = 0; r < config.rounds; ++r) {
        parties[p].receive(r);
        settings[p] = parties[p].choose();
        measured.arrive_and_wait();
        parties[p].record(current[p]);
        held.arrive_and_wait();
      }
    });
  }
  workers.clear();
  return log;
}

}  // namespace detail

/// Runs a full session against `source`. Deterministic for a fixed config.
inline Transcript run_session(const SessionConfig& config, SourceModel& source) {
  validate(config);
  const int n = config.profile.parties();
  if (source.parties() != n) throw Error(ErrorCode::ShapeError, "source and profile disagree on party count");

  auto parties = detail::make_parties(config);
  RandomStream source_stream = RandomStream::derive(config.seed, kSourceStreamId);
  const auto log = config.concurrent_parties
                       ? detail::run_rounds_concurrent(config, source, parties, source_stream)
                       : detail::run_rounds_serial(config, source, parties, source_stream);

  std::vector<const std::vector<int>*> announced;
  for (auto& party : parties) announced.push_back(&party.announce());

  Transcript t;
  t.parties = n;
  t.seed = config.seed;
  t.abort_sigma = config.abort_sigma;
  t.source = source.label();
  t.profile = profile_angles(config.profile);
  t.rounds.resize(config.rounds);
  for (std::uint64_t r = 0; r < config.rounds; ++r) {
    auto& rec = t.rounds[r];
    rec.index = r;
    rec.settings.resize(static_cast<std::size_t>(n));
    rec.outcomes.resize(static_cast<std::size_t>(n));
    for (std::size_t p = 0; p < static_cast<std::size_t>(n); ++p) {
      rec.settings[p] = (*announced[p])[r];
      rec.outcomes[p] = parties[p].outcomes()[r];
    }
    rec.classification = classify_round(config.profile, rec.settings);
    rec.eve_guess = log.eve_guess[r];
  }

  try {
    t.estimate = estimate_si(t, config.profile.variant(), config.abort_sigma, /*strict=*/true);
    t.verdict = t.estimate->margin > 0.0 ? Verdict{Verdict::Status::Accepted, ""}
                                         : Verdict{Verdict::Status::Aborted, kReasonNoViolation};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InsufficientStatistics) throw;
    t.verdict = {Verdict::Status::Aborted, std::string(kReasonInsufficientStatistics) + ": " + e.what()};
  }
  return t;
}

/// What an outside observer sees: every setting choice, SI-test outcomes and
/// the verdict. Key and discarded outcomes and Eve's guesses are removed.
inline Transcript public_view(const Transcript& transcript) {
  Transcript view = transcript;
  for (auto& r : view.rounds) {
    if (r.classification.kind != RoundClass::Kind::SITest) r.outcomes.clear();
    r.eve_guess.reset();
  }
  view.redacted = true;
  return view;
}

}  // namespace ghzqkd
