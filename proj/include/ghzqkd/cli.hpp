#pragma once

// Command implementations behind the ghzqkd executable. Each command takes
// a fully resolved RunConfig, writes human or JSON output to `out`, writes
// any requested files, and returns the process exit code.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghzqkd/adversary.hpp"
#include "ghzqkd/analysis.hpp"
#include "ghzqkd/error.hpp"
#include "ghzqkd/io.hpp"
#include "ghzqkd/protocol.hpp"
#include "ghzqkd/session.hpp"

namespace ghzqkd::cli {

enum ExitCode : int {
  kExitAccepted = 0,
  kExitAborted = 1,
  kExitUsage = 2,
  kExitOracleFail = 3,
};

inline constexpr const char* kSeedEnvironmentVariable = "GHZQKD_SEED";

struct RunConfig {
  int parties = 3;
  std::uint64_t rounds = 40000;
  double visibility = 1.0;
  std::uint64_t seed = 1;
  double abort_sigma = 3.0;
  std::string convention = "auto";   // auto | three-party | n-party
  std::string attack = "product";    // product | outcome-control | cc
  std::uint64_t restarts = 10000;    // product-attack optimizer restarts
  std::string free_party = "best";   // outcome control: best | uniform
  std::string grid;                  // keyrate: start:stop:step, or a comma list
  bool threads = false;
  std::string transcript;            // output path, public view
  std::string summary;               // output path, JSON
  std::string output;                // keyrate CSV path
  std::string format = "table";      // table | json
};

inline Json to_json(const RunConfig& c) {
  return Json{{"parties", c.parties},       {"rounds", c.rounds},         {"visibility", c.visibility},
              {"seed", c.seed},             {"abort_sigma", c.abort_sigma}, {"convention", c.convention},
              {"attack", c.attack},         {"restarts", c.restarts},     {"free_party", c.free_party},
              {"grid", c.grid},             {"threads", c.threads},       {"transcript", c.transcript},
              {"summary", c.summary},       {"output", c.output},         {"format", c.format}};
}

/// Applies a JSON config object on top of `config`. Unknown keys are
/// rejected.
inline void apply_config(RunConfig& config, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "parties") config.parties = value.get<int>();
      else if (key == "rounds") config.rounds = value.get<std::uint64_t>();
      else if (key == "visibility") config.visibility = value.get<double>();
      else if (key == "seed") config.seed = value.get<std::uint64_t>();
      else if (key == "abort_sigma") config.abort_sigma = value.get<double>();
      else if (key == "convention") config.convention = value.get<std::string>();
      else if (key == "attack") config.attack = value.get<std::string>();
      else if (key == "restarts") config.restarts = value.get<std::uint64_t>();
      else if (key == "free_party") config.free_party = value.get<std::string>();
      else if (key == "grid") config.grid = value.get<std::string>();
      else if (key == "threads") config.threads = value.get<bool>();
      else if (key == "transcript") config.transcript = value.get<std::string>();
      else if (key == "summary") config.summary = value.get<std::string>();
      else if (key == "output") config.output = value.get<std::string>();
      else if (key == "format") config.format = value.get<std::string>();
      else throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

inline void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config file: ") + e.what());
  }
  apply_config(config, j);
}

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv(kSeedEnvironmentVariable); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, std::string(kSeedEnvironmentVariable) + " is not an integer");
    }
  }
  return 1;
}

/// Parses "start:stop:step" (inclusive) or a comma-separated list.
inline std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "bad grid value '" + s + "'");
    }
  };
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw Error(ErrorCode::InvalidConfig, "grid range must be start:stop:step");
    const double start = number(parts[0]);
    const double stop = number(parts[1]);
    const double step = number(parts[2]);
    if (!(step > 0.0) || stop < start) throw Error(ErrorCode::InvalidConfig, "grid range is empty");
    const auto count = static_cast<std::uint64_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::uint64_t i = 0; i < count; ++i) grid.push_back(start + static_cast<double>(i) * step);
  } else if (!spec.empty()) {
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ',')) grid.push_back(number(part));
  }
  if (grid.empty()) throw Error(ErrorCode::InvalidConfig, "empty visibility grid");
  for (double& v : grid) {
    if (v > 1.0 && v < 1.0 + 1e-9) v = 1.0;
    if (v < 0.0 && v > -1e-9) v = 0.0;
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidConfig, "grid values must lie in [0, 1]");
  }
  return grid;
}

inline SettingProfile resolve_profile(const RunConfig& c) {
  if (c.parties < 3 || c.parties > kMaxParties) {
    throw Error(ErrorCode::UnsupportedPartyCount,
                "parties must be 3.." + std::to_string(kMaxParties) + ", got " + std::to_string(c.parties));
  }
  if (c.convention == "auto") return standard_profile(c.parties);
  if (c.convention == "three-party") return standard_profile(c.parties, AngleConvention::ThreeParty);
  if (c.convention == "n-party") return standard_profile(c.parties, AngleConvention::NParty);
  throw Error(ErrorCode::InvalidConfig, "convention must be auto, three-party or n-party");
}

inline void check_common(const RunConfig& c) {
  if (c.format != "table" && c.format != "json") throw Error(ErrorCode::InvalidConfig, "format must be table or json");
  if (c.rounds < 1) throw Error(ErrorCode::InvalidConfig, "rounds must be >= 1");
  if (!(c.abort_sigma > 0.0)) throw Error(ErrorCode::InvalidConfig, "abort_sigma must be > 0");
}

// ---------------------------------------------------------------------------
// Output helpers

namespace detail {

inline void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& rows) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, rows);
    return;
  }
  std::string text;
  if (j.is_string()) {
    text = j.get<std::string>();
  } else if (j.is_number_float()) {
    std::ostringstream s;
    s << std::setprecision(10) << j.get<double>();
    text = s.str();
  } else {
    text = j.dump();
  }
  rows.emplace_back(prefix, text);
}

inline void print_table(std::ostream& out, const Json& summary) {
  std::vector<std::pair<std::string, std::string>> rows;
  flatten(summary, "", rows);
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  for (const auto& [k, v] : rows) out << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
}

inline void emit(std::ostream& out, const RunConfig& c, const Json& summary) {
  if (c.format == "json") {
    out << summary.dump(2) << '\n';
  } else {
    print_table(out, summary);
  }
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
  f << contents;
}

inline Json session_summary(const std::string& command, const RunConfig& c, const Transcript& t) {
  Json s;
  s["command"] = command;
  s["config"] = to_json(c);
  s["source"] = t.source;
  s["verdict"] = t.verdict.accepted() ? "accepted" : "aborted";
  s["reason"] = t.verdict.reason;
  if (t.estimate) {
    s["si"] = Json{{"variant", std::string(to_string(t.estimate->variant))},
                   {"value", t.estimate->value},
                   {"stderr", t.estimate->std_error},
                   {"margin", t.estimate->margin},
                   {"classical_bound", t.estimate->classical_bound},
                   {"quantum_max", quantum_max(t.parties)}};
  } else {
    s["si"] = nullptr;
  }
  std::uint64_t key = 0, si = 0, discard = 0;
  for (const auto& r : t.rounds) {
    switch (r.classification.kind) {
      case RoundClass::Kind::Key: ++key; break;
      case RoundClass::Kind::SITest: ++si; break;
      case RoundClass::Kind::Discard: ++discard; break;
    }
  }
  s["counts"] = Json{{"rounds", t.rounds.size()}, {"key", key}, {"si", si}, {"discard", discard}};
  if (key > 0) {
    const auto m = mismatch_rate(t);
    Json per = Json::array();
    for (const auto& b : m.per_setting) {
      per.push_back(Json{{"setting", b.setting}, {"count", b.count}, {"rate", b.rate}});
    }
    s["mismatch"] = Json{{"pooled", m.rate}, {"key_rounds", m.count}, {"per_setting", std::move(per)}};
  } else {
    s["mismatch"] = nullptr;
  }
  return s;
}

inline int finish_session(const std::string& command, const RunConfig& c, const Transcript& t, Json summary,
                          std::ostream& out) {
  if (!c.transcript.empty()) write_file(c.transcript, emit_transcript(public_view(t), to_json(c)));
  if (!c.summary.empty()) write_file(c.summary, summary.dump(2) + "\n");
  emit(out, c, summary);
  (void)command;
  return t.verdict.accepted() ? kExitAccepted : kExitAborted;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands

/// Honest protocol run against a Werner source.
inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
  check_common(c);
  const auto profile = resolve_profile(c);
  if (!(c.visibility >= 0.0 && c.visibility <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "visibility must lie in [0, 1]");
  }
  HonestSource source(c.parties, c.visibility);
  const SessionConfig session{profile, c.rounds, c.seed, c.abort_sigma, c.threads};
  const auto t = run_session(session, source);
  return detail::finish_session("simulate", c, t, detail::session_summary("simulate", c, t), out);
}

/// Devetak-Winter rate table over a visibility grid.
inline int cmd_keyrate(const RunConfig& c, std::ostream& out) {
  if (c.format != "table" && c.format != "json") throw Error(ErrorCode::InvalidConfig, "format must be table or json");
  const auto grid = c.grid.empty() ? parse_grid(std::to_string(c.visibility)) : parse_grid(c.grid);
  const auto rows = rate_curve(grid);
  if (!c.output.empty()) detail::write_file(c.output, emit_rate_csv(rows, to_json(c)));
  if (c.format == "json") {
    Json j;
    j["command"] = "keyrate";
    j["config"] = to_json(c);
    j["threshold"] = kKeyRateThreshold;
    Json arr = Json::array();
    for (const auto& r : rows) arr.push_back(to_json(r));
    j["rows"] = std::move(arr);
    out << j.dump(2) << '\n';
  } else {
    out << "# threshold v = " << std::setprecision(10) << kKeyRateThreshold << '\n';
    out << std::right << std::setw(10) << "v" << std::setw(12) << "q_L" << std::setw(12) << "h_eve"
        << std::setw(12) << "h_abc" << std::setw(12) << "r_dw" << '\n';
    out << std::fixed << std::setprecision(6);
    for (const auto& r : rows) {
      out << std::setw(10) << r.visibility << std::setw(12) << r.local_weight << std::setw(12) << r.h_eve
          << std::setw(12) << r.h_abc << std::setw(12) << r.r_dw << '\n';
    }
    out.unsetf(std::ios::floatfield);
  }
  return kExitAccepted;
}

struct OracleCheck {
  std::string name;
  std::string status;  // pass | fail | size-limit
  double value = std::numeric_limits<double>::quiet_NaN();
  double bound = 0.0;
  bool tight = false;  // value reaches the bound exactly
};

/// Enumeration checks of the classical, hybrid and outcome-control bounds,
/// plus the analytic quantum maximum, for the configured party count. A
/// classical-type check passes when the enumerated maximum does not exceed
/// 2^(n-1); the quantum check passes when the GHZ value equals
/// 2^(n-1)·sqrt(2) within 1e-9.
inline std::vector<OracleCheck> run_oracles(int parties, const SettingProfile& profile) {
  const double bound = classical_bound(parties);
  const Variant variant = profile.variant();
  std::vector<OracleCheck> checks;
  auto bounded = [&](const std::string& name, auto&& compute) {
    OracleCheck check{name, "", std::numeric_limits<double>::quiet_NaN(), bound, false};
    try {
      check.value = compute();
      check.status = check.value <= bound ? "pass" : "fail";
      check.tight = check.value == bound;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SizeLimit) throw;
      check.status = "size-limit";
    }
    checks.push_back(check);
  };
  bounded("local", [&] { return brute_force_local_max(parties, variant); });
  bounded("bipartition", [&] { return brute_force_bipartition_max(parties, variant); });
  bounded("outcome-control", [&] { return max_outcome_control_value(parties).value; });

  OracleCheck quantum{"quantum", "", 0.0, quantum_max(parties), false};
  quantum.value = svetlichny_value(correlator_table(ghz_state(parties), profile), variant);
  quantum.tight = std::abs(quantum.value - quantum.bound) <= 1e-9;
  quantum.status = quantum.tight ? "pass" : "fail";
  checks.push_back(quantum);
  return checks;
}

inline int cmd_verify(const RunConfig& c, std::ostream& out) {
  if (c.format != "table" && c.format != "json") throw Error(ErrorCode::InvalidConfig, "format must be table or json");
  const auto profile = resolve_profile(c);
  const auto checks = run_oracles(c.parties, profile);
  bool failed = false;
  Json j;
  j["command"] = "verify";
  j["config"] = to_json(c);
  j["variant"] = std::string(to_string(profile.variant()));
  Json arr = Json::array();
  for (const auto& ch : checks) {
    failed = failed || ch.status == "fail";
    arr.push_back(Json{{"name", ch.name},
                       {"status", ch.status},
                       {"value", std::isnan(ch.value) ? Json(nullptr) : Json(ch.value)},
                       {"bound", ch.bound},
                       {"tight", ch.tight}});
  }
  j["checks"] = arr;
  if (!c.summary.empty()) detail::write_file(c.summary, j.dump(2) + "\n");
  if (c.format == "json") {
    out << j.dump(2) << '\n';
  } else {
    out << "verify parties=" << c.parties << " variant=" << to_string(profile.variant()) << '\n';
    for (const auto& ch : checks) {
      out << std::left << std::setw(18) << ch.name << std::setw(12) << ch.status;
      if (!std::isnan(ch.value)) {
        out << std::setprecision(12) << ch.value << " (bound " << ch.bound << (ch.tight ? ", tight)" : ")");
      }
      out << '\n';
    }
  }
  return failed ? kExitOracleFail : kExitAccepted;
}

/// Session against one of the eavesdropper models.
inline int cmd_attack(const RunConfig& c, std::ostream& out) {
  check_common(c);
  const auto profile = resolve_profile(c);
  std::unique_ptr<SourceModel> source;
  Json attack;
  attack["kind"] = c.attack;
  if (c.attack == "product") {
    if (c.restarts < 1) throw Error(ErrorCode::InvalidConfig, "restarts must be >= 1");
    RandomStream search = RandomStream::derive(c.seed, 1000);
    const auto found = optimize_product_attack(c.parties, c.restarts, search);
    attack["optimized_si"] = found.value;
    attack["restarts"] = found.restarts;
    Json dirs = Json::array();
    for (const auto& d : found.best.atoms.front().directions) dirs.push_back(d.radians());
    attack["directions"] = dirs;
    source = product_state_source(found.best);
  } else if (c.attack == "outcome-control") {
    auto found = max_outcome_control_value(c.parties);
    if (c.free_party == "uniform") {
      found.best.free_response.reset();
    } else if (c.free_party != "best") {
      throw Error(ErrorCode::InvalidConfig, "free_party must be best or uniform");
    }
    attack["exhaustive_max"] = found.value;
    attack["free_response"] = found.best.free_response ? "deterministic" : "uniform";
    source = outcome_control_source(found.best, profile);
  } else if (c.attack == "cc") {
    try {
      source = cc_attack_source(c.parties, c.visibility);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AttackUndefined) throw;
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    attack["q_l"] = local_weight(c.visibility);
  } else {
    throw Error(ErrorCode::InvalidConfig, "attack must be product, outcome-control or cc");
  }

  const SessionConfig session{profile, c.rounds, c.seed, c.abort_sigma, c.threads};
  const auto t = run_session(session, *source);
  if (c.attack == "cc") {
    const double q = local_weight(c.visibility);
    try {
      const auto emp = empirical_rate(t);
      attack["eve_agreement"] = emp.eve_agreement;
      attack["expected_agreement"] = (1.0 + q) / 2.0;
      attack["empirical_rate"] = emp.rate;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientStatistics) throw;
      attack["eve_agreement"] = nullptr;
      attack["empirical_rate"] = nullptr;
    }
    attack["dw_rate"] = dw_rate(c.visibility).r_dw;
  }
  auto summary = detail::session_summary("attack", c, t);
  summary["attack"] = std::move(attack);
  return detail::finish_session("attack", c, t, std::move(summary), out);
}

/// Runs `fn`, mapping library errors to the usage exit code.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace ghzqkd::cli
