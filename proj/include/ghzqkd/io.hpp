#pragma once

// Serialization of transcripts and rate tables.
//
// Transcript: JSON lines. Line 1 is the header object (resolved run
// configuration, profile, verdict, SI estimate); every following line is
// one round, in round order. Field order is fixed.
//
// Rate table: comma-separated text. Comment lines start with '#', the
// first data line is the column header.

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ghzqkd/analysis.hpp"
#include "ghzqkd/error.hpp"
#include "ghzqkd/transcript.hpp"

namespace ghzqkd {

using Json = nlohmann::ordered_json;

namespace detail {

inline Json number_or_null(double x) { return std::isnan(x) ? Json(nullptr) : Json(x); }
inline double number_or_nan(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline RoundClass::Kind parse_kind(const std::string& s) {
  if (s == "key") return RoundClass::Kind::Key;
  if (s == "si") return RoundClass::Kind::SITest;
  if (s == "discard") return RoundClass::Kind::Discard;
  throw Error(ErrorCode::ParseError, "unknown round class '" + s + "'");
}

}  // namespace detail

inline Json to_json(const SIEstimate& e) {
  Json j;
  j["variant"] = std::string(to_string(e.variant));
  j["value"] = detail::number_or_null(e.value);
  j["stderr"] = detail::number_or_null(e.std_error);
  j["classical_bound"] = e.classical_bound;
  j["abort_sigma"] = e.abort_sigma;
  j["margin"] = detail::number_or_null(e.margin);
  Json corr = Json::array();
  for (std::size_t x = 0; x < e.correlators.size(); ++x) {
    const auto& c = e.correlators[x];
    corr.push_back(Json{{"tuple", x}, {"mean", c.mean}, {"stderr", detail::number_or_null(c.std_error)}, {"count", c.count}});
  }
  j["correlators"] = std::move(corr);
  return j;
}

inline SIEstimate si_estimate_from_json(const Json& j) {
  SIEstimate e;
  e.variant = j.at("variant").get<std::string>() == "+" ? Variant::Plus : Variant::Minus;
  e.value = detail::number_or_nan(j.at("value"));
  e.std_error = detail::number_or_nan(j.at("stderr"));
  e.classical_bound = j.at("classical_bound").get<double>();
  e.abort_sigma = j.at("abort_sigma").get<double>();
  e.margin = detail::number_or_nan(j.at("margin"));
  for (const auto& c : j.at("correlators")) {
    e.correlators.push_back({c.at("mean").get<double>(), detail::number_or_nan(c.at("stderr")),
                             c.at("count").get<std::uint64_t>()});
  }
  return e;
}

inline Json transcript_header(const Transcript& t, const Json& config) {
  Json h;
  h["type"] = "header";
  h["config"] = config;
  h["parties"] = t.parties;
  h["seed"] = t.seed;
  h["abort_sigma"] = t.abort_sigma;
  h["source"] = t.source;
  h["profile"] = t.profile;
  h["rounds"] = t.rounds.size();
  h["redacted"] = t.redacted;
  h["verdict"] = t.verdict.accepted() ? "accepted" : "aborted";
  h["reason"] = t.verdict.reason;
  h["estimate"] = t.estimate ? to_json(*t.estimate) : Json(nullptr);
  return h;
}

inline Json to_json(const RoundRecord& r) {
  Json j;
  j["type"] = "round";
  j["index"] = r.index;
  j["settings"] = r.settings;
  j["class"] = std::string(to_string(r.classification.kind));
  if (r.classification.kind == RoundClass::Kind::Key) j["key_sign"] = r.classification.key_sign;
  if (r.classification.kind == RoundClass::Kind::SITest) j["tuple"] = r.classification.si_tuple;
  if (!r.outcomes.empty()) j["outcomes"] = r.outcomes;
  if (r.eve_guess) j["eve_guess"] = *r.eve_guess;
  return j;
}

inline void write_transcript(std::ostream& out, const Transcript& t, const Json& config = Json::object()) {
  out << transcript_header(t, config).dump() << '\n';
  for (const auto& r : t.rounds) out << to_json(r).dump() << '\n';
}

inline std::string emit_transcript(const Transcript& t, const Json& config = Json::object()) {
  std::ostringstream s;
  write_transcript(s, t, config);
  return s.str();
}

inline Transcript read_transcript(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty transcript");
  Transcript t;
  try {
    const Json h = Json::parse(line);
    if (h.at("type") != "header") throw Error(ErrorCode::ParseError, "first line is not a header");
    t.parties = h.at("parties").get<int>();
    t.seed = h.at("seed").get<std::uint64_t>();
    t.abort_sigma = h.at("abort_sigma").get<double>();
    t.source = h.at("source").get<std::string>();
    t.profile = h.at("profile").get<std::vector<std::vector<double>>>();
    t.redacted = h.at("redacted").get<bool>();
    t.verdict.status = h.at("verdict") == "accepted" ? Verdict::Status::Accepted : Verdict::Status::Aborted;
    t.verdict.reason = h.at("reason").get<std::string>();
    if (!h.at("estimate").is_null()) t.estimate = si_estimate_from_json(h.at("estimate"));
    const auto expected = h.at("rounds").get<std::size_t>();
    t.rounds.reserve(expected);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      RoundRecord r;
      r.index = j.at("index").get<std::uint64_t>();
      r.settings = j.at("settings").get<std::vector<int>>();
      r.classification.kind = detail::parse_kind(j.at("class").get<std::string>());
      if (j.contains("key_sign")) r.classification.key_sign = j["key_sign"].get<int>();
      if (j.contains("tuple")) r.classification.si_tuple = j["tuple"].get<std::uint32_t>();
      if (j.contains("outcomes")) r.outcomes = j["outcomes"].get<Outcomes>();
      if (j.contains("eve_guess")) r.eve_guess = j["eve_guess"].get<int>();
      t.rounds.push_back(std::move(r));
    }
    if (t.rounds.size() != expected) throw Error(ErrorCode::ParseError, "round count does not match header");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return t;
}

inline Transcript parse_transcript(const std::string& text) {
  std::istringstream in(text);
  return read_transcript(in);
}

// ---------------------------------------------------------------------------
// Rate tables

inline constexpr const char* kRateColumns = "v,q_l,h_eve,h_abc,bound,r_dw,clamped";

namespace detail {
inline std::string exact(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

inline void write_rate_csv(std::ostream& out, const std::vector<KeyRateReport>& rows, const Json& config = Json::object()) {
  out << "# ghzqkd key rate table\n";
  out << "# config: " << config.dump() << '\n';
  out << kRateColumns << '\n';
  for (const auto& r : rows) {
    out << detail::exact(r.visibility) << ',' << detail::exact(r.local_weight) << ',' << detail::exact(r.h_eve)
        << ',' << detail::exact(r.h_abc) << ',' << detail::exact(r.bound) << ',' << detail::exact(r.r_dw) << ','
        << (r.clamped ? 1 : 0) << '\n';
  }
}

inline std::string emit_rate_csv(const std::vector<KeyRateReport>& rows, const Json& config = Json::object()) {
  std::ostringstream s;
  write_rate_csv(s, rows, config);
  return s.str();
}

inline std::vector<KeyRateReport> read_rate_csv(std::istream& in) {
  std::vector<KeyRateReport> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kRateColumns) throw Error(ErrorCode::ParseError, "unexpected rate table header");
      header_seen = true;
      continue;
    }
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error(ErrorCode::ParseError, "rate row needs 7 columns: " + line);
    KeyRateReport r;
    try {
      r.visibility = std::stod(cells[0]);
      r.local_weight = std::stod(cells[1]);
      r.h_eve = std::stod(cells[2]);
      r.h_abc = std::stod(cells[3]);
      r.bound = std::stod(cells[4]);
      r.r_dw = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "bad number in rate row: " + line);
    }
    r.clamped = cells[6] == "1";
    rows.push_back(r);
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "rate table has no header");
  return rows;
}

inline std::vector<KeyRateReport> parse_rate_csv(const std::string& text) {
  std::istringstream in(text);
  return read_rate_csv(in);
}

inline Json to_json(const KeyRateReport& r) {
  return Json{{"v", r.visibility},     {"q_l", r.local_weight}, {"h_eve", r.h_eve}, {"h_abc", r.h_abc},
              {"bound", r.bound},      {"r_dw", r.r_dw},        {"clamped", r.clamped},
              {"v_l", r.local_visibility}, {"threshold", r.threshold}};
}

inline KeyRateReport rate_from_json(const Json& j) {
  KeyRateReport r;
  r.visibility = j.at("v").get<double>();
  r.local_weight = j.at("q_l").get<double>();
  r.h_eve = j.at("h_eve").get<double>();
  r.h_abc = j.at("h_abc").get<double>();
  r.bound = j.at("bound").get<double>();
  r.r_dw = j.at("r_dw").get<double>();
  r.clamped = j.at("clamped").get<bool>();
  r.local_visibility = j.at("v_l").get<double>();
  r.threshold = j.at("threshold").get<double>();
  return r;
}

}  // namespace ghzqkd
