#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ghzqkd/cli.hpp"
#include "ghzqkd/io.hpp"
#include "ghzqkd/session.hpp"
#include "test_util.hpp"

using namespace ghzqkd;
using testutil::expect_code;

namespace {

Transcript honest_run(double v, std::uint64_t rounds, std::uint64_t seed) {
  HonestSource source(3, v);
  return run_session(SessionConfig{standard_profile(3), rounds, seed}, source);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "ghzqkd_test_io_cli";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

// ---------------------------------------------------------------------------
// Serialization

TEST(TranscriptIo, RoundTrip) {
  const auto t = honest_run(0.9, 3000, 2);
  EXPECT_EQ(parse_transcript(emit_transcript(t)), t);
  const auto view = public_view(t);
  EXPECT_EQ(parse_transcript(emit_transcript(view)), view);
}

TEST(TranscriptIo, RoundTripWithEveGuessesAndNoEstimate) {
  auto source = cc_attack_source(3, 0.8);
  const auto t = run_session(SessionConfig{standard_profile(3), 10, 1}, *source);
  EXPECT_FALSE(t.estimate.has_value());
  EXPECT_EQ(parse_transcript(emit_transcript(t)), t);
}

TEST(TranscriptIo, NanSurvivesAsNull) {
  SIEstimate e;
  e.value = 1.5;
  e.std_error = std::nan("");
  e.margin = std::nan("");
  e.correlators = {{1.0, std::nan(""), 1}};
  const auto back = si_estimate_from_json(to_json(e));
  EXPECT_TRUE(std::isnan(back.std_error));
  EXPECT_TRUE(std::isnan(back.correlators[0].std_error));
  EXPECT_EQ(back.value, 1.5);
}

TEST(TranscriptIo, HeaderEchoesConfig) {
  const auto t = honest_run(1.0, 100, 3);
  const Json config{{"parties", 3}, {"seed", 3}};
  std::istringstream in(emit_transcript(t, config));
  std::string first;
  std::getline(in, first);
  const auto header = Json::parse(first);
  EXPECT_EQ(header["type"], "header");
  EXPECT_EQ(header["config"], config);
}

TEST(TranscriptIo, ParseErrors) {
  expect_code(ErrorCode::ParseError, [] { parse_transcript(""); });
  expect_code(ErrorCode::ParseError, [] { parse_transcript("not json\n"); });
  auto text = emit_transcript(honest_run(1.0, 20, 1));
  text.erase(text.rfind('{'));  // drop the last round
  expect_code(ErrorCode::ParseError, [&] { parse_transcript(text); });
}

TEST(RateIo, CsvRoundTrip) {
  const std::vector<double> grid{0.0, 0.5, 0.7071, 0.78, 0.9, 1.0};
  const auto rows = rate_curve(grid);
  const auto back = parse_rate_csv(emit_rate_csv(rows, Json{{"grid", "custom"}}));
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(back[i], rows[i]) << i;
}

TEST(RateIo, JsonRoundTrip) {
  for (double v : {0.2, 0.8, 1.0}) EXPECT_EQ(rate_from_json(to_json(dw_rate(v))), dw_rate(v));
}

TEST(RateIo, ParseErrors) {
  expect_code(ErrorCode::ParseError, [] { parse_rate_csv("# nothing\n"); });
  expect_code(ErrorCode::ParseError, [] { parse_rate_csv(std::string(kRateColumns) + "\n1,2,3\n"); });
}

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, GridRange) {
  const auto g = cli::parse_grid("0.70:1.00:0.01");
  ASSERT_EQ(g.size(), 31u);
  EXPECT_EQ(g.back(), 1.0);
  const auto rows = rate_curve(g);
  std::size_t first_positive = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].r_dw > 0) {
      first_positive = i;
      break;
    }
  }
  ASSERT_LT(first_positive, rows.size());
  EXPECT_NEAR(rows[first_positive].visibility, 0.78, 1e-12);
  for (double r : [] {
         std::vector<double> out;
         for (const auto& row : rate_curve(cli::parse_grid("0:0.5:0.1"))) out.push_back(row.r_dw);
         return out;
       }()) {
    EXPECT_EQ(r, 0.0);
  }
}

TEST(Config, GridErrors) {
  expect_code(ErrorCode::InvalidConfig, [] { cli::parse_grid(""); });
  expect_code(ErrorCode::InvalidConfig, [] { cli::parse_grid("1:0:0.1"); });
  expect_code(ErrorCode::InvalidConfig, [] { cli::parse_grid("0:1:0"); });
  expect_code(ErrorCode::InvalidConfig, [] { cli::parse_grid("0:1"); });
  expect_code(ErrorCode::InvalidConfig, [] { cli::parse_grid("0.5,abc"); });
  expect_code(ErrorCode::InvalidConfig, [] { cli::parse_grid("1.5"); });
  EXPECT_EQ(cli::parse_grid("1").size(), 1u);
  EXPECT_EQ(cli::parse_grid("0.1,0.2").size(), 2u);
}

TEST(Config, FileOverridesAndRejectsUnknownKeys) {
  cli::RunConfig c;
  c.parties = 4;
  cli::apply_config(c, Json{{"parties", 3}, {"visibility", 0.8}, {"threads", true}});
  EXPECT_EQ(c.parties, 3);
  EXPECT_EQ(c.visibility, 0.8);
  EXPECT_TRUE(c.threads);
  expect_code(ErrorCode::InvalidConfig, [&] { cli::apply_config(c, Json{{"partys", 3}}); });
  expect_code(ErrorCode::InvalidConfig, [&] { cli::apply_config(c, Json{{"rounds", "many"}}); });
  expect_code(ErrorCode::InvalidConfig, [&] { cli::apply_config(c, Json::array()); });
}

TEST(Config, EchoCoversEveryField) {
  const auto j = cli::to_json(cli::RunConfig{});
  cli::RunConfig c;
  EXPECT_NO_THROW(cli::apply_config(c, j));
  EXPECT_EQ(cli::to_json(c), j);
  EXPECT_EQ(j.size(), 15u);
}

// ---------------------------------------------------------------------------
// Commands

TEST(Commands, SimulateExitCodes) {
  cli::RunConfig c;
  c.seed = 7;
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_simulate(c, out), cli::kExitAccepted);
  c.visibility = 0.5;
  EXPECT_EQ(cli::cmd_simulate(c, out), cli::kExitAborted);
  c.visibility = 2.0;
  std::ostringstream err;
  EXPECT_EQ(cli::guarded(err, [&] { return cli::cmd_simulate(c, out); }), cli::kExitUsage);
  EXPECT_NE(err.str().find("visibility"), std::string::npos);
}

TEST(Commands, SimulateWritesFiles) {
  cli::RunConfig c;
  c.rounds = 4000;
  c.transcript = scratch("t.jsonl").string();
  c.summary = scratch("s.json").string();
  c.format = "json";
  std::ostringstream out;
  cli::cmd_simulate(c, out);
  const auto summary = Json::parse(slurp(c.summary));
  EXPECT_EQ(summary["config"], cli::to_json(c));
  EXPECT_EQ(Json::parse(out.str()), summary);
  const auto t = parse_transcript(slurp(c.transcript));
  EXPECT_TRUE(t.redacted);
  EXPECT_EQ(t.rounds.size(), 4000u);
}

TEST(Commands, SimulateIsReproducible) {
  cli::RunConfig c;
  c.rounds = 5000;
  std::ostringstream a, b;
  cli::cmd_simulate(c, a);
  cli::cmd_simulate(c, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Commands, VerifyReports) {
  cli::RunConfig c;
  c.format = "json";
  for (int n : {3, 4}) {
    c.parties = n;
    std::ostringstream out;
    EXPECT_EQ(cli::cmd_verify(c, out), cli::kExitAccepted) << n;
    for (const auto& check : Json::parse(out.str())["checks"]) EXPECT_EQ(check["status"], "pass");
  }
  c.parties = 5;
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_verify(c, out), cli::kExitAccepted);
  const auto checks = Json::parse(out.str())["checks"];
  EXPECT_EQ(checks[0]["status"], "pass");
  EXPECT_EQ(checks[1]["status"], "size-limit");
  EXPECT_EQ(checks[2]["status"], "pass");
  EXPECT_EQ(checks[2]["tight"], true);
  c.parties = 2;
  expect_code(ErrorCode::UnsupportedPartyCount, [&] { cli::cmd_verify(c, out); });
}

TEST(Commands, KeyrateOutputs) {
  cli::RunConfig c;
  c.grid = "0.70:1.00:0.01";
  c.output = scratch("rate.csv").string();
  std::ostringstream out;
  EXPECT_EQ(cli::cmd_keyrate(c, out), cli::kExitAccepted);
  const auto text = slurp(c.output);
  EXPECT_NE(text.find("# config: "), std::string::npos);
  EXPECT_EQ(parse_rate_csv(text).size(), 31u);
  c.grid.clear();
  c.output.clear();
  c.format = "json";
  std::ostringstream single;
  cli::cmd_keyrate(c, single);
  const auto rows = Json::parse(single.str())["rows"];
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0]["r_dw"], 1.0);
}

TEST(Commands, AttackKinds) {
  cli::RunConfig c;
  c.rounds = 20000;
  c.format = "json";
  c.restarts = 50;
  std::ostringstream product;
  EXPECT_EQ(cli::cmd_attack(c, product), cli::kExitAborted);
  c.attack = "outcome-control";
  std::ostringstream control;
  EXPECT_EQ(cli::cmd_attack(c, control), cli::kExitAborted);
  EXPECT_EQ(Json::parse(control.str())["si"]["value"], 4.0);
  c.attack = "cc";
  c.visibility = 0.9;
  c.rounds = 40000;
  std::ostringstream cc;
  EXPECT_EQ(cli::cmd_attack(c, cc), cli::kExitAccepted);
  const auto j = Json::parse(cc.str());
  EXPECT_NEAR(j["attack"]["q_l"].get<double>(), 0.341421, 1e-6);
  EXPECT_TRUE(j["attack"].contains("eve_agreement"));
  c.visibility = 0.6;
  expect_code(ErrorCode::InvalidConfig, [&] { cli::cmd_attack(c, cc); });
  c.attack = "laser";
  expect_code(ErrorCode::InvalidConfig, [&] { cli::cmd_attack(c, cc); });
}
