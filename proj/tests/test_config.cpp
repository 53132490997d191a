#include <gtest/gtest.h>

#include <sstream>

#include "wulff/config.hpp"

using namespace wulff;

TEST(KeyValues, ParseCommentsAndErrors) {
  const auto kv = parse_key_values("# run\n beta = 2 \n\ndim=3 # trailing\n");
  EXPECT_EQ(kv.at("beta"), "2");
  EXPECT_EQ(kv.at("dim"), "3");
  EXPECT_THROW(parse_key_values("beta=1\nbeta=2\n"), ConfigError);
  EXPECT_THROW(parse_key_values("beta\n"), ConfigError);
  EXPECT_EQ(parse_key_values(emit_key_values(kv)), kv);
}

TEST(KeyValues, Numbers) {
  EXPECT_DOUBLE_EQ(parse_double("x", "0.1"), 0.1);
  EXPECT_THROW(parse_double("x", "0.1abc"), ConfigError);
  EXPECT_EQ(parse_int("x", "-7"), -7);
  EXPECT_THROW(parse_int("x", "7.5"), ConfigError);
  EXPECT_EQ(parse_seed("x", "18446744073709551615"), 18446744073709551615ull);
  EXPECT_THROW(parse_seed("x", "-1"), ConfigError);
  EXPECT_EQ(parse_double("x", format_double(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(RunConfig, RoundTrip) {
  RunConfig c;
  c.gibbs.dim = 3;
  c.gibbs.beta = 0.1 + 0.2;
  c.gibbs.horizon = 12.5;
  c.gibbs.ensemble = Ensemble::ContinuousTime;
  c.gibbs.variant = HamiltonianVariant::BoundaryLocalTime;
  c.mix = MoveMix{0.3, 0.1, 0.3, 0.1, 0.2};
  c.schedule.burn_in = 77;
  c.schedule.samples = 99;
  c.schedule.thinning = 3;
  c.seed = 1234567890123ull;
  c.init = InitKind::RandomWalk;
  c.segment_max = 0;
  c.threads = 2;
  EXPECT_EQ(parse_run_config(emit_run_config(c)), c);
  EXPECT_EQ(parse_run_config(emit_run_config(RunConfig{})), RunConfig{});
}

TEST(RunConfig, Errors) {
  EXPECT_THROW(parse_run_config("colour=red\n"), ConfigError);
  EXPECT_THROW(parse_run_config("beta=-1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("moves=pivot=1\n"), ConfigError);
  EXPECT_THROW(parse_run_config("init=spiral\n"), ConfigError);
  EXPECT_THROW(parse_run_config("ensemble=discrete\nhorizon_time=2.5\n"), ConfigError);
  const auto c = parse_run_config("beta=2\n");
  EXPECT_EQ(c.gibbs.beta, 2.0);
  EXPECT_EQ(c.gibbs.horizon, RunConfig{}.gibbs.horizon);
}

TEST(Manifest, JsonRoundTripAndHash) {
  Manifest m;
  m.verb = "sample";
  m.config = to_key_values(RunConfig{});
  m.seeds = {1, 2, 3};
  m.timestamp = utc_timestamp();
  m.outputs = {{"trace.csv", hex64(fnv1a64("abc"))}};
  const auto back = Manifest::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back, m);
  EXPECT_EQ(m.to_json().at("content_hash"), m.content_hash());
  Manifest other = m;
  other.outputs["trace.csv"] = hex64(fnv1a64("abd"));
  EXPECT_NE(other.content_hash(), m.content_hash());
  other.timestamp = "later";
  other.outputs = m.outputs;
  EXPECT_EQ(other.content_hash(), m.content_hash());
}

TEST(Hash, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

TEST(Records, JsonRoundTrip) {
  RunRecord r;
  r.config.horizon = 64;
  r.config.beta = 0.5;
  r.seed = 99;
  r.schedule.burn_in = 10;
  r.summary["H"] = Summary{12.5, 0.25, 3.5, 100.0, 350};
  r.summary["Htilde"] = Summary{};
  r.burn_in_used = 10;
  r.min_extent = {3, 4, 5};
  r.snapshot = "0 0\n0 1\n";
  std::stringstream ss;
  ss << record_to_json(r).dump() << "\n\n" << record_to_json(r).dump() << "\n";
  const auto back = read_records(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].config, r.config);
  EXPECT_EQ(back[0].seed, 99u);
  EXPECT_EQ(back[0].mix, r.mix);
  EXPECT_EQ(back[0].schedule, r.schedule);
  EXPECT_EQ(back[0].summary.at("H").mean, 12.5);
  EXPECT_EQ(back[0].summary.at("H").samples, 350u);
  EXPECT_TRUE(std::isnan(back[0].summary.at("Htilde").mean));
  EXPECT_EQ(back[0].min_extent, r.min_extent);
  EXPECT_EQ(back[0].snapshot, r.snapshot);
  std::stringstream bad("{\"dim\": 2}\n");
  EXPECT_THROW(read_records(bad), ConfigError);
  std::stringstream junk("not json\n");
  EXPECT_THROW(read_records(junk), ConfigError);
}
