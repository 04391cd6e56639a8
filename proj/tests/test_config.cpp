#include <catch2/catch_amalgamated.hpp>

#include "ghfeat/config.hpp"

using namespace ghfeat;

TEST_CASE("config parses dotted keys and comments") {
  auto cfg = Config::from_string(
      "# comment\n"
      "train.lambda1 = 0.1\n"
      "generator.channels = 256,256,128,64\n"
      "run.name = smoke\n"
      "\n");
  CHECK(cfg.get_real("train.lambda1") == 0.1);
  CHECK(cfg.get_str("run.name") == "smoke");
  CHECK(cfg.get_int_list("generator.channels", {}) == std::vector<int64_t>{256, 256, 128, 64});
  CHECK(cfg.get_int("missing.key", 42) == 42);
}

TEST_CASE("config rejects malformed lines with line info") {
  CHECK_THROWS_AS(Config::from_string("no equals sign\n"), ConfigError);
  CHECK_THROWS_MATCHES(
      Config::from_string("a = 1\nbroken line\n"), ConfigError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("line 2")));
  auto cfg = Config::from_string("x = notanumber\n");
  CHECK_THROWS_AS(cfg.get_int("x"), ConfigError);
  CHECK_THROWS_AS(cfg.get_real("x"), ConfigError);
}

TEST_CASE("cli overrides mirror config keys") {
  auto cfg = Config::from_string("train.lr = 1e-4\n");
  auto rest = cfg.apply_cli_overrides({"--train.lr", "2e-4", "--train.lambda1=0.5", "positional"});
  CHECK(cfg.get_real("train.lr") == 2e-4);
  CHECK(cfg.get_real("train.lambda1") == 0.5);
  REQUIRE(rest.size() == 1);
  CHECK(rest[0] == "positional");
  CHECK_THROWS_AS(cfg.apply_cli_overrides({"--dangling"}), ConfigError);
}

TEST_CASE("config snapshot round-trips") {
  auto cfg = Config::from_string("b.key = 2\na.key = one two\n");
  auto copy = Config::from_string(cfg.to_text());
  CHECK(copy.get_str("a.key") == "one two");
  CHECK(copy.get_int("b.key") == 2);
}
