#include <doctest.h>

#include "grassproj/config.hpp"

using namespace grassproj;

TEST_CASE("FNV-1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("parse the flat TOML subset") {
    const Config c = Config::parse(R"(
# experiment
name = "bush # not a comment"   # trailing comment
n = 3
mu = 5e-3
delta = 0.015625
flag = true
scales = [0.25, 0.125, 6.25e-2, 1]
empty = []
big = 1_000
neg = -2
)");
    CHECK(c.get_string("name") == "bush # not a comment");
    CHECK(c.get_int("n") == 3);
    CHECK(c.get_double("n") == 3.0);
    CHECK(c.get_double("mu") == doctest::Approx(0.005));
    CHECK(c.get_bool("flag"));
    CHECK(c.get_list("scales") == std::vector<double>{0.25, 0.125, 0.0625, 1.0});
    CHECK(c.get_list("empty").empty());
    CHECK(c.get_int("big") == 1000);
    CHECK(c.get_int("neg") == -2);
    CHECK(c.int_or("missing", 7) == 7);
    CHECK_THROWS_AS(c.get_int("mu"), ConfigError);
    CHECK_THROWS_AS(c.get_string("n"), ConfigError);
    CHECK_THROWS_AS(c.get_double("absent"), ConfigError);
    CHECK_THROWS_AS(c.require_known({"name"}), ConfigError);
}

TEST_CASE("malformed configs are rejected") {
    CHECK_THROWS_AS(Config::parse("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[table]\na = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a = \"open\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a = [1, 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a = [1, \"x\"]\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a = 1.2.3\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("a b = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::load("/nonexistent/config.toml"), ConfigError);
}

TEST_CASE("hash is stable under key reordering") {
    const Config a = Config::parse("seed = 1\nn = 3\nname = \"x\"\nscales = [0.5, 0.25]\n");
    const Config b = Config::parse("# same keys\nscales = [0.5,0.25]\nname = \"x\"\n\nn = 3\nseed = 1\n");
    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash() == b.hash());
    const Config c = Config::parse("seed = 2\nn = 3\nname = \"x\"\nscales = [0.5, 0.25]\n");
    CHECK(a.hash() != c.hash());
    // Round trip through the canonical form.
    CHECK(Config::parse(a.canonical()).canonical() == a.canonical());
}
