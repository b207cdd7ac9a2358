#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "noisecond/error.hpp"
#include "noisecond/kvconfig.hpp"

using namespace nc;
namespace fs = std::filesystem;

TEST_CASE("parse_string ignores comments and blank lines") {
  auto kv = cfg::parse_string("# a comment\n\nlr = 0.1\nsteps=100  # trailing\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("lr") == "0.1");
  CHECK(kv.at("steps") == "100");
}

TEST_CASE("parse_string rejects malformed lines") {
  CHECK_THROWS_AS(cfg::parse_string("lr 0.1\n"), UsageError);
  CHECK_THROWS_AS(cfg::parse_string("=5\n"), UsageError);
  CHECK_THROWS_AS(cfg::parse_string("a=1\na=2\n"), UsageError);
}

TEST_CASE("merged gives overlay precedence") {
  auto base = cfg::parse_string("lr=0.1\nsteps=100\n");
  auto over = cfg::parse_string("lr=0.5\nbatch=16\n");
  auto m = cfg::merged(base, over);
  CHECK(m.at("lr") == "0.5");    // overlay wins
  CHECK(m.at("steps") == "100"); // base survives
  CHECK(m.at("batch") == "16");

  // defaults <- file <- flags chains associatively.
  auto flags = cfg::parse_string("steps=7\n");
  auto all = cfg::merged(m, flags);
  CHECK(all.at("steps") == "7");
  CHECK(all.at("lr") == "0.5");
}

TEST_CASE("serialize is canonical and hash64 tracks content") {
  auto a = cfg::parse_string("b=2\na=1\n");
  auto b = cfg::parse_string("a=1\nb=2\n");
  CHECK(cfg::serialize(a) == "a=1\nb=2\n");
  CHECK(cfg::serialize(a) == cfg::serialize(b));
  CHECK(cfg::hash64(a) == cfg::hash64(b));
  auto c = cfg::parse_string("a=1\nb=3\n");
  CHECK(cfg::hash64(a) != cfg::hash64(c));
}

TEST_CASE("require_known_keys flags unknown keys") {
  auto kv = cfg::parse_string("lr=0.1\nmystery=1\n");
  CHECK_THROWS_AS(cfg::require_known_keys(kv, {"lr"}), UsageError);
  CHECK_NOTHROW(cfg::require_known_keys(kv, {"lr", "mystery"}));
}

TEST_CASE("typed getters parse and fall back") {
  auto kv = cfg::parse_string("n=12\nlr=0.25\nflag=true\noff=0\n");
  CHECK(cfg::get_int(kv, "n", 0) == 12);
  CHECK(cfg::get_int(kv, "absent", 7) == 7);
  CHECK(cfg::get_double(kv, "lr", 0) == doctest::Approx(0.25));
  CHECK(cfg::get_bool(kv, "flag", false));
  CHECK_FALSE(cfg::get_bool(kv, "off", true));
  CHECK(cfg::get_str(kv, "absent", "dflt") == "dflt");
  CHECK_THROWS_AS(cfg::get_int(kv, "lr", 0), UsageError);
  CHECK_THROWS_AS(cfg::get_bool(kv, "n", false), UsageError);
}

TEST_CASE("parse_file round trips through serialize") {
  const auto path = fs::temp_directory_path() / "nc_test_kv.cfg";
  {
    std::ofstream f(path);
    f << "# header\nalpha=1\nbeta=two\n";
  }
  auto kv = cfg::parse_file(path.string());
  CHECK(kv == cfg::parse_string(cfg::serialize(kv)));
  CHECK(kv.at("beta") == "two");
  fs::remove(path);
  CHECK_THROWS_AS(cfg::parse_file(path.string()), IoError);
}
