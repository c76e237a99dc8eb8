#include <doctest.h>

#include <filesystem>
#include <random>

#include "thermoflow/io.hpp"

using namespace thermoflow;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("thermoflow_io_" + name);
  fs::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST_CASE("FNV-1a reference vectors") {
  CHECK(io::hex64(io::fnv1a("")) == "cbf29ce484222325");
  CHECK(io::hex64(io::fnv1a("a")) == "af63dc4c8601ec8c");
  CHECK(io::hex64(io::fnv1a("foobar")) == "85944171f73967e8");
  CHECK(io::config_hash(io::json{{"a", 1}}) == io::config_hash(io::json::parse(R"({"a":1})")));
}

TEST_CASE("shortest decimal formatting round trips") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    double x = u(rng) * std::pow(10.0, i % 13 - 6);
    CHECK(std::stod(io::fmt(x)) == x);
  }
  CHECK(io::fmt(0.5) == "0.5");
}

TEST_CASE("system specification JSON") {
  SUBCASE("presets") {
    auto d = io::system_from_json(io::json{{"preset", "default"}});
    CHECK(d.f.has_value());
    auto l = io::system_from_json(io::json{{"preset", "linear"}});
    CHECK_FALSE(l.f.has_value());
    CHECK(l.profile == coding::Profile::flat);
  }
  SUBCASE("round trip") {
    auto s = io::default_system();
    auto j = io::to_json(s);
    auto t = io::system_from_json(j);
    CHECK(io::to_json(t) == j);
    auto sys = t.system();
    coding::Vec2 x{0.3, 0.6};
    CHECK(sys.r(x) == s.system().r(x));
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(io::system_from_json(io::json{{"preset", "nope"}}), io::Error);
    CHECK_THROWS_AS(io::system_from_json(io::json{{"partition_level", 9}}), io::Error);
    // roof not bounded away from zero
    CHECK_THROWS(io::system_from_json(io::json::parse(R"({"roof": {"c": 0.1, "terms": [[1, 0, 0.2, 0]]}})")));
  }
}

TEST_CASE("matrix and potential JSON") {
  CHECK(io::matrix_from_json("golden-mean").size() == 2);
  CHECK(io::matrix_from_json("full:4").size() == 4);
  auto a = io::matrix_from_json(io::json::parse("[[1,1],[1,0]]"));
  CHECK(a.size() == 2);
  CHECK_THROWS(io::matrix_from_json("full:x"));
  auto g = io::potential_from_json(a, io::json{{"depth", 2}, {"constant", 0.5}});
  CHECK(g.depth() == 2);
  CHECK(g.values.front() == 0.5);
}

TEST_CASE("field files round trip") {
  auto dir = scratch("field");
  auto x = volume::VectorField::zeros(3, 6);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < x.c[c].size(); ++i) x.c[c][i] = c * 1000.0 + i * 0.125 - 7.0 / 3.0;
  std::vector<std::string> written;
  io::write_field(dir + "/x", x, &written);
  CHECK(written.size() == 2);
  auto y = io::read_field(dir + "/x");
  REQUIRE(y.dim() == 3);
  for (int c = 0; c < 3; ++c) CHECK(y.c[c].v == x.c[c].v);
  auto side = io::read_json(dir + "/x.json");
  CHECK(side["components"] == 3);
  CHECK(fs::file_size(dir + "/x.bin") == 3 * 216 * sizeof(double));
  fs::remove_all(dir);
}

TEST_CASE("verification CSV") {
  io::VerificationRow r;
  r.p = {{0.25, 0.5}, 0.125};
  r.t = 1.5;
  r.lhs = 2.0;
  r.rhs = 2.0;
  auto csv = io::verification_csv({r});
  CHECK(csv.rfind("p_x,p_y,p_s,t,lhs,rhs,rel_err\n", 0) == 0);
  CHECK(csv.find("0.25,0.5,0.125,1.5,2,2,0") != std::string::npos);
}

TEST_CASE("manifest carries the config hash and outputs") {
  io::Manifest m;
  m.command = "sft";
  m.config = io::json{{"length", 3}};
  m.outputs = {"words.csv"};
  auto j = io::to_json(m);
  CHECK(j["config_hash"] == io::config_hash(m.config));
  CHECK(j["version"] == io::kVersion);
  CHECK(j["outputs"].size() == 1);
}
