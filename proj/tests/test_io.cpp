#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "loopforge/io.hpp"

using namespace loopforge;

TEST_SUITE("io") {
  TEST_CASE("doubles round-trip through their shortest text") {
    for (double x : {0.1, 1.0 / 3, 2.5e-300, -7.0, 123456789.125}) {
      const auto s = format_double(x);
      CHECK(std::stod(s) == x);
    }
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(3.0) == "3");
  }

  TEST_CASE("path records round-trip") {
    const LatticePath p({Site{0, 0, 0}, Site{1, 0, 0}, Site{1, -1, 0}});
    const auto line = path_record(p);
    CHECK(line == R"({"d":3,"sites":[[0,0,0],[1,0,0],[1,-1,0]]})");
    CHECK(parse_path_record(line) == p);
    std::istringstream in(line + "\n\n" + path_record(LatticePath({Site{4}})) + "\n");
    const auto all = read_path_jsonl(in);
    REQUIRE(all.size() == 2);
    CHECK(all[1].dim() == 1);
    CHECK_THROWS_AS(parse_path_record(R"({"d":2,"sites":[[0,0,0]]})"), std::domain_error);
    CHECK_THROWS_AS(parse_path_record(R"({"d":2,"sites":[[0,0],[3,0]]})"), std::domain_error);
  }

  TEST_CASE("loop records") {
    const DiscreteLoop l(LatticePath({Site{1, 1}, Site{2, 1}, Site{1, 1}}), 0.25);
    const auto j = nlohmann::json::parse(discrete_loop_record(l));
    CHECK(j.at("label").get<double>() == 0.25);
    CHECK(j.at("root") == nlohmann::json::array({1, 1}));
    CHECK(j.at("sites").size() == 3);
    ContinuousLoop c;
    c.root = {0.5, -0.25};
    c.duration = 1.5;
    c.displacements = PathGrid(2, 3);
    c.displacements.at(1, 0) = 0.75;
    const auto k = nlohmann::json::parse(continuous_loop_record(c));
    CHECK(k.at("duration").get<double>() == 1.5);
    CHECK(k.at("grid").size() == 3);
    CHECK(k.at("grid")[1][0].get<double>() == 0.75);
  }

  TEST_CASE("csv rows") {
    std::ostringstream out;
    CsvWriter csv(out, {"a", "b"});
    csv.row({"1", format_double(0.5)});
    CHECK(out.str() == "a,b\n1,0.5\n");
    CHECK_THROWS_AS(csv.row({"1"}), std::logic_error);
  }

  TEST_CASE("manifest") {
    ExperimentManifest m;
    m.command = "sample-lerw";
    m.flags = {{"dim", "3"}, {"seed", "1"}};
    m.seed = 1;
    m.threads = 2;
    m.build_id = build_id();
    m.started = utc_timestamp();
    m.finished = m.started;
    const auto j = nlohmann::json::parse(m.to_json());
    CHECK(j.at("command") == "sample-lerw");
    CHECK(j.at("flags").at("dim") == "3");
    CHECK(j.at("threads") == 2);
    CHECK(j.at("started").get<std::string>().size() == 20);
    CHECK(manifest_path("x.csv") == "x.csv.manifest.json");
  }
}
