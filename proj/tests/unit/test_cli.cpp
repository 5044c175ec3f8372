#include <doctest.h>

#include <iostream>
#include <sstream>

#include "chartloom/cli/app.hpp"
#include "chartloom/cli/config.hpp"
#include "chartloom/util/strings.hpp"
#include "chartloom/viz/png.hpp"
#include "support.hpp"

using namespace chartloom;
using namespace chartloom::cli;
using testsupport::fixture;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

struct Captured {
  int code;
  std::string out;
};

Captured run(std::vector<std::string> args) {
  args.insert(args.begin(), "chartloom");
  args.insert(args.begin() + 1, {"--log-level", "off"});
  std::ostringstream buf;
  auto* old = std::cout.rdbuf(buf.rdbuf());
  int code;
  try {
    code = run_cli(args);
  } catch (...) {
    std::cout.rdbuf(old);
    throw;
  }
  std::cout.rdbuf(old);
  return {code, buf.str()};
}

std::string write_config(const TempDir& tmp, const std::string& name, const nlohmann::json& j) {
  util::write_file(tmp / name, j.dump(2));
  return (tmp / name).string();
}

std::string e2e_config() { return fixture("config_e2e.json").string(); }
std::string dataset() { return fixture("dataset_two_tables").string(); }

void write_report(const fs::path& dir, std::size_t figures, const std::string& prose) {
  fs::create_directories(dir / "figures");
  std::string md = prose + "\n\n";
  for (std::size_t i = 1; i <= figures; ++i) {
    auto png = viz::placeholder_png({static_cast<std::uint8_t>(i), 0, 0}, "f");
    util::write_file(dir / "figures" / ("f" + std::to_string(i) + ".png"), std::string(png.begin(), png.end()));
    md += "![Figure " + std::to_string(i) + "](figures/f" + std::to_string(i) + ".png)\n\n";
  }
  util::write_file(dir / "report.md", md);
}

std::string hundred_words() {
  std::string s;
  for (int i = 0; i < 100; ++i) s += (i ? " " : "") + std::string("word") + std::to_string(i);
  return s;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("overview writes overview.json") {
    TempDir tmp;
    auto r = run({"overview", "--data", dataset(), "--config", e2e_config(), "--out", (tmp / "ov" / "overview.json").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("probe findings: 6") != std::string::npos);
    auto j = nlohmann::json::parse(util::read_file(tmp / "ov" / "overview.json"));
    CHECK(j.at("probe_findings").size() == 6);
  }

  TEST_CASE("overview of a missing dataset is a usage error") {
    TempDir tmp;
    CHECK(run({"overview", "--data", (tmp / "nope").string(), "--config", e2e_config()}).code == kExitUsage);
    fs::create_directories(tmp / "notables");
    util::write_file(tmp / "notables" / "request.txt", "x");
    CHECK(run({"overview", "--data", (tmp / "notables").string(), "--config", e2e_config(), "--out",
               (tmp / "o.json").string()})
              .code == kExitUsage);
  }

  TEST_CASE("bad arguments are usage errors") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"generate", "--data", dataset()}).code == kExitUsage);
  }

  TEST_CASE("end-to-end generate is deterministic") {
    TempDir tmp;
    auto a = run({"generate", "--data", dataset(), "--out", (tmp / "a").string(), "--config", e2e_config()});
    auto b = run({"generate", "--data", dataset(), "--out", (tmp / "b").string(), "--config", e2e_config()});
    REQUIRE(a.code == kExitOk);
    REQUIRE(b.code == kExitOk);
    CHECK(a.out.find("figures=3 steps=4 termination=eos api_calls=30") != std::string::npos);
    CHECK(util::read_file(tmp / "a" / "report.md") == util::read_file(tmp / "b" / "report.md"));
    CHECK(util::read_file(tmp / "a" / "evidence.json") == util::read_file(tmp / "b" / "evidence.json"));
    for (const auto& entry : fs::directory_iterator(tmp / "a" / "figures")) {
      CHECK(util::read_file(entry.path()) == util::read_file(tmp / "b" / "figures" / entry.path().filename()));
    }
    auto meta = nlohmann::json::parse(util::read_file(tmp / "a" / "run_meta.json"));
    CHECK(meta.at("api_calls") == 30);
    CHECK(meta.at("figures") == 3);
    CHECK(meta.at("config").at("seed") == 7);

    auto stats = run({"stats", "--report", (tmp / "a").string()});
    CHECK(stats.code == kExitOk);
    CHECK(stats.out.rfind("3,", 0) == 0);

    auto cost = run({"cost", "--runs", (tmp / "a").string(), "--runs", (tmp / "b" / "run_meta.json").string()});
    CHECK(cost.code == kExitOk);
    CHECK(cost.out.find("runs=2 mean_api_calls=30.00") != std::string::npos);
  }

  TEST_CASE("several datasets run in parallel into named subdirectories") {
    TempDir tmp;
    fs::copy(dataset(), tmp / "d1", fs::copy_options::recursive);
    fs::copy(dataset(), tmp / "d2", fs::copy_options::recursive);
    auto r = run({"generate", "--data", (tmp / "d1").string(), "--data", (tmp / "d2").string(), "--out",
                  (tmp / "out").string(), "--config", e2e_config(), "--parallel", "2"});
    CHECK(r.code == kExitOk);
    CHECK(util::read_file(tmp / "out" / "d1" / "report.md") == util::read_file(tmp / "out" / "d2" / "report.md"));
  }

  TEST_CASE("sandbox renderer without a command is a usage error") {
    TempDir tmp;
    auto j = nlohmann::json::parse(util::read_file(e2e_config()));
    j["mock_script"] = fixture("mock_e2e.json").string();
    j["renderer"] = "sandbox";
    auto cfg = write_config(tmp, "c.json", j);
    CHECK(run({"generate", "--data", dataset(), "--out", (tmp / "o").string(), "--config", cfg}).code == kExitUsage);
  }

  TEST_CASE("exhausted mock script maps to the gateway exit code") {
    TempDir tmp;
    auto cfg = write_config(tmp, "c.json", {{"backend", "mock"}, {"mock_script", {{"replies", nlohmann::json::object()}}}});
    CHECK(run({"generate", "--data", dataset(), "--out", (tmp / "o").string(), "--config", cfg}).code == kExitGateway);
  }

  TEST_CASE("stats of a single report") {
    TempDir tmp;
    write_report(tmp / "r", 3, hundred_words());
    auto r = run({"stats", "--report", (tmp / "r").string(), "--out", (tmp / "stats.csv").string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "3,100\n");
    CHECK(util::read_file(tmp / "stats.csv").find(",3,100,") != std::string::npos);
    CHECK(run({"stats", "--report", (tmp / "missing").string()}).code == kExitUsage);
    CHECK(run({"stats", "--report", (tmp / "r").string(), "--richness"}).code == kExitUsage);
  }

  TEST_CASE("stats with richness") {
    TempDir tmp;
    write_report(tmp / "r", 1, hundred_words());
    auto cfg = write_config(tmp, "c.json",
                            {{"backend", "mock"},
                             {"mock_script",
                              {{"replies",
                                {{"richness.extract", {"- a\n- b\n- c"}},
                                 {"richness.classify", {"1: simplified\n2: duplicate\n3: simplified"}}}}}}});
    auto r = run({"stats", "--report", (tmp / "r").string(), "--richness", "--config", cfg});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "1,100,2\n");
  }

  TEST_CASE("judge four reports") {
    TempDir tmp;
    const std::vector<std::string> methods = {"alpha", "beta", "gamma", "delta"};
    std::string spec;
    for (std::size_t i = 0; i < methods.size(); ++i) {
      write_report(tmp / methods[i], i, "Report text " + std::to_string(i));
      spec += (i ? "," : "") + methods[i] + "=" + (tmp / methods[i]).string();
    }
    auto cfg = write_config(tmp, "c.json",
                            {{"backend", "mock"}, {"seed", 3}, {"mock_script", {{"replies", {{"judge", {"RANKING: B > A > D > C"}}}}}}});
    auto r = run({"judge", "--reports", spec, "--metric", "info", "--config", cfg, "--out", (tmp / "out" / "ranks.json").string()});
    REQUIRE(r.code == kExitOk);
    auto j = nlohmann::json::parse(util::read_file(tmp / "out" / "ranks.json"));
    REQUIRE(j.size() == 1);
    std::vector<int> ranks;
    for (const auto& m : methods) ranks.push_back(j[0].at("ranks").at(m).get<int>());
    std::sort(ranks.begin(), ranks.end());
    CHECK(ranks == std::vector<int>{1, 2, 3, 4});
    CHECK(fs::exists(tmp / "out" / "rank_summary.csv"));

    CHECK(run({"judge", "--reports", spec, "--metric", "beauty", "--config", cfg}).code == kExitUsage);
    CHECK(run({"judge", "--reports", "alpha", "--metric", "info", "--config", cfg}).code == kExitUsage);
    auto bad = write_config(tmp, "bad.json", {{"backend", "mock"}, {"mock_script", {{"replies", {{"judge", {"no", "no"}}}}}}});
    CHECK(run({"judge", "--reports", spec, "--metric", "info", "--config", bad, "--out", (tmp / "x.json").string()}).code ==
          kExitEvaluation);
  }

  TEST_CASE("cost errors") {
    TempDir tmp;
    CHECK(run({"cost", "--runs", (tmp / "none").string()}).code == kExitUsage);
    util::write_file(tmp / "m.json", R"({"api_calls": 40, "wall_clock_s": 1})");
    util::write_file(tmp / "n.json", R"({"api_calls": 44, "wall_clock_s": 3})");
    auto r = run({"cost", "--runs", (tmp / "m.json").string(), "--runs", (tmp / "n.json").string()});
    CHECK(r.out == "runs=2 mean_api_calls=42.00 mean_latency_s=2.00\n");
  }

  TEST_CASE("config parsing") {
    auto ok = parse_run_config({{"backend", "mock"}, {"mock_script", {{"replies", nlohmann::json::object()}}}});
    CHECK(ok.temperature == 0.0);
    CHECK(ok.n_retry == 3);
    CHECK(ok.n_refine == 2);
    CHECK(ok.renderer == "mock");
    CHECK_THROWS_AS(parse_run_config({{"backend", "mock"}, {"mock_script", nlohmann::json::object()}, {"colour", 1}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"backend", "mock"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"backend", "carrier-pigeon"}}), ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"backend", "mock"}, {"mock_script", nlohmann::json::object()}, {"max_steps", "many"}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"backend", "http"}, {"models", {{"writer_text", {{"model_name", "m"}}}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_run_config({{"backend", "mock"}, {"mock_script", nlohmann::json::object()}, {"renderer", "sandbox"}}),
                    ConfigError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
  }
}
