#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "resgame/io.hpp"

namespace fs = std::filesystem;
using resgame::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "resgame");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "resgame_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

const char* const kBaseN2 =
    R"({"model":{"kind":"constant","mu":4,"sigma2":2},"game":{"n":2,"r":0.05,"K":0.1}})";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate reports and exits by outcome") {
  const Result ok = invoke({"validate", "--config", write_config("ok.json", kBaseN2)});
  CHECK(ok.code == 0);
  CHECK(ok.out.find("\"passed\": true") != std::string::npos);
  const Result bad = invoke(
      {"validate", "--config",
       write_config("bad.json", R"({"model":{"kind":"constant","mu":-1,"sigma2":2},)"
                                R"("game":{"n":1,"r":0.05,"K":0.1}})")});
  CHECK(bad.code == 1);
  CHECK(bad.out.find("A.4") != std::string::npos);
}

TEST_CASE("solve-sym emits sorted JSON and a value CSV") {
  const fs::path csv = scratch() / "value.csv";
  const Result r = invoke({"solve-sym", "--config", write_config("n2.json", kBaseN2),
                           "--value-csv", csv.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("b_hat").get<double>() == doctest::Approx(0.521229503726216).epsilon(1e-9));
  for (const char* key : {"D1", "D4", "b_star", "C_star"}) CHECK(j.contains(key));
  CHECK(r.out.find("\"C_star\"") < r.out.find("\"D1\""));
  const resgame::CsvTable t = resgame::parse_csv(slurp(csv));
  CHECK(t.header == std::vector<std::string>{"x", "V", "V_prime"});
  CHECK(t.rows.size() == 201);
  CHECK(t.rows.front()[1] == 0.0);
}

TEST_CASE("solve-asym on the preset") {
  const Result r = invoke({"solve-asym", "--preset", "asym-0.1-0.2"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("thresholds")[0].get<double>() == doctest::Approx(0.521229).epsilon(1e-5));
  CHECK(j.at("thresholds")[1].get<double>() == doctest::Approx(0.704502).epsilon(1e-5));
  CHECK(j.at("residual").get<double>() <= 1e-8);
}

TEST_CASE("configuration errors exit 1") {
  CHECK(invoke({"solve-sym", "--config", write_config("k.json", R"({"model":{"kind":"constant",)"
                                                                  R"("mu":4,"sigma2":2,"x":1},)"
                                                                  R"("game":{"n":2,"r":0.05,"K":0.1}})")})
            .code == 1);
  CHECK(invoke({"solve-sym", "--config", write_config("t.json", R"({"gam":{}})")}).code == 1);
  CHECK(invoke({"solve-sym", "--config", write_config("j.json", "{not json")}).code == 1);
  CHECK(invoke({"solve-sym", "--config", "/nonexistent/config.json"}).code == 1);
  CHECK(invoke({"solve-sym", "--preset", "no-such-preset"}).code == 1);
  CHECK(invoke({"bogus-command"}).code == 1);
  CHECK(invoke({"reproduce", "--figure", "fig9"}).code == 1);
}

TEST_CASE("solver failures exit 2") {
  const Result r = invoke(
      {"solve-asym", "--config",
       write_config("starve.json", R"({"model":{"kind":"constant","mu":4,"sigma2":2},)"
                                   R"("game":{"r":0.05,"rates":[0.1,0.2]},)"
                                   R"("asym":{"max_iter":2,"restarts":1}})")});
  CHECK(r.code == 2);
  CHECK(r.err.find("NoConvergence") != std::string::npos);
}

TEST_CASE("reproduce matches the embedded tables") {
  for (const char* fig : {"fig2-left", "fig2-right", "fig3", "asym-thresholds", "asym-right"}) {
    CAPTURE(fig);
    const Result r = invoke({"reproduce", "--figure", fig});
    CHECK(r.code == 0);
    CHECK(r.err.find("PASS") != std::string::npos);
  }
  const Result left = invoke({"reproduce", "--figure", "fig2-left"});
  const resgame::CsvTable t = resgame::parse_csv(left.out);
  CHECK(t.rows.size() == 50);
  CHECK(t.header == std::vector<std::string>{"n", "b_hat"});
  const Result fig3 = invoke({"reproduce", "--figure", "fig3"});
  CHECK(resgame::parse_csv(fig3.out).rows.size() == 301);
  // An impossible tolerance is a verification failure.
  CHECK(invoke({"reproduce", "--figure", "asym-thresholds", "--tol", "1e-12"}).code == 3);
}

TEST_CASE("sweep kinds") {
  const std::string cfg = write_config(
      "sweep.json", R"({"model":{"kind":"constant","mu":4,"sigma2":2},)"
                    R"("game":{"n":30,"r":0.05,"K":0.1},)"
                    R"("sweep":{"range":{"from":1,"to":5,"step":1},"sample_x":[1,2]}})");
  const Result n = invoke({"sweep", "n", "--config", cfg});
  REQUIRE(n.code == 0);
  const resgame::CsvTable t = resgame::parse_csv(n.out);
  CHECK(t.header == std::vector<std::string>{"n", "b_hat", "V@1", "V@2"});
  CHECK(t.rows.size() == 5);
  const Result k = invoke({"sweep", "K", "--config", cfg});
  CHECK(k.code == 0);
  CHECK(k.out.rfind("K,b_hat,b_hat_single\n", 0) == 0);
  CHECK(invoke({"sweep", "n-fixed-total", "--config", cfg}).code == 1);
}

TEST_CASE("outputs are byte-identical across runs") {
  const std::string cfg = write_config(
      "sim.json", R"({"model":{"kind":"constant","mu":4,"sigma2":2},)"
                  R"("game":{"n":2,"r":0.05,"K":0.1},)"
                  R"("sim":{"paths":4000,"seed":5,"thresholds":[0.52,0.52]}})");
  const fs::path a = scratch() / "a.json", b = scratch() / "b.json";
  CHECK(invoke({"simulate", "--config", cfg, "--out", a.string(), "--threads", "1"}).code == 0);
  CHECK(invoke({"simulate", "--config", cfg, "--out", b.string(), "--threads", "2"}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
  const Result seeded = invoke({"simulate", "--config", cfg, "--seed", "6"});
  CHECK(seeded.out != slurp(a));
  CHECK(invoke({"reproduce", "--figure", "fig3"}).out ==
        invoke({"reproduce", "--figure", "fig3"}).out);
}

}  // TEST_SUITE
