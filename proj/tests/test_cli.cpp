#include <doctest.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hsgn/cache.hpp"
#include "hsgn/cli.hpp"
#include "hsgn/error.hpp"

using namespace hsgn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hsgn_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("csv quoting") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  ExperimentReport r;
  r.experiment = "x";
  r.results = {{"counts", {1, 2}}, {"nested", {{"k", "v,w"}}}};
  const auto csv = render_csv(r);
  CHECK(csv.rfind("experiment,measurement,value\r\n", 0) == 0);
  CHECK(csv.find("x,results.counts[1],2\r\n") != std::string::npos);
  CHECK(csv.find("\"v,w\"") != std::string::npos);
}

TEST_CASE("report json validation") {
  ExperimentReport r;
  r.experiment = "sign-stats";
  r.results["ratio"] = 1.0;
  const auto doc = nlohmann::json::parse(render_json(r));
  CHECK_NOTHROW(validate_report_json(doc));
  auto bad = doc;
  bad.erase("results");
  CHECK_THROWS_AS(validate_report_json(bad), FormatError);
  bad = doc;
  bad["schema_version"] = 99;
  CHECK_THROWS_AS(validate_report_json(bad), FormatError);
  CHECK_THROWS_AS(validate_report_json(nlohmann::json::array()), FormatError);
}

TEST_CASE("config and calibration round trips") {
  ExperimentConfig cfg;
  set_form(cfg, "vanishing");
  cfg.X = 12345;
  cfg.gamma = "0.5";
  cfg.schedule = "3mod4";
  const auto back = config_from_json(to_json(cfg));
  CHECK(back.form_name() == "vanishing");
  CHECK(back.X == 12345);
  CHECK(back.gamma == "0.5");
  CHECK(back.schedule == "3mod4");
  auto j = to_json(cfg);
  j["X"] = "lots";
  CHECK_THROWS_AS(config_from_json(j), FormatError);
  j = to_json(cfg);
  j["delta"] = 0.9;
  CHECK_THROWS_AS(config_from_json(j), DomainError);
  CHECK_THROWS_AS(set_form(cfg, "maass"), DomainError);

  TempDir tmp;
  Calibration c;
  c.C = 0.3;
  c.c = 0.2;
  c.c1 = 0.1;
  c.pilot_X = {10, 100};
  c.gamma = "0.5";
  save_calibration(tmp.path / "cal.json", c);
  const auto d = load_calibration(tmp.path / "cal.json");
  CHECK(d.C == 0.3);
  CHECK(d.c == 0.2);
  CHECK(d.c1 == 0.1);
  CHECK(d.gamma == "0.5");
  CHECK(d.pilot_X == c.pilot_X);
  std::ofstream(tmp.path / "broken.json") << "{\"schema_version\": 1,";
  CHECK_THROWS_AS(load_calibration(tmp.path / "broken.json"), FormatError);
}

TEST_CASE("table limits per experiment") {
  ExperimentConfig cfg;
  cfg.X = 100'000;
  CHECK(required_table_limit("sign-stats", cfg) == 100'000);
  CHECK(required_table_limit("moments", cfg) == 200'000);
  CHECK(required_table_limit("cor-check", cfg) == 200'002);
  CHECK(required_table_limit("scan", cfg) >= 200'000 + 50 * 2);
}

TEST_CASE("command line: usage errors") {
  CHECK(cli({"run", "nonsense"}).code == kExitUsage);
  CHECK(cli({"run"}).code == kExitUsage);
  CHECK(cli({"run", "sign-stats", "--X", "-5"}).code == kExitUsage);
  CHECK(cli({"run", "sign-stats", "--form", "maass"}).code == kExitUsage);
  CHECK(cli({"run", "sign-stats", "--delta", "0.7"}).code == kExitUsage);
  CHECK(cli({"run", "sign-stats", "--bogus"}).code == kExitUsage);
  CHECK(cli({"gen-coeffs", "--X", "1000"}).code == kExitUsage);  // no cache dir
  const auto help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("gen-coeffs") != std::string::npos);
}

TEST_CASE("command line: experiments and output routing") {
  auto r = cli({"run", "chowla", "--form", "unit", "--X", "1000"});
  CHECK(r.code == kExitOk);
  CHECK(r.err.find("sum=999") != std::string::npos);
  const auto doc = nlohmann::json::parse(r.out);
  CHECK_NOTHROW(validate_report_json(doc));
  CHECK(doc["results"]["chowla_sum"] == 999);

  TempDir tmp;
  const auto out = (tmp.path / "r.csv").string();
  r = cli({"run", "sign-stats", "--X", "2e4", "--format", "csv", "--out", out});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("sign-stats form=delta X=20000") != std::string::npos);
  CHECK(slurp(out).rfind("experiment,measurement,value\r\n", 0) == 0);

  // identical inputs give byte-identical reports
  const auto a = cli({"run", "scan", "--X", "2e4", "--samples", "300", "--seed", "5"});
  const auto b = cli({"run", "scan", "--X", "2e4", "--samples", "300", "--seed", "5"});
  CHECK(a.code == kExitOk);
  CHECK(a.out == b.out);
  const auto s1 = cli({"run", "sign-changes", "--form", "satotate", "--X", "3e4", "--seed", "9"});
  const auto s2 = cli({"run", "sign-changes", "--form", "satotate", "--X", "3e4", "--seed", "9"});
  CHECK(s1.out == s2.out);

  CHECK(cli({"run", "scan", "--X", "2e4", "--calibration", (tmp.path / "none.json").string()}).code == kExitData);
  CHECK(cli({"run", "variance", "--X", "1e4", "--h", "100"}).code == kExitUsage);
  CHECK(cli({"run", "sign-stats", "--X", "1e4", "--P", "100"}).code == kExitData);
}

TEST_CASE("command line: coefficient cache") {
  TempDir tmp;
  const auto dir = tmp.path.string();
  auto r = cli({"gen-coeffs", "--X", "1e5", "--cache-dir", dir});
  CHECK(r.code == kExitOk);
  const auto file = tmp.path / cache_file_name(FormSpec::delta(), 100'000);
  REQUIRE(fs::exists(file));
  r = cli({"gen-coeffs", "--X", "1e5", "--cache-dir", dir});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("up to date") != std::string::npos);

  const auto t = read_table(file);
  const double expect = -24 / std::pow(2.0, 5.5);
  CHECK(t.lambda_at(2) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(t.lambda_at(99'991) == doctest::Approx(delta_prime_table(100'000).lambda_at(99'991)).epsilon(1e-15));

  const auto before = cli({"run", "sign-stats", "--X", "1e5", "--cache-dir", dir});
  CHECK(before.code == kExitOk);

  // flip one payload byte
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(fs::file_size(file) / 2));
    char c = 0;
    f.read(&c, 1);
    f.seekp(static_cast<std::streamoff>(fs::file_size(file) / 2));
    c ^= 0x10;
    f.write(&c, 1);
  }
  CHECK(cli({"run", "sign-stats", "--X", "1e5", "--cache-dir", dir}).code == kExitData);
  r = cli({"run", "sign-stats", "--X", "1e5", "--cache-dir", dir, "--force"});
  CHECK(r.code == kExitOk);
  CHECK(r.out == before.out);
  CHECK(cache_valid(file));

  fs::resize_file(file, fs::file_size(file) - 9);
  CHECK(cli({"run", "sign-stats", "--X", "1e5", "--cache-dir", dir}).code == kExitData);
  CHECK(cli({"gen-coeffs", "--X", "1e5", "--cache-dir", dir}).code == kExitData);
  CHECK(cli({"gen-coeffs", "--X", "1e5", "--cache-dir", dir, "--force"}).code == kExitOk);
  CHECK(cache_valid(file));
}

TEST_CASE("assert mode") {
  auto r = cli({"run", "sign-changes", "--X", "1e5", "--assert"});
  CHECK(r.code == kExitOk);
  r = cli({"run", "cor-check", "--X", "1e5", "--assert"});
  CHECK(r.code == kExitOk);
  CHECK(r.err.find("b=4") != std::string::npos);
}
