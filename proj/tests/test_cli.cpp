#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qpkam/run.hpp"

using namespace qpkam;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qpkam_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

int schema_exit(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    return e.kind() == ErrorKind::Schema ? 2 : 1;
  }
  return 0;
}

}  // namespace

TEST_CASE("config schema") {
  CHECK(schema_exit({{"command", "ids"}}) == 0);
  CHECK(schema_exit({{"command", "nope"}}) == 2);
  CHECK(schema_exit(json::object()) == 2);
  CHECK(schema_exit({{"command", "ids"}, {"extra", 1}}) == 2);
  CHECK(schema_exit({{"command", "ids"}, {"eps", "small"}}) == 2);
  CHECK(schema_exit({{"command", "ids"}, {"frequency", "bronze"}}) == 2);
  CHECK(schema_exit({{"command", "ids"}, {"schedule", {{"mode", "fast"}}}}) == 2);
  CHECK(schema_exit({{"command", "ids"}, {"potential", {1.0, 0.0}}}) == 2);
  const auto c = parse_config({{"command", "lyapunov"}, {"frequency", "cubic"}, {"potential", "cos"}});
  CHECK(c.alpha.size() == 2);
  CHECK(c.W.d() == 2);
}

TEST_CASE("rational frequency exits with 2") {
  auto c = parse_config({{"command", "ids"}, {"frequency", {0.25}}});
  c.out = scratch("rational").string();
  const auto r = run(c);
  CHECK(r.exit_code == 2);
  const auto man = json::parse(slurp(std::filesystem::path(c.out) / "manifest.json"));
  CHECK(man["schema_version"] == kSchemaVersion);
  CHECK(man["error"]["kind"] == "diophantine");
}

TEST_CASE("thouless at zero coupling writes a residual curve") {
  auto c = parse_config({{"command", "thouless"},
                         {"eps", 0.0},
                         {"grid", {{"min", -3.0}, {"max", 3.0}, {"points", 13}}},
                         {"truncation", {{"n", 1000}}}});
  c.out = scratch("thouless").string();
  const auto r = run(c);
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists(std::filesystem::path(c.out) / "thouless.csv"));
}

TEST_CASE("failed assertion exits 1 with a witness") {
  auto c = parse_config({{"command", "lyapunov"}, {"grid", {{"points", 3}}}, {"lyapunov", {{"pairing_tol", -1.0}}}});
  c.out = scratch("witness").string();
  const auto r = run(c);
  CHECK(r.exit_code == 1);
  CHECK(std::filesystem::exists(std::filesystem::path(c.out) / "witness.json"));
}

TEST_CASE("reruns are byte identical") {
  json j = {{"command", "lyapunov"}, {"grid", {{"points", 4}}}, {"lyapunov", {{"n", 500}}}, {"out", "same"}};
  auto a = parse_config(j), b = parse_config(j);
  a.out = scratch("rerun_a").string();
  b.out = scratch("rerun_b").string();
  run(a);
  run(b);
  CHECK(slurp(std::filesystem::path(a.out) / "lyapunov.csv") == slurp(std::filesystem::path(b.out) / "lyapunov.csv"));
  auto ma = json::parse(slurp(std::filesystem::path(a.out) / "manifest.json"));
  auto mb = json::parse(slurp(std::filesystem::path(b.out) / "manifest.json"));
  ma["config"].erase("out");
  mb["config"].erase("out");
  CHECK(ma == mb);
}
