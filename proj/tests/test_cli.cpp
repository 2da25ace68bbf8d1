#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cfn/cli.hpp"
#include "cfn/error.hpp"
#include "doctest.h"

using namespace cfn;
namespace fs = std::filesystem;

namespace {

// Runs the CLI with stdout and stderr swallowed.
int quiet_run(std::vector<std::string> args) {
  args.insert(args.begin(), "cfn");
  std::ostringstream sink;
  auto* out = std::cout.rdbuf(sink.rdbuf());
  auto* err = std::cerr.rdbuf(sink.rdbuf());
  int code = 0;
  try {
    code = run(args);
  } catch (...) {
    std::cout.rdbuf(out);
    std::cerr.rdbuf(err);
    throw;
  }
  std::cout.rdbuf(out);
  std::cerr.rdbuf(err);
  return code;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / "cfn-unit" / name;
  fs::remove_all(p);
  return p;
}

Json read_json(const fs::path& p) {
  std::ifstream f(p);
  return Json::parse(f);
}

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(quiet_run({"--help"}) == kExitOk);
  CHECK(quiet_run({"steel", "--no-such-flag"}) == kExitConfig);
  CHECK(quiet_run({}) == kExitConfig);
  CHECK(quiet_run({"hessian", "--tree", "caterpillar:1", "--out", scratch("bad").string()}) == kExitConfig);
  CHECK(quiet_run({"hessian", "--tree", "quartet", "--delta", "0.3", "--out", scratch("bad").string()}) ==
        kExitConfig);
  CHECK(quiet_run({"hessian", "--tree", "caterpillar:20", "--mode", "exact", "--out",
                   scratch("cap").string()}) == kExitConfig);
}

TEST_CASE("steel --check passes") {
  const auto dir = scratch("steel");
  CHECK(quiet_run({"steel", "--check", "--out", dir.string()}) == kExitOk);
}

TEST_CASE("hessian --check-fd passes and the report echoes its config") {
  const auto dir = scratch("hessian");
  REQUIRE(quiet_run({"hessian", "--tree", "quartet", "--delta", "0.01", "--mode", "exact", "--check-fd",
                     "--seed", "42", "--out", dir.string()}) == kExitOk);
  fs::path json;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") json = entry.path();
  }
  REQUIRE(!json.empty());
  const auto j = read_json(json);
  CHECK(j["version"].get<std::string>() == version_string());
  CHECK(j["seed"].get<std::uint64_t>() == 42);
  CHECK(j.contains("wall_clock"));
  CHECK(j["config"]["tree"].get<std::string>() == "quartet");
  CHECK(j["config"]["mode"].get<std::string>() == "exact");
}

TEST_CASE("sample then loglik and fit read the sample file") {
  const auto dir = scratch("pipeline");
  REQUIRE(quiet_run({"sample", "--tree", "random:6:3", "--m", "2000", "--seed", "5", "--out",
                     dir.string()}) == kExitOk);
  const fs::path csv = dir / "samples.csv";
  REQUIRE(fs::exists(csv));
  CHECK(quiet_run({"loglik", "--tree", "random:6:3", "--samples", csv.string(), "--out",
                   (dir / "ll").string()}) == kExitOk);
  CHECK(quiet_run({"fit", "--tree", "random:6:3", "--samples", csv.string(), "--out",
                   (dir / "fit").string()}) == kExitOk);
}

TEST_CASE("generated tree sources") {
  CHECK(resolve_tree("quartet", TreeFormat::kEdgeList).tree.leaf_count() == 4);
  CHECK(resolve_tree("caterpillar:9", TreeFormat::kEdgeList).tree.leaf_count() == 9);
  CHECK(resolve_tree("complete:3", TreeFormat::kEdgeList).tree.leaf_count() == 9);
  CHECK(resolve_tree("random:11:4", TreeFormat::kEdgeList).tree.leaf_count() == 11);
  CHECK(resolve_tree("spine:4:1", TreeFormat::kEdgeList).tree.leaf_count() == 12);
  CHECK_THROWS_AS(resolve_tree("/no/such/file.tree", TreeFormat::kEdgeList), ParseError);
}
