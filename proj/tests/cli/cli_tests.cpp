#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "../common/cli_harness.hpp"

using namespace isoquot;
using namespace isoquot::testing;

namespace {

const std::string kCli = ISOQUOT_CLI_PATH;

std::string out_flag(const fs::path& dir) { return "--output_dir " + shell_quote(dir.string()); }

json load(const fs::path& p) { return read_json(p); }

}  // namespace

TEST_CASE("family generation writes the family and member files") {
  const fs::path dir = fresh_dir("isoquot_cli_family");
  REQUIRE(run_cli(kCli, out_flag(dir) + " family gen") == 0);
  for (const char* f : {"family.json", "jmap_0.json", "jmap_1.json", "jmap_2.json", "family_gen.json"})
    CHECK(fs::exists(dir / f));
  const Family fam = family_from_json(load(dir / "family.json"));
  REQUIRE(fam.members.size() == 3);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      CHECK(is_isospectral(fam.members[a].j, fam.members[b].j).isospectral);
      CHECK(invariant_separation(fam.members[a].j, fam.members[b].j) > 1e-6);
    }
  const json rep = load(dir / "family_gen.json");
  CHECK(rep.at("config_hash").get<std::string>().size() == 16);
  CHECK(rep.contains("versions"));
  CHECK(fs::exists(dir / "family_gen.timing.json"));
  CHECK(run_cli(kCli, out_flag(dir) + " family check") == 0);
}

TEST_CASE("verify, strata and nonisometry on a valid family") {
  const fs::path dir = fresh_dir("isoquot_cli_verify");
  REQUIRE(run_cli(kCli, out_flag(dir) + " family gen") == 0);
  CHECK(run_cli(kCli, out_flag(dir) + " --points 50 --volume_points 50 verify") == 0);
  CHECK(run_cli(kCli, out_flag(dir) + " strata") == 0);
  CHECK(load(dir / "strata.json").at("results").at("orbifold").at("codim") == 5);
  CHECK(run_cli(kCli, out_flag(dir) + " nonisometry") == 0);
  CHECK(load(dir / "nonisometry.json").at("results").at("verdict") == "non-isometric");
}

TEST_CASE("r = 3 Stiefel: verify passes, orbifold, nonisometry refused") {
  const fs::path dir = fresh_dir("isoquot_cli_stiefel");
  REQUIRE(run_cli(kCli, out_flag(dir) + " family gen") == 0);
  const std::string st = out_flag(dir) + " --manifold stiefel --r 3";
  CHECK(run_cli(kCli, st + " --points 30 --volume_points 30 verify") == 0);
  CHECK(run_cli(kCli, st + " strata") == 0);
  CHECK(load(dir / "strata.json").at("results").at("orbifold").at("is_orbifold") == true);
  CHECK(run_cli(kCli, st + " nonisometry") == 0);
  CHECK(load(dir / "nonisometry.json").at("results").at("verdict") == "open");
}

TEST_CASE("planted fault: scaled J2 fails the intertwining check") {
  const fs::path dir = fresh_dir("isoquot_cli_fault");
  REQUIRE(run_cli(kCli, out_flag(dir) + " family gen") == 0);
  Family fam = family_from_json(load(dir / "family.json"));
  fam.members[2].j = JMap(fam.members[2].j.j1(), 1.3 * fam.members[2].j.j2());
  write_json(dir / "corrupt.json", family_to_json(fam));
  const int code = run_cli(kCli, out_flag(dir) + " --family " + shell_quote((dir / "corrupt.json").string()) +
                                     " --points 50 --volume_points 50 verify");
  CHECK(code == 3);
  const json rep = load(dir / "verify.json");
  CHECK(rep.dump().find("\"ok\":false") != std::string::npos);
}

TEST_CASE("exit codes") {
  const fs::path dir = fresh_dir("isoquot_cli_codes");
  CHECK(run_cli(kCli, out_flag(dir) + " --m 2 family gen") == 2);
  CHECK(run_cli(kCli, out_flag(dir) + " --no_such_flag 1 strata") == 2);
  CHECK(run_cli(kCli, out_flag(dir) + " --r 9 --manifold stiefel strata") == 2);
  write_json(dir / "bad_key.json", {{"colour", "blue"}});
  CHECK(run_cli(kCli, out_flag(dir) + " --config " + shell_quote((dir / "bad_key.json").string()) + " strata") == 2);
  CHECK(run_cli(kCli, out_flag(dir) + " --config " + shell_quote((dir / "absent.json").string()) + " strata") == 4);
  CHECK(run_cli(kCli, out_flag(dir) + " --family " + shell_quote((dir / "absent.json").string()) + " verify") == 4);
  REQUIRE(run_cli(kCli, out_flag(dir) + " family gen") == 0);
  CHECK(run_cli(kCli, out_flag(dir) + " --N 20 --k 20 spectrum estimate") == 2);
  CHECK(run_cli(kCli, out_flag(dir) + " --N 20 --k 25 spectrum estimate") == 2);
  CHECK(run_cli(kCli, out_flag(dir) + " --sphere_dim 5 spectrum calibrate") == 2);
}

TEST_CASE("config file keys are overridden by flags") {
  const fs::path dir = fresh_dir("isoquot_cli_config");
  write_json(dir / "cfg.json", {{"sphere_dim", 2}, {"N", 300}, {"k", 4}, {"seeds", {3}}, {"output_dir", dir.string()}});
  REQUIRE(run_cli(kCli, "--config " + shell_quote((dir / "cfg.json").string()) + " --k 5 spectrum calibrate") == 0);
  const json rep = load(dir / "calibrate.json");
  CHECK(rep.at("config").at("N") == 300);
  CHECK(rep.at("config").at("k") == 5);
  CHECK(fs::exists(dir / "calibrate_seed3.csv"));
  CHECK(fs::exists(dir / "calibrate.svg"));
}

TEST_CASE("outputs do not depend on the worker count") {
  const fs::path dir = fresh_dir("isoquot_cli_workers");
  const std::string common = out_flag(dir) + " --N 250 --k 5 --seeds 0 1 --points 40 --volume_points 40 --save_cloud true ";
  const char* cmds[] = {"family gen", "verify", "spectrum estimate", "spectrum compare", "nonisometry"};
  for (const char* cmd : cmds) REQUIRE(run_cli(kCli, "--workers 1 " + common + cmd) == 0);
  const auto first = snapshot(dir);
  for (const char* cmd : cmds) REQUIRE(run_cli(kCli, "--workers 4 " + common + cmd) == 0);
  const auto second = snapshot(dir);
  REQUIRE(first.size() == second.size());
  CHECK(first.size() > 10);
  for (const auto& [name, text] : first) CHECK_MESSAGE(second.at(name) == text, name);
}
