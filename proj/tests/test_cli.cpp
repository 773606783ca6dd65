// Runs the installed command-line tool and checks exit codes and outputs.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "shapeforge_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(SHAPEFORGE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Writes a config for the coarse machine plus `extra` lines.
fs::path config(const std::string& name, const std::string& extra) {
  fs::create_directories(kRoot);
  const fs::path path = kRoot / (name + ".cfg");
  std::ofstream(path) << "machine.mesh_size = 0.002\ndescent.max_iter = 1\n" << extra;
  return path;
}

std::vector<std::string> lines(const fs::path& path) {
  std::ifstream is(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("generate-mesh writes the mesh and a preview") {
  const fs::path out = kRoot / "gen";
  fs::remove_all(out);
  CHECK(run("generate-mesh --config " + config("gen", "").string() + " --out " + out.string()) == 0);
  CHECK(fs::file_size(out / "machine.mesh") > 0);
  CHECK(fs::file_size(out / "machine.vtk") > 0);
}

TEST_CASE("usage and config errors exit with 2") {
  CHECK(run("") == 2);
  CHECK(run("optimize --mode bi --config " + config("noweight", "").string()) == 2);
  CHECK(run("optimize --mode bi --weight -1 --config " + config("negweight", "").string()) == 2);
  CHECK(run("optimize --mode sideways") == 2);
  CHECK(run("generate-mesh --config " + config("radius", "machine.rotor_outer_radius = 0.04\n").string()) == 2);
  CHECK(run("generate-mesh --config " + config("unknown", "machine.colour = red\n").string()) == 2);
  CHECK(run("generate-mesh --config /nonexistent/file.cfg") == 2);
  CHECK(run("pareto --jobs 0 --config " + config("jobs", "").string()) == 2);
}

TEST_CASE("help exits cleanly") { CHECK(run("--help") == 0); }

TEST_CASE("validate-gradient with no trials succeeds") {
  CHECK(run("validate-gradient --trials 0 --config " + config("zero", "").string()) == 0);
}

TEST_CASE("validate-gradient passes on the coarse machine") {
  CHECK(run("validate-gradient --trials 1 --seed 7 --config " + config("one", "").string()) == 0);
}

TEST_CASE("optimize writes history and final design") {
  const fs::path out = kRoot / "opt";
  fs::remove_all(out);
  CHECK(run("optimize --mode single --config " + config("opt", "").string() + " --out " + out.string()) == 0);
  const auto h = lines(out / "history.csv");
  REQUIRE(h.size() == 3);
  CHECK(h[0].rfind("iter,J1,J2,t,normW,min_quality,seconds", 0) == 0);
  CHECK(fs::exists(out / "design_final.vtk"));
  CHECK(fs::exists(out / "design_0000.vtk"));
}

TEST_CASE("pareto drops duplicate weights") {
  const fs::path out = kRoot / "pareto";
  fs::remove_all(out);
  const auto cfg = config("pareto", "pareto.weights = 0.05, 0.02, 0.05\n");
  CHECK(run("pareto --jobs 2 --config " + cfg.string() + " --out " + out.string()) == 0);
  const auto rows = lines(out / "pareto.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rfind("0.02,", 0) == 0);
  CHECK(rows[2].rfind("0.05,", 0) == 0);
}
