#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lms/app.hpp"
#include "lms/error.hpp"

using namespace lms;
using namespace lms::app;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("lms_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

const char* kSmall = R"(
[grid]
nx = 32
ny = 32
lx = 6.4
ly = 6.4
[specimen]
eps = 2
slices = 2
atoms = 1.6 1.6 0.5 1.0 0.4; 4.8 3.2 2.5 1.2 0.4
[probes]
nx = 8
ny = 8
[detectors]
bf = 2d 0 15
adf = 2d 16 60
)";
}  // namespace

TEST_CASE("defaults and parsed values") {
  const auto def = parse_config("");
  CHECK(def.geom.nx == 64);
  CHECK(def.solver == SolverKind::multislice);
  CHECK(def.detectors.size() == 3);
  const auto cfg = parse_config(kSmall);
  CHECK(cfg.geom.lx == doctest::Approx(6.4));
  CHECK(cfg.specimen.atoms.size() == 2);
  CHECK(cfg.specimen.atoms[1].amplitude == doctest::Approx(1.2));
  CHECK(cfg.detectors.size() == 2);
  CHECK(requested_probes(cfg).size() == 64);
}

TEST_CASE("configuration errors name the section and key") {
  auto message = [](const std::string& text) {
    try {
      auto cfg = parse_config(text);
      validate(cfg);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    } catch (const InvalidArgument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[grid]\nnz = 4\n").find("nz") != std::string::npos);
  CHECK(message("[gird]\nnx = 4\n").find("gird") != std::string::npos);
  CHECK(message("[grid]\nnx = four\n").find("nx") != std::string::npos);
  CHECK(message("[solver]\nkind = magic\n").find("kind") != std::string::npos);
  CHECK_FALSE(message("[probes]\nnx = 7\n").empty());
  CHECK_FALSE(message("[lma]\nM = 2\nL = 9\n[solver]\nkind = lma\n").empty());
}

TEST_CASE("multislice run reports counters matching the model") {
  const auto dir = scratch("ms");
  auto cfg = parse_config(kSmall);
  validate(cfg);
  Options o;
  o.out_dir = dir.string();
  std::ostringstream out;
  CHECK(cmd_simulate(cfg, o, out) == 0);
  const auto report = read_file(dir / "report.txt");
  CHECK(report.find("multislice_calls measured 64 modeled 64") != std::string::npos);
  CHECK(report.find("fft_count measured 256 modeled 256") != std::string::npos);
  CHECK(fs::exists(dir / "bf.lmaimg"));
  CHECK(fs::exists(dir / "adf.pgm"));
  const auto img = load_image((dir / "adf.lmaimg").string());
  CHECK(img.px == 8);
}

TEST_CASE("runs are deterministic and solvers agree through compare") {
  const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  auto cfg = parse_config(std::string(kSmall) + "[solver]\nkind = lma\n[lma]\nwave = probe\nL = 1\n");
  validate(cfg);
  std::ostringstream sink;
  Options o;
  o.out_dir = a.string();
  cmd_simulate(cfg, o, sink);
  o.out_dir = b.string();
  cmd_simulate(cfg, o, sink);
  CHECK(read_file(a / "bf.lmaimg") == read_file(b / "bf.lmaimg"));
  CHECK(fs::exists(a / "plan.lmaplan"));
  CHECK(fs::exists(a / "fit_errors.csv"));

  auto ms = parse_config(kSmall);
  o.out_dir = c.string();
  cmd_simulate(ms, o, sink);
  std::ostringstream cmp;
  CHECK(cmd_compare(a.string(), c.string(), cmp) == 0);
  std::istringstream lines(cmp.str());
  std::string line;
  std::getline(lines, line);
  int rows = 0;
  while (std::getline(lines, line)) {
    const double err = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(err < 1e-10);
    ++rows;
  }
  CHECK(rows == 2);
  CHECK_THROWS_AS(cmd_compare(a.string(), scratch("empty").string(), cmp), ConfigError);
}

TEST_CASE("report commands write their tables") {
  const auto dir = scratch("reports");
  auto cfg = parse_config(std::string(kSmall) +
                          "[lma]\nwave = gaussian\n[report]\nL = 1 4\nf = 1\nkinds = gaussian\nM_factors = 1 2\n");
  validate(cfg);
  Options o;
  o.out_dir = dir.string();
  std::ostringstream sink;
  CHECK(cmd_probe_approx(cfg, o, sink) == 0);
  CHECK(cmd_partition_report(cfg, o, sink) == 0);
  CHECK(read_file(dir / "probe_approx.csv").rfind("kind,f,L,", 0) == 0);
  CHECK(read_file(dir / "partition_report.csv").rfind("L,M,strategy", 0) == 0);
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("exe");
  const auto bad = dir / "bad.ini";
  std::ofstream(bad) << "[grid]\nbogus = 1\n";
  const std::string exe = LMASIM_PATH;
  auto run = [&](const std::string& args) {
    const int status = std::system((exe + " " + args + " > " + (dir / "log.txt").string() + " 2>&1").c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("--config " + bad.string() + " simulate") == 2);
  CHECK(run("--help") == 0);
  const auto good = dir / "good.ini";
  std::ofstream(good) << kSmall;
  CHECK(run("--config " + good.string() + " --out " + (dir / "o").string() + " simulate") == 0);
  CHECK(fs::exists(dir / "o" / "bf.lmaimg"));
}
