#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "drm/demo.hpp"
#include "drm/model.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace drm;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "drmarket");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory, removed on scope exit.
struct Scratch {
  fs::path root;
  Scratch() {
    std::random_device rd;
    root = fs::temp_directory_path() / ("drm-cli-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string path(const std::string& name) const { return (root / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  return out;
}

const std::string kDemo = std::string(DRM_SOURCE_DIR) + "/scenarios/demo.json";

std::string write_scenario(const Scratch& s, const std::string& name, const Scenario& sc) {
  const auto path = s.path(name);
  std::ofstream(path) << to_json(sc).dump(2);
  return path;
}

}  // namespace

TEST_CASE("run writes a trace and a summary") {
  Scratch s;
  const auto r = invoke({"run", "--scenario", kDemo, "--gamma", "0.1", "--out", s.path("out")});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("converged yes") != std::string::npos);

  const auto summary = nlohmann::json::parse(slurp(s.root / "out" / "summary.json"));
  CHECK(summary.at("converged").get<bool>());
  CHECK(summary.at("iterations").get<int>() > 0);
  CHECK(summary.contains("welfare"));

  const auto lines = lines_of(slurp(s.root / "out" / "trace.csv"));
  REQUIRE(lines.size() > 2);
  CHECK(lines[0].rfind("#", 0) == 0);
  CHECK(lines[1] == "iter,slot,customer,x,y,z,p_l,p_u,welfare,max_change");
  const std::size_t rows = lines.size() - 2;
  CHECK(rows == (summary.at("iterations").get<std::size_t>() + 1) * 2);
  for (std::size_t k = 2; k < lines.size(); ++k) {
    const auto cells = cells_of(lines[k]);
    REQUIRE(cells.size() == 10);
    for (const auto& c : cells) CHECK_NOTHROW((void)std::stod(c));
  }
  for (const auto& e : fs::directory_iterator(s.root / "out")) {
    CHECK(e.path().extension() != ".tmp");
  }
}

TEST_CASE("run rejects unreadable or invalid scenarios") {
  Scratch s;
  auto r = invoke({"run", "--scenario", s.path("missing.json"), "--out", s.path("out")});
  CHECK(r.code == cli::kBadInput);
  CHECK_FALSE(r.err.empty());
  CHECK_FALSE(fs::exists(s.root / "out"));

  std::ofstream(s.path("bad.json")) << R"({"num_slots": 1, "customers": []})";
  r = invoke({"run", "--scenario", s.path("bad.json"), "--out", s.path("out")});
  CHECK(r.code == cli::kBadInput);
  CHECK(r.err.find("customers") != std::string::npos);

  r = invoke({"run", "--scenario", kDemo, "--gamma", "-1", "--out", s.path("out")});
  CHECK(r.code == cli::kBadInput);
  r = invoke({"run", "--scenario", kDemo});
  CHECK(r.code == cli::kBadInput);
  r = invoke({});
  CHECK(r.code == cli::kBadInput);
}

TEST_CASE("run reports non-convergence and divergence") {
  Scratch s;
  auto r = invoke({"run", "--scenario", kDemo, "--gamma", "50", "--max-iter", "200", "--out",
                   s.path("slow")});
  CHECK(r.code == cli::kNotConverged);
  CHECK(r.out.find("converged no") != std::string::npos);
  CHECK(fs::exists(s.root / "slow" / "trace.csv"));
  CHECK(fs::exists(s.root / "slow" / "summary.json"));

  r = invoke({"run", "--scenario", kDemo, "--gamma", "1e308", "--out", s.path("blown")});
  CHECK(r.code == cli::kNotConverged);
  CHECK(r.err.find("no output written") != std::string::npos);
  CHECK((!fs::exists(s.root / "blown") || fs::is_empty(s.root / "blown")));
}

TEST_CASE("sweep tabulates iterations per step size") {
  Scratch s;
  auto r = invoke({"sweep", "--scenario", kDemo, "--gammas", "0.01,0.1,0.3", "--out",
                   s.path("sw")});
  REQUIRE(r.code == cli::kOk);
  const auto lines = lines_of(slurp(s.root / "sw" / "sweep.csv"));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "gamma,iterations,converged,welfare");
  std::vector<long> iters;
  for (std::size_t k = 1; k < 4; ++k) {
    const auto cells = cells_of(lines[k]);
    REQUIRE(cells.size() == 4);
    CHECK(cells[2] == "1");
    iters.push_back(std::stol(cells[1]));
  }
  CHECK(iters[0] > iters[1]);
  CHECK(iters[1] > iters[2]);
  for (const char* g : {"0.01", "0.1", "0.3"}) {
    CHECK(fs::exists(s.root / "sw" / (std::string("trace_gamma_") + g + ".csv")));
  }

  r = invoke({"sweep", "--scenario", kDemo, "--gammas", "0.2", "--out", s.path("one")});
  CHECK(r.code == cli::kOk);
  CHECK(lines_of(slurp(s.root / "one" / "sweep.csv")).size() == 2);

  r = invoke({"sweep", "--scenario", kDemo, "--gammas", "", "--out", s.path("none")});
  CHECK(r.code == cli::kBadInput);
  r = invoke({"sweep", "--scenario", kDemo, "--gammas", "0.1,-0.2", "--out", s.path("neg")});
  CHECK(r.code == cli::kBadInput);
}

TEST_CASE("verify certifies the demo equilibrium") {
  Scratch s;
  auto r = invoke({"verify", "--scenario", kDemo, "--grid-step", "0.05", "--out", s.path("v")});
  REQUIRE(r.code == cli::kOk);
  const auto doc = nlohmann::json::parse(slurp(s.root / "v" / "verify.json"));
  CHECK(doc.at("pass").get<bool>());
  CHECK(doc.at("allocation_gap").get<double>() < 1e-3);
  CHECK(doc.at("welfare_gap").get<double>() < 1e-4);
  CHECK(doc.at("boundary_degenerate").get<bool>() == false);
  CHECK(doc.at("grid").at("pass").get<bool>());
  CHECK(doc.at("distributed").at("worst_kkt_residual").get<double>() < 1e-5);

  r = invoke({"verify", "--scenario", kDemo, "--perturb", "0.5", "--out", s.path("p")});
  CHECK(r.code == cli::kVerifyFailed);
  const auto bad = nlohmann::json::parse(slurp(s.root / "p" / "verify.json"));
  CHECK_FALSE(bad.at("pass").get<bool>());
  CHECK(bad.at("allocation_gap").get<double>() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("verify skips the grid oracle beyond three cells") {
  Scratch s;
  const auto sc = test::make_scenario(2, 25, 0.1, 0.2,
                                      {{nlohmann::json::array({60, 70})},
                                       {nlohmann::json::array({90, 80})}});
  const auto path = write_scenario(s, "four.json", sc);
  const auto r = invoke({"verify", "--scenario", path, "--grid-step", "0.01", "--out",
                         s.path("v")});
  CHECK(r.code == cli::kOk);
  CHECK(r.err.find("grid oracle skipped") != std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(s.root / "v" / "verify.json"));
  CHECK(doc.at("grid").is_null());
  CHECK(doc.at("grid_skipped").get<std::string>().find("exceeds 3") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across runs") {
  Scratch s;
  for (const char* dir : {"a", "b"}) {
    REQUIRE(invoke({"run", "--scenario", kDemo, "--gamma", "0.3", "--out", s.path(dir)}).code ==
            cli::kOk);
    REQUIRE(invoke({"sweep", "--scenario", kDemo, "--gammas", "0.1,0.3", "--out",
                    s.path(std::string(dir) + "s")})
                .code == cli::kOk);
  }
  for (const char* f : {"trace.csv", "summary.json"}) {
    CHECK(slurp(s.root / "a" / f) == slurp(s.root / "b" / f));
  }
  for (const char* f : {"sweep.csv", "trace_gamma_0.1.csv", "trace_gamma_0.3.csv"}) {
    CHECK(slurp(s.root / "as" / f) == slurp(s.root / "bs" / f));
  }
}

TEST_CASE("demo sweeps and verifies the built-in scenario") {
  Scratch s;
  const auto r = invoke({"demo", "--out", s.path("d")});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("gamma,iterations,converged,welfare") != std::string::npos);
  CHECK(fs::exists(s.root / "d" / "sweep.csv"));
  const auto doc = nlohmann::json::parse(slurp(s.root / "d" / "verify.json"));
  CHECK(doc.at("pass").get<bool>());
}
