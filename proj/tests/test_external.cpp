#include "doctest.h"

#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "trsearch/external_sim.hpp"

using namespace trsearch;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test, removed on scope exit.
struct TempDir {
  fs::path path;

  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "trsearch_test_XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    REQUIRE(mkdtemp(buf.data()) != nullptr);
    path = fs::path(buf.data());
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

// Two variables (x in {0.5, 2.5}, y in {1, 4}) and two corners that differ
// in the numeric parameter "vdd".
ProblemSpec two_var_problem(std::vector<std::string> measurements, std::size_t corners = 1) {
  ProblemSpec p;
  p.variables = {{"x", {0.5, 2.5}}, {"y", {1.0, 4.0}}};
  p.measurements = std::move(measurements);
  for (std::size_t c = 0; c < corners; ++c) {
    Corner corner;
    corner.name = "c" + std::to_string(c);
    corner.params.emplace_back("vdd", CornerParam{1.8 - 0.2 * static_cast<double>(c)});
    p.corners.push_back(std::move(corner));
  }
  ConstraintSpec cs;
  cs.measurement = p.measurements[0];
  cs.meas_index = 0;
  cs.direction = Direction::AtLeast;
  cs.threshold = 0.0;
  cs.scale = 1.0;
  p.constraints.assign(p.corners.size(), {cs});
  return p;
}

ExternalSettings cat_settings(const fs::path& template_path) {
  ExternalSettings s;
  s.command = "cat {netlist}";
  s.template_path = template_path.string();
  s.output_source = "stdout";
  s.timeout_s = 20.0;
  return s;
}

const std::string kNum = "(-?[0-9][-+0-9.eE]*)";

}  // namespace

TEST_CASE("placeholders are filled from variables, corner parameters and the corner name") {
  TempDir tmp;
  fs::path tpl = tmp.path / "net_42.sp.tmpl";
  write_text(tpl, "xval={x}\nyval={y}\nvddval={vdd}\nshell=${not_expanded}\n");

  ProblemSpec p = two_var_problem({"mx", "my", "mvdd", "mnet"}, 2);
  ExternalSettings s = cat_settings(tpl);
  // Prepend a guard proving {corner} resolves in the command, and echo the
  // netlist path so the .tmpl-stripped name can be captured.
  s.command = "[ \"{corner}\" = \"c0\" -o \"{corner}\" = \"c1\" ] && echo {netlist} && cat {netlist}";
  s.patterns = {{"mx", "xval=" + kNum},
                {"my", "yval=" + kNum},
                {"mvdd", "vddval=" + kNum},
                {"mnet", "net_([0-9]+)\\.sp\\b"}};

  ExternalSimulator env(p, s, tmp.path.string());
  EvalResult r = env.evaluate(Sizing{{1, 0}}, 0);
  REQUIRE_MESSAGE(r.ok, r.error);
  CHECK(r.meas[0] == 2.5);   // x index 1
  CHECK(r.meas[1] == 1.0);   // y index 0
  CHECK(r.meas[2] == 1.8);   // c0 vdd
  CHECK(r.meas[3] == 42.0);  // template "net_42.sp.tmpl" became netlist "net_42.sp"

  // The second corner substitutes its own parameters.
  EvalResult r1 = env.evaluate(Sizing{{1, 0}}, 1);
  REQUIRE_MESSAGE(r1.ok, r1.error);
  CHECK(r1.meas[2] == doctest::Approx(1.6));
}

TEST_CASE("results flow through the shared cache") {
  TempDir tmp;
  fs::path tpl = tmp.path / "n.sp";
  write_text(tpl, "v={x}\n");
  ProblemSpec p = two_var_problem({"v"});
  ExternalSettings s = cat_settings(tpl);
  s.patterns = {{"v", "v=" + kNum}};
  ExternalSimulator env(p, s, tmp.path.string());

  EvalResult a = env.evaluate(Sizing{{0, 0}}, 0);
  REQUIRE(a.ok);
  CHECK_FALSE(a.cached);
  EvalResult b = env.evaluate(Sizing{{0, 0}}, 0);
  CHECK(b.cached);
  CHECK(env.eval_count(0) == 1);
}

TEST_CASE("simulator failures carry a diagnosis") {
  TempDir tmp;
  fs::path tpl = tmp.path / "n.sp";
  write_text(tpl, "v={x}\n");
  ProblemSpec p = two_var_problem({"v"});

  SUBCASE("nonzero exit code includes the stderr tail") {
    ExternalSettings s = cat_settings(tpl);
    s.command = "echo boom >&2; exit 3";
    s.patterns = {{"v", "v=" + kNum}};
    ExternalSimulator env(p, s, tmp.path.string());
    EvalResult r = env.evaluate(Sizing{{0, 0}}, 0);
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("exited with code 3") != std::string::npos);
    CHECK(r.error.find("boom") != std::string::npos);
  }

  SUBCASE("missing measurement in the output") {
    ExternalSettings s = cat_settings(tpl);
    s.patterns = {{"v", "missing=" + kNum}};
    ExternalSimulator env(p, s, tmp.path.string());
    EvalResult r = env.evaluate(Sizing{{0, 0}}, 0);
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("'v' not found") != std::string::npos);
  }

  SUBCASE("non-finite capture becomes a failed evaluation") {
    ExternalSettings s = cat_settings(tpl);
    s.command = "echo v=nan";
    s.patterns = {{"v", "v=(\\w+)"}};
    ExternalSimulator env(p, s, tmp.path.string());
    EvalResult r = env.evaluate(Sizing{{0, 0}}, 0);
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("not finite") != std::string::npos);
  }

  SUBCASE("unparsable capture text") {
    ExternalSettings s = cat_settings(tpl);
    s.command = "echo v=zzz";
    s.patterns = {{"v", "v=(.+)"}};
    ExternalSimulator env(p, s, tmp.path.string());
    EvalResult r = env.evaluate(Sizing{{0, 0}}, 0);
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("unparsable") != std::string::npos);
  }

  SUBCASE("timeouts kill the whole process tree") {
    ExternalSettings s = cat_settings(tpl);
    s.command = "sleep 5";
    s.timeout_s = 0.2;
    s.patterns = {{"v", "v=" + kNum}};
    ExternalSimulator env(p, s, tmp.path.string());
    auto t0 = std::chrono::steady_clock::now();
    EvalResult r = env.evaluate(Sizing{{0, 0}}, 0);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK_FALSE(r.ok);
    CHECK(r.error.find("timed out") != std::string::npos);
    CHECK(elapsed < 3.0);  // nowhere near the sleep duration
  }
}

TEST_CASE("output can come from a file the simulator writes") {
  TempDir tmp;
  fs::path tpl = tmp.path / "n.sp";
  write_text(tpl, "ignored\n");
  ProblemSpec p = two_var_problem({"v"});
  ExternalSettings s = cat_settings(tpl);
  s.command = "echo v={x} > result.txt";
  s.output_source = "file:result.txt";
  s.patterns = {{"v", "v=" + kNum}};
  ExternalSimulator env(p, s, tmp.path.string());
  EvalResult r = env.evaluate(Sizing{{1, 1}}, 0);
  REQUIRE_MESSAGE(r.ok, r.error);
  CHECK(r.meas[0] == 2.5);

  // A command that never writes the file is a diagnosed failure.
  ExternalSettings s2 = s;
  s2.command = "true";
  ExternalSimulator env2(p, s2, tmp.path.string());
  EvalResult r2 = env2.evaluate(Sizing{{0, 0}}, 0);
  CHECK_FALSE(r2.ok);
  CHECK(r2.error.find("produced no output") != std::string::npos);
}

TEST_CASE("construction rejects setups that could never work") {
  TempDir tmp;
  ProblemSpec p = two_var_problem({"v"});

  SUBCASE("missing template file") {
    ExternalSettings s = cat_settings(tmp.path / "nowhere.sp");
    s.patterns = {{"v", "v=" + kNum}};
    CHECK_THROWS_WITH_AS(ExternalSimulator(p, s, tmp.path.string()),
                         doctest::Contains("cannot read"), EnvError);
  }

  SUBCASE("netlist placeholder inside the template") {
    fs::path tpl = tmp.path / "n.sp";
    write_text(tpl, "path={netlist}\n");
    ExternalSettings s = cat_settings(tpl);
    s.patterns = {{"v", "v=" + kNum}};
    CHECK_THROWS_WITH_AS(ExternalSimulator(p, s, tmp.path.string()),
                         doctest::Contains("only valid in the command"), EnvError);
  }

  SUBCASE("placeholder nothing can fill") {
    fs::path tpl = tmp.path / "n.sp";
    write_text(tpl, "t={temperature}\n");
    ExternalSettings s = cat_settings(tpl);
    s.patterns = {{"v", "v=" + kNum}};
    CHECK_THROWS_WITH_AS(ExternalSimulator(p, s, tmp.path.string()),
                         doctest::Contains("{temperature}"), EnvError);
  }

  SUBCASE("pattern count must match the measurement schema") {
    fs::path tpl = tmp.path / "n.sp";
    write_text(tpl, "v={x}\n");
    ProblemSpec p2 = two_var_problem({"v", "w"});
    ExternalSettings s = cat_settings(tpl);
    s.patterns = {{"v", "v=" + kNum}};
    CHECK_THROWS_WITH_AS(ExternalSimulator(p2, s, tmp.path.string()),
                         doctest::Contains("1 capture patterns for 2 measurements"), EnvError);
  }
}

TEST_CASE("batches fan out up to max_parallel") {
  TempDir tmp;
  fs::path tpl = tmp.path / "n.sp";
  write_text(tpl, "v={x}.{y}\n");
  ProblemSpec p = two_var_problem({"v"});
  ExternalSettings s = cat_settings(tpl);
  s.command = "sleep 0.25; cat {netlist}";
  s.max_parallel = 3;
  s.patterns = {{"v", "v=([0-9]+)"}};
  ExternalSimulator env(p, s, tmp.path.string());

  std::vector<EvalRequest> reqs{
      {Sizing{{0, 0}}, 0}, {Sizing{{0, 1}}, 0}, {Sizing{{1, 0}}, 0}};
  auto t0 = std::chrono::steady_clock::now();
  std::vector<EvalResult> rs = env.evaluate_batch(reqs);
  double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  for (const auto& r : rs) REQUIRE_MESSAGE(r.ok, r.error);
  CHECK(env.total_eval_count() == 3);
  // Three quarter-second runs in parallel finish well under the serial 0.75s.
  CHECK(elapsed < 0.6);
}
