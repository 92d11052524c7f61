#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "saltus/cli.hpp"
#include "saltus/errors.hpp"

using namespace saltus;
namespace fs = std::filesystem;

namespace {

const char* kUnit = R"({"domain":[0,1],"c0":0,"jumps":[{"t":"0.5","left":0,"right":1}]})";
const char* kIdentity = R"({"domain":[0,1],"continuous":[{"on":[0,1],"expr":{"kind":"poly","coeffs":[0,1]}}]})";
const char* kIdentityPlusUnit =
    R"({"domain":[0,1],"continuous":[{"on":[0,1],"expr":{"kind":"poly","coeffs":[0,1]}}],"jumps":[{"t":"0.5","left":0,"right":1}]})";

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("saltus_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& text) const {
    const fs::path p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }
};

struct Outcome {
  int code = 0;
  nlohmann::json report;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "saltus");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  o.report = nlohmann::json::parse(out.str());
  o.err = err.str();
  return o;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli: variation of the unit function") {
  Scratch s;
  const Outcome o = call({"variation", "--f", s.file("h.json", kUnit)});
  CHECK(o.code == cli::kOk);
  CHECK(o.report["command"] == "variation");
  CHECK(o.report["value"].get<double>() == 1.0);
  CHECK(o.report["error_bound"].get<double>() >= 0.0);
}

TEST_CASE("cli: star-int of t against t + unit") {
  Scratch s;
  const Outcome o = call({"star-int", "--f", s.file("f.json", kIdentity), "--g", s.file("g.json", kIdentityPlusUnit),
                          "--tol", "1e-9"});
  CHECK(o.code == cli::kOk);
  CHECK(std::abs(o.report["value"].get<double>() - 1.0) <= 1e-9);
  CHECK(o.report["error_bound"].get<double>() <= 1e-9);
}

TEST_CASE("cli: rs-int on a common discontinuity exits 2") {
  Scratch s;
  const std::string f = s.file("f.json", R"({"domain":[-1,1],"jumps":[{"t":"0","left":0,"right":1}]})");
  const std::string g = s.file("g.json", R"({"domain":[-1,1],"jumps":[{"t":"0","left":1,"right":0}]})");
  const Outcome o = call({"rs-int", "--f", f, "--g", g});
  CHECK(o.code == cli::kNonexistent);
  CHECK(o.report["status"] == "NONEXISTENT");
  CHECK(o.report["loc"] == "0");
  CHECK_FALSE(o.err.empty());
}

TEST_CASE("cli: input digests follow the bytes") {
  Scratch s;
  const std::string path = s.file("h.json", kUnit);
  const Outcome a = call({"variation", "--f", path});
  const Outcome b = call({"variation", "--f", path});
  CHECK(a.report == b.report);
  s.file("h.json", std::string(kUnit) + "\n");
  const Outcome c = call({"variation", "--f", path});
  CHECK(a.report["inputs"]["f"]["fnv1a64"] != c.report["inputs"]["f"]["fnv1a64"]);
  CHECK(a.report["value"] == c.report["value"]);
  CHECK(cli::fnv1a64("") == 14695981039346656037ull);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("cli: parse_func_file errors") {
  Scratch s;
  try {
    (void)cli::parse_func_file(
        s.file("dup.json", R"({"domain":[0,1],"jumps":[{"t":"0.5","left":0,"right":1},{"t":"0.50","left":1,"right":0}]})"));
    FAIL("expected InvariantError");
  } catch (const DocumentError& e) {
    CHECK(e.kind() == ErrorKind::Invariant);
    CHECK(e.pointer() == "/jumps/1/t");
  }
  try {
    (void)cli::parse_func_file(
        s.file("kind.json", R"({"domain":[0,1],"continuous":[{"on":[0,1],"expr":{"kind":"tanh"}}]})"));
    FAIL("expected SchemaError");
  } catch (const DocumentError& e) {
    CHECK(e.kind() == ErrorKind::Schema);
  }
  try {
    (void)cli::parse_func_file((s.dir / "missing.json").string());
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
  CHECK_THROWS_AS((void)cli::parse_func_file(s.file("bad.json", "{")), DocumentError);
}

TEST_CASE("cli: validation errors exit 3 with the pointer") {
  Scratch s;
  const Outcome o = call({"variation", "--f",
                          s.file("dup.json", R"({"domain":[0,1],"jumps":[{"t":"0.5","left":0,"right":1},{"t":"0.50","left":1,"right":0}]})")});
  CHECK(o.code == cli::kInvalid);
  CHECK(o.report["error"] == "InvariantError");
  CHECK(o.report["pointer"] == "/jumps/1/t");
  CHECK(call({"variation"}).code == cli::kInvalid);
  CHECK(call({"no-such-command"}).code == cli::kInvalid);
  CHECK(call({"variation", "--f", (s.dir / "missing.json").string()}).code == cli::kInvalid);
  CHECK(call({"mollify-report", "--f", s.file("x.json", kUnit), "--g", s.file("g.json", kIdentity), "--eps-grid",
              "0.1,abc"})
            .code == cli::kInvalid);
}

TEST_CASE("cli: budget exhaustion exits 4") {
  Scratch s;
  const std::string f = s.file(
      "f.json", R"({"domain":[0,1],"continuous":[{"on":[0,1],"expr":{"kind":"sin","amp":1,"omega":40,"phase":0}}]})");
  const Outcome o = call({"rs-int", "--f", f, "--g", f, "--tol", "1e-15", "--max-depth", "1"});
  CHECK(o.code == cli::kBudget);
  CHECK(o.report["status"] == "BUDGET");
}

TEST_CASE("cli: mollify, step-approx and norm-witness") {
  Scratch s;
  const std::string h = s.file("h.json", kUnit);
  const std::string out = (s.dir / "m.json").string();
  const Outcome m = call({"mollify", "--f", h, "--eps", "0.1", "--out", out});
  REQUIRE(m.code == cli::kOk);
  const RepFunc y = cli::parse_func_file(out);
  CHECK(std::abs(y(0.5)) <= 1e-10);
  CHECK(std::abs(y(0.575) - 0.75) <= 1e-10);

  const Outcome st = call({"step-approx", "--f", s.file("id.json", kIdentity), "--eps", "0.1"});
  REQUIRE(st.code == cli::kOk);
  CHECK(st.report["value"]["values"].size() >= 5);
  CHECK(st.report["error_bound"].get<double>() == 0.1);

  const Outcome w = call({"norm-witness", "--g", h, "--eps", "1e-3"});
  REQUIRE(w.code == cli::kOk);
  CHECK(w.report["value"].get<double>() >= 1.0 - 1e-3);
}

TEST_CASE("cli: ode-solve writes paired event rows") {
  Scratch s;
  const std::string spec = s.file("ode.json", R"({"n": 2, "domain": [0, 1], "gamma": [1, 0], "tol": 1e-9,
    "p": [{"domain": [0, 1]},
          {"domain": [0, 1], "jumps": [{"t": "0.5", "left": 0, "right": 1}]},
          {"domain": [0, 1]}]})");
  const std::string csv = (s.dir / "traj.csv").string();
  const Outcome o = call({"ode-solve", "--spec", spec, "--out", csv});
  REQUIRE(o.code == cli::kOk);
  CHECK(std::abs(o.report["value"][0].get<double>() - 0.5) <= 1e-6);
  const std::string text = slurp(csv);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,side,y1,y2,x,x1");
  long rows = 0, minus = 0, plus = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",-,") != std::string::npos) ++minus;
    if (line.find(",+,") != std::string::npos) ++plus;
  }
  CHECK(rows == o.report["diagnostics"]["grid_points"].get<long>());
  CHECK(minus == 1);
  CHECK(plus == 1);
}
