#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "gibbslab/cli.hpp"
#include "gibbslab/gibbs.hpp"
#include "gibbslab/model_io.hpp"
#include "gibbslab/sampler.hpp"

using namespace gibbslab;
namespace fs = std::filesystem;

namespace {

const std::string kModels = GIBBSLAB_MODELS;

std::string model(const std::string& name) { return kModels + "/" + name; }

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("gibbslab_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string tmp(const std::string& name) { return (scratch() / name).string(); }

struct Captured {
  int code = 0;
  std::string out, err;
};

Captured run(std::vector<std::string> args) {
  args.insert(args.begin(), "gibbslab");
  std::ostringstream o, e;
  auto* ob = std::cout.rdbuf(o.rdbuf());
  auto* eb = std::cerr.rdbuf(e.rdbuf());
  Captured c;
  c.code = cli::run(args);
  std::cout.rdbuf(ob);
  std::cerr.rdbuf(eb);
  c.out = o.str();
  c.err = e.str();
  return c;
}

json read_json(const std::string& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write(const std::string& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST_CASE("validate") {
  auto c = run({"validate", "--model", model("golden_mean.json")});
  CHECK(c.code == 0);
  json j = json::parse(c.out);
  CHECK(j["ok"] == true);
  CHECK(j["model"]["kind"] == "sft");
  CHECK(run({"validate", "--model", model("percolation.json")}).code == 0);
  CHECK(run({"validate", "--model", model("colorings.json")}).code == 0);
  CHECK(run({"validate", "--model", model("percolation_joint.json")}).code == 0);
  CHECK(run({"validate", "--model", model("hardcore2d.json"), "--interaction", model("hardcore_activity.json")}).code ==
        0);
}

TEST_CASE("validation failures name the file and the JSON path") {
  const std::string p = tmp("bad.json");
  write(p, R"({"dimension": 1, "alphabet": ["0","1"], "shift": {"type": "sft", "window": [[0],[1]], "forbidden": ["12"]}})");
  auto c = run({"validate", "--model", p});
  CHECK(c.code == 1);
  CHECK(c.err.find(p) != std::string::npos);
  CHECK(c.err.find("/shift/forbidden/0") != std::string::npos);

  write(p, R"({"alphabet": ["0","1"], "shift": {"type": "full"}})");
  c = run({"validate", "--model", p});
  CHECK(c.code == 1);
  CHECK(c.err.find("dimension") != std::string::npos);

  write(p, R"({"dimension": 2, "shift": {"type": "catalog", "name": "even"}})");
  CHECK(run({"validate", "--model", p}).err.find("/shift/name") != std::string::npos);

  write(p, "{ not json");
  CHECK(run({"validate", "--model", p}).code == 1);
  CHECK(run({"validate", "--model", tmp("missing.json")}).code == 1);

  // interaction over the wrong alphabet
  const std::string q = tmp("phi.json");
  write(q, R"({"terms": [{"shape": [[0]], "table": {"2": 1.0}}]})");
  c = run({"validate", "--model", model("golden_mean.json"), "--interaction", q});
  CHECK(c.code == 1);
  CHECK(c.err.find("/terms/0/table/2") != std::string::npos);

  write(p, R"({"dimension": 1, "shift": {"type": "catalog", "name": "full"}, "environment": {}})");
  CHECK(run({"validate", "--model", p}).err.find("fiber_rule") != std::string::npos);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"validate"}).code == 1);
}

TEST_CASE("check emits replayable verdicts with exit codes") {
  const std::string v = tmp("tssm.json");
  auto c = run({"check", "tssm", "--model", model("hardcore.json"), "--F", "ball1", "--window", "9", "--out", v});
  CHECK(c.code == 0);
  json j = read_json(v);
  CHECK(j["outcome"] == "Verified");
  CHECK(j["exact"] == true);
  CHECK(run({"report", v, "--verify", "--out", tmp("rep.json")}).code == 0);
  CHECK(read_json(tmp("rep.json"))["agree"] == true);

  const std::string r = tmp("refuted.json");
  CHECK(run({"check", "tssm", "--model", model("golden_mean.json"), "--F", "ball0", "--window", "9", "--out", r}).code ==
        2);
  CHECK(read_json(r)["outcome"] == "Refuted");
  CHECK(run({"report", r, "--verify", "--out", tmp("rep2.json")}).code == 2);
  CHECK(read_json(tmp("rep2.json"))["agree"] == true);

  // a verdict whose recorded outcome disagrees with its witness does not replay
  json t = read_json(v);
  t["outcome"] = "Refuted";
  write(tmp("tampered.json"), t.dump());
  CHECK(run({"report", tmp("tampered.json"), "--verify", "--out", tmp("rep3.json")}).code == 1);
  CHECK(read_json(tmp("rep3.json"))["agree"] == false);
}

TEST_CASE("check covers the property list") {
  auto outcome = [](std::vector<std::string> a) {
    a.push_back("--out");
    a.push_back(tmp("o.json"));
    int code = run(a).code;
    json j = read_json(tmp("o.json"));
    CHECK(run({"report", tmp("o.json"), "--verify", "--out", tmp("o2.json")}).code == code);
    return std::make_pair(code, j["outcome"].get<std::string>());
  };
  CHECK(outcome({"check", "tmp", "--model", model("golden_mean.json"), "--A", "[0,2]"}).second == "Verified");
  CHECK(outcome({"check", "strong-tmp", "--model", model("hardcore2d.json"), "--F", "ball1"}).second == "Verified");
  CHECK(outcome({"check", "si", "--model", model("hardcore2d.json"), "--F", "ball1", "--window", "5x5"}).second ==
        "Verified");
  CHECK(outcome({"check", "interchange", "--model", model("golden_mean.json"), "--A", "[0,2]", "--u", "010", "--v",
                 "000"})
            .second == "Verified");
  auto sq = outcome({"check", "strong-tmp", "--model", model("squares.json"), "--F", "ball1"});
  CHECK(sq.first == 2);
  CHECK(sq.second == "Refuted");
  CHECK(outcome({"check", "group-memory", "--model", model("xor3.json"), "--A", "ball0", "--radius", "3"}).second ==
        "Verified");
  json g = read_json(tmp("o.json"));
  CHECK(g["chain"]["memory"] == json::parse("[[-1],[0],[1]]"));
  CHECK(outcome({"check", "reconstruction", "--model", model("hardcore.json"), "--F", "ball1", "--window", "7"}).second ==
        "Verified");
}

TEST_CASE("free pressure of the golden mean approaches log phi") {
  const std::string p = tmp("p.csv");
  CHECK(run({"pressure", "--model", model("golden_mean.json"), "--free", "--nmax", "32", "--csv", p}).code == 0);
  std::ifstream f(p);
  std::string line, last;
  std::getline(f, line);
  CHECK(line.rfind("# gibbslab-series/1", 0) == 0);
  std::getline(f, line);
  CHECK(line == "n,value");
  while (std::getline(f, line)) last = line;
  REQUIRE(last.rfind("32,", 0) == 0);
  double v = std::stod(last.substr(3));
  CHECK(std::abs(v - std::log((1 + std::sqrt(5.0)) / 2)) < 0.04);
  CHECK(run({"pressure", "--model", model("golden_mean.json"), "--free", "--variational"}).code == 1);
}

TEST_CASE("sampling is deterministic and thread count does not change output") {
  auto go = [](const std::string& out, const std::string& threads) {
    return run({"--threads", threads, "sample", "--model", model("hardcore2d.json"), "--interaction",
                model("hardcore_activity.json"), "--torus", "24x24", "--sweeps", "1e2", "--every", "25", "--seed", "7",
                "--out", out})
        .code;
  };
  CHECK(go(tmp("a.bin"), "1") == 0);
  CHECK(go(tmp("b.bin"), "2") == 0);
  CHECK(slurp(tmp("a.bin")) == slurp(tmp("b.bin")));
  json meta = read_json(tmp("a.bin.json"));
  CHECK(meta["frames"] == 4);
  CHECK(meta["admissible"] == true);
  // timestamps live only in the sidecar log
  CHECK(slurp(tmp("a.bin.log")).find("started") != std::string::npos);

  std::ifstream f(tmp("a.bin"), std::ios::binary);
  FrameHeader h = read_frame_header(f);
  CHECK(h.size == Site(24, 24, 1));
  CHECK(h.q == 2);
  std::vector<Symbol> st;
  int frames = 0;
  while (read_frame(f, 24 * 24, st)) ++frames;
  CHECK(frames == 4);

  ::setenv("GIBBSLAB_THREADS", "x", 1);
  CHECK(go(tmp("c.bin"), "0") == 1);
  ::setenv("GIBBSLAB_THREADS", "2", 1);
  CHECK(go(tmp("c.bin"), "0") == 0);
  ::unsetenv("GIBBSLAB_THREADS");
  CHECK(slurp(tmp("a.bin")) == slurp(tmp("c.bin")));

  CHECK(run({"sample", "--model", model("percolation.json"), "--torus", "12x12", "--sweeps", "5", "--out", tmp("p.bin")})
            .code == 0);
  CHECK(fs::exists(tmp("p.bin.env")));
}

TEST_CASE("kernel and language") {
  auto k = run({"kernel", "--model", model("hardcore2d.json"), "--interaction", model("hardcore_activity.json"), "--A",
                "ball0", "--window", "ball1", "--context", "00000000"});
  REQUIRE(k.code == 0);
  json j = json::parse(k.out);
  REQUIRE(j["fillings"].size() == 2);
  // activity e^{0.5} against 1
  double e = std::exp(0.5);
  CHECK(j["fillings"][1]["p"].get<double>() == doctest::Approx(e / (1 + e)).epsilon(1e-14));
  k = run({"kernel", "--model", model("hardcore2d.json"), "--A", "ball0", "--window", "ball1", "--context", "01000000"});
  j = json::parse(k.out);
  CHECK(j["fillings"].size() == 1);

  auto l = run({"language", "--model", model("golden_mean.json"), "--shape", "5", "--csv", tmp("l.csv")});
  CHECK(json::parse(l.out)["count"] == 13);
  CHECK(json::parse(l.out)["exact"] == true);
}

TEST_CASE("relative subcommands") {
  CHECK(run({"relative", "fiber-gibbs", "--code", "merge", "--law", "1/3,1/3,1/3", "--window", "3"}).code == 0);
  CHECK(run({"relative", "fiber-gibbs", "--code", "merge", "--law", "1/2,1/3,1/6", "--window", "3"}).code == 2);
  auto e = run({"relative", "equilibrium", "--code", "merge", "--nu-a", "0.4", "--window", "3"});
  CHECK(e.code == 0);
  json j = json::parse(e.out);
  CHECK(j["pressure_per_site"].get<double>() == doctest::Approx(0.4 * std::log(2.0)).epsilon(1e-9));
  for (const auto& c : j["fiber_conditional"]) CHECK(c.get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(j["env_window_conditional"] == true);

  // per-theta mixing sets on sampled percolation environments
  auto mx = run({"check", "mixing", "--model", model("percolation.json"), "--A", "ball0", "--radius", "1", "--sampled",
                "3", "--out", tmp("mix.json")});
  CHECK(mx.code == 0);
  json mj = read_json(tmp("mix.json"));
  CHECK(mj["outcome"] == "Verified");
  REQUIRE(mj["params"]["per_theta"].size() == 3u);
  for (const auto& row : mj["params"]["per_theta"]) CHECK(row["radius"] == 0);
  CHECK(run({"report", tmp("mix.json"), "--verify"}).code == 0);

  auto s = run({"relative", "slice-kernels", "--model", model("ising2d.json"), "--interaction", model("ising.json"),
                "--N", "1", "--A", "[0,0]", "--box", "6x6"});
  CHECK(s.code == 0);
  CHECK(json::parse(s.out)["results"][0]["max_diff"].get<double>() <= 1e-12);

  auto m = run({"relative", "meyerovitch", "--model", model("golden_mean.json"), "--window", "8", "--u", "010", "--v",
                "000"});
  CHECK(m.code == 0);
  CHECK(run({"relative", "meyerovitch", "--model", model("golden_mean.json"), "--measure", "iid:0.3,0.7", "--window",
             "8", "--u", "010", "--v", "000"})
            .code == 2);
}

TEST_CASE("shape and word parsing") {
  CHECK(parse_shape("ball1", 2) == Shape::ball(2, 1));
  CHECK(parse_shape("cross2", 1) == Shape::cross(1, 2));
  CHECK(parse_shape("9", 1) == Shape::interval(-4, 4));
  CHECK(parse_shape("6x6", 2) == Shape::box(2, Site(-2, -2), Site(3, 3)));
  CHECK(parse_shape("[-2,3]", 1) == Shape::interval(-2, 3));
  CHECK(parse_shape("box:0,0:1,2", 2) == Shape::box(2, Site(0, 0), Site(1, 2)));
  CHECK(parse_shape("[[0,0],[1,0]]", 2) == Shape(2, {Site(0, 0), Site(1, 0)}));
  CHECK_THROWS_AS(parse_shape("ballx", 1), PreconditionError);
  CHECK_THROWS_AS(parse_shape("3x3", 1), PreconditionError);
  CHECK_THROWS_AS(parse_shape("[1,0]", 1), PreconditionError);

  Alphabet a({"-1", "0", "+1"});
  CHECK(parse_word(a, "-1 0 +1") == Word{0, 1, 2});
  CHECK(word_string(a, {2, 0}) == "+1 -1");
  Alphabet b = Alphabet::range(2);
  CHECK(parse_word(b, "0110") == Word{0, 1, 1, 0});
  CHECK_THROWS_AS(parse_word(b, "012", 3), PreconditionError);
}

TEST_CASE("interaction files") {
  Model m = load_model(model("percolation_joint.json"));
  REQUIRE(m.relative);
  Interaction phi = load_interaction("", m);
  Pattern x(Shape::interval(0, 1), {2, 2});
  Pattern env(Shape::interval(0, 1), {1, 1});
  // -J s s with s = +1
  CHECK(energy(phi, env, x, Shape::interval(0, 1)) == -1.0);
  CHECK(m.constraint().admissible(env, x));
  CHECK(!m.constraint().admissible(Pattern(Shape::interval(0, 1), {0, 1}), x));

  // environment-dependent table term
  const std::string p = tmp("envphi.json");
  write(p, R"({"terms": [{"shape": [[0]], "env_shape": [[0]], "table": {"open|+1": -2.0, "open|-1": 2.0}}], "range": 0})");
  Interaction e = load_interaction(p, m);
  CHECK(energy(e, env, x, Shape::interval(0, 1)) == -4.0);
  write(p, R"({"terms": [{"shape": [[0],[1]], "expr": "coupling", "J": 0.5}], "range": 0})");
  CHECK_THROWS_AS(load_interaction(p, m), ModelError);

  Model h = load_model(model("hardcore2d.json"));
  Interaction act = load_interaction(model("hardcore_activity.json"), h);
  CHECK(act.norm() == 0.5);
}
