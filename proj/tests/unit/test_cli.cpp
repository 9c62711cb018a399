#include "doctest.h"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qwalk/cqcnn.hpp"
#include "qwalk/dataset.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run_cli(const std::string& args) {
  const std::string cmd = std::string(QWALK_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "qwalk_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string in_dir(const std::string& name) { return (workdir() / name).string(); }

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("simulate reports the three-vertex race") {
  const auto q = run_cli("simulate --line 1,3,2");
  CHECK(q.code == 0);
  CHECK(contains(q.out, "threshold 0.910"));
  CHECK(contains(q.out, "label quantum"));

  const auto c = run_cli("simulate --line 1,2,3");
  CHECK(c.code == 0);
  CHECK(contains(c.out, "label classical"));

  const auto traced = run_cli("simulate --line 3,1,2 --trace " + in_dir("trace.csv"));
  CHECK(traced.code == 0);
  const std::string csv = read(in_dir("trace.csv"));
  CHECK(csv.rfind("t,p_classical,p_quantum\n0,0,0\n", 0) == 0);
  CHECK(fs::exists(in_dir("trace.csv.manifest.json")));
}

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli("simulate --graph " + in_dir("missing.txt")).code == 2);
  CHECK(run_cli("simulate --line 1,2,2").code == 2);
  CHECK(run_cli("simulate").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("gen-dataset sideways --n 4 --out x").code == 2);
  CHECK(run_cli("train --train " + in_dir("missing.txt") + " --out m.json").code == 2);
  CHECK(run_cli("--help").code == 0);
}

TEST_CASE("gen-dataset, split, train, eval, inspect and rerun") {
  const auto l5 = run_cli("gen-dataset line --n 5 --force --out " + in_dir("l5.txt"));
  REQUIRE(l5.code == 0);
  CHECK(qwalk::load(in_dir("l5.txt")).size() == 60);
  CHECK(run_cli("gen-dataset line --n 5 --out " + in_dir("l5.txt")).code == 1);
  REQUIRE(run_cli("gen-dataset line --n 4 --force --out " + in_dir("l4.txt")).code == 0);
  REQUIRE(run_cli("gen-dataset line --n 6 --force --out " + in_dir("l6.txt")).code == 0);

  SUBCASE("random datasets are reproducible across job counts") {
    REQUIRE(run_cli("gen-dataset random --n 6 --count 25 --seed 7 --jobs 1 --out " + in_dir("r1.txt")).code == 0);
    REQUIRE(run_cli("gen-dataset random --n 6 --count 25 --seed 7 --jobs 4 --out " + in_dir("r4.txt")).code == 0);
    CHECK(read(in_dir("r1.txt")) == read(in_dir("r4.txt")));
    CHECK(qwalk::load(in_dir("r1.txt")).size() == 25);

    const auto generated = run_cli("gen-dataset random --n 5 --count 3 --out " + in_dir("rg.txt"));
    CHECK(generated.code == 0);
    CHECK(contains(generated.out, "(generated)"));
    CHECK(contains(read(in_dir("rg.txt.manifest.json")), "\"dataset\""));
  }

  SUBCASE("split") {
    REQUIRE(run_cli("split --in " + in_dir("l5.txt") + " --train-out " + in_dir("l5.train") + " --test-out " +
                  in_dir("l5.test") + " --seed 1")
                .code == 0);
    CHECK(qwalk::load(in_dir("l5.train")).size() == 54);
    CHECK(qwalk::load(in_dir("l5.test")).size() == 6);
  }

  SUBCASE("train, eval, inspect") {
    const auto t = run_cli("train --train " + in_dir("l4.txt") + " --train " + in_dir("l5.txt") + " --test " +
                         in_dir("l6.txt") + " --n-max 7 --epochs 300 --seed 5 --out " + in_dir("m/model.json"));
    REQUIRE(t.code == 0);
    CHECK(contains(t.out, "l6: accuracy"));
    for (const char* f : {"model.json", "model.history.csv", "model.metrics.csv", "model.json.manifest.json"})
      CHECK(fs::exists(workdir() / "m" / f));
    CHECK(qwalk::load_model(in_dir("m/model.json")).config().n_max == 7);

    const auto e1 = run_cli("eval --model " + in_dir("m/model.json") + " --data " + in_dir("l6.txt"));
    const auto e2 = run_cli("eval --model " + in_dir("m/model.json") + " --data " + in_dir("l6.txt"));
    CHECK(e1.code == 0);
    CHECK(e1.out == e2.out);
    CHECK(contains(e1.out, "precision"));

    const auto csv = run_cli("inspect --model " + in_dir("m/model.json"));
    CHECK(csv.code == 0);
    CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 1 + 2 * 29);

    fs::create_directories(workdir() / "ens1");
    fs::copy_file(in_dir("m/model.json"), in_dir("ens1/a.json"), fs::copy_options::overwrite_existing);
    REQUIRE(run_cli("inspect --ensemble " + in_dir("ens1") + " --csv " + in_dir("ens1.csv")).code == 0);
    std::istringstream rows(read(in_dir("ens1.csv")));
    std::string row;
    std::getline(rows, row);
    while (std::getline(rows, row)) CHECK(row.substr(row.rfind(',') + 1) == "0");

    CHECK(run_cli("inspect --model " + in_dir("l4.txt")).code == 1);
    CHECK(run_cli("eval --model " + in_dir("m/model.json") + " --data " + in_dir("l4.txt")).code == 0);
  }

  SUBCASE("incompatible n_max") {
    const auto t = run_cli("train --train " + in_dir("l5.txt") + " --test " + in_dir("l6.txt") +
                         " --n-max 5 --epochs 1 --seed 1 --out " + in_dir("bad.json"));
    CHECK(t.code == 1);
    CHECK(contains(t.out, "n-max"));

    REQUIRE(run_cli("train --train " + in_dir("l4.txt") + " --epochs 5 --seed 1 --out " + in_dir("small.json")).code == 0);
    CHECK(run_cli("eval --model " + in_dir("small.json") + " --data " + in_dir("l6.txt")).code == 1);
  }

  SUBCASE("ensembles and reruns") {
    const auto t = run_cli("train --train " + in_dir("l4.txt") + " --epochs 50 --runs 3 --jobs 3 --seed 9 --out " +
                         in_dir("ens/model.json"));
    REQUIRE(t.code == 0);
    CHECK(fs::exists(in_dir("ens/model.run002.json")));
    CHECK(fs::exists(in_dir("ens/model.ensemble.csv")));

    const auto r = run_cli("rerun " + in_dir("ens/model.json.manifest.json"));
    CHECK(r.code == 0);
    CHECK(contains(r.out, "all artifacts identical"));

    const auto d = run_cli("rerun " + in_dir("l5.txt.manifest.json"));
    CHECK(d.code == 0);
    CHECK(contains(d.out, "all artifacts identical"));

    // A tampered artifact is detected.
    auto manifest = read(in_dir("l4.txt.manifest.json"));
    const auto pos = manifest.find("\"sha256\": \"") + 11;
    manifest[pos] = manifest[pos] == '0' ? '1' : '0';
    std::ofstream(in_dir("tampered.manifest.json")) << manifest;
    const auto bad = run_cli("rerun " + in_dir("tampered.manifest.json"));
    CHECK(bad.code == 1);
    CHECK(contains(bad.out, "DIFFERS"));
  }
}
