#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "sesa/binio.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Spawns the binary under test with a scrubbed environment; an entry of the
// form KEY=VALUE in `env` is exported to the child.
RunResult run_cli(const std::vector<std::string>& args,
                  const std::vector<std::string>& env = {}) {
  static int counter = 0;
  static oracle::TempDir scratch("sesa-cli-io");
  const char* bin = std::getenv("SESA_CLI");
  REQUIRE(bin != nullptr);

  fs::path out_file = scratch.path() / ("out" + std::to_string(counter));
  fs::path err_file = scratch.path() / ("err" + std::to_string(counter));
  ++counter;

  std::string cmd = "env -u SER_BENCH_CONFIG";
  for (const auto& e : env) cmd += " '" + e + "'";
  cmd += " '" + std::string(bin) + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " > '" + out_file.string() + "' 2> '" + err_file.string() + "'";

  int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

std::size_t count_table_rows(const std::string& md) {
  // body rows: lines starting with "| " minus header and separator
  std::size_t rows = 0, pos = 0;
  while (pos < md.size()) {
    auto end = md.find('\n', pos);
    if (end == std::string::npos) end = md.size();
    auto line = md.substr(pos, end - pos);
    if (line.rfind("| ", 0) == 0) ++rows;
    pos = end + 1;
  }
  return rows >= 2 ? rows - 2 : 0;
}

// One corpus + feature dump shared by every test case in this binary.
struct CliWorld {
  oracle::TempDir td{"sesa-cli"};
  fs::path data, features;

  CliWorld() {
    data = td.path() / "corpus";
    features = td.path() / "features.bin";
    auto synth = run_cli({"synth", "--data", data.string(), "--train-per-class", "3",
                          "--test-per-class", "1", "--seed", "5"});
    if (synth.code != 0) throw std::runtime_error("synth failed: " + synth.err);
    auto extract = run_cli({"extract", "--data", data.string(), "--out",
                            features.string(), "--threads", "2"});
    if (extract.code != 0) throw std::runtime_error("extract failed: " + extract.err);
  }
};

CliWorld& world() {
  static CliWorld w;
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------
// exit-code contract
// ---------------------------------------------------------------------------

TEST_CASE("usage problems exit with status 2") {
  CHECK(run_cli({}).code == 2);                       // a subcommand is required
  CHECK(run_cli({"transmogrify"}).code == 2);         // unknown subcommand
  CHECK(run_cli({"extract", "--bogus", "1"}).code == 2);  // unknown flag
  CHECK(run_cli({"extract"}).code == 2);              // missing --data
  auto r = run_cli({"extract", "--data", world().data.string()});
  CHECK(r.code == 2);                                 // missing --out
  CHECK(r.err.find("--out") != std::string::npos);
  CHECK(run_cli({"evaluate", "--features", world().features.string(), "--folds", "1"})
            .code == 2);                              // validation catches folds < 2
  CHECK(run_cli({"evaluate", "--features", "/definitely/not/there.bin"}).code == 2);
  CHECK(run_cli({"predict", "--model", "m.bin"}).code == 2);  // missing WAV operand
}

TEST_CASE("--help exits cleanly") {
  auto r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("fetch") != std::string::npos);
  CHECK(r.out.find("evaluate") != std::string::npos);
}

TEST_CASE("runtime failures exit with status 1") {
  auto r = run_cli({"predict", "--model", (world().td.path() / "absent.bin").string(),
                    (world().data / "test/siren/siren_000.wav").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("error") != std::string::npos);
}

// ---------------------------------------------------------------------------
// synth + extract
// ---------------------------------------------------------------------------

TEST_CASE("synth reports the generated corpus") {
  auto dir = world().td.path() / "corpus2";
  auto r = run_cli({"synth", "--data", dir.string(), "--train-per-class", "1",
                    "--test-per-class", "1", "--seed", "5"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("8 files") != std::string::npos);
  CHECK(r.out.find("siren=1") != std::string::npos);
  CHECK(fs::exists(dir / "manifest.csv"));
  // same seed, same bytes as the shared corpus where the names coincide
  CHECK(sesa::read_file_bytes(dir / "test/siren/siren_000.wav") ==
        sesa::read_file_bytes(world().data / "test/siren/siren_000.wav"));
}

TEST_CASE("extract is reproducible at the byte level") {
  auto dump2 = world().td.path() / "features2.bin";
  auto r = run_cli({"extract", "--data", world().data.string(), "--out", dump2.string(),
                    "--threads", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("extracted") != std::string::npos);
  CHECK(r.out.find("16 files") != std::string::npos);
  CHECK(sesa::read_file_bytes(dump2) == sesa::read_file_bytes(world().features));
}

TEST_CASE("extract writes CSV when asked for a .csv path") {
  auto dump = world().td.path() / "features.csv";
  auto r = run_cli({"extract", "--data", world().data.string(), "--out", dump.string()});
  REQUIRE(r.code == 0);
  auto text = slurp(dump);
  CHECK(text.rfind("file_id,split,label,frame,f001", 0) == 0);
}

// ---------------------------------------------------------------------------
// evaluate / bench
// ---------------------------------------------------------------------------

TEST_CASE("evaluate prints the full benchmark table") {
  auto r = run_cli({"evaluate", "--features", world().features.string(), "--seed", "3"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("| Classifier | Time [ms] | Accuracy [%] |") != std::string::npos);
  CHECK(count_table_rows(r.out) == 11);
  for (const char* name : {"| AdaBoost |", "| Bagging |", "| DecisionTree |",
                           "| GradientBoosting |", "| KNN |", "| Perceptron |",
                           "| PassiveAggressive |", "| RandomForest |", "| Ridge |",
                           "| SGD |", "| SVM |"})
    CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("evaluate restricts to one classifier on request") {
  auto r = run_cli({"evaluate", "--features", world().features.string(), "--classifier",
                    "sgd"});
  REQUIRE(r.code == 0);
  CHECK(count_table_rows(r.out) == 1);
  CHECK(r.out.find("| SGD |") != std::string::npos);
}

TEST_CASE("evaluate emits JSON and report files") {
  auto stem = (world().td.path() / "report").string();
  auto r = run_cli({"evaluate", "--features", world().features.string(), "--classifier",
                    "knn", "--format", "json", "--out", stem, "--seed", "3"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out.substr(r.out.find('{')));
  CHECK(j.at("schema") == 1);
  CHECK(j.at("seed") == 3);
  CHECK(j.at("classifiers").size() == 1);
  CHECK(j.at("classifiers")[0].at("name") == "KNN");
  CHECK(j.at("classifiers")[0].at("failed") == false);
  REQUIRE(fs::exists(stem + ".md"));
  REQUIRE(fs::exists(stem + ".json"));
  auto file_json = nlohmann::json::parse(slurp(stem + ".json"));
  CHECK(file_json.at("classifiers")[0].at("frame_accuracy") ==
        j.at("classifiers")[0].at("frame_accuracy"));
  CHECK(slurp(stem + ".md").find("| KNN |") != std::string::npos);
}

TEST_CASE("evaluate results are stable apart from wall time") {
  std::vector<std::string> args = {"evaluate", "--features", world().features.string(),
                                   "--classifier", "tree", "--format", "json",
                                   "--seed", "11"};
  auto a = run_cli(args);
  auto b = run_cli(args);
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  auto ja = nlohmann::json::parse(a.out.substr(a.out.find('{')));
  auto jb = nlohmann::json::parse(b.out.substr(b.out.find('{')));
  ja.at("classifiers")[0].erase("time_ms");
  jb.at("classifiers")[0].erase("time_ms");
  CHECK(ja == jb);
}

TEST_CASE("bench raises the timing repetitions to at least five") {
  auto r = run_cli({"bench", "--features", world().features.string(), "--classifier",
                    "knn", "--format", "json"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out.substr(r.out.find('{')));
  CHECK(j.at("reps") == 5);
  CHECK(j.at("classifiers")[0].at("time_ms").at("folds").size() == 3);
}

// ---------------------------------------------------------------------------
// train / predict
// ---------------------------------------------------------------------------

TEST_CASE("train then predict labels a held-out siren correctly") {
  auto model = world().td.path() / "model.bin";
  auto r = run_cli({"train", "--features", world().features.string(), "--out",
                    model.string(), "--classifier", "ridge", "--seed", "7"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("trained Ridge") != std::string::npos);
  REQUIRE(fs::exists(model));

  auto wav = world().data / "test/siren/siren_000.wav";
  auto p = run_cli({"predict", "--model", model.string(), wav.string()});
  REQUIRE(p.code == 0);
  CHECK(p.out.find(": siren") != std::string::npos);

  auto pj = run_cli({"predict", "--model", model.string(), "--format", "json",
                     wav.string()});
  REQUIRE(pj.code == 0);
  auto j = nlohmann::json::parse(pj.out);
  CHECK(j.at("label") == "siren");
  CHECK(j.at("frames").get<int>() >= 1);
}

TEST_CASE("the default training classifier is the SVM") {
  auto model = world().td.path() / "model-default.bin";
  auto r = run_cli({"train", "--features", world().features.string(), "--out",
                    model.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("trained SVM") != std::string::npos);
}

// ---------------------------------------------------------------------------
// configuration precedence
// ---------------------------------------------------------------------------

TEST_CASE("config file, environment and flags layer correctly") {
  auto knn_conf = world().td.path() / "knn.conf";
  auto ridge_conf = world().td.path() / "ridge.conf";
  sesa::write_file_atomic(knn_conf, std::string("classifier = knn\n"));
  sesa::write_file_atomic(ridge_conf, std::string("classifier = ridge\n"));
  const auto feats = world().features.string();

  SECTION("--config file selects the classifier") {
    auto r = run_cli({"evaluate", "--features", feats, "--config", knn_conf.string()});
    REQUIRE(r.code == 0);
    CHECK(count_table_rows(r.out) == 1);
    CHECK(r.out.find("| KNN |") != std::string::npos);
  }
  SECTION("the environment variable names a config file") {
    auto r = run_cli({"evaluate", "--features", feats},
                     {"SER_BENCH_CONFIG=" + knn_conf.string()});
    REQUIRE(r.code == 0);
    CHECK(count_table_rows(r.out) == 1);
    CHECK(r.out.find("| KNN |") != std::string::npos);
  }
  SECTION("--config wins over the environment") {
    auto r = run_cli({"evaluate", "--features", feats, "--config", ridge_conf.string()},
                     {"SER_BENCH_CONFIG=" + knn_conf.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("| Ridge |") != std::string::npos);
    CHECK(r.out.find("| KNN |") == std::string::npos);
  }
  SECTION("explicit flags win over every config source") {
    auto r = run_cli({"evaluate", "--features", feats, "--config", knn_conf.string(),
                      "--classifier", "sgd"},
                     {"SER_BENCH_CONFIG=" + ridge_conf.string()});
    REQUIRE(r.code == 0);
    CHECK(count_table_rows(r.out) == 1);
    CHECK(r.out.find("| SGD |") != std::string::npos);
  }
  SECTION("a broken config file is a usage error") {
    auto bad = world().td.path() / "bad.conf";
    sesa::write_file_atomic(bad, std::string("classifier knn\n"));
    CHECK(run_cli({"evaluate", "--features", feats, "--config", bad.string()}).code == 2);
  }
}

// ---------------------------------------------------------------------------
// fetch (offline behaviour only; the happy path is covered at library level)
// ---------------------------------------------------------------------------

TEST_CASE("fetch warns when no checksum is pinned and fails loudly offline") {
  auto r = run_cli({"fetch", "--data", (world().td.path() / "dl").string(), "--url",
                    "http://127.0.0.1:9/nothing.zip"});
  CHECK(r.code == 1);
  CHECK(r.err.find("warning: no dataset_sha256") != std::string::npos);
  CHECK(r.err.find("fetch_error") != std::string::npos);
}
