#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = NLGF_CLI_PATH;

// Runs the CLI in dir with stdout sent to out_file (or discarded) and
// stderr discarded; returns the exit status.
int run(const fs::path& dir, const std::string& args, const std::string& out_file = "") {
  const std::string redirect = out_file.empty() ? " > /dev/null" : " > '" + (dir / out_file).string() + "'";
  const std::string cmd = "cd '" + dir.string() + "' && '" + kCli + "' " + args + redirect + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::current_path() / "cli_work" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// synth -> train-lm -> train-cnn -> evaluate -> calibrate -> pipeline-eval (both modes).
void run_experiment(const fs::path& dir) {
  REQUIRE(run(dir, "--seed 7 synth --num-scenarios 240 --error-rate 0.4 --candidates-per-scenario 4 "
                   "--num-reference-scenarios 200 --references-out refs.jsonl --out corpus.jsonl") == 0);
  REQUIRE(run(dir, "--seed 7 train-lm --corpus refs.jsonl --out ranker.lm") == 0);
  REQUIRE(run(dir, "--seed 7 train-cnn --corpus corpus.jsonl --embedding-dim 16 --filters 16 --epochs 20 "
                   "--out cnn.bin") == 0);
  REQUIRE(run(dir, "--seed 7 evaluate --scorer cnn --model cnn.bin --corpus corpus.jsonl --split eval "
                   "--scores-out eval_scores.jsonl",
              "evaluate.json") == 0);
  REQUIRE(run(dir, "calibrate --scores eval_scores.jsonl --scorer cnn --model-path cnn.bin --out filter.json") == 0);
  REQUIRE(run(dir, "pipeline-eval --corpus corpus.jsonl --ranker-model ranker.lm --mode rank-only --split test",
              "rank_only.json") == 0);
  REQUIRE(run(dir, "pipeline-eval --corpus corpus.jsonl --ranker-model ranker.lm --threshold-file filter.json "
                   "--mode filter-rank --split test",
              "filter_rank.json") == 0);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("synth is deterministic and stats reads it back") {
    const fs::path dir = fresh_dir("synth");
    REQUIRE(run(dir, "--seed 7 synth --num-scenarios 50 --out a.jsonl") == 0);
    REQUIRE(run(dir, "--seed 7 synth --num-scenarios 50 --out b.jsonl") == 0);
    REQUIRE(run(dir, "--seed 8 synth --num-scenarios 50 --out c.jsonl") == 0);
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    CHECK(slurp(dir / "a.jsonl") != slurp(dir / "c.jsonl"));
    REQUIRE(run(dir, "stats --corpus a.jsonl", "stats.json") == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "stats.json"));
    CHECK(j.contains("vocab_size"));

    REQUIRE(run(dir, "--seed 7 --format tsv synth --num-scenarios 50 --out a.tsv") == 0);
    REQUIRE(run(dir, "--format tsv stats --corpus a.tsv", "stats_tsv.json") == 0);
    CHECK(slurp(dir / "stats_tsv.json") == slurp(dir / "stats.json"));
  }

  TEST_CASE("template and scenario files") {
    const fs::path dir = fresh_dir("files");
    std::ofstream(dir / "t.txt") << "It's {deg:temp} {temp_scale} in {requested_location} with {sky} skies.\n"
                                    "In {requested_location}, expect {sky} skies and {precip_summary}.\n";
    REQUIRE(run(dir, "--seed 3 synth --num-scenarios 30 --scenarios-out s.jsonl --out first.jsonl") == 0);
    REQUIRE(run(dir, "--seed 7 synth --templates t.txt --scenarios s.jsonl --error-rate 0.4 --out x.jsonl") == 0);
    REQUIRE(run(dir, "--seed 7 synth --templates t.txt --scenarios s.jsonl --error-rate 0.4 --out y.jsonl") == 0);
    CHECK(slurp(dir / "x.jsonl") == slurp(dir / "y.jsonl"));
    CHECK_FALSE(slurp(dir / "x.jsonl").empty());
  }

  TEST_CASE("exit codes") {
    const fs::path dir = fresh_dir("exit");
    CHECK(run(dir, "--bogus") == 1);
    CHECK(run(dir, "synth") == 1);  // --out is required
    CHECK(run(dir, "--help") == 0);
    CHECK(run(dir, "stats --corpus missing.jsonl") == 2);
    std::ofstream(dir / "bad.jsonl") << "{\"scenario_id\": 3}\n";
    CHECK(run(dir, "stats --corpus bad.jsonl") == 2);
    REQUIRE(run(dir, "--seed 1 synth --num-scenarios 40 --out c.jsonl") == 0);
    CHECK(run(dir, "train-cnn --corpus c.jsonl --embedding-dim 4 --filters 2 --epochs 3 --learning-rate 1e300 "
                   "--out m.bin") == 3);
    CHECK(run(dir, "synth --num-scenarios 10 --error-rate 1.5 --out d.jsonl") == 2);
  }

  TEST_CASE("end-to-end experiment: filtering helps and reports are byte-identical on rerun") {
    const fs::path a = fresh_dir("e2e_a");
    const fs::path b = fresh_dir("e2e_b");
    run_experiment(a);
    run_experiment(b);

    const auto filter = nlohmann::json::parse(slurp(a / "filter.json"));
    CHECK(filter.contains("threshold"));
    CHECK(filter["target_precision"] == 0.98);

    const auto rank_only = nlohmann::json::parse(slurp(a / "rank_only.json"));
    const auto filter_rank = nlohmann::json::parse(slurp(a / "filter_rank.json"));
    const double r0 = rank_only["ungrammatical_top_rate"].get<double>();
    const double r1 = filter_rank["ungrammatical_top_rate"].get<double>();
    INFO("rank-only " << r0 << ", filter-rank " << r1);
    CHECK(r0 > 0.0);
    CHECK(r1 < r0);

    for (const char* f : {"corpus.jsonl", "refs.jsonl", "ranker.lm", "cnn.bin", "evaluate.json", "eval_scores.jsonl",
                          "filter.json", "rank_only.json", "filter_rank.json"}) {
      INFO(f);
      CHECK(slurp(a / f) == slurp(b / f));
    }
  }

  TEST_CASE("GBDT path runs from features") {
    const fs::path dir = fresh_dir("gbdt");
    REQUIRE(run(dir, "--seed 5 synth --num-scenarios 120 --references-out refs.jsonl --out corpus.jsonl") == 0);
    REQUIRE(run(dir, "train-lm --corpus refs.jsonl --order 4 --out ranker.lm") == 0);
    REQUIRE(run(dir, "featurize --corpus corpus.jsonl --lm ranker.lm --out feats.jsonl") == 0);
    REQUIRE(run(dir, "--seed 5 train-gbdt --features feats.jsonl --num-trees 30 --out gbdt.json") == 0);
    REQUIRE(run(dir, "evaluate --scorer gbdt --model gbdt.json --features feats.jsonl --split test",
                "eval.json") == 0);
    CHECK_FALSE(slurp(dir / "eval.json").empty());
    REQUIRE(run(dir, "evaluate --scorer gbdt --model gbdt.json --features feats.jsonl --split eval "
                     "--scores-out s.jsonl") == 0);
    REQUIRE(run(dir, "calibrate --scores s.jsonl --scorer gbdt --model-path gbdt.json --out f.json") == 0);
    REQUIRE(run(dir, "pipeline-eval --corpus corpus.jsonl --ranker-model ranker.lm --threshold-file f.json "
                     "--mode filter-rank",
                "p.json") == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "p.json"));
    CHECK(j["mode"] == "filter-rank");
  }
}
