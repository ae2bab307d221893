#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "deepindex/cli.hpp"
#include "deepindex/corpus.hpp"

namespace fs = std::filesystem;
using deepindex::cli::run;

namespace {

struct Sandbox {
    fs::path dir;
    explicit Sandbox(const std::string& name) : dir(fs::path("cli_scratch") / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }
    std::string operator/(const std::string& p) const { return (dir / p).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::stringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

int synth_small(const Sandbox& sb, const std::string& sub, int n_fulltext = 24, int mult = 2,
                const std::string& seed = "7") {
    return run({"synth", "--out-dir", sb / sub, "--n-fulltext", std::to_string(n_fulltext), "--mult",
                std::to_string(mult), "--n-labels", "5", "--seed", seed});
}

}  // namespace

TEST_CASE("synth writes parseable, seed-sensitive corpora") {
    Sandbox sb("synth");
    REQUIRE(synth_small(sb, "a") == 0);
    auto titles = deepindex::corpus::load_tsv(sb / "a/titles.tsv", deepindex::corpus::Provenance::title);
    auto fulls = deepindex::corpus::load_tsv(sb / "a/fulltexts.tsv", deepindex::corpus::Provenance::fulltext);
    CHECK(titles.size() == 48);
    CHECK(fulls.size() == 24);

    REQUIRE(synth_small(sb, "b") == 0);
    CHECK(slurp(sb / "a/titles.tsv") == slurp(sb / "b/titles.tsv"));
    REQUIRE(synth_small(sb, "c", 24, 2, "8") == 0);
    CHECK(slurp(sb / "a/titles.tsv") != slurp(sb / "c/titles.tsv"));
}

TEST_CASE("prepare is idempotent and partitions the full-text ids") {
    Sandbox sb("prepare");
    REQUIRE(synth_small(sb, "data") == 0);
    const std::vector<std::string> prep = {"prepare",    "--titles", sb / "data/titles.tsv", "--fulltexts",
                                           sb / "data/fulltexts.tsv", "--out-dir", sb / "splits",
                                           "--folds",    "4",        "--mults",    "1,2,full", "--seed", "3"};
    REQUIRE(run(prep) == 0);
    const auto folds_a = slurp(sb / "splits/folds.tsv");
    const auto split_a = slurp(sb / "splits/split_fold0_x2.tsv");
    REQUIRE(run(prep) == 0);
    CHECK(slurp(sb / "splits/folds.tsv") == folds_a);
    CHECK(slurp(sb / "splits/split_fold0_x2.tsv") == split_a);

    // union of folds = full-text id set
    std::set<std::string> seen;
    std::istringstream is(folds_a);
    std::string line;
    while (std::getline(is, line)) {
        const auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        const int fold = std::stoi(line.substr(tab + 1));
        CHECK(fold >= 0);
        CHECK(fold < 4);
        CHECK(seen.insert(line.substr(0, tab)).second);
    }
    auto fulls = deepindex::corpus::load_tsv(sb / "data/fulltexts.tsv", deepindex::corpus::Provenance::fulltext);
    CHECK(seen.size() == fulls.size());
    for (const auto& d : fulls.documents) CHECK(seen.count(d.id));

    // the full rung shares ids with x1
    CHECK(slurp(sb / "splits/split_fold1_full.tsv") == slurp(sb / "splits/split_fold1_x1.tsv"));

    CHECK(run({"prepare", "--titles", sb / "missing.tsv", "--fulltexts", sb / "data/fulltexts.tsv", "--out-dir",
               sb / "x", "--folds", "4"}) == 2);
}

TEST_CASE("train writes canonical artifacts; evaluate appends csv rows") {
    Sandbox sb("traineval");
    REQUIRE(synth_small(sb, "data") == 0);
    REQUIRE(run({"prepare", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
                 "--out-dir", sb / "splits", "--folds", "4", "--mults", "1", "--seed", "3"}) == 0);

    CHECK(run({"train", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
               "--splits-dir", sb / "splits", "--out-dir", sb / "runs", "--model", "not-a-model", "--mult", "1",
               "--fold", "0"}) == 2);

    REQUIRE(run({"train", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
                 "--splits-dir", sb / "splits", "--out-dir", sb / "runs", "--model", "mlp", "--mult", "1",
                 "--fold", "0", "--seed", "5", "--max-epochs", "8", "--batch-size", "8", "--mlp-hidden", "32"}) == 0);
    CHECK(fs::exists(sb / "runs/mlp_x1_fold0.ckpt"));
    CHECK(fs::exists(sb / "runs/mlp_x1_fold0.json"));
    CHECK(fs::exists(sb / "runs/mlp_x1_fold0.log"));

    // log lines follow step TAB split TAB loss TAB theta TAB f1
    std::istringstream log(slurp(sb / "runs/mlp_x1_fold0.log"));
    std::string line;
    REQUIRE(std::getline(log, line));
    CHECK(std::count(line.begin(), line.end(), '\t') == 4);

    const std::vector<std::string> eval = {"evaluate",   "--titles",     sb / "data/titles.tsv",
                                           "--fulltexts", sb / "data/fulltexts.tsv", "--splits-dir", sb / "splits",
                                           "--checkpoint", sb / "runs/mlp_x1_fold0.ckpt", "--csv", sb / "eval.csv"};
    REQUIRE(run(eval) == 0);
    const auto once = slurp(sb / "eval.csv");
    CHECK(once.rfind("model,multiplier,fold,n_test,theta,sample_f1,precision,recall\n", 0) == 0);
    REQUIRE(run(eval) == 0);  // appends, never overwrites
    const auto twice = slurp(sb / "eval.csv");
    CHECK(twice.size() > once.size());
    CHECK(twice.rfind(once, 0) == 0);

    // corrupted checkpoint: explicit format error, usage exit code
    {
        std::ofstream os(sb / "runs/broken.ckpt", std::ios::binary);
        os << "JUNKJUNKJUNK";
        std::ofstream js(sb / "runs/broken.json");
        js << slurp(sb / "runs/mlp_x1_fold0.json");
    }
    CHECK(run({"evaluate", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
               "--splits-dir", sb / "splits", "--checkpoint", sb / "runs/broken.ckpt", "--csv",
               sb / "eval2.csv"}) == 2);
    CHECK(run({"evaluate", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
               "--splits-dir", sb / "splits", "--checkpoint", sb / "runs/ghost.ckpt", "--csv",
               sb / "eval2.csv"}) == 2);
}

TEST_CASE("preset name is honored and recorded in the sidecar") {
    Sandbox sb("preset");
    REQUIRE(synth_small(sb, "data") == 0);
    REQUIRE(run({"prepare", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
                 "--out-dir", sb / "splits", "--folds", "4", "--mults", "1", "--seed", "3"}) == 0);
    REQUIRE(run({"train", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
                 "--splits-dir", sb / "splits", "--out-dir", sb / "runs", "--model", "mlp", "--mult", "1",
                 "--fold", "0", "--preset", "econbiz-title", "--max-epochs", "2", "--batch-size", "8"}) == 0);
    const auto sidecar = nlohmann::json::parse(slurp(sb / "runs/mlp_x1_fold0.json"));
    CHECK(sidecar.at("preset") == "econbiz-title");
    CHECK(sidecar.at("config").at("mlp_hidden") == 2000);
    CHECK(sidecar.at("config").at("mlp_layers") == 1);

    CHECK(run({"train", "--titles", sb / "data/titles.tsv", "--fulltexts", sb / "data/fulltexts.tsv",
               "--splits-dir", sb / "splits", "--out-dir", sb / "runs", "--model", "mlp", "--mult", "1", "--fold",
               "0", "--preset", "no-such-preset", "--max-epochs", "1"}) == 2);
}

TEST_CASE("report writes the table and svg, and rejects an empty csv") {
    Sandbox sb("report");
    {
        std::ofstream os(sb / "eval.csv");
        os << "model,multiplier,fold,n_test,theta,sample_f1,precision,recall\n"
           << "mlp,x1,0,10,0.2,0.50,0.5,0.5\n"
           << "mlp,x1,1,10,0.2,0.70,0.5,0.5\n"
           << "mlp,full,0,10,0.2,0.65,0.5,0.5\n";
    }
    REQUIRE(run({"report", "--csv", sb / "eval.csv", "--out-dir", sb / "out"}) == 0);
    const auto table = slurp(sb / "out/results_table.csv");
    CHECK(table.find("mlp,0.650000,0.600000") != std::string::npos);  // full column then x1 mean
    CHECK(slurp(sb / "out/learning_curve.svg").find("</svg>") != std::string::npos);

    {
        std::ofstream os(sb / "empty.csv");
        os << "model,multiplier,fold,n_test,theta,sample_f1,precision,recall\n";
    }
    CHECK(run({"report", "--csv", sb / "empty.csv", "--out-dir", sb / "out2"}) == 2);
}

TEST_CASE("seed falls back to the DEEPINDEX_SEED environment variable") {
    Sandbox sb("envseed");
    setenv("DEEPINDEX_SEED", "7", 1);
    REQUIRE(run({"synth", "--out-dir", sb / "env", "--n-fulltext", "24", "--mult", "2", "--n-labels", "5"}) == 0);
    unsetenv("DEEPINDEX_SEED");
    REQUIRE(synth_small(sb, "flag") == 0);  // --seed 7
    CHECK(slurp(sb / "env/titles.tsv") == slurp(sb / "flag/titles.tsv"));
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run({"no-such-command"}) == 2);
    CHECK(run({"synth"}) == 2);              // --out-dir is required
    CHECK(run({}) == 2);                     // a subcommand is required
    CHECK(run({"--help"}) == 0);
}
