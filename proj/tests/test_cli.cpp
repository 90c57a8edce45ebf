#include <unistd.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support/synthetic_data.hpp"

// End-to-end coverage of the installed binary; QSVDD_CLI_PATH is injected by
// the build so the tests always target the freshly built executable.
#ifndef QSVDD_CLI_PATH
#error "QSVDD_CLI_PATH must point at the cli binary"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

CliResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int invocation = 0;
    const fs::path dir = fs::temp_directory_path();
    const std::string tag = std::to_string(::getpid()) + "_" + std::to_string(invocation++);
    const fs::path out_path = dir / ("qsvdd_cli_out_" + tag);
    const fs::path err_path = dir / ("qsvdd_cli_err_" + tag);

    const std::string cmd = env_prefix + " '" + QSVDD_CLI_PATH + "' " + args + " > '" +
                            out_path.string() + "' 2> '" + err_path.string() + "'";
    const int status = std::system(cmd.c_str());

    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    fs::remove(out_path);
    fs::remove(err_path);
    return result;
}

// One synthetic dataset + config on disk, shared by every CLI test.
struct Fixture {
    fs::path root;
    std::string config_path;

    Fixture() {
        root = fs::temp_directory_path() / ("qsvdd_cli_fix_" + std::to_string(::getpid()));
        fs::create_directories(root / "data");

        const auto train = testutil::make_synthetic_records(40, 91);
        const auto test = testutil::make_synthetic_records(60, 92);
        testutil::write_idx_pair((root / "data/train-images.gz").string(),
                                 (root / "data/train-labels.gz").string(), train, true);
        testutil::write_idx_pair((root / "data/test-images.gz").string(),
                                 (root / "data/test-labels.gz").string(), test, true);

        config_path = (root / "experiment.ini").string();
        std::ofstream cfg(config_path);
        cfg << "[data]\n"
               "dataset = synthetic\n"
               "train_images = train-images.gz\n"
               "train_labels = train-labels.gz\n"
               "test_images = test-images.gz\n"
               "test_labels = test-labels.gz\n"
               "\n"
               "[model]\n"
               "method = qsvdd\n"
               "d_prime = 9\n"
               "\n"
               "[train]\n"
               "epochs = 2\n"
               "batch_size = 8\n"
               "\n"
               "[run]\n"
               "classes = 0\n"
               "seeds = 3\n"
               "scale = 0.05\n"
               "output_dir = " << (root / "out").string() << "\n"
               "timing = none\n";
    }

    std::string env() const { return "QSVDD_DATA_DIR='" + (root / "data").string() + "'"; }

    static Fixture& instance() {
        static Fixture f;
        return f;
    }
};

}  // namespace

TEST_CASE("show-circuit prints the qcnn parameter golden") {
    const auto r = run_cli("show-circuit --ansatz qcnn --qubits 8");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("parameters: 75") != std::string::npos);
    CHECK(r.out.find("digest: ") != std::string::npos);
}

TEST_CASE("show-circuit prints the qae parameter and depth goldens") {
    const auto r = run_cli("show-circuit --ansatz qae --qubits 8 --trash 6 --layers 9");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("parameters: 78") != std::string::npos);
    CHECK(r.out.find("depth: 253") != std::string::npos);
}

TEST_CASE("show-circuit emits parseable json on request") {
    const auto r = run_cli("show-circuit --ansatz qae --qubits 4 --trash 2 --layers 1 --json");
    CHECK(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out.substr(0, r.out.find("parameters:")));
    CHECK(doc.at("n_qubits") == 4);
    CHECK(doc.at("kind") == "qae");
}

TEST_CASE("parse failures exit with code 2") {
    CHECK(run_cli("show-circuit --bogus-flag").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);               // missing subcommand
    CHECK(run_cli("train").exit_code == 2);          // missing required --config
    CHECK(run_cli("frobnicate").exit_code == 2);     // unknown subcommand
}

TEST_CASE("config failures exit with code 1 and a diagnostic") {
    const auto bad_shape = run_cli("show-circuit --ansatz qae --qubits 8 --trash 8");
    CHECK(bad_shape.exit_code == 1);
    CHECK(bad_shape.err.find("error:") != std::string::npos);

    const auto missing = run_cli("train --config /nonexistent/experiment.ini");
    CHECK(missing.exit_code == 1);
    CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("train writes a checkpoint plus provenance and eval reproduces the auc") {
    auto& fix = Fixture::instance();
    const auto train =
        run_cli("train --config '" + fix.config_path + "'", fix.env());
    CHECK(train.exit_code == 0);
    REQUIRE(train.out.find("auc: ") != std::string::npos);
    const auto auc_line = train.out.substr(train.out.find("auc: "));

    const fs::path out = fix.root / "out";
    const fs::path ckpt = out / "qsvdd_c0_s3.checkpoint.json";
    REQUIRE(fs::exists(ckpt));
    CHECK(fs::exists(out / "config.resolved.ini"));
    CHECK(fs::exists(out / "seeds.txt"));
    CHECK(fs::exists(out / "VERSION"));

    const auto doc = nlohmann::json::parse(slurp(ckpt));
    CHECK(doc.at("schema") == "qsvdd.run-checkpoint.v1");
    CHECK(doc.at("normal_class") == 0);
    CHECK(doc.at("seed") == 3);
    CHECK(doc.at("method") == "QSVDD");

    const auto eval = run_cli(
        "eval --config '" + fix.config_path + "' --checkpoint '" + ckpt.string() + "'",
        fix.env());
    CHECK(eval.exit_code == 0);
    CHECK(eval.out.substr(eval.out.find("auc: "), auc_line.find('\n')) ==
          auc_line.substr(0, auc_line.find('\n')));
    CHECK(eval.out.find("test_normal: 50") != std::string::npos);
    CHECK(eval.out.find("test_abnormal: 45") != std::string::npos);
}

TEST_CASE("benchmark runs are byte-identical across invocations") {
    auto& fix = Fixture::instance();
    const auto out_a = (fix.root / "bench_a").string();
    const auto out_b = (fix.root / "bench_b").string();
    const auto a = run_cli("benchmark --config '" + fix.config_path + "' --out '" + out_a + "'",
                           fix.env());
    REQUIRE(a.exit_code == 0);
    const auto b = run_cli("benchmark --config '" + fix.config_path + "' --out '" + out_b + "'",
                           fix.env());
    REQUIRE(b.exit_code == 0);

    const auto csv_a = slurp(fs::path(out_a) / "results.csv");
    const auto csv_b = slurp(fs::path(out_b) / "results.csv");
    CHECK(!csv_a.empty());
    CHECK(csv_a == csv_b);
    CHECK(slurp(fs::path(out_a) / "results.aggregate.csv") ==
          slurp(fs::path(out_b) / "results.aggregate.csv"));
}

TEST_CASE("benchmark exports json when asked") {
    auto& fix = Fixture::instance();
    const auto out_dir = (fix.root / "bench_json").string();
    const auto r = run_cli("benchmark --config '" + fix.config_path + "' --out '" + out_dir +
                               "' --format json",
                           fix.env());
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(slurp(fs::path(out_dir) / "results.json"));
    REQUIRE(doc.is_array());
    CHECK(doc.size() == 1);
    CHECK(doc[0].at("normal_class") == 0);
    CHECK(doc[0].at("d_prime") == 9);
}

TEST_CASE("the desk preset shrinks the run") {
    auto& fix = Fixture::instance();
    const auto out_dir = (fix.root / "desk").string();
    // Desk preset forces scale 0.1; the fixture's test partition has 60 per
    // class, enough for the clamped draw warning paths to stay quiet on the
    // abnormal side (10 per class) while normals clamp to 60.
    const auto r = run_cli("train --config '" + fix.config_path + "' --preset desk --out '" +
                               out_dir + "'",
                           fix.env());
    CHECK(r.exit_code == 0);
    const auto resolved = slurp(fs::path(out_dir) / "config.resolved.ini");
    CHECK(resolved.find("scale = 0.1") != std::string::npos);
    CHECK(resolved.find("epochs = 20") != std::string::npos);
}

TEST_CASE("sweep-latent writes the per-dimension summary") {
    auto& fix = Fixture::instance();
    const auto out_dir = (fix.root / "sweep").string();

    // Trim the sweep to one epoch for speed via a copied config.
    const auto cfg = (fix.root / "sweep.ini").string();
    {
        std::ifstream in(fix.config_path);
        std::ostringstream body;
        body << in.rdbuf();
        auto text = body.str();
        const auto pos = text.find("epochs = 2");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 10, "epochs = 1");
        std::ofstream(cfg) << text;
    }

    const auto r =
        run_cli("sweep-latent --config '" + cfg + "' --out '" + out_dir + "'", fix.env());
    REQUIRE(r.exit_code == 0);
    const auto summary = slurp(fs::path(out_dir) / "sweep_summary.csv");
    CHECK(summary.find("dataset,d_prime,mean_auc,std_auc,runs\n") == 0);
    for (const char* d : {"1", "3", "6", "9", "12", "15"}) {
        CHECK(summary.find(std::string("synthetic,") + d + ",") != std::string::npos);
    }
}
