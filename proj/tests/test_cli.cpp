#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "rss_sentinel_test_cli";

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run cli(const std::string& args, const std::string& env = "") {
    fs::create_directories(kWork);
    const fs::path out = kWork / "stdout.txt";
    const fs::path err = kWork / "stderr.txt";
    const std::string cmd = env + " \"" RSS_SENTINEL_CLI "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Tiny scenario for the end-to-end commands.
const std::string kSmall = " --override scenario.seconds_per_state=200 --override fusion.train.epochs=10"
                           " --override iteration.max_iterations=2";

}  // namespace

TEST_CASE("help and unknown subcommands") {
    CHECK(cli("--help").code == 0);
    CHECK(cli("teleport").code == 2);
}

TEST_CASE("evaluate hand case") {
    const fs::path dir = kWork / "eval";
    fs::create_directories(dir);
    write_text(dir / "truth.csv", "label\n0\n0\n1\n1\n");
    write_text(dir / "pred.csv", "label\n0\n1\n1\n0\n");
    const Run r = cli("evaluate --truth " + (dir / "truth.csv").string() + " --pred " + (dir / "pred.csv").string() +
                      " --classes 2 --out " + dir.string());
    CHECK(r.code == 0);
    CHECK(r.out.find("FP=0.5000 FN=0.5000 DA=0.5000") != std::string::npos);
    CHECK(fs::exists(dir / "confusion.csv"));
    CHECK(fs::exists(dir / "metrics.json"));
}

TEST_CASE("validation errors exit 2 and name the problem") {
    const fs::path dir = kWork / "errors";
    fs::create_directories(dir);
    write_text(dir / "truth.csv", "label\n0\nzz\n1\n");
    write_text(dir / "pred.csv", "label\n0\n1\n1\n");
    Run r = cli("evaluate --truth " + (dir / "truth.csv").string() + " --pred " + (dir / "pred.csv").string() +
                " --classes 2");
    CHECK(r.code == 2);
    CHECK(r.err.find("truth.csv:3") != std::string::npos);

    write_text(dir / "short.csv", "label\n0\n");
    r = cli("evaluate --truth " + (dir / "short.csv").string() + " --pred " + (dir / "pred.csv").string() +
            " --classes 2");
    CHECK(r.code == 2);

    write_text(dir / "noenv.json", "{\"transfer\": {\"lambda\": 0.1}}");
    r = cli("pipeline --config " + (dir / "noenv.json").string() + " --out " + (dir / "o").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("environment") != std::string::npos);

    r = cli("pipeline --override transfer.lambda=-1 --out " + (dir / "o").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("transfer.lambda") != std::string::npos);

    r = cli("pipeline --config " + (dir / "missing.json").string());
    CHECK(r.code == 2);

    r = cli("evaluate --truth a --pred b --classes 2", "RSS_SENTINEL_LOG=loud");
    CHECK(r.code == 2);
    CHECK(r.err.find("RSS_SENTINEL_LOG") != std::string::npos);
}

TEST_CASE("pipeline writes every artifact and prints the summary") {
    const fs::path dir = kWork / "pipe";
    fs::remove_all(dir);
    const Run r = cli("pipeline --seed 3 --out " + dir.string() + kSmall, "RSS_SENTINEL_LOG=error");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("DA=", 0) == 0);
    for (const char* name : {"report.json", "confusion.csv", "transfer_model.json", "fusion_model.json",
                             "predictions.csv", "config.resolved.json"})
        CHECK(fs::exists(dir / name));
}

TEST_CASE("staged commands reproduce the pipeline") {
    const fs::path dir = kWork / "staged";
    fs::remove_all(dir);
    const std::string common = " --seed 3 --out " + dir.string() + kSmall;
    REQUIRE(cli("simulate --stage offline" + common).code == 0);
    REQUIRE(cli("simulate --stage online" + common).code == 0);
    REQUIRE(cli("extract --trace " + (dir / "offline_trace.csv").string() + " --states " +
                (dir / "offline_states.csv").string() + " --name source_features.csv" + common)
                .code == 0);
    REQUIRE(cli("extract --trace " + (dir / "online_trace.csv").string() + " --states " +
                (dir / "online_states.csv").string() + " --name target_features.csv" + common)
                .code == 0);
    REQUIRE(cli("fuse-train --source " + (dir / "source_features.csv").string() + " --target " +
                (dir / "target_features.csv").string() + common)
                .code == 0);
    const Run det = cli("detect --source " + (dir / "fused_source.csv").string() + " --target " +
                        (dir / "fused_target.csv").string() + common);
    REQUIRE(det.code == 0);

    const fs::path pipe = kWork / "pipe_ref";
    fs::remove_all(pipe);
    const Run ref = cli("pipeline --seed 3 --out " + pipe.string() + kSmall);
    REQUIRE(ref.code == 0);
    CHECK(det.out == ref.out);
    CHECK(slurp(dir / "predictions.csv") == slurp(pipe / "predictions.csv"));
}

TEST_CASE("fusion bypass skips the network") {
    const fs::path dir = kWork / "bypass";
    fs::remove_all(dir);
    const Run r = cli("pipeline --fusion-bypass --out " + dir.string() + kSmall);
    REQUIRE(r.code == 0);
    CHECK_FALSE(fs::exists(dir / "fusion_model.json"));
}
