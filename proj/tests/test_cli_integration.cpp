#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hyformer/imageio.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = HYFORMER_CLI_PATH;
const char* kSynth = SYNTH_TOOL_PATH;

int run(const std::string& cmd) {
    int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Workspace {
    fs::path root;
    Workspace() {
        root = fs::temp_directory_path() / ("hyformer_cli_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(next()++));
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }
    static int& next() {
        static int n = 0;
        return n;
    }
    std::string p(const std::string& rel) const { return (root / rel).string(); }
};

// small-model flags shared by the training invocations
std::string tiny_model_flags() {
    return " --set model.input_size=32 --set preprocess.target_size=32"
           " --set model.cnn.channels=8,12,16,24 --set model.swin.channels=8,16,32,64"
           " --set model.swin.heads=1,2,4,8 --set model.fusion_channels=8,12,16,24"
           " --set model.decoder_channels=16,12,8 --set model.cls_hidden=24"
           " --set train.batch_size=4";
}

}  // namespace

TEST_CASE("end-to-end: synth -> split -> train -> eval -> interpret -> report") {
    Workspace ws;
    REQUIRE(run(std::string(kSynth) + " --out " + ws.p("busi") + " --style busi --size 32 --normal 4 --benign 4 --malignant 4 --seed 3") == 0);

    REQUIRE(run(std::string(kCli) + " split --busi-root " + ws.p("busi") + " --out " + ws.p("manifest.tsv") +
                " --fractions 0.5 0.25 0.25 --seed 11") == 0);
    CHECK(fs::exists(ws.p("manifest.tsv")));

    std::string train_cmd = std::string(kCli) + " train --manifest " + ws.p("manifest.tsv") + " --out " +
                            ws.p("run1") + tiny_model_flags() + " --epochs 1 --seed 42 --lr-init 0.002";
    REQUIRE(run(train_cmd) == 0);
    CHECK(fs::exists(ws.p("run1/best.ckpt")));
    CHECK(fs::exists(ws.p("run1/last.ckpt")));
    CHECK(fs::exists(ws.p("run1/history.tsv")));
    CHECK(fs::exists(ws.p("run1/config.kv")));
    CHECK(fs::exists(ws.p("run1/run_manifest.kv")));

    // the --epochs override lands in the resolved config snapshot
    std::string manifest_text = slurp(ws.p("run1/run_manifest.kv"));
    CHECK(manifest_text.find("config.train.epochs = 1") != std::string::npos);
    CHECK(manifest_text.find("dataset_fingerprint = 0x") != std::string::npos);

    REQUIRE(run(std::string(kCli) + " eval --checkpoint " + ws.p("run1/best.ckpt") + " --manifest " +
                ws.p("manifest.tsv") + " --split test --out " + ws.p("eval1") + " --bootstrap") == 0);
    CHECK(fs::exists(ws.p("eval1/metrics_report.txt")));
    CHECK(fs::exists(ws.p("eval1/metrics_report.kv")));
    CHECK(fs::exists(ws.p("eval1/per_image_metrics.tsv")));
    CHECK(slurp(ws.p("eval1/metrics_report.kv")).find("dice.ci95_low") != std::string::npos);

    // idempotence: re-running the evaluation reproduces byte-identical reports
    REQUIRE(run(std::string(kCli) + " eval --checkpoint " + ws.p("run1/best.ckpt") + " --manifest " +
                ws.p("manifest.tsv") + " --split test --out " + ws.p("eval1b") + " --bootstrap") == 0);
    CHECK(slurp(ws.p("eval1/metrics_report.kv")) == slurp(ws.p("eval1b/metrics_report.kv")));
    CHECK(slurp(ws.p("eval1/per_image_metrics.tsv")) == slurp(ws.p("eval1b/per_image_metrics.tsv")));

    // interpret two ids from the manifest
    REQUIRE(run(std::string(kCli) + " interpret --checkpoint " + ws.p("run1/best.ckpt") + " --manifest " +
                ws.p("manifest.tsv") +
                " --ids \"benign/benign (1)\" \"malignant/malignant (2)\" --out " + ws.p("figs")) == 0);
    CHECK(fs::exists(ws.p("figs/interpret.kv")));
    CHECK(fs::exists(ws.p("figs/panel_benign_benign_(1).png")));
    {
        // five side-by-side square panels: input | gt | prediction | attention | grad-cam
        auto panel = hyformer::io::load_image_rgb(ws.p("figs/panel_benign_benign_(1).png"));
        CHECK(panel.dim(2) == 5 * panel.dim(1));
    }
    std::string sidecar = slurp(ws.p("figs/interpret.kv"));
    CHECK(sidecar.find("benign/benign (1).attention_iou") != std::string::npos);
    CHECK(sidecar.find("malignant/malignant (2).attention_iou") != std::string::npos);

    REQUIRE(run(std::string(kCli) + " report --run " + ws.p("eval1") + " --out " + ws.p("report.txt")) == 0);
    CHECK(fs::exists(ws.p("report.txt")));
}

TEST_CASE("exit code 2 on configuration errors") {
    Workspace ws;
    // missing dataset path
    CHECK(run(std::string(kCli) + " train --manifest " + ws.p("nope.tsv") + " --out " + ws.p("r")) == 2);
    // unknown config key lists valid keys
    {
        std::ofstream cfg(ws.p("bad.kv"));
        cfg << "train.leerning_rate = 0.1\n";
    }
    int status = std::system((std::string(kCli) + " train --config " + ws.p("bad.kv") + " --manifest " +
                              ws.p("nope.tsv") + " --out " + ws.p("r") + " 2> " + ws.p("stderr.txt") +
                              " >/dev/null")
                                 .c_str());
    CHECK(WEXITSTATUS(status) == 2);
    std::string err = slurp(ws.p("stderr.txt"));
    CHECK(err.find("unknown config key") != std::string::npos);
    CHECK(err.find("train.lr_init") != std::string::npos);  // the valid-keys list

    // malformed CLI usage
    CHECK(run(std::string(kCli) + " train") == 2);
    CHECK(run(std::string(kCli) + " split --out x.tsv") == 2);  // needs exactly one root
    // interpret with a bogus id
    CHECK(run(std::string(kCli) + " interpret --checkpoint nothere.ckpt --manifest nope.tsv --ids z --out " +
              ws.p("f")) != 0);
}

TEST_CASE("deterministic mode: same seed twice gives byte-identical history") {
    Workspace ws;
    REQUIRE(run(std::string(kSynth) + " --out " + ws.p("busi") + " --style busi --size 32 --normal 3 --benign 3 --malignant 3 --seed 5") == 0);
    REQUIRE(run(std::string(kCli) + " split --busi-root " + ws.p("busi") + " --out " + ws.p("m.tsv") +
                " --fractions 0.5 0.25 0.25 --seed 7") == 0);
    std::string base = std::string(kCli) + " train --manifest " + ws.p("m.tsv") + tiny_model_flags() +
                       " --epochs 2 --seed 9 --lr-init 0.002";
    REQUIRE(run(base + " --out " + ws.p("a")) == 0);
    REQUIRE(run(base + " --out " + ws.p("b")) == 0);
    CHECK(slurp(ws.p("a/history.tsv")) == slurp(ws.p("b/history.tsv")));
    CHECK(!slurp(ws.p("a/history.tsv")).empty());
    // best checkpoints agree byte-for-byte as well
    CHECK(slurp(ws.p("a/best.ckpt")) == slurp(ws.p("b/best.ckpt")));

    // re-running into the same non-empty directory requires --force
    CHECK(run(base + " --out " + ws.p("a")) == 2);
    CHECK(run(base + " --out " + ws.p("a") + " --force") == 0);
}

TEST_CASE("eval: ensemble of three seeds with seed summary and wilcoxon compare") {
    Workspace ws;
    REQUIRE(run(std::string(kSynth) + " --out " + ws.p("busi") + " --style busi --size 32 --normal 3 --benign 4 --malignant 4 --seed 13") == 0);
    REQUIRE(run(std::string(kCli) + " split --busi-root " + ws.p("busi") + " --out " + ws.p("m.tsv") +
                " --fractions 0.6 0.2 0.2 --seed 3") == 0);
    for (int seed : {42, 77}) {
        REQUIRE(run(std::string(kCli) + " train --manifest " + ws.p("m.tsv") + " --out " +
                    ws.p("run" + std::to_string(seed)) + tiny_model_flags() + " --epochs 1 --seed " +
                    std::to_string(seed) + " --lr-init 0.002") == 0);
    }
    REQUIRE(run(std::string(kCli) + " eval --checkpoint " + ws.p("run42/best.ckpt") + " --checkpoint " +
                ws.p("run77/best.ckpt") + " --manifest " + ws.p("m.tsv") + " --split test --out " +
                ws.p("ens")) == 0);
    CHECK(fs::exists(ws.p("ens/seed_summary.kv")));
    CHECK(slurp(ws.p("ens/seed_summary.kv")).find("dice.std") != std::string::npos);

    // self-comparison: identical per-image values give p = 1
    REQUIRE(run(std::string(kCli) + " eval --checkpoint " + ws.p("run42/best.ckpt") + " --manifest " +
                ws.p("m.tsv") + " --split test --out " + ws.p("cmp") + " --compare " +
                ws.p("ens/per_image_metrics.tsv")) != 1);  // may be 0; degenerate p handled below
    REQUIRE(run(std::string(kCli) + " eval --checkpoint " + ws.p("run42/best.ckpt") + " --manifest " +
                ws.p("m.tsv") + " --split test --out " + ws.p("cmp_self") + " --compare " +
                ws.p("cmp/per_image_metrics.tsv")) == 0);
    std::string cmpkv = slurp(ws.p("cmp_self/comparison.kv"));
    CHECK(cmpkv.find("wilcoxon.p_two_sided = 1") != std::string::npos);
    CHECK(cmpkv.find("wilcoxon.degenerate = true") != std::string::npos);
}

TEST_CASE("adapt: zero-shot plus fine-tuning rows on an external-style dataset") {
    Workspace ws;
    REQUIRE(run(std::string(kSynth) + " --out " + ws.p("busi") + " --style busi --size 32 --normal 3 --benign 4 --malignant 4 --seed 17") == 0);
    REQUIRE(run(std::string(kSynth) + " --out " + ws.p("ext") + " --style external --size 32 --normal 2 --benign 5 --malignant 5 --inverted --seed 19") == 0);
    REQUIRE(run(std::string(kCli) + " split --busi-root " + ws.p("busi") + " --out " + ws.p("m.tsv") +
                " --fractions 0.6 0.2 0.2 --seed 3") == 0);
    REQUIRE(run(std::string(kCli) + " split --external-root " + ws.p("ext") + " --out " + ws.p("ext.tsv")) == 0);
    REQUIRE(run(std::string(kCli) + " train --manifest " + ws.p("m.tsv") + " --out " + ws.p("src") +
                tiny_model_flags() + " --epochs 2 --seed 42 --lr-init 0.002") == 0);

    REQUIRE(run(std::string(kCli) + " adapt --checkpoint " + ws.p("src/best.ckpt") + " --manifest " +
                ws.p("ext.tsv") + " --out " + ws.p("adapt") + tiny_model_flags() +
                " --fractions 0.25 0.5 --set train.epochs=1 --set train.patience=1"
                " --source-reference 0.8") == 0);
    CHECK(fs::exists(ws.p("adapt/learning_curve.tsv")));
    CHECK(fs::exists(ws.p("adapt/learning_curve.kv")));
    CHECK(fs::exists(ws.p("adapt/learning_curve.png")));
    CHECK(fs::exists(ws.p("adapt/run_manifest.kv")));

    // one row per fraction plus the zero-shot row
    std::string curve = slurp(ws.p("adapt/learning_curve.tsv"));
    int rows = 0;
    for (char ch : curve) rows += ch == '\n';
    CHECK(rows == 1 + 2 + 1);  // header + zero-shot + two fractions
}

TEST_CASE("report skips malformed run directories with a warning") {
    Workspace ws;
    fs::create_directories(ws.p("good"));
    {
        std::ofstream tsv(ws.p("good/per_image_metrics.tsv"));
        tsv << "# id\tdice\tiou\n";
        tsv << "a\t0.5\t0.4\nb\t0.7\t0.6\nc\t0.8\t0.7\n";
        std::ofstream kv(ws.p("good/metrics_report.kv"));
        kv << "dice.mean = 0.666\niou.mean = 0.56\nclassification.accuracy = 0.9\n";
    }
    fs::create_directories(ws.p("broken"));
    CHECK(run(std::string(kCli) + " report --run " + ws.p("good") + " --run " + ws.p("broken") + " --out " +
              ws.p("cmp.txt")) == 0);
    CHECK(slurp(ws.p("cmp.txt")).find("good") != std::string::npos);

    // all-invalid input is a runtime failure
    CHECK(run(std::string(kCli) + " report --run " + ws.p("broken") + " --out " + ws.p("x.txt")) == 1);
}
