#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "core/checkpoint.hpp"
#include "core/config.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("TTAPT_CLI");
    REQUIRE_MESSAGE(p != nullptr, "TTAPT_CLI must point at the ttapt binary");
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "ttapt_cli_out.txt";
    const fs::path err = fs::temp_directory_path() / "ttapt_cli_err.txt";
    const std::string cmd =
        cli_path() + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

const char* kTinySets =
    " --set n_classes=2 --set clip_seconds=0.25 --set pretrain_clips_per_class=8"
    " --set val_clips_per_class=4 --set test_clips_per_class=3"
    " --set embed_dim=32 --set text_dim=32 --set audio_hidden=64 --set text_hidden=32"
    " --set n_views=2 --set max_time_mask=4 --set max_freq_mask=2"
    " --set mlp_hidden=8 --set batch_size=3";

} // namespace

TEST_CASE("usage and config errors exit 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);

    const CliResult r = run_cli("pretrain --config /missing/conf.json --out /tmp/x.ckpt");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("/missing/conf.json") != std::string::npos);
    CHECK(r.err.find("error[2]") != std::string::npos);
}

TEST_CASE("cli end-to-end contract") {
    const fs::path dir = fs::temp_directory_path() / "ttapt_cli_e2e";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();

    // pretrain with two seeds: different checkpoints
    CHECK(run_cli("pretrain --out " + d + "/m1.ckpt --seed 1" + kTinySets).exit_code == 0);
    CHECK(run_cli("pretrain --out " + d + "/m2.ckpt --seed 2" + kTinySets).exit_code == 0);
    CHECK(fs::exists(d + "/m1.ckpt"));
    CHECK(slurp(d + "/m1.ckpt") != slurp(d + "/m2.ckpt"));

    // gen-data writes a loadable directory, reproducibly
    CHECK(run_cli("gen-data --out " + d + "/data --seed 1" + kTinySets).exit_code == 0);
    CHECK(fs::exists(d + "/data/manifest.json"));
    CHECK(run_cli("gen-data --out " + d + "/data2 --seed 1" + kTinySets).exit_code == 0);
    CHECK(slurp(d + "/data/manifest.json") == slurp(d + "/data2/manifest.json"));
    CHECK(slurp(d + "/data/wavs/clip_00000.f32") == slurp(d + "/data2/wavs/clip_00000.f32"));

    // adapt honors flags and echoes them in the CSV
    const std::string adapt_cmd = "adapt --checkpoint " + d + "/m1.ckpt --data " + d +
                                  "/data --out " + d + "/run --seed 1 --mode episodic"
                                  " --batch-size 3 --steps 2" + kTinySets;
    CHECK(run_cli(adapt_cmd).exit_code == 0);
    const std::string csv = slurp(d + "/run.csv");
    CHECK(csv.find(",episodic,3,2,") != std::string::npos);

    // bit-identical outputs on re-run with identical config + seed
    const std::string run1 = slurp(d + "/run.csv");
    const std::string ckpt1 = slurp(d + "/run.run.ckpt");
    const std::string trace1 = slurp(d + "/run.trace.jsonl");
    CHECK(run_cli(adapt_cmd).exit_code == 0);
    CHECK(slurp(d + "/run.csv") == run1);
    CHECK(slurp(d + "/run.run.ckpt") == ckpt1);
    CHECK(slurp(d + "/run.trace.jsonl") == trace1);

    // model-hash pin mismatch exits 3
    const CliResult pin = run_cli("adapt --checkpoint " + d + "/m1.ckpt --data " + d +
                                  "/data --out " + d + "/run2 --seed 1" + kTinySets +
                                  " --set model_hash=0000000000000000");
    CHECK(pin.exit_code == 3);

    // schema mismatch exits 4
    std::ofstream bad(d + "/bad.csv");
    bad << "schema_version,nope\n";
    bad.close();
    CHECK(run_cli("report --out " + d + "/merged.csv " + d + "/bad.csv").exit_code == 4);

    // report over the real run CSV works
    CHECK(run_cli("report --out " + d + "/merged.csv " + d + "/run.csv").exit_code == 0);
    CHECK(slurp(d + "/merged.csv").find("mean_delta") != std::string::npos);

    // check-grad prints the max relative error and passes
    const CliResult grad = run_cli("check-grad --set gradcheck_instances=3");
    CHECK(grad.exit_code == 0);
    CHECK(grad.out.find("PASS") != std::string::npos);

    // the run checkpoint echoes the effective config; re-hashing it
    // reproduces the config_hash column of the CSV row
    {
        const auto ckpt = ttapt::read_checkpoint(d + "/run.run.ckpt");
        ttapt::Config echoed;
        echoed.effective = ckpt.header.at("config");
        const std::string rehash = echoed.hash_hex();
        CHECK(csv.find("," + rehash + ",") != std::string::npos);
    }

    // the CSV accuracy must equal a recount from the prediction log
    {
        const auto manifest =
            nlohmann::json::parse(std::ifstream(d + "/data/manifest.json"));
        std::vector<int> labels;
        for (const auto& c : manifest.at("clips")) labels.push_back(c.at("label"));

        int correct = 0, total = 0;
        std::ifstream trace(d + "/run.trace.jsonl");
        std::string line;
        while (std::getline(trace, line)) {
            const auto j = nlohmann::json::parse(line);
            if (j.at("type") != "pred") continue;
            ++total;
            if (j.at("pred") == labels.at(j.at("clip"))) ++correct;
        }
        REQUIRE(total == static_cast<int>(labels.size()));
        char acc[32];
        std::snprintf(acc, sizeof(acc), "%.9g", double(correct) / total);
        CHECK(csv.find(acc) != std::string::npos);
    }

    // crossdomain over two shifts: 2x2 cells + 2 avg rows + header, and
    // bit-identical on re-run
    const std::string cross_cmd =
        "crossdomain --checkpoint " + d + "/m1.ckpt --out " + d + "/cross.csv --seed 1" +
        kTinySets + " --set crossdomain_shifts=additive_noise,gain --set steps_per_batch=1"
        " --jobs 2";
    CHECK(run_cli(cross_cmd).exit_code == 0);
    std::ifstream cross_in(d + "/cross.csv");
    std::string line;
    int rows = 0;
    while (std::getline(cross_in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 7);
    const std::string cross1 = slurp(d + "/cross.csv");
    CHECK(run_cli(cross_cmd).exit_code == 0);
    CHECK(slurp(d + "/cross.csv") == cross1);

    fs::remove_all(dir);
}
