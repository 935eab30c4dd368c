// Command-line driver. Links the ttapt C API only; all pipeline logic lives
// behind the shared library.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttapt.h"

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    long long seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON config file (defaults used when omitted)");
    cmd->add_option("--set", o.sets, "override a config key, e.g. --set lr=0.001")
        ->type_name("KEY=VALUE");
    cmd->add_option("--seed", o.seed, "override the master seed");
}

// values parse as JSON literals when possible, else as strings
nlohmann::json parse_value(const std::string& v) {
    nlohmann::json j = nlohmann::json::parse(v, nullptr, false);
    if (!j.is_discarded() && (j.is_number() || j.is_boolean())) return j;
    return v;
}

int fail(ttapt_status status) {
    std::fprintf(stderr, "ttapt: error[%d]: %s\n", static_cast<int>(status),
                 ttapt_last_error());
    return static_cast<int>(status);
}

ttapt_config* open_config(const CommonOpts& o, const nlohmann::json& extra) {
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "ttapt: error[2]: --set expects KEY=VALUE, got '%s'\n",
                         kv.c_str());
            return nullptr;
        }
        overrides[kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }
    if (o.seed >= 0) overrides["seed"] = o.seed;
    for (const auto& [k, v] : extra.items()) overrides[k] = v;

    ttapt_config* cfg = ttapt_config_open(o.config_path.empty() ? nullptr : o.config_path.c_str(),
                                          overrides.dump().c_str());
    if (!cfg) fail(ttapt_last_status());
    return cfg;
}

struct ConfigGuard {
    ttapt_config* cfg = nullptr;
    ~ConfigGuard() { ttapt_config_close(cfg); }
};
struct ModelGuard {
    ttapt_model* m = nullptr;
    ~ModelGuard() { ttapt_model_close(m); }
};
struct DatasetGuard {
    ttapt_dataset* d = nullptr;
    ~DatasetGuard() { ttapt_dataset_close(d); }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"test-time prompt adaptation for a toy contrastive audio-text model"};
    app.require_subcommand(1);

    CommonOpts pre_opts;
    std::string pre_out;
    auto* pre = app.add_subcommand("pretrain", "pretrain the frozen toy model");
    add_common(pre, pre_opts);
    pre->add_option("--out", pre_out, "output model checkpoint")->required();

    CommonOpts gen_opts;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset directory");
    add_common(gen, gen_opts);
    gen->add_option("--out", gen_out, "output dataset directory")->required();

    CommonOpts adapt_opts;
    std::string adapt_ckpt, adapt_data, adapt_out, adapt_mode;
    long long adapt_batch = -1, adapt_steps = -1;
    double adapt_lr = -1.0;
    auto* adapt = app.add_subcommand("adapt", "adapt prompts on a test stream");
    add_common(adapt, adapt_opts);
    adapt->add_option("--checkpoint", adapt_ckpt, "model checkpoint")->required();
    adapt->add_option("--data", adapt_data, "dataset directory")->required();
    adapt->add_option("--out", adapt_out, "output prefix for .run.ckpt/.trace.jsonl/.csv")
        ->required();
    adapt->add_option("--mode", adapt_mode, "episodic or online");
    adapt->add_option("--batch-size", adapt_batch, "test batch size");
    adapt->add_option("--steps", adapt_steps, "optimization steps per batch");
    adapt->add_option("--lr", adapt_lr, "learning rate");

    CommonOpts abl_opts;
    std::string abl_ckpt, abl_data, abl_out;
    long long abl_jobs = -1;
    auto* abl = app.add_subcommand("ablate", "run the 40-cell ablation matrix");
    add_common(abl, abl_opts);
    abl->add_option("--checkpoint", abl_ckpt, "model checkpoint")->required();
    abl->add_option("--data", abl_data, "dataset directory")->required();
    abl->add_option("--out", abl_out, "output CSV")->required();
    abl->add_option("--jobs", abl_jobs, "parallel matrix cells");

    CommonOpts cross_opts;
    std::string cross_ckpt, cross_out;
    long long cross_jobs = -1;
    auto* cross = app.add_subcommand("crossdomain", "adapt on each shift, test on every other");
    add_common(cross, cross_opts);
    cross->add_option("--checkpoint", cross_ckpt, "model checkpoint")->required();
    cross->add_option("--out", cross_out, "output CSV")->required();
    cross->add_option("--jobs", cross_jobs, "parallel matrix cells");

    std::string rep_out;
    std::vector<std::string> rep_inputs;
    auto* rep = app.add_subcommand("report", "merge run CSVs into per-seed means");
    rep->add_option("--out", rep_out, "output CSV")->required();
    rep->add_option("inputs", rep_inputs, "input CSV files")->required();

    CommonOpts grad_opts;
    auto* grad = app.add_subcommand("check-grad", "finite-difference gradient check");
    add_common(grad, grad_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "ttapt: error[2]: %s\n", e.what());
        return 2;
    }

    if (pre->parsed()) {
        ConfigGuard cfg{open_config(pre_opts, {})};
        if (!cfg.cfg) return static_cast<int>(ttapt_last_status());
        double val_acc = 0.0;
        const ttapt_status st = ttapt_pretrain(cfg.cfg, pre_out.c_str(), &val_acc);
        if (st != TTAPT_OK) return fail(st);
        std::printf("pretrain: held-out zero-shot accuracy %.4f\n", val_acc);
        std::printf("pretrain: wrote %s\n", pre_out.c_str());
        return 0;
    }

    if (gen->parsed()) {
        ConfigGuard cfg{open_config(gen_opts, {})};
        if (!cfg.cfg) return static_cast<int>(ttapt_last_status());
        const ttapt_status st = ttapt_gen_data(cfg.cfg, gen_out.c_str());
        if (st != TTAPT_OK) return fail(st);
        std::printf("gen-data: wrote %s\n", gen_out.c_str());
        return 0;
    }

    if (adapt->parsed()) {
        nlohmann::json extra = nlohmann::json::object();
        if (!adapt_mode.empty()) extra["mode"] = adapt_mode;
        if (adapt_batch >= 0) extra["batch_size"] = adapt_batch;
        if (adapt_steps >= 0) extra["steps_per_batch"] = adapt_steps;
        if (adapt_lr >= 0.0) extra["lr"] = adapt_lr;

        ConfigGuard cfg{open_config(adapt_opts, extra)};
        if (!cfg.cfg) return static_cast<int>(ttapt_last_status());
        ModelGuard model{ttapt_model_open(cfg.cfg, adapt_ckpt.c_str())};
        if (!model.m) return fail(ttapt_last_status());
        DatasetGuard data{ttapt_dataset_open(adapt_data.c_str())};
        if (!data.d) return fail(ttapt_last_status());

        double zs = -1.0, ad = -1.0;
        const ttapt_status st =
            ttapt_adapt(cfg.cfg, model.m, data.d, adapt_out.c_str(), &zs, &ad);
        if (st != TTAPT_OK) return fail(st);
        if (zs >= 0.0)
            std::printf("adapt: zero-shot %.4f -> adapted %.4f (delta %+.4f)\n", zs, ad, ad - zs);
        else
            std::printf("adapt: dataset carries no labels; predictions written to trace\n");
        std::printf("adapt: wrote %s.run.ckpt %s.trace.jsonl %s.csv\n", adapt_out.c_str(),
                    adapt_out.c_str(), adapt_out.c_str());
        return 0;
    }

    if (abl->parsed()) {
        nlohmann::json extra = nlohmann::json::object();
        if (abl_jobs >= 1) extra["jobs"] = abl_jobs;
        ConfigGuard cfg{open_config(abl_opts, extra)};
        if (!cfg.cfg) return static_cast<int>(ttapt_last_status());
        ModelGuard model{ttapt_model_open(cfg.cfg, abl_ckpt.c_str())};
        if (!model.m) return fail(ttapt_last_status());
        DatasetGuard data{ttapt_dataset_open(abl_data.c_str())};
        if (!data.d) return fail(ttapt_last_status());
        const ttapt_status st = ttapt_ablate(cfg.cfg, model.m, data.d, abl_out.c_str());
        if (st != TTAPT_OK) return fail(st);
        std::printf("ablate: wrote %s\n", abl_out.c_str());
        return 0;
    }

    if (cross->parsed()) {
        nlohmann::json extra = nlohmann::json::object();
        if (cross_jobs >= 1) extra["jobs"] = cross_jobs;
        ConfigGuard cfg{open_config(cross_opts, extra)};
        if (!cfg.cfg) return static_cast<int>(ttapt_last_status());
        ModelGuard model{ttapt_model_open(cfg.cfg, cross_ckpt.c_str())};
        if (!model.m) return fail(ttapt_last_status());
        const ttapt_status st = ttapt_crossdomain(cfg.cfg, model.m, cross_out.c_str());
        if (st != TTAPT_OK) return fail(st);
        std::printf("crossdomain: wrote %s\n", cross_out.c_str());
        return 0;
    }

    if (rep->parsed()) {
        std::vector<const char*> paths;
        paths.reserve(rep_inputs.size());
        for (const auto& p : rep_inputs) paths.push_back(p.c_str());
        const ttapt_status st = ttapt_report(paths.data(), paths.size(), rep_out.c_str());
        if (st != TTAPT_OK) return fail(st);
        std::printf("report: wrote %s\n", rep_out.c_str());
        return 0;
    }

    if (grad->parsed()) {
        ConfigGuard cfg{open_config(grad_opts, {})};
        if (!cfg.cfg) return static_cast<int>(ttapt_last_status());
        double max_rel_err = 0.0;
        int ok = 0;
        const ttapt_status st = ttapt_check_grad(cfg.cfg, &max_rel_err, &ok);
        if (st != TTAPT_OK) return fail(st);
        std::printf("check-grad: max relative error %.3e -> %s\n", max_rel_err,
                    ok ? "PASS" : "FAIL");
        return ok ? 0 : 1;
    }

    return 2;
}
