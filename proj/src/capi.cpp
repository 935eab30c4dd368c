#include "ttapt.h"

#include <cstring>
#include <exception>
#include <string>

#include "core/pipeline.hpp"

using namespace ttapt;

namespace {

thread_local std::string g_last_error = "";
thread_local ttapt_status g_last_status = TTAPT_OK;

ttapt_status record_error(const std::exception& e) {
    g_last_error = e.what();
    const auto* err = dynamic_cast<const Error*>(&e);
    g_last_status = err ? static_cast<ttapt_status>(err->status()) : TTAPT_E_INTERNAL;
    return g_last_status;
}

template <typename F>
ttapt_status guarded(F&& fn) {
    try {
        fn();
        return TTAPT_OK;
    } catch (const std::exception& e) {
        return record_error(e);
    } catch (...) {
        g_last_error = "unknown error";
        g_last_status = TTAPT_E_INTERNAL;
        return TTAPT_E_INTERNAL;
    }
}

} // namespace

struct ttapt_config {
    Config cfg;
    std::string json_cache;
};

struct ttapt_model {
    ToyModel model;
    std::string hash;
};

struct ttapt_dataset {
    Dataset ds;
};

extern "C" {

const char* ttapt_version(void) { return "1.0.0"; }

const char* ttapt_last_error(void) { return g_last_error.c_str(); }

ttapt_status ttapt_last_status(void) { return g_last_status; }

ttapt_config* ttapt_config_open(const char* path, const char* overrides_json) {
    ttapt_config* out = nullptr;
    guarded([&] {
        nlohmann::json overrides;
        if (overrides_json && *overrides_json) {
            overrides = nlohmann::json::parse(overrides_json, nullptr, false);
            if (overrides.is_discarded())
                raise(ErrorCode::Config, "overrides are not valid JSON");
        }
        auto* handle = new ttapt_config{Config::load(path ? path : "", overrides), ""};
        handle->json_cache = handle->cfg.dump();
        out = handle;
    });
    return out;
}

const char* ttapt_config_json(const ttapt_config* cfg) {
    return cfg ? cfg->json_cache.c_str() : "";
}

void ttapt_config_hash(const ttapt_config* cfg, char* out) {
    if (!cfg || !out) return;
    const std::string h = cfg->cfg.hash_hex();
    std::memcpy(out, h.c_str(), h.size() + 1);
}

void ttapt_config_close(ttapt_config* cfg) { delete cfg; }

ttapt_model* ttapt_model_open(const ttapt_config* cfg, const char* checkpoint_path) {
    ttapt_model* out = nullptr;
    guarded([&] {
        if (!cfg || !checkpoint_path) raise(ErrorCode::Config, "null argument");
        auto* handle = new ttapt_model;
        try {
            handle->model = load_model_checked(cfg->cfg, checkpoint_path, &handle->hash);
        } catch (...) {
            delete handle;
            throw;
        }
        out = handle;
    });
    return out;
}

ttapt_status ttapt_model_dims(const ttapt_model* model, int* embed_dim, int* n_mels,
                              int* vocab) {
    return guarded([&] {
        if (!model) raise(ErrorCode::Config, "null model handle");
        if (embed_dim) *embed_dim = model->model.dims.embed_dim;
        if (n_mels) *n_mels = model->model.dims.n_mels;
        if (vocab) *vocab = model->model.dims.vocab;
    });
}

void ttapt_model_close(ttapt_model* model) { delete model; }

ttapt_dataset* ttapt_dataset_open(const char* dir) {
    ttapt_dataset* out = nullptr;
    guarded([&] {
        if (!dir) raise(ErrorCode::Config, "null dataset directory");
        out = new ttapt_dataset{load_dataset(dir)};
    });
    return out;
}

ttapt_status ttapt_dataset_info(const ttapt_dataset* ds, int* n_clips, int* n_classes,
                                int* has_labels) {
    return guarded([&] {
        if (!ds) raise(ErrorCode::Config, "null dataset handle");
        if (n_clips) *n_clips = static_cast<int>(ds->ds.clips.size());
        if (n_classes) *n_classes = ds->ds.n_classes;
        if (has_labels) *has_labels = ds->ds.has_labels() ? 1 : 0;
    });
}

void ttapt_dataset_close(ttapt_dataset* ds) { delete ds; }

ttapt_status ttapt_pretrain(const ttapt_config* cfg, const char* out_checkpoint,
                            double* out_val_acc) {
    return guarded([&] {
        if (!cfg || !out_checkpoint) raise(ErrorCode::Config, "null argument");
        const PretrainOutcome res = cmd_pretrain(cfg->cfg, out_checkpoint);
        if (out_val_acc) *out_val_acc = res.val_acc;
    });
}

ttapt_status ttapt_gen_data(const ttapt_config* cfg, const char* out_dir) {
    return guarded([&] {
        if (!cfg || !out_dir) raise(ErrorCode::Config, "null argument");
        cmd_gen_data(cfg->cfg, out_dir);
    });
}

ttapt_status ttapt_adapt(const ttapt_config* cfg, const ttapt_model* model,
                         const ttapt_dataset* ds, const char* out_prefix,
                         double* out_zero_shot_acc, double* out_adapted_acc) {
    return guarded([&] {
        if (!cfg || !model || !ds || !out_prefix) raise(ErrorCode::Config, "null argument");
        const AdaptOutcome res =
            run_adapt(cfg->cfg, model->model, model->hash, ds->ds, out_prefix);
        if (out_zero_shot_acc)
            *out_zero_shot_acc = res.report.zero_shot_acc.value_or(-1.0);
        if (out_adapted_acc) *out_adapted_acc = res.report.adapted_acc.value_or(-1.0);
    });
}

ttapt_status ttapt_ablate(const ttapt_config* cfg, const ttapt_model* model,
                          const ttapt_dataset* ds, const char* out_csv) {
    return guarded([&] {
        if (!cfg || !model || !ds || !out_csv) raise(ErrorCode::Config, "null argument");
        run_ablate(cfg->cfg, model->model, ds->ds, out_csv);
    });
}

ttapt_status ttapt_crossdomain(const ttapt_config* cfg, const ttapt_model* model,
                               const char* out_csv) {
    return guarded([&] {
        if (!cfg || !model || !out_csv) raise(ErrorCode::Config, "null argument");
        run_crossdomain(cfg->cfg, model->model, out_csv);
    });
}

ttapt_status ttapt_report(const char* const* csv_paths, size_t n_paths, const char* out_csv) {
    return guarded([&] {
        if (!csv_paths || !out_csv) raise(ErrorCode::Config, "null argument");
        std::vector<std::string> inputs(csv_paths, csv_paths + n_paths);
        cmd_report(inputs, out_csv);
    });
}

ttapt_status ttapt_check_grad(const ttapt_config* cfg, double* out_max_rel_err, int* out_ok) {
    return guarded([&] {
        if (!cfg) raise(ErrorCode::Config, "null argument");
        const GradCheckResult res = cmd_check_grad(cfg->cfg);
        if (out_max_rel_err) *out_max_rel_err = res.max_rel_err;
        if (out_ok) *out_ok = res.ok ? 1 : 0;
    });
}

} // extern "C"
