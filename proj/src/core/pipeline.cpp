#include "core/pipeline.hpp"

#include "core/checkpoint.hpp"

namespace ttapt {

ToyModel load_model_checked(const Config& cfg, const std::string& path, std::string* hash_out) {
    const std::string hash = file_hash_hex(path);
    const std::string pinned = cfg.expected_model_hash();
    if (!pinned.empty() && pinned != hash)
        raise(ErrorCode::Artifact,
              "model checkpoint hash " + hash + " does not match pinned model_hash " + pinned);
    if (hash_out) *hash_out = hash;
    return load_model(path);
}

static EvalContext make_context(const Config& cfg) {
    EvalContext ctx;
    ctx.mel = cfg.mel();
    ctx.prompt = cfg.prompt();
    ctx.adapt = cfg.adapt();
    ctx.config_hash = cfg.hash_hex();
    ctx.master_seed = cfg.seed();
    return ctx;
}

PretrainOutcome cmd_pretrain(const Config& cfg, const std::string& out_checkpoint) {
    const PretrainPipelineResult res = pretrain_pipeline(cfg.pretrain_pipeline_config());
    save_model(out_checkpoint, res.model);

    PretrainOutcome out;
    out.val_acc = res.stats.val_acc;
    out.epochs_run = res.stats.epochs_run;
    out.checkpoint_hash = file_hash_hex(out_checkpoint);
    return out;
}

void cmd_gen_data(const Config& cfg, const std::string& out_dir) {
    Dataset ds = gen_dataset(cfg.dataset("test"));
    const DomainShiftSpec shift = cfg.shift();
    if (shift.kind != ShiftKind::None) ds = apply_shift(ds, shift);
    write_dataset(out_dir, ds);
}

AdaptOutcome run_adapt(const Config& cfg, const ToyModel& model, const std::string& model_hash,
                       const Dataset& ds, const std::string& out_prefix) {
    AdaptOutcome out;
    out.run_checkpoint = out_prefix + ".run.ckpt";
    out.trace_path = out_prefix + ".trace.jsonl";
    out.csv_path = out_prefix + ".csv";

    TraceWriter trace(out.trace_path);
    PromptState state;
    AdaptRun run;
    out.report = evaluate_tta(ds, model, make_context(cfg), &trace, &state, &run);

    save_run_checkpoint(out.run_checkpoint, cfg.effective, cfg.seed(), model_hash, state, run.opt);
    write_run_csv(out.csv_path, {out.report});
    return out;
}

AdaptOutcome cmd_adapt(const Config& cfg, const std::string& model_path,
                       const std::string& dataset_dir, const std::string& out_prefix) {
    std::string model_hash;
    const ToyModel model = load_model_checked(cfg, model_path, &model_hash);
    return run_adapt(cfg, model, model_hash, load_dataset(dataset_dir), out_prefix);
}

void run_ablate(const Config& cfg, const ToyModel& model, const Dataset& ds,
                const std::string& out_csv) {
    const auto rows = ablation_matrix(ds, model, make_context(cfg), cfg.jobs());
    write_run_csv(out_csv, rows);
}

void cmd_ablate(const Config& cfg, const std::string& model_path, const std::string& dataset_dir,
                const std::string& out_csv) {
    const ToyModel model = load_model_checked(cfg, model_path, nullptr);
    run_ablate(cfg, model, load_dataset(dataset_dir), out_csv);
}

void run_crossdomain(const Config& cfg, const ToyModel& model, const std::string& out_csv) {
    const Dataset clean = gen_dataset(cfg.dataset("test"));
    const auto cells =
        cross_domain_matrix(clean, cfg.crossdomain_shifts(), model, make_context(cfg), cfg.jobs());
    write_crossdomain_csv(out_csv, cfg.hash_hex(), cfg.seed(), cells);
}

void cmd_crossdomain(const Config& cfg, const std::string& model_path,
                     const std::string& out_csv) {
    const ToyModel model = load_model_checked(cfg, model_path, nullptr);
    run_crossdomain(cfg, model, out_csv);
}

void cmd_report(const std::vector<std::string>& inputs, const std::string& out_csv) {
    merge_report_csvs(inputs, out_csv);
}

GradCheckResult cmd_check_grad(const Config& cfg) { return check_gradients(cfg.gradcheck()); }

} // namespace ttapt
