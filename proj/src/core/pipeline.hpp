#pragma once

#include <string>
#include <vector>

#include "core/config.hpp"

namespace ttapt {

// Command-level operations behind the CLI and the C API. Each one owns the
// artifact wiring (hash pinning, file layout) so every entry point behaves
// identically.

struct PretrainOutcome {
    double val_acc = 0.0;
    int epochs_run = 0;
    std::string checkpoint_hash;
};

PretrainOutcome cmd_pretrain(const Config& cfg, const std::string& out_checkpoint);

void cmd_gen_data(const Config& cfg, const std::string& out_dir);

struct AdaptOutcome {
    RunReport report;
    std::string run_checkpoint;
    std::string trace_path;
    std::string csv_path;
};

// writes <out_prefix>.run.ckpt, <out_prefix>.trace.jsonl and <out_prefix>.csv
AdaptOutcome run_adapt(const Config& cfg, const ToyModel& model, const std::string& model_hash,
                       const Dataset& ds, const std::string& out_prefix);
AdaptOutcome cmd_adapt(const Config& cfg, const std::string& model_path,
                       const std::string& dataset_dir, const std::string& out_prefix);

void run_ablate(const Config& cfg, const ToyModel& model, const Dataset& ds,
                const std::string& out_csv);
void cmd_ablate(const Config& cfg, const std::string& model_path, const std::string& dataset_dir,
                const std::string& out_csv);

void run_crossdomain(const Config& cfg, const ToyModel& model, const std::string& out_csv);
void cmd_crossdomain(const Config& cfg, const std::string& model_path,
                     const std::string& out_csv);

void cmd_report(const std::vector<std::string>& inputs, const std::string& out_csv);

GradCheckResult cmd_check_grad(const Config& cfg);

// loads a model checkpoint, honoring the config's model_hash pin
ToyModel load_model_checked(const Config& cfg, const std::string& path, std::string* hash_out);

} // namespace ttapt
